use crate::engine::{Arg, DefinitionError, Definitions, Process};
use crate::oracle::{AddStep, Symbol};
use crate::store::{Constraint, Value, Var};

use super::{Rho, SessionConfig, SyncGuard};

pub mod vars {
    use crate::oracle::{State, Symbol};
    use crate::store::Var;

    pub const GO: &str = "go";
    pub const OUT: &str = "out";
    pub const AT: &str = "at";
    pub const BRANCH: &str = "branch";

    pub fn s(k: State) -> Var {
        Var::indexed("S", &[k as i64])
    }

    pub fn sigma(i: State) -> Var {
        Var::indexed("sigma", &[i as i64])
    }

    pub fn delta(k: State, sym: Symbol) -> Var {
        Var::indexed("delta", &[k as i64, sym as i64])
    }

    pub fn from(k: State) -> Var {
        Var::indexed("from", &[k as i64])
    }
}

fn idx(v: Value) -> usize {
    v.max(0) as usize
}

fn learn_name(i: usize) -> String {
    format!("learn.{i}")
}

/// `SYNC_i`: waits for note `i` and the previous suffix link, then learns.
pub fn build_sync(i: usize, guard: SyncGuard) -> Process {
    let previous = vars::s(i - 1);
    let ready = Constraint::and([
        match guard {
            SyncGuard::Assigned => Constraint::assigned(previous),
            SyncGuard::NonNegative => Constraint::ge(previous, 1),
        },
        Constraint::ge(vars::GO, i as Value),
    ]);
    Process::par([
        Process::when(
            ready.clone(),
            Process::par([
                Process::call(learn_name(i), []),
                Process::next(Process::call("sync", [Arg::Value(i as Value + 1)])),
            ]),
        ),
        Process::unless(ready, Process::call("sync", [Arg::Value(i as Value)])),
    ])
}

/// `LEARN_i`: the facts one oracle step added, told now and in every
/// later unit.
pub fn build_learn(step: &AddStep) -> Process {
    let i = step.state;
    let sym = step.sym;
    let mut tells = vec![
        Constraint::eq(vars::sigma(i), sym as Value),
        Constraint::eq(vars::delta(i - 1, sym), i as Value),
        Constraint::member(sym as Value, vars::from(i - 1)),
    ];
    for &k in &step.chain_links {
        tells.push(Constraint::eq(vars::delta(k, sym), i as Value));
        tells.push(Constraint::member(sym as Value, vars::from(k)));
    }
    tells.push(Constraint::eq(vars::s(i), step.suffix as Value + 1));
    Process::bang(Process::par(tells.into_iter().map(Process::tell)))
}

fn emit(k: usize, sym: Constraint, branch: Value, then: Arg) -> Process {
    Process::par([
        Process::tell(sym),
        Process::tell(Constraint::eq(vars::AT, k as Value)),
        Process::tell(Constraint::eq(vars::BRANCH, branch)),
        Process::call("improv", [then]),
    ])
}

fn continuation(k: usize) -> Process {
    emit(
        k,
        Constraint::VarEq(Var::new(vars::OUT), vars::sigma(k + 1)),
        0,
        Arg::Value(k as Value + 1),
    )
}

fn jumps(k: usize, s: usize, alphabet: u32) -> impl Iterator<Item = (Constraint, Process)> {
    (0..alphabet).map(move |sym| {
        (
            Constraint::member(sym as Value, vars::from(s)),
            emit(
                k,
                Constraint::eq(vars::OUT, sym as Value),
                1,
                Arg::ValueOf {
                    value_of: vars::delta(s, sym),
                },
            ),
        )
    })
}

/// `IMPROV(k)`.
pub fn build_improv(k: usize) -> Process {
    let link = vars::s(k);
    Process::par([
        Process::when(
            Constraint::eq(link.clone(), 0),
            Process::next(Process::call("improv.cont", [Arg::Value(k as Value)])),
        ),
        Process::when(
            Constraint::ge(link.clone(), 1),
            Process::next(Process::call(
                "improv.pick",
                [Arg::Value(k as Value), Arg::ValueOf { value_of: link.clone() }],
            )),
        ),
        Process::unless(Constraint::assigned(link), Process::call("improv", [Arg::Value(k as Value)])),
    ])
}

/// Forced continuation from a state whose suffix link is `-1`; retried
/// until `σ_{k+1}` is known.
fn build_forced(k: usize) -> Process {
    let next = Constraint::assigned(vars::sigma(k + 1));
    Process::par([
        Process::when(next.clone(), continuation(k)),
        Process::unless(next, Process::call("improv.cont", [Arg::Value(k as Value)])),
    ])
}

/// The choice IMPROV makes at `k` with suffix link `s >= 0`: continue to
/// `k+1` (only once `σ_{k+1}` is learned) or emit a label of `from[s]`
/// and move along its factor link.
pub fn build_improv_choice(k: usize, s: usize, alphabet: u32, rho: Rho) -> Process {
    let frontier = Constraint::assigned(vars::sigma(k + 1));
    match rho {
        Rho::Nondet => Process::sum(std::iter::once((frontier, continuation(k))).chain(jumps(k, s, alphabet))),
        Rho::Prob(r) => {
            let choice = Process::psum([
                (frontier.clone(), continuation(k), r),
                (Constraint::True, Process::sum(jumps(k, s, alphabet)), 1.0 - r),
            ]);
            if r < 1.0 {
                choice
            } else {
                // Jumps carry no weight: wait for σ_{k+1} instead.
                Process::par([
                    choice,
                    Process::unless(
                        frontier,
                        Process::call("improv.pick", [Arg::Value(k as Value), Arg::Value(s as Value + 1)]),
                    ),
                ])
            }
        }
    }
}

/// The recursive definitions shared by every session; `learn.i` is added
/// as notes arrive.
pub fn definitions(config: &SessionConfig) -> Result<Definitions, DefinitionError> {
    let mut defs = Definitions::new();
    let guard = config.sync_guard;
    defs.define("sync", &["i"], move |a| build_sync(idx(a[0]).max(1), guard))?;
    defs.define("improv", &["k"], |a| build_improv(idx(a[0])))?;
    defs.define("improv.cont", &["k"], |a| build_forced(idx(a[0])))?;
    define_pick(&mut defs, config.alphabet_size, config.rho, false)?;
    Ok(defs)
}

pub(crate) fn define_pick(defs: &mut Definitions, alphabet: u32, rho: Rho, replace: bool) -> Result<(), DefinitionError> {
    let body = move |a: &[Value]| build_improv_choice(idx(a[0]), idx(a[1] - 1), alphabet, rho);
    if replace {
        defs.redefine("improv.pick", &["k", "s"], body)
    } else {
        defs.define("improv.pick", &["k", "s"], body)
    }
}

pub(crate) fn define_learn(defs: &mut Definitions, step: &AddStep) -> Result<(), DefinitionError> {
    defs.define_static(&learn_name(step.state), build_learn(step))
}

/// `!tell(S[0] = -1) || SYNC_1 || IMPROV(k0)`.
pub fn program(config: &SessionConfig) -> Process {
    Process::par([
        Process::bang(Process::tell(Constraint::eq(vars::s(0), 0))),
        Process::call("sync", [Arg::Value(1)]),
        Process::call("improv", [Arg::Value(config.k0 as Value)]),
    ])
}

pub(crate) fn symbol(v: Value) -> Symbol {
    v as Symbol
}
