use std::collections::{BTreeSet, VecDeque};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::model::{self, symbol, vars};
use super::{Rho, SessionConfig, SessionError};
use crate::engine::{Engine, TimeUnitOutput};
use crate::oracle::{Oracle, State, Symbol};
use crate::store::{Constraint, Domain, Store, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Continue,
    Jump,
    Blocked,
}

/// One line of a session trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub unit: u64,
    /// Note fed to this unit, if any.
    pub input: Option<Symbol>,
    pub out: Option<Symbol>,
    /// State the output was produced from; for silent units, the state
    /// IMPROV is waiting at.
    pub k: State,
    pub branch: Branch,
    pub latency_us: u64,
    /// Both branches were enabled when the choice was made.
    #[serde(skip)]
    pub decidable: bool,
    #[serde(skip)]
    pub activations: usize,
    /// `(i, σ_i)` for each symbol whose learning completed this unit.
    #[serde(skip)]
    pub learned: Vec<(usize, Symbol)>,
}

/// A live CCFOMI instance. Notes are queued and consumed one per unit.
#[derive(Debug)]
pub struct Session {
    config: SessionConfig,
    engine: Engine,
    oracle: Oracle,
    queue: VecDeque<Symbol>,
    learned: usize,
    state: State,
    last: Option<TimeUnitOutput>,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, SessionError> {
        config.validate()?;
        let defs = model::definitions(&config).map_err(crate::engine::EngineError::from)?;
        let engine = Engine::with_config(model::program(&config), defs, config.seed, config.engine_config());
        Ok(Session {
            oracle: Oracle::new(config.alphabet_size)?,
            state: config.k0,
            config,
            engine,
            queue: VecDeque::new(),
            learned: 0,
            last: None,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// Every note accepted so far, learned or still queued.
    pub fn oracle(&self) -> &Oracle {
        &self.oracle
    }

    /// Notes whose LEARN step has run.
    pub fn learned(&self) -> usize {
        self.learned
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn unit(&self) -> u64 {
        self.engine.unit()
    }

    /// The last unit's engine output.
    pub fn last_output(&self) -> Option<&TimeUnitOutput> {
        self.last.as_ref()
    }

    pub fn push_note(&mut self, sym: Symbol) -> Result<(), SessionError> {
        if sym >= self.config.alphabet_size {
            return Err(crate::oracle::OracleError::SymbolOutOfRange {
                sym,
                alphabet: self.config.alphabet_size,
            }
            .into());
        }
        self.queue.push_back(sym);
        Ok(())
    }

    /// Changes ρ from the next choice on.
    pub fn set_rho(&mut self, rho: Rho) -> Result<(), SessionError> {
        let rho = rho.validate()?;
        model::define_pick(self.engine.definitions_mut(), self.config.alphabet_size, rho, true)
            .map_err(crate::engine::EngineError::from)?;
        self.config.rho = rho;
        Ok(())
    }

    pub fn step(&mut self) -> Result<UnitRecord, SessionError> {
        let input = self.queue.pop_front();
        if let Some(sym) = input {
            let step = self.oracle.add(sym)?;
            model::define_learn(self.engine.definitions_mut(), &step).map_err(crate::engine::EngineError::from)?;
        }
        let mut constraints = Vec::new();
        if !self.oracle.is_empty() {
            constraints.push(Constraint::eq(vars::GO, self.oracle.len() as Value));
        }

        let start = Instant::now();
        let output = self.engine.step(&constraints)?;
        let latency_us = start.elapsed().as_micros() as u64;

        let store = &output.store;
        let mut learned = Vec::new();
        while self.learned < self.oracle.len() && store.value(&vars::s(self.learned + 1)).is_some() {
            self.learned += 1;
            learned.push((self.learned, self.oracle.symbol(self.learned).unwrap_or_default()));
        }

        let out = store.value(&vars::OUT.into()).map(symbol);
        let (k, branch, decidable) = match (out, store.value(&vars::AT.into()), store.value(&vars::BRANCH.into())) {
            (Some(sym), Some(at), Some(b)) => {
                let at = at as State;
                let branch = if b == 0 { Branch::Continue } else { Branch::Jump };
                let decidable = at >= 1 && store.value(&vars::sigma(at + 1)).is_some();
                self.state = match branch {
                    Branch::Continue => at + 1,
                    _ => self.jump_target(at, sym).unwrap_or(self.state),
                };
                (at, branch, decidable)
            }
            _ => (self.state, Branch::Blocked, false),
        };

        let record = UnitRecord {
            unit: output.unit,
            input,
            out,
            k,
            branch,
            latency_us,
            decidable,
            activations: output.activations,
            learned,
        };
        self.last = Some(output);
        Ok(record)
    }

    fn jump_target(&self, at: State, sym: Symbol) -> Option<State> {
        let s = self.oracle.suffix(at).ok()??;
        self.oracle.delta(s, sym).ok()?
    }
}

/// The outcome of [`run_session`].
#[derive(Clone, Debug, Default)]
pub struct SessionRun {
    /// Emitted symbols in order.
    pub outputs: Vec<Symbol>,
    pub records: Vec<UnitRecord>,
}

/// Queues every note, then runs `config.max_units` units.
pub fn run_session(config: &SessionConfig, notes: &[Symbol]) -> Result<SessionRun, SessionError> {
    let mut session = Session::new(config.clone())?;
    for &n in notes {
        session.push_note(n)?;
    }
    let mut run = SessionRun::default();
    for _ in 0..config.max_units {
        let record = session.step()?;
        run.outputs.extend(record.out);
        run.records.push(record);
    }
    Ok(run)
}

/// Checks that the oracle variables in `store` describe `reference` exactly.
pub fn check_coherence(store: &Store, reference: &Oracle) -> Result<(), String> {
    let n = reference.len();
    let int = |v: &crate::store::Var| store.value(v);
    for k in 0..=n {
        let expected = reference.suffix_links()[k] + 1;
        if int(&vars::s(k)) != Some(expected) {
            return Err(format!("S[{k}] is {:?}, expected {expected}", int(&vars::s(k))));
        }
        if k >= 1 {
            let sym = reference.symbol(k).map(Value::from);
            if int(&vars::sigma(k)) != sym {
                return Err(format!("sigma[{k}] is {:?}, expected {sym:?}", int(&vars::sigma(k))));
            }
        }
        let labels: BTreeSet<Value> = reference
            .from(k)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(Value::from)
            .collect();
        let told = match store.domain(&vars::from(k)) {
            Some(Domain::Set(d)) => d.lower.clone(),
            Some(_) => return Err(format!("from[{k}] is not a set")),
            None => BTreeSet::new(),
        };
        if told != labels {
            return Err(format!("from[{k}] holds {told:?}, expected {labels:?}"));
        }
        for sym in 0..reference.alphabet() {
            let expected = reference.delta(k, sym).map_err(|e| e.to_string())?.map(|t| t as Value);
            if int(&vars::delta(k, sym)) != expected {
                return Err(format!(
                    "delta[{k},{sym}] is {:?}, expected {expected:?}",
                    int(&vars::delta(k, sym))
                ));
            }
        }
    }
    if let Some(v) = int(&vars::s(n + 1)) {
        return Err(format!("S[{}] is {v} before its note was learned", n + 1));
    }
    if let Some(v) = int(&vars::sigma(n + 1)) {
        return Err(format!("sigma[{}] is {v} before its note was learned", n + 1));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccfomi::SyncGuard;

    const A: Symbol = 0;
    const B: Symbol = 1;

    fn config(rho: Rho, seed: u64, units: usize) -> SessionConfig {
        SessionConfig {
            alphabet_size: 2,
            rho,
            seed,
            max_units: units,
            ..SessionConfig::default()
        }
    }

    #[test]
    fn verbatim_replay_at_rho_one() {
        let run = run_session(&config(Rho::Prob(1.0), 0, 10), &[A, B, B]).unwrap();
        assert_eq!(run.outputs, vec![A, B, B]);
        assert!(run
            .records
            .iter()
            .all(|r| r.branch != Branch::Jump));
    }

    #[test]
    fn no_notes_no_output() {
        let run = run_session(&config(Rho::Nondet, 0, 10), &[]).unwrap();
        assert!(run.outputs.is_empty());
        assert!(run.records.iter().all(|r| r.branch == Branch::Blocked && r.out.is_none()));
    }

    #[test]
    fn learning_abb_is_coherent_each_unit() {
        let mut s = Session::new(config(Rho::Nondet, 1, 0)).unwrap();
        for n in [A, B, B] {
            s.push_note(n).unwrap();
        }
        let mut learned = Vec::new();
        for _ in 0..6 {
            let r = s.step().unwrap();
            learned.extend(r.learned);
            let reference = Oracle::from_symbols(2, &s.oracle().sequence()[..s.learned()]).unwrap();
            check_coherence(&s.last_output().unwrap().store, &reference).unwrap();
        }
        assert_eq!(learned, vec![(1, A), (2, B), (3, B)]);
        let store = &s.last_output().unwrap().store;
        assert_eq!(store.value(&vars::s(3)), Some(3));
        assert_eq!(store.value(&vars::s(1)), Some(1));
        assert_eq!(store.check(&Constraint::member(B as Value, vars::from(2))), crate::store::Entailment::Entailed);
    }

    #[test]
    fn first_output_is_the_first_note() {
        let run = run_session(&config(Rho::Nondet, 5, 3), &[A, B, B]).unwrap();
        assert_eq!(run.records[1].out, Some(A));
        assert_eq!(run.records[1].k, 0);
        assert_eq!(run.records[1].branch, Branch::Continue);
    }

    #[test]
    fn frontier_forces_a_jump() {
        // After "abb" with no further notes, state 3 has no σ_4.
        for seed in 0..10 {
            let run = run_session(&config(Rho::Nondet, seed, 20), &[A, B, B]).unwrap();
            for r in &run.records {
                if r.k == 3 && r.out.is_some() {
                    assert_eq!(r.branch, Branch::Jump);
                    assert_eq!(r.out, Some(B));
                }
            }
        }
    }

    #[test]
    fn footnote_guard_never_learns() {
        let cfg = SessionConfig {
            sync_guard: SyncGuard::NonNegative,
            ..config(Rho::Nondet, 0, 8)
        };
        let run = run_session(&cfg, &[A, B, B]).unwrap();
        assert!(run.outputs.is_empty());
        assert!(run.records.iter().all(|r| r.learned.is_empty()));
    }

    #[test]
    fn strict_unless_stalls_synchronisation() {
        let cfg = SessionConfig {
            unless_strict: true,
            ..config(Rho::Nondet, 0, 8)
        };
        let mut s = Session::new(cfg).unwrap();
        s.step().unwrap();
        s.push_note(A).unwrap();
        let learned: usize = (0..5).map(|_| s.step().unwrap().learned.len()).sum();
        assert_eq!(learned, 0);
    }

    #[test]
    fn rho_can_change_between_units() {
        let mut s = Session::new(config(Rho::Prob(1.0), 2, 0)).unwrap();
        for n in [A, B, A, B, A, B, A, B] {
            s.push_note(n).unwrap();
        }
        for _ in 0..6 {
            assert_ne!(s.step().unwrap().branch, Branch::Jump);
        }
        s.set_rho(Rho::Prob(0.0)).unwrap();
        let branches: Vec<Branch> = (0..6).map(|_| s.step().unwrap().branch).collect();
        assert!(branches.iter().all(|&b| b == Branch::Jump), "{branches:?}");
        assert!(s.set_rho(Rho::Prob(2.0)).is_err());
    }

    #[test]
    fn out_of_alphabet_note_is_rejected() {
        let mut s = Session::new(config(Rho::Nondet, 0, 0)).unwrap();
        assert!(s.push_note(2).is_err());
        assert_eq!(s.pending(), 0);
    }

    #[test]
    fn trace_line_shape() {
        let r = UnitRecord {
            unit: 3,
            input: Some(1),
            out: None,
            k: 2,
            branch: Branch::Blocked,
            latency_us: 40,
            decidable: false,
            activations: 9,
            learned: vec![],
        };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"unit":3,"input":1,"out":null,"k":2,"branch":"blocked","latency_us":40}"#
        );
    }
}
