//! Finite-domain and finite-set constraint store.
//!
//! Variables are declared with an initial domain, constraints are posted and
//! propagated to a fixpoint, and entailment is answered three-valued by
//! reifying the query on a scratch copy.

mod constraint;
mod domain;
mod propagate;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use constraint::{Constraint, ParseError, Var};
pub use domain::{Domain, IntDomain, SetDomain, Value, VarKind, MAX_VALUE};

use propagate::{check, narrow, Prop, Wipeout};

/// A declared variable: its name and kind.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarId {
    pub name: Var,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entailment {
    Entailed,
    Disentailed,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationResult {
    Consistent,
    Failed,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("variable `{0}` declared twice")]
    DuplicateVar(Var),
    #[error("variable `{0}` is not declared")]
    Undeclared(Var),
    #[error("variable `{var}` is a {actual} variable where {expected} was required")]
    KindMismatch {
        var: Var,
        expected: VarKind,
        actual: VarKind,
    },
    #[error("cannot post to a failed store")]
    Failed,
    #[error("reified constraints may not nest")]
    NestedReify,
    #[error("`{0}` can only be asked, not told")]
    AskOnly(Constraint),
}

#[derive(Clone, Debug)]
struct Slot {
    name: Var,
    hidden: bool,
}

/// The constraint store for one time unit.
#[derive(Clone, Debug, Default)]
pub struct Store {
    index: HashMap<Var, usize>,
    slots: Vec<Slot>,
    domains: Vec<Domain>,
    props: Vec<Prop>,
    posted: Vec<Constraint>,
    watchers: Vec<Vec<usize>>,
    failed: bool,
}

impl Store {
    pub fn new<I>(decls: I) -> Result<Store, StoreError>
    where
        I: IntoIterator<Item = (Var, Domain)>,
    {
        let mut store = Store::default();
        for (name, domain) in decls {
            store.declare(name, domain)?;
        }
        Ok(store)
    }

    pub fn declare(&mut self, name: Var, domain: Domain) -> Result<VarId, StoreError> {
        self.declare_slot(name, domain, false)
    }

    /// Declares a variable that snapshots leave out.
    pub fn declare_hidden(&mut self, name: Var, domain: Domain) -> Result<VarId, StoreError> {
        self.declare_slot(name, domain, true)
    }

    fn declare_slot(&mut self, name: Var, domain: Domain, hidden: bool) -> Result<VarId, StoreError> {
        if self.index.contains_key(&name) {
            return Err(StoreError::DuplicateVar(name));
        }
        let kind = domain.kind();
        if domain.is_failed() {
            self.failed = true;
        }
        self.index.insert(name.clone(), self.slots.len());
        self.slots.push(Slot { name: name.clone(), hidden });
        self.domains.push(domain);
        self.watchers.push(Vec::new());
        Ok(VarId { name, kind })
    }

    pub fn is_declared(&self, name: &Var) -> bool {
        self.index.contains_key(name)
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    pub fn domain(&self, name: &Var) -> Option<&Domain> {
        self.index.get(name).map(|&i| &self.domains[i])
    }

    /// The assigned value of an integer variable.
    pub fn value(&self, name: &Var) -> Option<Value> {
        self.domain(name).and_then(Domain::as_int).and_then(IntDomain::value)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.slots.iter().zip(&self.domains).map(|(s, d)| VarId {
            name: s.name.clone(),
            kind: d.kind(),
        })
    }

    pub fn posted(&self) -> &[Constraint] {
        &self.posted
    }

    /// Records `c` and propagates to fixpoint.
    pub fn post(&mut self, c: Constraint) -> Result<PropagationResult, StoreError> {
        if self.failed {
            return Err(StoreError::Failed);
        }
        let prop = self.resolve(&c, true)?;
        self.posted.push(c);
        let id = self.props.len();
        let mut vars = Vec::new();
        prop.vars(&mut vars);
        vars.sort_unstable();
        vars.dedup();
        for v in vars {
            self.watchers[v].push(id);
        }
        self.props.push(prop);
        Ok(self.run_queue(VecDeque::from([id])))
    }

    /// Re-runs every propagator. A no-op on a store already at fixpoint.
    pub fn propagate(&mut self) -> PropagationResult {
        if self.failed {
            return PropagationResult::Failed;
        }
        self.run_queue((0..self.props.len()).collect())
    }

    fn run_queue(&mut self, mut queue: VecDeque<usize>) -> PropagationResult {
        let mut queued = vec![false; self.props.len()];
        for &id in &queue {
            queued[id] = true;
        }
        let mut changed = Vec::new();
        while let Some(id) = queue.pop_front() {
            queued[id] = false;
            changed.clear();
            if narrow(&self.props[id], &mut self.domains, &mut changed) == Err(Wipeout) {
                self.failed = true;
                return PropagationResult::Failed;
            }
            for &v in &changed {
                for &w in &self.watchers[v] {
                    if !queued[w] {
                        queued[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        PropagationResult::Consistent
    }

    fn slot_of(&self, v: &Var, expected: Option<VarKind>) -> Result<usize, StoreError> {
        let idx = *self.index.get(v).ok_or_else(|| StoreError::Undeclared(v.clone()))?;
        let actual = self.domains[idx].kind();
        match expected {
            Some(expected) if expected != actual => Err(StoreError::KindMismatch {
                var: v.clone(),
                expected,
                actual,
            }),
            _ => Ok(idx),
        }
    }

    fn resolve(&self, c: &Constraint, tell: bool) -> Result<Prop, StoreError> {
        use Constraint::*;
        use VarKind::{Int, Set};
        let i = |v: &Var| self.slot_of(v, Some(Int));
        Ok(match c {
            True => Prop::True,
            IntEq(v, k) => Prop::Eq(i(v)?, *k),
            IntNe(v, k) => Prop::Ne(i(v)?, *k),
            IntLt(v, k) => Prop::Lt(i(v)?, *k),
            IntLe(v, k) => Prop::Le(i(v)?, *k),
            IntGt(v, k) => Prop::Gt(i(v)?, *k),
            IntGe(v, k) => Prop::Ge(i(v)?, *k),
            VarEq(a, b) => Prop::VarEq(i(a)?, i(b)?),
            VarNe(a, b) => Prop::VarNe(i(a)?, i(b)?),
            InLiteralSet(v, s) => {
                Prop::In(i(v)?, Arc::new(IntDomain::from_values(s.iter().copied())))
            }
            NotInLiteralSet(v, s) => Prop::NotIn(i(v)?, Arc::new(s.clone())),
            MemberOfSetVar(k, sv) => Prop::Member(*k, self.slot_of(sv, Some(Set))?),
            NotMemberOfSetVar(k, sv) => Prop::NotMember(*k, self.slot_of(sv, Some(Set))?),
            Assigned(v) => {
                if tell {
                    return Err(StoreError::AskOnly(c.clone()));
                }
                Prop::Assigned(self.slot_of(v, None)?)
            }
            And(cs) => Prop::And(
                cs.iter()
                    .map(|c| self.resolve(c, tell))
                    .collect::<Result<_, _>>()?,
            ),
            Reify(inner, b) => {
                if contains_reify(inner) {
                    return Err(StoreError::NestedReify);
                }
                let q = self.resolve(inner, false)?;
                Prop::Reify(Box::new(q), i(b)?)
            }
        })
    }

    /// Entailment of `c` by the current store, without mutating it.
    ///
    /// The query is reified against a fresh 0/1 variable on a scratch copy of
    /// the domains `c` mentions; the answer is read off that variable. Since
    /// the store is already at fixpoint, the remaining constraints cannot
    /// narrow those domains further. Undeclared variables count as unknown
    /// over the full default domain.
    pub fn entailment_status(&self, c: &Constraint) -> Entailment {
        if self.failed {
            return Entailment::Entailed;
        }
        let mut scratch = Store::default();
        let mut missing = false;
        c.for_each_var(&mut |v, kind| {
            if scratch.is_declared(v) {
                return;
            }
            let dom = match self.domain(v) {
                Some(d) => d.clone(),
                None => {
                    missing = true;
                    match kind {
                        VarKind::Int => Domain::Int(IntDomain::full()),
                        VarKind::Set => Domain::Set(SetDomain::unknown()),
                    }
                }
            };
            let _ = scratch.declare(v.clone(), dom);
        });
        if missing && matches!(c, Constraint::Assigned(_)) {
            return Entailment::Unknown;
        }
        let probe = fresh_probe(&scratch);
        if scratch.declare(probe.clone(), Domain::Int(IntDomain::boolean())).is_err() {
            return Entailment::Unknown;
        }
        let reified = Constraint::Reify(Box::new(c.clone()), probe.clone());
        match scratch.post(reified) {
            Ok(PropagationResult::Consistent) => match scratch.value(&probe) {
                Some(1) => Entailment::Entailed,
                Some(0) => Entailment::Disentailed,
                _ => Entailment::Unknown,
            },
            // A nested reify or a kind clash cannot be decided.
            Ok(PropagationResult::Failed) | Err(_) => Entailment::Unknown,
        }
    }

    /// Direct three-valued check on the live domains. Used on hot paths
    /// where the scratch copy of [`Store::entailment_status`] is not needed.
    pub fn check(&self, c: &Constraint) -> Entailment {
        if self.failed {
            return Entailment::Entailed;
        }
        match self.resolve(c, false) {
            Ok(p) => check(&p, &self.domains),
            Err(_) => self.entailment_status(c),
        }
    }

    /// Visible domains. A failed store reports no variables: its domains
    /// depend on the order in which the inconsistency was reached.
    pub fn snapshot(&self) -> Snapshot {
        if self.failed {
            return Snapshot {
                failed: true,
                vars: BTreeMap::new(),
            };
        }
        let vars = self
            .slots
            .iter()
            .zip(&self.domains)
            .filter(|(s, _)| !s.hidden)
            .map(|(s, d)| (s.name.name().to_string(), DomainDesc::of(d)))
            .collect();
        Snapshot {
            failed: self.failed,
            vars,
        }
    }
}

fn contains_reify(c: &Constraint) -> bool {
    match c {
        Constraint::Reify(..) => true,
        Constraint::And(cs) => cs.iter().any(contains_reify),
        _ => false,
    }
}

fn fresh_probe(store: &Store) -> Var {
    let mut n = 0usize;
    loop {
        let v = Var::new(format!("_reify.{n}"));
        if !store.is_declared(&v) {
            return v;
        }
        n += 1;
    }
}

/// Read-only description of one domain in a snapshot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainDesc {
    Value(Value),
    Range([Value; 2]),
    Intervals(Vec<[Value; 2]>),
    Set {
        lower: BTreeSet<Value>,
        upper: Vec<[Value; 2]>,
    },
}

impl DomainDesc {
    fn of(d: &Domain) -> DomainDesc {
        let ivs = |d: &IntDomain| d.intervals().iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>();
        match d {
            Domain::Int(d) => match (d.value(), d.intervals()) {
                (Some(v), _) => DomainDesc::Value(v),
                (None, [(lo, hi)]) => DomainDesc::Range([*lo, *hi]),
                (None, _) => DomainDesc::Intervals(ivs(d)),
            },
            Domain::Set(s) => DomainDesc::Set {
                lower: s.lower.clone(),
                upper: ivs(&s.upper),
            },
        }
    }

    pub fn value(&self) -> Option<Value> {
        match self {
            DomainDesc::Value(v) => Some(*v),
            _ => None,
        }
    }
}

/// Per-unit record of every visible variable's domain.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Snapshot {
    pub failed: bool,
    pub vars: BTreeMap<String, DomainDesc>,
}

impl Snapshot {
    pub fn get(&self, name: &str) -> Option<&DomainDesc> {
        self.vars.get(name)
    }

    pub fn value(&self, name: &str) -> Option<Value> {
        self.get(name).and_then(DomainDesc::value)
    }
}
