//! Index-resolved propagators.
//!
//! Inequalities get bounds propagation, (dis)equalities value propagation,
//! set membership lower/upper-bound propagation. `check` is the three-valued
//! test a reified propagator uses to decide its control variable.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::domain::{Domain, IntDomain, SetDomain, Value};
use super::Entailment;

#[derive(Clone, Debug)]
pub(crate) enum Prop {
    True,
    Eq(usize, Value),
    Ne(usize, Value),
    Lt(usize, Value),
    Le(usize, Value),
    Gt(usize, Value),
    Ge(usize, Value),
    VarEq(usize, usize),
    VarNe(usize, usize),
    In(usize, Arc<IntDomain>),
    NotIn(usize, Arc<BTreeSet<Value>>),
    Member(Value, usize),
    NotMember(Value, usize),
    Assigned(usize),
    And(Vec<Prop>),
    Reify(Box<Prop>, usize),
}

/// Propagation hit an empty domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Wipeout;

type Narrowed = Result<(), Wipeout>;

impl Prop {
    pub(crate) fn vars(&self, out: &mut Vec<usize>) {
        use Prop::*;
        match self {
            True => {}
            Eq(v, _) | Ne(v, _) | Lt(v, _) | Le(v, _) | Gt(v, _) | Ge(v, _) => out.push(*v),
            VarEq(a, b) | VarNe(a, b) => {
                out.push(*a);
                out.push(*b);
            }
            In(v, _) | NotIn(v, _) | Member(_, v) | NotMember(_, v) | Assigned(v) => out.push(*v),
            And(ps) => ps.iter().for_each(|p| p.vars(out)),
            Reify(p, b) => {
                p.vars(out);
                out.push(*b);
            }
        }
    }

    fn negated(&self) -> Option<Prop> {
        use Prop::*;
        Some(match self {
            Eq(v, k) => Ne(*v, *k),
            Ne(v, k) => Eq(*v, *k),
            Lt(v, k) => Ge(*v, *k),
            Ge(v, k) => Lt(*v, *k),
            Le(v, k) => Gt(*v, *k),
            Gt(v, k) => Le(*v, *k),
            VarEq(a, b) => VarNe(*a, *b),
            VarNe(a, b) => VarEq(*a, *b),
            In(v, d) => NotIn(*v, Arc::new(d.values().collect())),
            NotIn(v, s) => In(*v, Arc::new(IntDomain::from_values(s.iter().copied()))),
            Member(k, sv) => NotMember(*k, *sv),
            NotMember(k, sv) => Member(*k, *sv),
            True | Assigned(_) | And(_) | Reify(..) => return None,
        })
    }
}

fn int(doms: &[Domain], v: usize) -> &IntDomain {
    match &doms[v] {
        Domain::Int(d) => d,
        Domain::Set(_) => unreachable!("kind checked at resolution"),
    }
}

fn set(doms: &[Domain], v: usize) -> &SetDomain {
    match &doms[v] {
        Domain::Set(s) => s,
        Domain::Int(_) => unreachable!("kind checked at resolution"),
    }
}

fn flip(e: Entailment) -> Entailment {
    match e {
        Entailment::Entailed => Entailment::Disentailed,
        Entailment::Disentailed => Entailment::Entailed,
        Entailment::Unknown => Entailment::Unknown,
    }
}

fn decide(entailed: bool, disentailed: bool) -> Entailment {
    if entailed {
        Entailment::Entailed
    } else if disentailed {
        Entailment::Disentailed
    } else {
        Entailment::Unknown
    }
}

/// Three-valued truth of `p` under the current domains.
pub(crate) fn check(p: &Prop, doms: &[Domain]) -> Entailment {
    use Prop::*;
    match p {
        True => Entailment::Entailed,
        Eq(v, k) => {
            let d = int(doms, *v);
            decide(d.value() == Some(*k), !d.contains(*k))
        }
        Ne(v, k) => flip(check(&Eq(*v, *k), doms)),
        Lt(v, k) => bounds(int(doms, *v), |lo, hi| (hi < *k, lo >= *k)),
        Le(v, k) => bounds(int(doms, *v), |lo, hi| (hi <= *k, lo > *k)),
        Gt(v, k) => bounds(int(doms, *v), |lo, hi| (lo > *k, hi <= *k)),
        Ge(v, k) => bounds(int(doms, *v), |lo, hi| (lo >= *k, hi < *k)),
        VarEq(a, b) => {
            if a == b {
                return Entailment::Entailed;
            }
            let (da, db) = (int(doms, *a), int(doms, *b));
            let both_same = matches!((da.value(), db.value()), (Some(x), Some(y)) if x == y);
            decide(both_same, da.is_disjoint(db))
        }
        VarNe(a, b) => flip(check(&VarEq(*a, *b), doms)),
        In(v, allowed) => {
            let d = int(doms, *v);
            decide(d.is_subset(allowed), d.is_disjoint(allowed))
        }
        NotIn(v, s) => {
            let d = int(doms, *v);
            let disallowed = IntDomain::from_values(s.iter().copied());
            decide(d.is_disjoint(&disallowed), d.is_subset(&disallowed))
        }
        Member(k, sv) => {
            let s = set(doms, *sv);
            decide(s.lower.contains(k), !s.upper.contains(*k))
        }
        NotMember(k, sv) => flip(check(&Member(*k, *sv), doms)),
        Assigned(v) => {
            let fixed = match &doms[*v] {
                Domain::Int(d) => d.is_fixed(),
                Domain::Set(s) => s.is_fixed(),
            };
            decide(fixed, false)
        }
        And(ps) => {
            let mut all = true;
            for q in ps {
                match check(q, doms) {
                    Entailment::Disentailed => return Entailment::Disentailed,
                    Entailment::Unknown => all = false,
                    Entailment::Entailed => {}
                }
            }
            decide(all, false)
        }
        Reify(q, b) => match (int(doms, *b).value(), check(q, doms)) {
            (Some(1), Entailment::Entailed) | (Some(0), Entailment::Disentailed) => {
                Entailment::Entailed
            }
            (Some(1), Entailment::Disentailed) | (Some(0), Entailment::Entailed) => {
                Entailment::Disentailed
            }
            _ => Entailment::Unknown,
        },
    }
}

fn bounds(d: &IntDomain, f: impl Fn(Value, Value) -> (bool, bool)) -> Entailment {
    match (d.min(), d.max()) {
        (Some(lo), Some(hi)) => {
            let (ent, dis) = f(lo, hi);
            decide(ent, dis)
        }
        // An empty domain only occurs in a failed store.
        _ => Entailment::Entailed,
    }
}

fn int_mut(doms: &mut [Domain], v: usize) -> &mut IntDomain {
    match &mut doms[v] {
        Domain::Int(d) => d,
        Domain::Set(_) => unreachable!("kind checked at resolution"),
    }
}

fn set_mut(doms: &mut [Domain], v: usize) -> &mut SetDomain {
    match &mut doms[v] {
        Domain::Set(s) => s,
        Domain::Int(_) => unreachable!("kind checked at resolution"),
    }
}

fn note(changed: &mut Vec<usize>, v: usize, did: bool, failed: bool) -> Narrowed {
    if did {
        changed.push(v);
    }
    if failed {
        Err(Wipeout)
    } else {
        Ok(())
    }
}

fn narrow_int(
    doms: &mut [Domain],
    v: usize,
    changed: &mut Vec<usize>,
    f: impl FnOnce(&mut IntDomain) -> bool,
) -> Narrowed {
    let d = int_mut(doms, v);
    let did = f(d);
    let failed = d.is_empty();
    note(changed, v, did, failed)
}

/// Narrows the domains as if `p` were told.
pub(crate) fn narrow(p: &Prop, doms: &mut [Domain], changed: &mut Vec<usize>) -> Narrowed {
    use Prop::*;
    match p {
        True | Assigned(_) => Ok(()),
        Eq(v, k) => narrow_int(doms, *v, changed, |d| d.assign(*k)),
        Ne(v, k) => narrow_int(doms, *v, changed, |d| d.remove(*k)),
        Lt(v, k) => narrow_int(doms, *v, changed, |d| d.restrict_max(k - 1)),
        Le(v, k) => narrow_int(doms, *v, changed, |d| d.restrict_max(*k)),
        Gt(v, k) => narrow_int(doms, *v, changed, |d| d.restrict_min(k + 1)),
        Ge(v, k) => narrow_int(doms, *v, changed, |d| d.restrict_min(*k)),
        VarEq(a, b) => {
            if a == b {
                return Ok(());
            }
            let db = int(doms, *b).clone();
            narrow_int(doms, *a, changed, |d| d.intersect(&db))?;
            let da = int(doms, *a).clone();
            narrow_int(doms, *b, changed, |d| d.intersect(&da))
        }
        VarNe(a, b) => {
            if a == b {
                return Err(Wipeout);
            }
            if let Some(x) = int(doms, *a).value() {
                narrow_int(doms, *b, changed, |d| d.remove(x))?;
            }
            if let Some(y) = int(doms, *b).value() {
                narrow_int(doms, *a, changed, |d| d.remove(y))?;
            }
            Ok(())
        }
        In(v, allowed) => narrow_int(doms, *v, changed, |d| d.intersect(allowed)),
        NotIn(v, s) => narrow_int(doms, *v, changed, |d| {
            s.iter().fold(false, |acc, k| d.remove(*k) | acc)
        }),
        Member(k, sv) => {
            let s = set_mut(doms, *sv);
            let did = s.include(*k);
            let failed = s.is_failed();
            note(changed, *sv, did, failed)
        }
        NotMember(k, sv) => {
            let s = set_mut(doms, *sv);
            let did = s.exclude(*k);
            let failed = s.is_failed();
            note(changed, *sv, did, failed)
        }
        And(ps) => {
            for q in ps {
                narrow(q, doms, changed)?;
            }
            Ok(())
        }
        Reify(q, b) => narrow_reified(q, *b, doms, changed),
    }
}

fn narrow_reified(q: &Prop, b: usize, doms: &mut [Domain], changed: &mut Vec<usize>) -> Narrowed {
    match check(q, doms) {
        Entailment::Entailed => narrow_int(doms, b, changed, |d| d.assign(1))?,
        Entailment::Disentailed => narrow_int(doms, b, changed, |d| d.assign(0))?,
        Entailment::Unknown => {}
    }
    match int(doms, b).value() {
        Some(1) => narrow(q, doms, changed),
        Some(0) => narrow_negation(q, doms, changed),
        _ => Ok(()),
    }
}

/// Narrows as if `¬p` were told, where a negation form exists.
fn narrow_negation(p: &Prop, doms: &mut [Domain], changed: &mut Vec<usize>) -> Narrowed {
    match p {
        Prop::True => Err(Wipeout),
        // ¬(c1 ∧ ... ∧ cn) only narrows once all but one conjunct hold.
        Prop::And(ps) => {
            let mut open = ps
                .iter()
                .filter(|q| check(q, doms) != Entailment::Entailed);
            match (open.next(), open.next()) {
                (None, _) => Err(Wipeout),
                (Some(last), None) => {
                    let last = last.clone();
                    narrow_negation(&last, doms, changed)
                }
                _ => Ok(()),
            }
        }
        other => match other.negated() {
            Some(n) => narrow(&n, doms, changed),
            None => Ok(()),
        },
    }
}
