use std::collections::{BTreeSet, HashMap};

use ntccrt::store::{Constraint, Domain, Entailment, IntDomain, PropagationResult, SetDomain, Store, Var};
use proptest::prelude::*;

const INT_VARS: [&str; 3] = ["x", "y", "z"];
const HI: i64 = 4;
const SET_UPPER: i64 = 3;

fn fresh() -> Store {
    let mut decls: Vec<(Var, Domain)> = INT_VARS
        .iter()
        .map(|v| (Var::new(v), Domain::Int(IntDomain::new(0, HI))))
        .collect();
    decls.push((Var::new("F"), Domain::Set(SetDomain::with_upper(0..=SET_UPPER))));
    Store::new(decls).unwrap()
}

fn atomic() -> impl Strategy<Value = Constraint> {
    let var = prop::sample::select(INT_VARS.to_vec());
    let k = -1..=HI + 1;
    prop_oneof![
        (var.clone(), k.clone()).prop_map(|(v, k)| Constraint::eq(v, k)),
        (var.clone(), k.clone()).prop_map(|(v, k)| Constraint::ne(v, k)),
        (var.clone(), k.clone()).prop_map(|(v, k)| Constraint::lt(v, k)),
        (var.clone(), k.clone()).prop_map(|(v, k)| Constraint::le(v, k)),
        (var.clone(), k.clone()).prop_map(|(v, k)| Constraint::gt(v, k)),
        (var.clone(), k.clone()).prop_map(|(v, k)| Constraint::ge(v, k)),
        (var.clone(), var.clone()).prop_map(|(a, b)| Constraint::VarEq(a.into(), b.into())),
        (var.clone(), var.clone()).prop_map(|(a, b)| Constraint::VarNe(a.into(), b.into())),
        (var.clone(), prop::collection::btree_set(0..=HI, 0..4))
            .prop_map(|(v, s)| Constraint::InLiteralSet(v.into(), s)),
        (var, prop::collection::btree_set(0..=HI, 0..4))
            .prop_map(|(v, s)| Constraint::NotInLiteralSet(v.into(), s)),
        (0..=SET_UPPER + 1).prop_map(|k| Constraint::member(k, "F")),
        (0..=SET_UPPER + 1).prop_map(|k| Constraint::NotMemberOfSetVar(k, "F".into())),
    ]
}

fn compound() -> impl Strategy<Value = Constraint> {
    prop_oneof![
        4 => atomic(),
        1 => prop::collection::vec(atomic(), 1..4).prop_map(Constraint::and),
    ]
}

struct Point {
    ints: HashMap<&'static str, i64>,
    set: BTreeSet<i64>,
}

fn holds(c: &Constraint, p: &Point) -> bool {
    let int = |v: &Var| p.ints[v.name()];
    match c {
        Constraint::True => true,
        Constraint::IntEq(v, k) => int(v) == *k,
        Constraint::IntNe(v, k) => int(v) != *k,
        Constraint::IntLt(v, k) => int(v) < *k,
        Constraint::IntLe(v, k) => int(v) <= *k,
        Constraint::IntGt(v, k) => int(v) > *k,
        Constraint::IntGe(v, k) => int(v) >= *k,
        Constraint::VarEq(a, b) => int(a) == int(b),
        Constraint::VarNe(a, b) => int(a) != int(b),
        Constraint::InLiteralSet(v, s) => s.contains(&int(v)),
        Constraint::NotInLiteralSet(v, s) => !s.contains(&int(v)),
        Constraint::MemberOfSetVar(k, _) => p.set.contains(k),
        Constraint::NotMemberOfSetVar(k, _) => !p.set.contains(k),
        Constraint::And(cs) => cs.iter().all(|c| holds(c, p)),
        other => panic!("no brute-force reading for {other}"),
    }
}

/// Every point of the declared space.
fn space() -> Vec<Point> {
    let mut out = Vec::new();
    for x in 0..=HI {
        for y in 0..=HI {
            for z in 0..=HI {
                for mask in 0u32..(1 << (SET_UPPER + 1)) {
                    out.push(Point {
                        ints: HashMap::from([("x", x), ("y", y), ("z", z)]),
                        set: (0..=SET_UPPER).filter(|i| mask & (1 << i) != 0).collect(),
                    });
                }
            }
        }
    }
    out
}

/// Points inside the store's current domains.
fn in_box(store: &Store, p: &Point) -> bool {
    let ints_ok = INT_VARS.iter().all(|v| {
        let d = store.domain(&Var::new(v)).unwrap().as_int().unwrap();
        d.contains(p.ints[v])
    });
    let f = store.domain(&Var::new("F")).unwrap().as_set().unwrap();
    ints_ok && f.lower.is_subset(&p.set) && p.set.iter().all(|&k| f.upper.contains(k))
}

fn post_all(cs: &[Constraint]) -> Store {
    let mut s = fresh();
    for c in cs {
        if s.post(c.clone()).unwrap() == PropagationResult::Failed {
            break;
        }
    }
    s
}

fn box_status(store: &Store, c: &Constraint, points: &[Point]) -> (bool, bool) {
    let mut all = true;
    let mut any = false;
    for p in points.iter().filter(|p| in_box(store, p)) {
        let h = holds(c, p);
        all &= h;
        any |= h;
    }
    (all, any)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn posting_only_narrows(cs in prop::collection::vec(compound(), 1..6)) {
        let mut s = fresh();
        for c in cs {
            let before: Vec<Domain> = s.vars().map(|v| s.domain(&v.name).unwrap().clone()).collect();
            let failed = s.post(c).unwrap() == PropagationResult::Failed;
            if failed {
                prop_assert!(s.is_failed());
                break;
            }
            for (v, b) in s.vars().zip(before) {
                prop_assert!(s.domain(&v.name).unwrap().narrows(&b));
            }
        }
    }

    #[test]
    fn posting_twice_changes_nothing(cs in prop::collection::vec(compound(), 1..6)) {
        let once = post_all(&cs);
        prop_assume!(!once.is_failed());
        let mut twice = once.clone();
        for c in &cs {
            twice.post(c.clone()).unwrap();
        }
        prop_assert_eq!(once.snapshot(), twice.snapshot());
    }

    #[test]
    fn post_order_is_irrelevant(cs in prop::collection::vec(compound(), 1..6), rot in 0usize..6) {
        let forward = post_all(&cs);
        let mut shuffled = cs.clone();
        let n = shuffled.len();
        shuffled.rotate_left(rot % n);
        shuffled.reverse();
        prop_assert_eq!(forward.snapshot(), post_all(&shuffled).snapshot());
    }

    #[test]
    fn propagation_never_drops_solutions(cs in prop::collection::vec(compound(), 1..6)) {
        let s = post_all(&cs);
        let points = space();
        let solutions = points.iter().filter(|p| cs.iter().all(|c| holds(c, p)));
        if s.is_failed() {
            prop_assert_eq!(solutions.count(), 0);
        } else {
            for p in solutions {
                prop_assert!(in_box(&s, p));
            }
        }
    }

    #[test]
    fn atomic_entailment_matches_the_domains(
        cs in prop::collection::vec(compound(), 0..4),
        q in atomic(),
    ) {
        let s = post_all(&cs);
        prop_assume!(!s.is_failed());
        let (all, any) = box_status(&s, &q, &space());
        let expected = if all {
            Entailment::Entailed
        } else if !any {
            Entailment::Disentailed
        } else {
            Entailment::Unknown
        };
        prop_assert_eq!(s.entailment_status(&q), expected);
        prop_assert_eq!(s.check(&q), expected);
    }

    #[test]
    fn conjunction_entailment_is_sound(
        cs in prop::collection::vec(compound(), 0..4),
        q in prop::collection::vec(atomic(), 1..4).prop_map(Constraint::and),
    ) {
        let s = post_all(&cs);
        prop_assume!(!s.is_failed());
        let (all, any) = box_status(&s, &q, &space());
        match s.entailment_status(&q) {
            Entailment::Entailed => prop_assert!(all),
            Entailment::Disentailed => prop_assert!(!any),
            Entailment::Unknown => {}
        }
    }

    #[test]
    fn reified_control_agrees_with_entailment(
        cs in prop::collection::vec(compound(), 0..4),
        q in atomic(),
        force in prop::option::of(0..=1i64),
    ) {
        let mut s = post_all(&cs);
        prop_assume!(!s.is_failed());
        s.declare("b".into(), Domain::Int(IntDomain::boolean())).unwrap();
        let status = s.entailment_status(&q);
        s.post(Constraint::reify(q.clone(), "b")).unwrap();
        match status {
            Entailment::Entailed => prop_assert_eq!(s.value(&"b".into()), Some(1)),
            Entailment::Disentailed => prop_assert_eq!(s.value(&"b".into()), Some(0)),
            Entailment::Unknown => prop_assert_eq!(s.value(&"b".into()), None),
        }
        if let (Some(b), Entailment::Unknown) = (force, status) {
            s.post(Constraint::eq("b", b)).unwrap();
            let contrary = if b == 1 { Entailment::Disentailed } else { Entailment::Entailed };
            prop_assert!(s.is_failed() || s.entailment_status(&q) != contrary);
            // Forcing the control variable acts like telling the constraint or its negation.
            let mut direct = post_all(&cs);
            let told = if b == 1 { q.clone() } else { q.negate().unwrap() };
            let _ = direct.post(told).unwrap();
            let mut snap = s.snapshot();
            snap.vars.remove("b");
            prop_assert_eq!(snap, direct.snapshot());
        }
    }
}
