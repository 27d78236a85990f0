use std::collections::BTreeSet;

use ntccrt::oracle::{Oracle, Symbol};
use proptest::prelude::*;

fn factors(w: &[Symbol]) -> BTreeSet<Vec<Symbol>> {
    let mut out = BTreeSet::new();
    for i in 0..=w.len() {
        for j in i..=w.len() {
            out.insert(w[i..j].to_vec());
        }
    }
    out
}

/// Every word spelled by a path from state 0.
fn language(o: &Oracle) -> BTreeSet<Vec<Symbol>> {
    let mut out = BTreeSet::new();
    let mut frontier = vec![(0usize, Vec::new())];
    while let Some((state, word)) = frontier.pop() {
        for (from, sym, to) in o.links() {
            if from == state {
                let mut next = word.clone();
                next.push(sym);
                frontier.push((to, next));
            }
        }
        out.insert(word);
    }
    out
}

fn word(text: &str) -> Vec<Symbol> {
    text.bytes().map(|b| (b - b'a') as Symbol).collect()
}

#[test]
fn language_is_exactly_the_factors_on_small_cases() {
    for text in ["abb", "aab", "abc", "aaa"] {
        let w = word(text);
        let o = Oracle::from_symbols(3, &w).unwrap();
        assert_eq!(language(&o), factors(&w), "{text}");
    }
}

#[test]
fn aab_links() {
    let o = Oracle::from_symbols(2, &word("aab")).unwrap();
    assert_eq!(o.suffix_links(), vec![-1, 0, 1, 0]);
    let links: Vec<_> = o.links().collect();
    assert_eq!(links, vec![(0, 0, 1), (0, 1, 3), (1, 0, 2), (1, 1, 3), (2, 1, 3)]);
}

fn check_structure(o: &Oracle, w: &[Symbol]) -> Result<(), TestCaseError> {
    prop_assert_eq!(o.len(), w.len());
    prop_assert_eq!(o.suffix(0).unwrap(), None);
    for i in 1..=w.len() {
        let s = o.suffix(i).unwrap().expect("only state 0 lacks a suffix link");
        prop_assert!(s < i);
        prop_assert_eq!(o.delta(i - 1, w[i - 1]).unwrap(), Some(i));
        // Chains reach the root within i steps.
        let mut k = Some(i);
        let mut steps = 0;
        while let Some(state) = k {
            k = o.suffix(state).unwrap();
            steps += 1;
        }
        prop_assert!(steps <= i + 1);
    }
    for k in 0..=w.len() {
        let labels: BTreeSet<Symbol> = o.links().filter(|l| l.0 == k).map(|l| l.1).collect();
        prop_assert_eq!(o.from(k).unwrap(), labels);
    }
    for (from, _, to) in o.links() {
        prop_assert!(from < to);
    }
    Ok(())
}

proptest! {
    #[test]
    fn recognises_every_factor(w in prop::collection::vec(0u32..4, 0..40)) {
        let o = Oracle::from_symbols(4, &w).unwrap();
        for f in factors(&w) {
            prop_assert!(o.is_factor(&f), "{:?} in {:?}", f, w);
        }
        check_structure(&o, &w)?;
    }

    #[test]
    fn incremental_equals_direct(w in prop::collection::vec(0u32..3, 0..30), c in 0u32..3) {
        let mut grown = Oracle::from_symbols(3, &w).unwrap();
        grown.add(c).unwrap();
        let mut wc = w.clone();
        wc.push(c);
        prop_assert_eq!(grown, Oracle::from_symbols(3, &wc).unwrap());
    }

    #[test]
    fn transitions_stay_linear(w in prop::collection::vec(0u32..3, 1..60)) {
        // n spine links plus at most n - 1 external ones.
        let o = Oracle::from_symbols(3, &w).unwrap();
        let count = o.links().count();
        prop_assert!(count >= w.len() && count < 2 * w.len());
    }
}
