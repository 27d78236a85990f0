//! Integer and set domains.
//!
//! Integer domains are kept as a sorted list of disjoint, non-adjacent closed
//! intervals. That covers bounds narrowing and value removal over the full
//! `[0, 2^32-1]` range without materialising bitsets.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Values held by finite-domain variables.
pub type Value = i64;

/// Largest value of the conceptual finite domain.
pub const MAX_VALUE: Value = u32::MAX as Value;

/// Domain of an integer variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntDomain {
    intervals: Vec<(Value, Value)>,
}

impl IntDomain {
    /// `[lo, hi]`. An inverted range yields the empty domain.
    pub fn new(lo: Value, hi: Value) -> Self {
        if lo > hi {
            Self::empty()
        } else {
            Self { intervals: vec![(lo, hi)] }
        }
    }

    /// `[0, 2^32-1]`.
    pub fn full() -> Self {
        Self::new(0, MAX_VALUE)
    }

    pub fn boolean() -> Self {
        Self::new(0, 1)
    }

    pub fn singleton(v: Value) -> Self {
        Self::new(v, v)
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn from_values<I: IntoIterator<Item = Value>>(values: I) -> Self {
        let sorted: BTreeSet<Value> = values.into_iter().collect();
        let mut intervals: Vec<(Value, Value)> = Vec::new();
        for v in sorted {
            match intervals.last_mut() {
                Some(last) if last.1 + 1 == v => last.1 = v,
                _ => intervals.push((v, v)),
            }
        }
        Self { intervals }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn min(&self) -> Option<Value> {
        self.intervals.first().map(|iv| iv.0)
    }

    pub fn max(&self) -> Option<Value> {
        self.intervals.last().map(|iv| iv.1)
    }

    pub fn size(&self) -> u64 {
        self.intervals
            .iter()
            .map(|&(lo, hi)| (hi - lo + 1) as u64)
            .sum()
    }

    /// The assigned value, if the domain is a singleton.
    pub fn value(&self) -> Option<Value> {
        match self.intervals.as_slice() {
            [(lo, hi)] if lo == hi => Some(*lo),
            _ => None,
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.value().is_some()
    }

    pub fn intervals(&self) -> &[(Value, Value)] {
        &self.intervals
    }

    pub fn contains(&self, v: Value) -> bool {
        self.locate(v).is_ok()
    }

    /// Enumerates every value. Only sensible for small domains.
    pub fn values(&self) -> impl Iterator<Item = Value> + '_ {
        self.intervals.iter().flat_map(|&(lo, hi)| lo..=hi)
    }

    fn locate(&self, v: Value) -> Result<usize, usize> {
        self.intervals.binary_search_by(|&(lo, hi)| {
            if hi < v {
                std::cmp::Ordering::Less
            } else if lo > v {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
    }

    /// Removes every value below `v`. Returns whether the domain changed.
    pub fn restrict_min(&mut self, v: Value) -> bool {
        let before = self.intervals.len();
        self.intervals.retain(|&(_, hi)| hi >= v);
        let mut changed = self.intervals.len() != before;
        if let Some(first) = self.intervals.first_mut() {
            if first.0 < v {
                first.0 = v;
                changed = true;
            }
        }
        changed
    }

    /// Removes every value above `v`. Returns whether the domain changed.
    pub fn restrict_max(&mut self, v: Value) -> bool {
        let before = self.intervals.len();
        self.intervals.retain(|&(lo, _)| lo <= v);
        let mut changed = self.intervals.len() != before;
        if let Some(last) = self.intervals.last_mut() {
            if last.1 > v {
                last.1 = v;
                changed = true;
            }
        }
        changed
    }

    pub fn remove(&mut self, v: Value) -> bool {
        let Ok(idx) = self.locate(v) else {
            return false;
        };
        let (lo, hi) = self.intervals[idx];
        match (lo == v, hi == v) {
            (true, true) => {
                self.intervals.remove(idx);
            }
            (true, false) => self.intervals[idx].0 = v + 1,
            (false, true) => self.intervals[idx].1 = v - 1,
            (false, false) => {
                self.intervals[idx].1 = v - 1;
                self.intervals.insert(idx + 1, (v + 1, hi));
            }
        }
        true
    }

    pub fn assign(&mut self, v: Value) -> bool {
        if self.value() == Some(v) {
            return false;
        }
        self.intervals = if self.contains(v) { vec![(v, v)] } else { Vec::new() };
        true
    }

    /// Intersects in place with `other`.
    pub fn intersect(&mut self, other: &IntDomain) -> bool {
        let mut out = Vec::with_capacity(self.intervals.len());
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a_lo, a_hi) = self.intervals[i];
            let (b_lo, b_hi) = other.intervals[j];
            let lo = a_lo.max(b_lo);
            let hi = a_hi.min(b_hi);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a_hi < b_hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        let changed = out != self.intervals;
        self.intervals = out;
        changed
    }

    pub fn is_disjoint(&self, other: &IntDomain) -> bool {
        let mut probe = self.clone();
        probe.intersect(other);
        probe.is_empty()
    }

    pub fn is_subset(&self, other: &IntDomain) -> bool {
        let mut probe = self.clone();
        probe.intersect(other);
        probe == *self
    }
}

impl fmt::Display for IntDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(v) = self.value() {
            return write!(f, "{v}");
        }
        if self.is_empty() {
            return f.write_str("{}");
        }
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|(lo, hi)| {
                if lo == hi {
                    lo.to_string()
                } else {
                    format!("{lo}..{hi}")
                }
            })
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Domain of a finite-set variable: known members and possible members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetDomain {
    pub lower: BTreeSet<Value>,
    pub upper: IntDomain,
}

impl SetDomain {
    pub fn new(lower: BTreeSet<Value>, upper: IntDomain) -> Self {
        Self { lower, upper }
    }

    /// Nothing known, any member of `[0, 2^32-1]` possible.
    pub fn unknown() -> Self {
        Self::new(BTreeSet::new(), IntDomain::full())
    }

    pub fn with_upper<I: IntoIterator<Item = Value>>(upper: I) -> Self {
        Self::new(BTreeSet::new(), IntDomain::from_values(upper))
    }

    pub fn is_failed(&self) -> bool {
        self.lower.iter().any(|v| !self.upper.contains(*v))
    }

    /// Lower and upper bound coincide.
    pub fn is_fixed(&self) -> bool {
        self.upper.size() == self.lower.len() as u64 && !self.is_failed()
    }

    pub fn include(&mut self, v: Value) -> bool {
        self.lower.insert(v)
    }

    pub fn exclude(&mut self, v: Value) -> bool {
        self.upper.remove(v)
    }
}

/// Declared kind of a store variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Int,
    Set,
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarKind::Int => "int",
            VarKind::Set => "set",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Domain {
    Int(IntDomain),
    Set(SetDomain),
}

impl Domain {
    pub fn kind(&self) -> VarKind {
        match self {
            Domain::Int(_) => VarKind::Int,
            Domain::Set(_) => VarKind::Set,
        }
    }

    pub fn is_failed(&self) -> bool {
        match self {
            Domain::Int(d) => d.is_empty(),
            Domain::Set(s) => s.is_failed(),
        }
    }

    pub fn as_int(&self) -> Option<&IntDomain> {
        match self {
            Domain::Int(d) => Some(d),
            Domain::Set(_) => None,
        }
    }

    pub fn as_set(&self) -> Option<&SetDomain> {
        match self {
            Domain::Set(s) => Some(s),
            Domain::Int(_) => None,
        }
    }

    /// `self ⊆ before`, for monotonicity checks.
    pub fn narrows(&self, before: &Domain) -> bool {
        match (self, before) {
            (Domain::Int(a), Domain::Int(b)) => a.is_subset(b),
            (Domain::Set(a), Domain::Set(b)) => {
                b.lower.is_subset(&a.lower) && a.upper.is_subset(&b.upper)
            }
            _ => false,
        }
    }
}
