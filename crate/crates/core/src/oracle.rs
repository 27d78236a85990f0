//! Factor Oracle with online construction.
//!
//! States are `0..=n` for a learned sequence `σ_1..σ_n`. Factor links go
//! forward (the spine `i-1 → i` plus shortcuts added while walking suffix
//! chains) and suffix links go backward to the state that ends the longest
//! repeated suffix. `S[0]` is `-1`, represented here as `None`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer label of a learned symbol.
pub type Symbol = u32;

/// Index of an oracle state.
pub type State = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("symbol {sym} is outside the alphabet of size {alphabet}")]
    SymbolOutOfRange { sym: Symbol, alphabet: u32 },
    #[error("state {state} does not exist (oracle has states 0..={last})")]
    NoSuchState { state: State, last: State },
    #[error("alphabet size must be at least 1")]
    EmptyAlphabet,
}

/// What one `add` changed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddStep {
    /// The new state `n+1`.
    pub state: State,
    pub sym: Symbol,
    /// Suffix-chain states that received a new `sym` link to `state`,
    /// not counting the spine link from `state - 1`.
    pub chain_links: Vec<State>,
    pub suffix: State,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Oracle {
    alphabet: u32,
    sigma: Vec<Symbol>,
    delta: Vec<BTreeMap<Symbol, State>>,
    suffix: Vec<Option<State>>,
}

impl Oracle {
    pub fn new(alphabet: u32) -> Result<Self, OracleError> {
        if alphabet == 0 {
            return Err(OracleError::EmptyAlphabet);
        }
        Ok(Oracle {
            alphabet,
            sigma: Vec::new(),
            delta: vec![BTreeMap::new()],
            suffix: vec![None],
        })
    }

    pub fn from_symbols(alphabet: u32, word: &[Symbol]) -> Result<Self, OracleError> {
        let mut o = Oracle::new(alphabet)?;
        for &s in word {
            o.add(s)?;
        }
        Ok(o)
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    /// Number of learned symbols; the last state index.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sequence(&self) -> &[Symbol] {
        &self.sigma
    }

    /// `σ_i` for `1 ≤ i ≤ n`.
    pub fn symbol(&self, i: usize) -> Option<Symbol> {
        i.checked_sub(1).and_then(|j| self.sigma.get(j).copied())
    }

    pub fn add(&mut self, sym: Symbol) -> Result<AddStep, OracleError> {
        if sym >= self.alphabet {
            return Err(OracleError::SymbolOutOfRange {
                sym,
                alphabet: self.alphabet,
            });
        }
        let last = self.sigma.len();
        let state = last + 1;
        self.sigma.push(sym);
        self.delta.push(BTreeMap::new());
        self.delta[last].insert(sym, state);

        let mut chain_links = Vec::new();
        let mut k = self.suffix[last];
        while let Some(s) = k {
            if self.delta[s].contains_key(&sym) {
                break;
            }
            self.delta[s].insert(sym, state);
            chain_links.push(s);
            k = self.suffix[s];
        }
        let suffix = match k {
            Some(s) => self.delta[s][&sym],
            None => 0,
        };
        self.suffix.push(Some(suffix));
        Ok(AddStep {
            state,
            sym,
            chain_links,
            suffix,
        })
    }

    fn check_state(&self, state: State) -> Result<(), OracleError> {
        if state < self.delta.len() {
            Ok(())
        } else {
            Err(OracleError::NoSuchState {
                state,
                last: self.len(),
            })
        }
    }

    /// `S[i]`; `None` stands for `-1`.
    pub fn suffix(&self, i: State) -> Result<Option<State>, OracleError> {
        self.check_state(i)?;
        Ok(self.suffix[i])
    }

    /// Suffix links with `-1` spelled out.
    pub fn suffix_links(&self) -> Vec<i64> {
        self.suffix
            .iter()
            .map(|s| s.map_or(-1, |v| v as i64))
            .collect()
    }

    pub fn delta(&self, k: State, sym: Symbol) -> Result<Option<State>, OracleError> {
        self.check_state(k)?;
        Ok(self.delta[k].get(&sym).copied())
    }

    /// Labels of the factor links leaving `k`.
    pub fn from(&self, k: State) -> Result<BTreeSet<Symbol>, OracleError> {
        self.check_state(k)?;
        Ok(self.delta[k].keys().copied().collect())
    }

    /// Every factor link as `(from, label, to)`.
    pub fn links(&self) -> impl Iterator<Item = (State, Symbol, State)> + '_ {
        self.delta
            .iter()
            .enumerate()
            .flat_map(|(k, m)| m.iter().map(move |(&s, &t)| (k, s, t)))
    }

    /// Whether a factor-link path from state 0 spells `word`.
    pub fn is_factor(&self, word: &[Symbol]) -> bool {
        self.walk(0, word).is_some()
    }

    /// Follows `word` from `start`; the state reached, if the path exists.
    pub fn walk(&self, start: State, word: &[Symbol]) -> Option<State> {
        word.iter().try_fold(start, |k, s| self.delta.get(k)?.get(s).copied())
    }

    pub fn to_json(&self) -> OracleJson {
        OracleJson {
            alphabet: self.alphabet,
            sigma: self.sigma.clone(),
            suffix: self.suffix_links(),
            delta: self.links().map(|(k, s, t)| [k, s as usize, t]).collect(),
        }
    }
}

/// Wire form of an oracle: `sigma`, `S`, and the factor links as triples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleJson {
    pub alphabet: u32,
    pub sigma: Vec<Symbol>,
    #[serde(rename = "S")]
    pub suffix: Vec<i64>,
    pub delta: Vec<[usize; 3]>,
}
