//! CCFOMI: learning, synchronisation and improvisation as ntcc processes
//! sharing one store.
//!
//! Store layout (`S` is stored offset by one so that `-1` is representable):
//!
//! | variable       | meaning                                   |
//! |----------------|-------------------------------------------|
//! | `S[k]`         | suffix link of state `k`, plus one        |
//! | `sigma[i]`     | `i`-th learned symbol                     |
//! | `delta[k,s]`   | target of the factor link `k --s-->`      |
//! | `from[k]`      | set of labels leaving `k`                 |
//! | `go`           | number of notes supplied so far           |
//! | `out`          | symbol emitted this unit                  |
//! | `at`, `branch` | state emitted from; 0 continuation, 1 jump |

mod converge;
mod model;
mod session;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use converge::{estimate_convergence, estimate_convergence_with, wilson_interval, ConvergenceEstimate, ConvergenceOptions};
pub use model::{
    build_improv, build_improv_choice, build_learn, build_sync, definitions, program, vars,
};
pub use session::{check_coherence, run_session, Branch, Session, SessionRun, UnitRecord};

use crate::engine::{EngineConfig, EngineError, UnlessMode};
use crate::oracle::OracleError;

/// How IMPROV chooses between continuing and jumping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rho {
    /// Plain non-deterministic choice among enabled branches.
    Nondet,
    /// Continuation weight; jumps get `1 - rho`.
    Prob(f64),
}

impl Rho {
    pub fn validate(self) -> Result<Self, SessionError> {
        match self {
            Rho::Prob(r) if !(0.0..=1.0).contains(&r) => Err(SessionError::Config(format!("rho {r} is outside [0, 1]"))),
            other => Ok(other),
        }
    }
}

impl fmt::Display for Rho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rho::Nondet => f.write_str("nondet"),
            Rho::Prob(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for Rho {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("nondet") {
            return Ok(Rho::Nondet);
        }
        let r: f64 = s
            .parse()
            .map_err(|_| SessionError::Config(format!("rho must be a number or `nondet`, got `{s}`")))?;
        Rho::Prob(r).validate()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RhoRepr {
    Prob(f64),
    Named(String),
}

impl Serialize for Rho {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Rho::Nondet => RhoRepr::Named("nondet".into()),
            Rho::Prob(r) => RhoRepr::Prob(*r),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rho {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rho = match RhoRepr::deserialize(d)? {
            RhoRepr::Prob(r) => Rho::Prob(r),
            RhoRepr::Named(s) => s.parse().map_err(serde::de::Error::custom)?,
        };
        rho.validate().map_err(serde::de::Error::custom)
    }
}

/// Which condition lets `SYNC_i` run `LEARN_i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncGuard {
    /// `S[i-1] >= -1`, read as "the previous suffix link is known".
    #[default]
    Assigned,
    /// `S[i-1] >= 0`. The first link is `-1`, so nothing is ever learned.
    NonNegative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SessionConfig {
    pub alphabet_size: u32,
    pub rho: Rho,
    pub seed: u64,
    pub tick_ms: u64,
    pub max_units: usize,
    pub star_bound: u32,
    pub unless_strict: bool,
    pub sync_guard: SyncGuard,
    /// State IMPROV starts from.
    pub k0: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            alphabet_size: 26,
            rho: Rho::Nondet,
            seed: 0,
            tick_ms: 100,
            max_units: 100,
            star_bound: EngineConfig::default().star_bound,
            unless_strict: false,
            sync_guard: SyncGuard::Assigned,
            k0: 0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        if self.alphabet_size == 0 {
            return Err(SessionError::Config("alphabetSize must be at least 1".into()));
        }
        if self.tick_ms == 0 {
            return Err(SessionError::Config("tickMs must be positive".into()));
        }
        self.rho.validate()?;
        Ok(())
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            star_bound: self.star_bound,
            unless: if self.unless_strict {
                UnlessMode::Disentailed
            } else {
                UnlessMode::NotEntailed
            },
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
