//! Monte Carlo estimate of how quickly IMPROV reaches an improvisation
//! state.
//!
//! A trial runs a session for `t` units on a periodic input. It succeeds
//! when the output contains a suffix jump followed by `phrase_len`
//! consecutive continuations: a recombined phrase rather than a lone
//! jump. With `phrase_len = 0` the first jump already counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::session::{Branch, Session};
use super::{Rho, SessionConfig, SessionError};
use crate::oracle::Symbol;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    pub rho: f64,
    pub t: usize,
    pub trials: usize,
    pub seed: u64,
    pub phrase_len: usize,
    /// Repeated to length `2t` as the input stream.
    pub pattern: Vec<Symbol>,
}

impl ConvergenceOptions {
    pub fn new(rho: f64, t: usize, trials: usize, seed: u64) -> Self {
        Self {
            rho,
            t,
            trials,
            seed,
            phrase_len: 4,
            pattern: vec![0, 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEstimate {
    pub rho: f64,
    pub t: usize,
    pub trials: usize,
    pub successes: usize,
    pub q_hat: f64,
    pub ci95: (f64, f64),
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn estimate_convergence(rho: f64, t: usize, trials: usize, seed: u64) -> Result<ConvergenceEstimate, SessionError> {
    estimate_convergence_with(&ConvergenceOptions::new(rho, t, trials, seed))
}

pub fn estimate_convergence_with(opts: &ConvergenceOptions) -> Result<ConvergenceEstimate, SessionError> {
    if opts.trials == 0 {
        return Err(SessionError::Config("trials must be at least 1".into()));
    }
    if opts.pattern.is_empty() {
        return Err(SessionError::Config("input pattern is empty".into()));
    }
    Rho::Prob(opts.rho).validate()?;
    let outcomes: Result<Vec<bool>, SessionError> = (0..opts.trials)
        .into_par_iter()
        .map(|i| trial(opts, trial_seed(opts.seed, i as u64)))
        .collect();
    let successes = outcomes?.into_iter().filter(|&ok| ok).count();
    Ok(ConvergenceEstimate {
        rho: opts.rho,
        t: opts.t,
        trials: opts.trials,
        successes,
        q_hat: successes as f64 / opts.trials as f64,
        ci95: wilson_interval(successes, opts.trials),
    })
}

fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn trial(opts: &ConvergenceOptions, seed: u64) -> Result<bool, SessionError> {
    let alphabet = opts.pattern.iter().max().map_or(1, |&m| m + 1);
    let mut session = Session::new(SessionConfig {
        alphabet_size: alphabet,
        rho: Rho::Prob(opts.rho),
        seed,
        max_units: opts.t,
        ..SessionConfig::default()
    })?;
    for &sym in opts.pattern.iter().cycle().take(2 * opts.t) {
        session.push_note(sym)?;
    }
    // Continuations since the latest jump; `None` before any jump.
    let mut run: Option<usize> = None;
    for _ in 0..opts.t {
        match session.step()?.branch {
            Branch::Jump => run = Some(0),
            Branch::Continue => run = run.map(|n| n + 1),
            Branch::Blocked => continue,
        }
        if run.is_some_and(|n| n >= opts.phrase_len) {
            return Ok(true);
        }
    }
    Ok(false)
}
