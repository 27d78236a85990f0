use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ccfomi::{Rho, Session, SessionConfig, SessionError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub units: usize,
    /// Independent sessions stepped together in each unit.
    pub replicas: usize,
    pub runs: usize,
    pub seed: u64,
    /// Random notes fed to each replica, one per unit from the start.
    pub notes: usize,
    pub alphabet: u32,
    pub rho: Rho,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            units: 300,
            replicas: 40,
            runs: 1,
            seed: 0,
            notes: 30,
            alphabet: 4,
            rho: Rho::Prob(0.7),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    /// Wall-clock per unit, all runs concatenated.
    pub durations_ms: Vec<f64>,
    /// Engine activations per unit, summed over replicas.
    pub activations: Vec<usize>,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    pub mean_activations: f64,
}

impl LatencyReport {
    pub fn from_samples(durations_ms: Vec<f64>, activations: Vec<usize>) -> Self {
        if durations_ms.is_empty() {
            return LatencyReport {
                activations,
                ..LatencyReport::default()
            };
        }
        let mut sorted = durations_ms.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        // Nearest-rank percentile.
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        let mean_activations = if activations.is_empty() {
            0.0
        } else {
            activations.iter().sum::<usize>() as f64 / activations.len() as f64
        };
        LatencyReport {
            median_ms: median,
            mean_ms: sorted.iter().sum::<f64>() / n as f64,
            p95_ms: sorted[rank - 1],
            max_ms: sorted[n - 1],
            mean_activations,
            durations_ms,
            activations,
        }
    }
}

fn replica_seed(seed: u64, run: usize, replica: usize) -> u64 {
    seed.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ ((run as u64) << 32 | replica as u64)
}

/// Steps `replicas` sessions per unit and times each unit as a whole.
pub fn bench(cfg: &BenchConfig) -> Result<LatencyReport, SessionError> {
    let mut durations = Vec::with_capacity(cfg.units * cfg.runs);
    let mut activations = Vec::with_capacity(cfg.units * cfg.runs);
    for run in 0..cfg.runs {
        let mut sessions = (0..cfg.replicas)
            .map(|r| {
                let seed = replica_seed(cfg.seed, run, r);
                let mut s = Session::new(SessionConfig {
                    alphabet_size: cfg.alphabet,
                    rho: cfg.rho,
                    seed,
                    max_units: cfg.units,
                    ..SessionConfig::default()
                })?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..cfg.notes {
                    s.push_note(rng.random_range(0..cfg.alphabet))?;
                }
                Ok(s)
            })
            .collect::<Result<Vec<_>, SessionError>>()?;
        for _ in 0..cfg.units {
            let start = Instant::now();
            let mut count = 0;
            for s in &mut sessions {
                count += s.step()?.activations;
            }
            durations.push(start.elapsed().as_secs_f64() * 1e3);
            activations.push(count);
        }
    }
    Ok(LatencyReport::from_samples(durations, activations))
}
