use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded generator behind every pseudo-random choice the engine makes.
#[derive(Clone, Debug)]
pub struct EngineRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl EngineRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Uniform integer in `0..=max`.
    pub fn up_to(&mut self, max: u32) -> u32 {
        self.inner.random_range(0..=max)
    }

    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

/// Picks an enabled branch with probability proportional to its weight
/// among the enabled ones. `None` when no enabled branch has positive weight.
pub fn choose_prob(branches: &[(bool, f64)], rng: &mut EngineRng) -> Option<usize> {
    let live = |&(enabled, w): &(bool, f64)| enabled && w > 0.0;
    let total: f64 = branches.iter().filter(|b| live(b)).map(|b| b.1).sum();
    if total <= 0.0 {
        return None;
    }
    let mut target = rng.unit() * total;
    let mut last = None;
    for (i, b) in branches.iter().enumerate() {
        if !live(b) {
            continue;
        }
        if target < b.1 {
            return Some(i);
        }
        target -= b.1;
        last = Some(i);
    }
    // Rounding left `target` a hair past the final cumulative weight.
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_frequency_within_three_sigma() {
        // Binomial(10000, 0.7): mean 7000, sigma = sqrt(10000 * 0.7 * 0.3) ≈ 45.8.
        let mut rng = EngineRng::new(7);
        let branches = [(true, 0.7), (true, 0.3)];
        let first = (0..10_000)
            .filter(|_| choose_prob(&branches, &mut rng) == Some(0))
            .count();
        assert!((6850..=7150).contains(&first), "first chosen {first} times");
    }

    #[test]
    fn degenerate_choices() {
        let mut rng = EngineRng::new(1);
        for _ in 0..100 {
            assert_eq!(choose_prob(&[(true, 1.0)], &mut rng), Some(0));
            assert_eq!(choose_prob(&[(false, 0.7), (true, 0.3)], &mut rng), Some(1));
        }
        assert_eq!(choose_prob(&[(false, 1.0), (true, 0.0)], &mut rng), None);
        assert_eq!(choose_prob(&[], &mut rng), None);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = EngineRng::new(42);
        let mut b = EngineRng::new(42);
        let xs: Vec<usize> = (0..20).map(|_| a.index(10)).collect();
        let ys: Vec<usize> = (0..20).map(|_| b.index(10)).collect();
        assert_eq!(xs, ys);
        assert_eq!(a.seed(), 42);
    }
}
