//! Seeded randomness. Every probe takes an explicit `SeededRng`, so a fixed
//! seed reproduces every report bit for bit.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

/// SplitMix64 generator with the few sampling helpers the probes need.
#[derive(Debug, Clone)]
pub struct SeededRng(SplitMix64);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(SplitMix64::seed_from_u64(seed))
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.random::<f64>()
    }

    /// `10^u` with `u` uniform in `[lo_exp, hi_exp)`.
    pub fn log_uniform(&mut self, lo_exp: f64, hi_exp: f64) -> f64 {
        10f64.powf(self.uniform(lo_exp, hi_exp))
    }

    pub fn sign(&mut self) -> f64 {
        if self.0.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    pub fn vector(&mut self, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..dim).map(|_| self.uniform(lo, hi)).collect()
    }

    /// Independent child stream, for handing out to sub-probes.
    pub fn fork(&mut self) -> SeededRng {
        SeededRng::new(self.0.random::<u64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        let mut a = SeededRng::new(7);
        let mut b = SeededRng::new(7);
        for _ in 0..100 {
            assert_eq!(a.uniform(-1.0, 1.0).to_bits(), b.uniform(-1.0, 1.0).to_bits());
        }
        let v = SeededRng::new(3).vector(5, -10.0, 10.0);
        assert!(v.iter().all(|x| (-10.0..10.0).contains(x)));
    }
}
