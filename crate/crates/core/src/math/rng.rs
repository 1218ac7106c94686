//! Seeded pseudo-random source.
//!
//! The generator is SplitMix64: a 64-bit counter advanced by the golden-ratio
//! increment `0x9E3779B97F4A7C15`, followed by the finalizer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! Derived quantities are defined on top of `next_u64` so that any
//! implementation can reproduce the same streams:
//!
//! * `next_f64` = `(next_u64 >> 11) * 2^-53`, uniform in `[0, 1)`;
//! * `below(n)` = high 64 bits of `next_u64 * n` (128-bit product);
//! * `permutation(n)` = Fisher-Yates from the back: for `i = n-1 .. 1`,
//!   swap `i` with `below(i + 1)`, starting from the identity;
//! * `bernoulli_mask(n, p)`: entry `k` is set iff the `k`-th `next_f64 < p`;
//! * `derive(seed, index)` seeds a fresh source with
//!   `mix(seed ^ mix(index + 0x9E3779B97F4A7C15))`.

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSource {
    seed: u64,
    state: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, state: seed }
    }

    /// Independent source for worker/stream `index` of a base seed.
    pub fn derive(seed: u64, index: u64) -> Self {
        Self::new(mix(seed ^ mix(index.wrapping_add(GOLDEN))))
    }

    /// Child stream keyed by this source's original seed; does not advance `self`.
    pub fn fork(&self, index: u64) -> Self {
        Self::derive(self.seed, index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`; `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform real in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "uniform range [{lo}, {hi}) is empty or non-finite"
            )));
        }
        let v = lo + (hi - lo) * self.next_f64();
        // rounding can land exactly on hi for wide ranges
        Ok(if v < hi { v } else { lo })
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn bernoulli_mask(&mut self, n: usize, p: f64) -> Result<Vec<bool>> {
        check_probability(p)?;
        Ok((0..n).map(|_| self.next_f64() < p).collect())
    }

    /// Standard normal via Box-Muller (one draw per call, two uniforms).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "probability {p} outside [0, 1]"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_stream() {
        // reference values for seed 1234567 from the published SplitMix64
        let mut r = RandomSource::new(1234567);
        let got: Vec<u64> = (0..5).map(|_| r.next_u64()).collect();
        assert_eq!(
            got,
            vec![
                6457827717110365317,
                3203168211198807973,
                9817491932198370423,
                4593380528125082431,
                16408922859458223821
            ]
        );
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = RandomSource::new(42);
        let mut b = RandomSource::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(RandomSource::derive(42, 0), RandomSource::derive(42, 1));
    }

    #[test]
    fn permutation_edge_cases() {
        let mut r = RandomSource::new(3);
        assert_eq!(r.permutation(1), vec![0]);
        assert!(r.permutation(0).is_empty());
        let mut p = r.permutation(100);
        p.sort_unstable();
        assert_eq!(p, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn bernoulli_mask_extremes_and_frequency() {
        let mut r = RandomSource::new(9);
        assert!(r.bernoulli_mask(1000, 0.0).unwrap().iter().all(|b| !b));
        assert!(r.bernoulli_mask(1000, 1.0).unwrap().iter().all(|&b| b));
        let m = r.bernoulli_mask(1_000_000, 0.3).unwrap();
        let mean = m.iter().filter(|&&b| b).count() as f64 / 1e6;
        assert!((mean - 0.3).abs() < 0.002, "{mean}");
        assert!(r.bernoulli_mask(3, 1.5).is_err());
        assert!(r.bernoulli_mask(3, -0.1).is_err());
    }

    #[test]
    fn uniform_range_checks() {
        let mut r = RandomSource::new(5);
        assert!(r.uniform(1.0, 1.0).is_err());
        assert!(r.uniform(2.0, 1.0).is_err());
        for _ in 0..1000 {
            let v = r.uniform(-2.0, 3.0).unwrap();
            assert!((-2.0..3.0).contains(&v));
        }
    }
}
