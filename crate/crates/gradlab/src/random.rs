//! Seeded piecewise-constant coefficient fields.
//!
//! The lattice of square cells of side `cell` (anchored at the origin) is
//! fixed; each cell draws its values from a ChaCha stream keyed by
//! `(seed, field, cell index)`, so a field does not depend on the grid it is
//! sampled on or on evaluation order.
//!
//! Distributions: each drift component uniform in `[-K/√N, K/√N]` (so
//! `|W| <= K`), `V` uniform in `[0, M]`, `F` uniform in `[-f, f]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gradlab_core::Point;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomField {
    pub seed: u64,
    pub k: f64,
    pub m: f64,
    pub f: f64,
    pub cell: f64,
    pub dim: usize,
}

#[derive(Clone, Copy)]
enum Stream {
    Drift = 1,
    Potential = 2,
    Forcing = 3,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of problem `index` in a sweep started from `seed`.
pub fn sweep_seed(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index.wrapping_add(0x5157)))
}

impl RandomField {
    fn rng(&self, stream: Stream, p: Point) -> ChaCha8Rng {
        let i = (p[0] / self.cell).floor() as i64;
        let j = if self.dim == 2 { (p[1] / self.cell).floor() as i64 } else { 0 };
        let key = mix(mix(mix(self.seed) ^ stream as u64) ^ i as u64) ^ mix(j as u64 ^ 0xa5a5);
        ChaCha8Rng::seed_from_u64(key)
    }

    pub fn drift(&self, p: Point) -> Point {
        if self.k == 0.0 {
            return [0.0, 0.0];
        }
        let mut r = self.rng(Stream::Drift, p);
        let bound = self.k / (self.dim as f64).sqrt();
        let wx = r.gen_range(-bound..=bound);
        let wy = if self.dim == 2 { r.gen_range(-bound..=bound) } else { 0.0 };
        [wx, wy]
    }

    pub fn potential(&self, p: Point) -> f64 {
        if self.m == 0.0 {
            return 0.0;
        }
        self.rng(Stream::Potential, p).gen_range(0.0..=self.m)
    }

    pub fn forcing(&self, p: Point) -> f64 {
        if self.f == 0.0 {
            return 0.0;
        }
        self.rng(Stream::Forcing, p).gen_range(-self.f..=self.f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fields_are_cellwise_constant() {
        let r = RandomField { seed: 3, k: 2.0, m: 4.0, f: 1.0, cell: 0.25, dim: 2 };
        assert_eq!(r.drift([0.01, 0.02]), r.drift([0.2, 0.24]));
        assert_ne!(r.drift([0.01, 0.02]), r.drift([0.26, 0.02]));
        assert_eq!(r.potential([-0.1, -0.1]), r.potential([-0.2, -0.05]));
    }

    #[test]
    fn seeds_separate_problems() {
        let a = RandomField { seed: sweep_seed(1, 0), k: 1.0, m: 1.0, f: 1.0, cell: 0.1, dim: 2 };
        let b = RandomField { seed: sweep_seed(1, 1), ..a };
        assert_ne!(a.forcing([0.0, 0.0]), b.forcing([0.0, 0.0]));
        assert_eq!(sweep_seed(1, 1), sweep_seed(1, 1));
    }

    proptest! {
        #[test]
        fn samples_respect_bounds(seed in any::<u64>(), x in -2.0f64..2.0, y in -2.0f64..2.0,
                                  k in 0.0f64..5.0, m in 0.0f64..5.0, f in 0.0f64..5.0, dim in 1usize..=2) {
            let r = RandomField { seed, k, m, f, cell: 0.1, dim };
            let w = r.drift([x, y]);
            prop_assert!((w[0] * w[0] + w[1] * w[1]).sqrt() <= k * (1.0 + 1e-12));
            if dim == 1 { prop_assert_eq!(w[1], 0.0); }
            let v = r.potential([x, y]);
            prop_assert!((0.0..=m).contains(&v));
            prop_assert!(r.forcing([x, y]).abs() <= f);
        }
    }
}
