//! Per-path Brownian increments.
//!
//! Every path owns a ChaCha8 stream keyed by `(seed, path_index)`: the key is
//! derived from `seed` and the stream id is the path index. Streams are
//! addressed rather than split off a shared generator, so a path's increments
//! do not depend on which worker computes it or in what order.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::math::sqrt;

fn stream(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Fills `out` with i.i.d. `N(0, dt)` variates for `(seed, path_index)`.
pub fn fill_increments(seed: u64, path_index: u64, dt: f64, out: &mut [f64]) {
    let mut rng = stream(seed, path_index);
    let scale = sqrt(dt);
    for w in out.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *w = scale * z;
    }
}

/// `n_steps` i.i.d. `N(0, dt)` variates for `(seed, path_index)`.
pub fn gen_increments(seed: u64, path_index: u64, n_steps: usize, dt: f64) -> Vec<f64> {
    let mut out = alloc::vec![0.0; n_steps];
    fill_increments(seed, path_index, dt, &mut out);
    out
}

/// Element-wise negation: the increments driving the antithetic partner.
pub fn antithetic_of(increments: &[f64]) -> Vec<f64> {
    increments.iter().map(|w| -w).collect()
}

/// Sums consecutive blocks of `factor` fine increments, giving the increments
/// of the same Brownian path on a grid `factor` times coarser.
pub fn coarsen(increments: &[f64], factor: usize) -> Vec<f64> {
    assert!(factor >= 1 && increments.len().is_multiple_of(factor));
    increments.chunks_exact(factor).map(|c| c.iter().sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{mean, sample_variance};
    use proptest::prelude::*;

    #[test]
    fn deterministic_per_path() {
        assert_eq!(gen_increments(7, 3, 100, 0.001), gen_increments(7, 3, 100, 0.001));
        assert_ne!(gen_increments(7, 3, 100, 0.001), gen_increments(7, 4, 100, 0.001));
        assert_ne!(gen_increments(7, 3, 100, 0.001), gen_increments(8, 3, 100, 0.001));
    }

    #[test]
    fn prefix_stable_across_lengths() {
        let long = gen_increments(11, 0, 500, 0.01);
        assert_eq!(&long[..200], &gen_increments(11, 0, 200, 0.01)[..]);
    }

    #[test]
    fn pooled_moments() {
        let dt = 0.001;
        let mut pooled = Vec::with_capacity(1_000_000);
        for path in 0..1000 {
            pooled.extend(gen_increments(2024, path, 1000, dt));
        }
        let m = mean(&pooled);
        assert!(m.abs() <= 3.0 * (dt / 1e6).sqrt(), "mean {m}");
        let v = sample_variance(&pooled);
        assert!((v / dt - 1.0).abs() <= 0.01, "variance {v}");
    }

    #[test]
    fn antithetic_examples() {
        assert_eq!(antithetic_of(&[0.1, -0.2]), [-0.1, 0.2]);
        let w = gen_increments(1, 1, 64, 0.01);
        let anti = antithetic_of(&w);
        let pair_sums: Vec<f64> = w.iter().zip(&anti).map(|(a, b)| a + b).collect();
        assert!(pair_sums.iter().all(|&s| s == 0.0));
        assert_eq!(mean(&pair_sums), 0.0);
    }

    #[test]
    fn coarsen_preserves_sum() {
        let w = gen_increments(5, 9, 400, 1e-5);
        let c = coarsen(&w, 100);
        assert_eq!(c.len(), 4);
        assert!((c.iter().sum::<f64>() - w.iter().sum::<f64>()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn antithetic_is_an_involution(w in proptest::collection::vec(-10.0..10.0f64, 0..64)) {
            prop_assert_eq!(antithetic_of(&antithetic_of(&w)), w);
        }
    }
}
