//! Latin hypercube sampling of a parameter box.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Real;

/// `n` Latin hypercube samples in the box `[lower, upper]`.
///
/// Every coordinate's `n` values fall into `n` distinct equal-width strata.
/// The sample is a deterministic function of `seed`.
pub fn lhs_sample<T: Real>(lower: &[T], upper: &[T], n: usize, seed: u64) -> Vec<Vec<T>> {
    assert_eq!(lower.len(), upper.len(), "bound lengths differ");
    assert!(n >= 1, "LHS needs at least one sample");
    let dim = lower.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![vec![T::zero(); dim]; n];
    let nf = n as f64;
    for d in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        let lo = lower[d].as_f64();
        let width = upper[d].as_f64() - lo;
        for (point, &s) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.gen();
            point[d] = T::lit(lo + width * (s as f64 + u) / nf);
        }
    }
    points
}

/// Stratum index of `x` in `[lo, hi]` split into `n` cells.
pub fn stratum(x: f64, lo: f64, hi: f64, n: usize) -> usize {
    (((x - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1)
}
