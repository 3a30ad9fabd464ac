use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::nroy::SearchBox;
use crate::scalar::Scalar;
use crate::seed::rng_from;

/// Latin hypercube of `n` points in `[0,1]^d`: every axis is cut into `n`
/// equal strata and each stratum holds exactly one point, placed uniformly
/// within it.
pub fn latin_hypercube<T: Scalar>(d: usize, n: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = rng_from(seed, &[]);
    let mut points = vec![vec![T::zero(); d]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..d {
        perm.shuffle(&mut rng);
        for (i, p) in points.iter_mut().enumerate() {
            let v = (perm[i] as f64 + rng.gen::<f64>()) / n as f64;
            p[k] = T::of(v.min(1.0 - f64::EPSILON / 2.0));
        }
    }
    points
}

/// Latin hypercube mapped onto `bbox`.
pub fn initial_design<T: Scalar>(bbox: &SearchBox<T>, n: usize, seed: u64) -> Vec<Vec<T>> {
    latin_hypercube(bbox.dim(), n, seed)
        .iter()
        .map(|u| bbox.to_native(u))
        .collect()
}
