#![allow(dead_code)]

use rand::seq::index::sample;
use rand::Rng;

use dfpp::env::{deterministic_environment, Environment};

/// Points of a small 1-d instance on the grid `step * Z`, distinct within each
/// layer. Coarse grids produce exact cost ties.
pub fn random_layers<R: Rng>(rng: &mut R, n: usize, max_points: usize, grid: i64, step: f64) -> Vec<Vec<Vec<f64>>> {
    (0..n)
        .map(|_| {
            let m = rng.random_range(1..=max_points);
            let slots = (2 * grid + 1) as usize;
            sample(rng, slots, m.min(slots))
                .into_iter()
                .map(|s| vec![(s as i64 - grid) as f64 * step])
                .collect()
        })
        .collect()
}

/// Continuous coordinates, uniform in `[-w, w]`.
pub fn random_continuous_layers<R: Rng>(rng: &mut R, n: usize, max_points: usize, w: f64) -> Vec<Vec<Vec<f64>>> {
    (0..n)
        .map(|_| {
            let m = rng.random_range(1..=max_points);
            let mut pts: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.random_range(-w..w)]).collect();
            pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
            pts.dedup();
            pts
        })
        .collect()
}

pub fn env_1d(layers: Vec<Vec<Vec<f64>>>) -> Environment {
    deterministic_environment(1, layers).expect("valid fixture")
}
