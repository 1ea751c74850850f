//! Shared fixtures for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vmtd_core::analysis::random_setting;
use vmtd_core::{AnalysisSetting, FeatureVector, TileCoder};

/// A transition with owned features, for feeding the learners.
pub struct OwnedTransition {
    pub phi: FeatureVector,
    pub phi_next: FeatureVector,
    pub r: f64,
    pub rho: f64,
    pub done: bool,
}

/// `n` random dense transitions over `m` features.
pub fn dense_transitions(n: usize, m: usize, seed: u64) -> Vec<OwnedTransition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vector = |rng: &mut ChaCha8Rng| FeatureVector::Dense((0..m).map(|_| rng.random_range(-1.0..1.0)).collect());
    (0..n)
        .map(|_| OwnedTransition {
            phi: vector(&mut rng),
            phi_next: vector(&mut rng),
            r: rng.random_range(-1.0..1.0),
            rho: rng.random_range(0.0..2.0),
            done: rng.random_bool(0.05),
        })
        .collect()
}

/// Tile coder over a 2-d box, as used for MountainCar.
pub fn coder(tilings: usize, tiles: usize) -> TileCoder {
    TileCoder::new(tilings, tiles, vec![-1.2, -0.07], vec![0.6, 0.07]).expect("valid coder")
}

/// `n` random points inside the coder's box.
pub fn points(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| vec![rng.random_range(-1.2..0.6), rng.random_range(-0.07..0.07)]).collect()
}

/// Random ergodic off-policy setting with `n` states.
pub fn setting(n: usize, seed: u64) -> AnalysisSetting {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_setting(&mut rng, n, 3, n - 1, false).expect("random setting")
}
