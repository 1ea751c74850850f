use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use vmtd_bench::{coder, dense_transitions, points};
use vmtd_core::features::Observation;
use vmtd_core::{Algorithm, ControlAlgorithm, ControlLearnerState, ControlTransition, FeatTransition, FeatureMap};
use vmtd_core::{PredictionLearnerState, Rates};

fn prediction_updates(c: &mut Criterion) {
    let transitions = dense_transitions(1024, 16, 1);
    let rates = Rates { alpha: 0.01, zeta: 0.002, beta: 0.0025 };
    let mut group = c.benchmark_group("prediction_update");
    group.throughput(Throughput::Elements(transitions.len() as u64));
    for alg in Algorithm::ALL {
        group.bench_with_input(BenchmarkId::from_parameter(alg), &alg, |b, &alg| {
            let mut learner = PredictionLearnerState::new(alg, 0.9, vec![0.0; 16]);
            b.iter(|| {
                for t in &transitions {
                    let t = FeatTransition { phi: &t.phi, phi_next: &t.phi_next, r: t.r, rho: t.rho, done: t.done };
                    learner.update(black_box(&t), rates);
                }
            })
        });
    }
    group.finish();
}

fn control_steps(c: &mut Criterion) {
    let features = FeatureMap::TileCoding(coder(8, 8));
    let phis: Vec<_> = points(1025, 2)
        .into_iter()
        .map(|x| features.featurize(&Observation::Continuous(x)).unwrap())
        .collect();
    let rates = Rates { alpha: 0.1 / 8.0, zeta: 0.001, beta: 1e-4 };
    let mut group = c.benchmark_group("control_step_tiles");
    group.throughput(Throughput::Elements(1024));
    for alg in ControlAlgorithm::ALL {
        group.bench_with_input(BenchmarkId::from_parameter(alg), &alg, |b, &alg| {
            let mut learner = ControlLearnerState::new(alg, 1.0, features.dim(), 3, 0.1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            b.iter(|| {
                for (i, w) in phis.windows(2).enumerate() {
                    let t = ControlTransition { phi: &w[0], a: i % 3, r: -1.0, phi_next: &w[1], done: false };
                    black_box(learner.step(&t, rates, &mut rng));
                }
            })
        });
    }
    group.finish();
}

fn tile_coding(c: &mut Criterion) {
    let coder = coder(8, 8);
    let xs = points(1024, 4);
    c.bench_function("tile_coder_active_tiles", |b| {
        b.iter(|| {
            for x in &xs {
                black_box(coder.active_tiles(black_box(x)));
            }
        })
    });
}

criterion_group!(benches, prediction_updates, control_steps, tile_coding);
criterion_main!(benches);
