//! Seeded multi-run experiments.
//!
//! Run `r` of every algorithm draws from ChaCha8 stream `r` of the base
//! seed, so algorithms see common random numbers and results do not depend
//! on how runs are scheduled across threads.

pub mod analyze;
pub mod config;
pub mod control;
pub mod evaluation;
pub mod output;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use analyze::{run_analyze, AnalyzeRow};
pub use config::{ExperimentConfig, ExperimentKind, Metric};
pub use control::{control_run, control_runs, run_control, ControlRun};
pub use evaluation::{evaluation_run, evaluation_runs, run_evaluation, EvaluationRun};
pub use output::{aggregate, emit_plot_data, read_csv, write_csv, CurveSummary, RunRecord};

/// RNG for run `run` under `base_seed`.
pub fn run_rng(base_seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(run);
    rng
}
