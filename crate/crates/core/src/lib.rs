//! Variance-minimization temporal-difference learning with linear function
//! approximation.
//!
//! - [`mdp`] and [`features`]: finite MDPs, policies, feature maps.
//! - [`analysis`]: exact key matrices, their eigenvalues and fixed points.
//! - [`prediction`]: TD, TDC, ETD, VMTD, VMTDC, VMETD.
//! - [`control`]: Sarsa, Q, GQ, EQ and their VM variants.
//! - [`envs`]: two-state chain, Maze, CliffWalking, MountainCar, Acrobot.
//! - [`experiment`]: seeded multi-run experiments, aggregation and CSV output.

pub mod analysis;
pub mod control;
pub mod envs;
pub mod error;
pub mod experiment;
pub mod features;
pub mod mdp;
pub mod prediction;

pub use analysis::{key_matrix, min_symmetric_eigenvalue, AnalysisSetting, KeyMatrixResult};
pub use control::{ControlAlgorithm, ControlLearnerState, ControlTransition};
pub use envs::{EnvInstance, EnvKind, EnvOutcome};
pub use error::{Error, Result};
pub use features::{FeatureMap, FeatureVector, Observation, TileCoder};
pub use mdp::{MdpSpec, Policy, Transition};
pub use prediction::{Algorithm, FeatTransition, PredictionLearnerState, Rates, StepSchedule};
