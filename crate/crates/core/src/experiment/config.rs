//! Experiment configuration (JSON).
//!
//! ```json
//! {
//!   "kind": "evaluation",
//!   "env": "two_state",
//!   "policy_mode": "off",
//!   "algorithms": ["TD", "VMTD"],
//!   "runs": 100,
//!   "horizon": 200000,
//!   "seed": 1,
//!   "decay": "constant",
//!   "record_every": 100
//! }
//! ```
//!
//! Every field except `kind`, `env` and `horizon` has a default; see
//! [`ExperimentConfig`] for the list.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::ControlAlgorithm;
use crate::envs::{self, EnvInstance, EnvKind, Maze};
use crate::error::{Error, Result};
use crate::features::{FeatureMap, TileCoder};
use crate::prediction::{Algorithm, GradientCorrection, StepSchedule, ALPHA0, BETA_RATIO, ZETA_RATIO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Evaluation,
    Control,
    Analyze,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    /// Behavior and target both equiprobable.
    On,
    /// Equiprobable behavior, always-right target.
    #[default]
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `‖θ_t − θ*‖₂`.
    ThetaError,
    /// Root-mean-square value error weighted by the behavior distribution.
    Rmsve,
    EpisodeReturn,
    EpisodeSteps,
}

/// How evaluation transitions are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// One continuing trajectory under the behavior policy.
    #[default]
    Trajectory,
    /// Every step starts from a fresh state drawn from `d_μ`.
    Iid,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    Constant,
    /// Linear to zero over the horizon (steps or episodes).
    #[default]
    Linear,
}

/// Step sizes for one algorithm. Missing `zeta`/`beta` follow the default
/// ratios `α/ζ = 5`, `α/β = 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl RateConfig {
    pub fn schedule(&self, decay: DecayKind, horizon: u64) -> Result<StepSchedule> {
        let zeta = self.zeta.unwrap_or(self.alpha / ZETA_RATIO);
        let beta = self.beta.unwrap_or(self.alpha / BETA_RATIO);
        let s = StepSchedule::constant(self.alpha, zeta, beta)?;
        match decay {
            DecayKind::Constant => Ok(s),
            DecayKind::Linear => s.linear_decay(horizon),
        }
    }
}

/// ε as a function of the episode index: linear from `start` to `end` over
/// `decay_episodes`, then constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(default)]
    pub decay_episodes: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: DEFAULT_EPSILON, end: None, decay_episodes: 0 }
    }
}

pub const DEFAULT_EPSILON: f64 = 0.1;

impl EpsilonSchedule {
    pub fn at(&self, episode: u64) -> f64 {
        let end = self.end.unwrap_or(self.start);
        if self.decay_episodes == 0 {
            return self.start;
        }
        let frac = (episode as f64 / self.decay_episodes as f64).min(1.0);
        self.start + (end - self.start) * frac
    }

    fn validate(&self) -> Result<()> {
        for e in [Some(self.start), self.end].into_iter().flatten() {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::Config(format!("epsilon must lie in [0,1], got {e}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilingConfig {
    pub tilings: usize,
    pub tiles: usize,
}

impl Default for TilingConfig {
    fn default() -> Self {
        Self { tilings: 8, tiles: 8 }
    }
}

fn one() -> usize {
    1
}

fn one_u64() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub env: EnvKind,
    /// Maze layout file; the bundled layout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maze_layout: Option<PathBuf>,
    #[serde(default)]
    pub policy_mode: PolicyMode,
    /// Algorithm names; all algorithms of the experiment kind when empty.
    #[serde(default)]
    pub algorithms: Vec<String>,
    /// Per-algorithm step sizes overriding the defaults.
    #[serde(default)]
    pub rates: BTreeMap<String, RateConfig>,
    #[serde(default)]
    pub decay: DecayKind,
    #[serde(default = "one")]
    pub runs: usize,
    /// Steps (evaluation) or episodes (control).
    #[serde(default)]
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Record the metric every this many steps (evaluation) or episodes.
    #[serde(default = "one_u64")]
    pub record_every: u64,
    #[serde(default)]
    pub sampling: Sampling,
    /// Initial weights for evaluation; ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub correction: GradientCorrection,
    #[serde(default)]
    pub epsilon: EpsilonSchedule,
    /// Control discount; 0.99 for Maze and 1 elsewhere when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub tiling: TilingConfig,
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(kind: ExperimentKind, env: EnvKind, horizon: u64) -> Self {
        Self {
            kind,
            env,
            maze_layout: None,
            policy_mode: PolicyMode::default(),
            algorithms: Vec::new(),
            rates: BTreeMap::new(),
            decay: DecayKind::default(),
            runs: 1,
            horizon,
            seed: 0,
            metric: None,
            output: None,
            record_every: 1,
            sampling: Sampling::default(),
            theta0: None,
            correction: GradientCorrection::default(),
            epsilon: EpsilonSchedule::default(),
            gamma: None,
            max_steps: None,
            tiling: TilingConfig::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        // Relative layout paths are relative to the config file.
        if let (Some(layout), Some(dir)) = (&config.maze_layout, path.parent()) {
            if layout.is_relative() {
                config.maze_layout = Some(dir.join(layout));
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if self.kind != ExperimentKind::Analyze && self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::Config(format!("gamma must lie in (0,1], got {g}")));
            }
        }
        self.epsilon.validate()?;
        match self.kind {
            ExperimentKind::Evaluation | ExperimentKind::Analyze => {
                self.prediction_algorithms()?;
            }
            ExperimentKind::Control => {
                self.control_algorithms()?;
            }
        }
        for name in self.rates.keys() {
            let known = match self.kind {
                ExperimentKind::Control => name.parse::<ControlAlgorithm>().is_ok(),
                _ => name.parse::<Algorithm>().is_ok(),
            };
            if !known {
                return Err(Error::Config(format!("rates given for unknown algorithm '{name}'")));
            }
        }
        if let Some(metric) = self.metric {
            let ok = match self.kind {
                ExperimentKind::Evaluation => matches!(metric, Metric::ThetaError | Metric::Rmsve),
                ExperimentKind::Control => matches!(metric, Metric::EpisodeReturn | Metric::EpisodeSteps),
                ExperimentKind::Analyze => true,
            };
            if !ok {
                return Err(Error::Config(format!("metric {metric:?} does not apply to {:?} experiments", self.kind)));
            }
        }
        Ok(())
    }

    pub fn prediction_algorithms(&self) -> Result<Vec<Algorithm>> {
        if self.algorithms.is_empty() {
            return Ok(Algorithm::ALL.to_vec());
        }
        self.algorithms.iter().map(|a| a.parse()).collect()
    }

    pub fn control_algorithms(&self) -> Result<Vec<ControlAlgorithm>> {
        if self.algorithms.is_empty() {
            return Ok(ControlAlgorithm::ALL.to_vec());
        }
        self.algorithms.iter().map(|a| a.parse()).collect()
    }

    pub fn metric(&self) -> Metric {
        self.metric.unwrap_or(match self.kind {
            ExperimentKind::Control => Metric::EpisodeReturn,
            _ => Metric::ThetaError,
        })
    }

    fn rate_override<A: std::str::FromStr + PartialEq + Copy>(&self, alg: A) -> Option<RateConfig> {
        self.rates.iter().find(|(k, _)| k.parse::<A>().ok() == Some(alg)).map(|(_, v)| *v)
    }

    pub fn prediction_schedule(&self, alg: Algorithm) -> Result<StepSchedule> {
        let rates = self.rate_override(alg).unwrap_or(RateConfig { alpha: ALPHA0, zeta: None, beta: None });
        rates.schedule(self.decay, self.horizon)
    }

    pub fn control_schedule(&self, alg: ControlAlgorithm) -> Result<StepSchedule> {
        let rates = match self.rate_override(alg) {
            Some(r) => r,
            None => table2_rates(self.env, alg)?,
        };
        rates.schedule(self.decay, self.horizon)
    }

    pub fn control_gamma(&self) -> f64 {
        self.gamma.unwrap_or(match self.env {
            EnvKind::Maze => envs::maze::GAMMA,
            EnvKind::TwoState => envs::twostate::GAMMA,
            _ => 1.0,
        })
    }

    pub fn maze(&self) -> Result<Maze> {
        match &self.maze_layout {
            Some(path) => Maze::load(path),
            None => Ok(Maze::default_layout()),
        }
    }

    /// A fresh environment with the configured step cap.
    pub fn env_instance(&self) -> Result<EnvInstance> {
        let env = match self.env {
            EnvKind::TwoState => EnvInstance::two_state(),
            EnvKind::Maze => EnvInstance::maze(self.maze()?),
            EnvKind::CliffWalking => EnvInstance::cliff_walking(),
            EnvKind::MountainCar => EnvInstance::mountain_car(),
            EnvKind::Acrobot => EnvInstance::acrobot(),
        };
        match self.max_steps {
            Some(n) => env.with_max_steps(n),
            None => Ok(env),
        }
    }

    /// State features for control: tabular on the grids, tile coding on the
    /// continuous tasks.
    pub fn control_features(&self) -> Result<FeatureMap> {
        let TilingConfig { tilings, tiles } = self.tiling;
        Ok(match self.env {
            EnvKind::TwoState => envs::twostate::two_state_mdp().features,
            EnvKind::Maze => FeatureMap::Tabular { n_states: self.maze()?.n_states() },
            EnvKind::CliffWalking => FeatureMap::Tabular { n_states: envs::cliff::N_STATES },
            EnvKind::MountainCar => FeatureMap::TileCoding(TileCoder::new(
                tilings,
                tiles,
                envs::mountain_car::LOW.to_vec(),
                envs::mountain_car::HIGH.to_vec(),
            )?),
            EnvKind::Acrobot => FeatureMap::TileCoding(TileCoder::new(
                tilings,
                tiles,
                envs::acrobot::LOW.to_vec(),
                envs::acrobot::HIGH.to_vec(),
            )?),
        })
    }
}

/// Published control step sizes per task.
pub fn table2_rates(env: EnvKind, alg: ControlAlgorithm) -> Result<RateConfig> {
    let col = match env {
        EnvKind::Maze => 0,
        EnvKind::CliffWalking => 1,
        EnvKind::MountainCar => 2,
        EnvKind::Acrobot => 3,
        EnvKind::TwoState => return Err(Error::Config("no control step sizes for the two-state chain".into())),
    };
    let pick = |v: [f64; 4]| v[col];
    let beta_vm = [1e-3, 1e-4, 1e-4, 1e-4];
    use ControlAlgorithm::*;
    Ok(match alg {
        Sarsa | Q => RateConfig { alpha: 0.1, zeta: Some(0.0), beta: Some(0.0) },
        GQ => RateConfig { alpha: 0.1, zeta: Some(pick([0.003, 0.004, 0.01, 0.01])), beta: Some(0.0) },
        EQ => RateConfig { alpha: pick([0.006, 0.005, 0.001, 0.0005]), zeta: Some(0.0), beta: Some(0.0) },
        VMSarsa | VMQ => RateConfig { alpha: 0.1, zeta: Some(0.0), beta: Some(pick(beta_vm)) },
        VMGQ => RateConfig { alpha: 0.1, zeta: Some(pick([0.001, 0.005, 5e-4, 5e-4])), beta: Some(pick(beta_vm)) },
        VMEQ => RateConfig {
            alpha: pick([0.001, 0.005, 0.001, 0.0005]),
            zeta: Some(0.0),
            beta: Some(pick([5e-4, 1e-4, 1e-4, 1e-4])),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"kind":"evaluation","env":"two_state","horizon":10}"#).unwrap();
        c.validate().unwrap();
        assert_eq!(c.runs, 1);
        assert_eq!(c.metric(), Metric::ThetaError);
        assert_eq!(c.prediction_algorithms().unwrap().len(), 6);
        let r = c.prediction_schedule(Algorithm::Vmtdc).unwrap().rate_at(0);
        assert_eq!((r.alpha, r.zeta, r.beta), (0.1, 0.02, 0.025));
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"kind":"evaluation","env":"two_state","horizon":10,"runs":0}"#,
            r#"{"kind":"evaluation","env":"two_state","horizon":0}"#,
            r#"{"kind":"evaluation","env":"two_state","horizon":10,"algorithms":["VMQ"]}"#,
            r#"{"kind":"control","env":"maze","horizon":10,"metric":"theta_error"}"#,
            r#"{"kind":"control","env":"maze","horizon":10,"epsilon":{"start":1.5}}"#,
            r#"{"kind":"control","env":"maze","horizon":10,"rates":{"TDX":{"alpha":0.1}}}"#,
        ];
        for text in bad {
            let c: ExperimentConfig = serde_json::from_str(text).unwrap();
            assert!(c.validate().is_err(), "{text}");
        }
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"kind":"control","env":"maze","horizn":3}"#).is_err());
    }

    #[test]
    fn control_rates_follow_the_table() {
        let c = ExperimentConfig::new(ExperimentKind::Control, EnvKind::CliffWalking, 10);
        let r = c.control_schedule(ControlAlgorithm::VMGQ).unwrap().initial();
        assert_eq!((r.alpha, r.zeta, r.beta), (0.1, 0.005, 1e-4));
        let r = c.control_schedule(ControlAlgorithm::EQ).unwrap().initial();
        assert_eq!(r.alpha, 0.005);
        assert_eq!(c.control_gamma(), 1.0);
    }

    #[test]
    fn overrides_apply_by_name() {
        let mut c = ExperimentConfig::new(ExperimentKind::Control, EnvKind::Maze, 10);
        c.rates.insert("q-learning".into(), RateConfig { alpha: 0.5, zeta: None, beta: Some(0.0) });
        assert_eq!(c.control_schedule(ControlAlgorithm::Q).unwrap().initial().alpha, 0.5);
        assert_eq!(c.control_gamma(), 0.99);
    }

    #[test]
    fn epsilon_schedule() {
        let e = EpsilonSchedule { start: 0.1, end: Some(0.0), decay_episodes: 100 };
        assert_eq!(e.at(0), 0.1);
        assert!((e.at(50) - 0.05).abs() < 1e-15);
        assert_eq!(e.at(100), 0.0);
        assert_eq!(e.at(1000), 0.0);
        assert_eq!(EpsilonSchedule::default().at(1000), 0.1);
    }
}
