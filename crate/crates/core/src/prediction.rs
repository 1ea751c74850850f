//! Online linear policy evaluation: TD(0), TDC, ETD and their
//! variance-minimization counterparts VMTD, VMTDC, VMETD.
//!
//! All components of one step are computed from pre-update values. Off-policy
//! corrections enter through the importance-weighted TD error `ρδ`; the VM
//! variants subtract the running estimate `ω` of its mean (of `Fρδ` for
//! VMETD) and track that mean on their own step size `β`.
//!
//! Each baseline shares its update kernel with its VM counterpart, so pinning
//! `ω = 0` and `β = 0` reproduces the baseline bit for bit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// The six prediction algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "TD")]
    Td,
    #[serde(rename = "TDC")]
    Tdc,
    #[serde(rename = "ETD")]
    Etd,
    #[serde(rename = "VMTD")]
    Vmtd,
    #[serde(rename = "VMTDC")]
    Vmtdc,
    #[serde(rename = "VMETD")]
    Vmetd,
}

impl Algorithm {
    /// Column order of the eigenvalue table.
    pub const ALL: [Algorithm; 6] =
        [Algorithm::Td, Algorithm::Vmtd, Algorithm::Tdc, Algorithm::Vmtdc, Algorithm::Etd, Algorithm::Vmetd];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Td => "TD",
            Algorithm::Tdc => "TDC",
            Algorithm::Etd => "ETD",
            Algorithm::Vmtd => "VMTD",
            Algorithm::Vmtdc => "VMTDC",
            Algorithm::Vmetd => "VMETD",
        }
    }

    pub fn is_variance_minimizing(self) -> bool {
        matches!(self, Algorithm::Vmtd | Algorithm::Vmtdc | Algorithm::Vmetd)
    }

    pub fn uses_correction(self) -> bool {
        matches!(self, Algorithm::Tdc | Algorithm::Vmtdc)
    }

    pub fn is_emphatic(self) -> bool {
        matches!(self, Algorithm::Etd | Algorithm::Vmetd)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown prediction algorithm '{s}'")))
    }
}

/// Weighting of the TDC/VMTDC gradient-correction term `−γφ'(φ⊤u)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientCorrection {
    /// The correction term as written, without `ρ`.
    #[default]
    Unweighted,
    /// Classical off-policy TDC: the correction is scaled by `ρ` too.
    ImportanceWeighted,
}

/// Step sizes for one update: `alpha` for θ, `zeta` for u, `beta` for ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub alpha: f64,
    pub zeta: f64,
    pub beta: f64,
}

/// How step sizes evolve with the step index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    Constant,
    /// `rate(k) = rate₀ · max(0, 1 − k/total_steps)`.
    Linear { total_steps: u64 },
}

/// Step-size schedule. All three rates share the decay factor, so their
/// ratios are constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct StepSchedule {
    decay: Decay,
    alpha0: f64,
    zeta0: f64,
    beta0: f64,
}

#[derive(Deserialize)]
struct RawSchedule {
    decay: Decay,
    alpha0: f64,
    zeta0: f64,
    beta0: f64,
}

impl TryFrom<RawSchedule> for StepSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        StepSchedule::constant(raw.alpha0, raw.zeta0, raw.beta0)?.with_decay(raw.decay)
    }
}

/// Default `α/β`.
pub const BETA_RATIO: f64 = 4.0;
/// Default `α/ζ`.
pub const ZETA_RATIO: f64 = 5.0;
/// Default initial `α`.
pub const ALPHA0: f64 = 0.1;

impl StepSchedule {
    pub fn constant(alpha0: f64, zeta0: f64, beta0: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha0), ("zeta", zeta0), ("beta", beta0)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(Self { decay: Decay::Constant, alpha0, zeta0, beta0 })
    }

    /// `ζ = α/zeta_ratio`, `β = α/beta_ratio`.
    pub fn with_ratios(alpha0: f64, beta_ratio: f64, zeta_ratio: f64) -> Result<Self> {
        if !(beta_ratio > 0.0) || !(zeta_ratio > 0.0) {
            return Err(Error::Config("step-size ratios must be positive".into()));
        }
        Self::constant(alpha0, alpha0 / zeta_ratio, alpha0 / beta_ratio)
    }

    /// `α₀ = 0.1`, `α/β = 4`, `α/ζ = 5`.
    pub fn default_ratios() -> Self {
        Self::with_ratios(ALPHA0, BETA_RATIO, ZETA_RATIO).expect("static rates are valid")
    }

    pub fn with_decay(mut self, decay: Decay) -> Result<Self> {
        if let Decay::Linear { total_steps: 0 } = decay {
            return Err(Error::Config("linear decay needs total_steps > 0".into()));
        }
        self.decay = decay;
        Ok(self)
    }

    pub fn linear_decay(self, total_steps: u64) -> Result<Self> {
        self.with_decay(Decay::Linear { total_steps })
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn initial(&self) -> Rates {
        Rates { alpha: self.alpha0, zeta: self.zeta0, beta: self.beta0 }
    }

    /// Rates at step `k`.
    pub fn rate_at(&self, k: u64) -> Rates {
        let factor = match self.decay {
            Decay::Constant => 1.0,
            Decay::Linear { total_steps } => (1.0 - k as f64 / total_steps as f64).max(0.0),
        };
        Rates { alpha: self.alpha0 * factor, zeta: self.zeta0 * factor, beta: self.beta0 * factor }
    }
}

/// A transition already mapped to features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatTransition<'a> {
    pub phi: &'a FeatureVector,
    pub phi_next: &'a FeatureVector,
    pub r: f64,
    /// Importance ratio `π(a|s)/μ(a|s)` of the action taken.
    pub rho: f64,
    pub done: bool,
}

/// Learner parameters. Fields an algorithm does not use keep their
/// initial values.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionLearnerState {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub theta: Vec<f64>,
    /// Running estimate of the mean (emphasized) TD error.
    pub omega: f64,
    /// Secondary weights of the gradient-corrected methods.
    pub u: Vec<f64>,
    /// Follow-on trace `F`.
    pub follow_on: f64,
    /// `ρ` of the previous step, feeding the next `F`.
    pub prev_rho: f64,
    pub step_index: u64,
    pub correction: GradientCorrection,
}

impl PredictionLearnerState {
    /// `θ₀` as given, `ω₀ = 0`, `u₀ = 0`, `F₀ = 1` (via `prev_rho = 0`).
    pub fn new(algorithm: Algorithm, gamma: f64, theta0: Vec<f64>) -> Self {
        let m = theta0.len();
        Self {
            algorithm,
            gamma,
            theta: theta0,
            omega: 0.0,
            u: vec![0.0; m],
            follow_on: 1.0,
            prev_rho: 0.0,
            step_index: 0,
            correction: GradientCorrection::default(),
        }
    }

    pub fn with_correction(mut self, correction: GradientCorrection) -> Self {
        self.correction = correction;
        self
    }

    /// Reset the trajectory-bound follow-on trace. `ω` is kept.
    pub fn start_episode(&mut self) {
        self.follow_on = 1.0;
        self.prev_rho = 0.0;
    }

    pub fn value(&self, phi: &FeatureVector) -> f64 {
        phi.dot(&self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|x| x.is_finite()) && self.omega.is_finite() && self.u.iter().all(|x| x.is_finite())
    }

    /// Apply this learner's update in place.
    pub fn update(&mut self, t: &FeatTransition<'_>, rates: Rates) {
        debug_assert_eq!(t.phi.len(), self.theta.len());
        match self.algorithm {
            Algorithm::Td | Algorithm::Vmtd => self.semi_gradient(t, rates),
            Algorithm::Tdc | Algorithm::Vmtdc => self.gradient_corrected(t, rates),
            Algorithm::Etd | Algorithm::Vmetd => self.emphatic(t, rates),
        }
        self.step_index += 1;
    }

    fn semi_gradient(&mut self, t: &FeatTransition<'_>, rates: Rates) {
        let err = t.rho * td_error(self, t) - self.omega;
        t.phi.add_scaled(&mut self.theta, rates.alpha * err);
        if self.algorithm.is_variance_minimizing() {
            self.omega += rates.beta * err;
        }
    }

    fn gradient_corrected(&mut self, t: &FeatTransition<'_>, rates: Rates) {
        let err = t.rho * td_error(self, t) - self.omega;
        let projected = t.phi.dot(&self.u);
        t.phi.add_scaled(&mut self.theta, rates.alpha * err);
        if !t.done {
            let weight = match self.correction {
                GradientCorrection::Unweighted => 1.0,
                GradientCorrection::ImportanceWeighted => t.rho,
            };
            t.phi_next.add_scaled(&mut self.theta, -rates.alpha * self.gamma * weight * projected);
        }
        t.phi.add_scaled(&mut self.u, rates.zeta * (err - projected));
        if self.algorithm.is_variance_minimizing() {
            self.omega += rates.beta * err;
        }
    }

    fn emphatic(&mut self, t: &FeatTransition<'_>, rates: Rates) {
        self.follow_on = self.gamma * self.prev_rho * self.follow_on + 1.0;
        let err = self.follow_on * t.rho * td_error(self, t) - self.omega;
        t.phi.add_scaled(&mut self.theta, rates.alpha * err);
        if self.algorithm.is_variance_minimizing() {
            self.omega += rates.beta * err;
        }
        self.prev_rho = t.rho;
    }
}

/// `δ = r + γθ⊤φ' − θ⊤φ`, without the bootstrap term on terminal transitions.
pub fn td_error(state: &PredictionLearnerState, t: &FeatTransition<'_>) -> f64 {
    let bootstrap = if t.done { 0.0 } else { state.gamma * t.phi_next.dot(&state.theta) };
    t.r + bootstrap - t.phi.dot(&state.theta)
}

fn checked_step(
    state: &PredictionLearnerState,
    t: &FeatTransition<'_>,
    rates: Rates,
    allowed: &[Algorithm],
) -> Result<PredictionLearnerState> {
    if !allowed.contains(&state.algorithm) {
        return Err(Error::Config(format!(
            "learner is {}, step expects one of {allowed:?}",
            state.algorithm
        )));
    }
    let mut next = state.clone();
    next.update(t, rates);
    Ok(next)
}

/// One VMTD update: `θ += α(ρδ−ω)φ`, `ω += β(ρδ−ω)`.
pub fn vmtd_step(state: &PredictionLearnerState, t: &FeatTransition<'_>, rates: Rates) -> Result<PredictionLearnerState> {
    checked_step(state, t, rates, &[Algorithm::Vmtd])
}

/// One VMTDC update: `θ += α[(ρδ−ω)φ − γφ'(φ⊤u)]`, `u += ζ(ρδ−ω−φ⊤u)φ`,
/// `ω += β(ρδ−ω)`.
pub fn vmtdc_step(state: &PredictionLearnerState, t: &FeatTransition<'_>, rates: Rates) -> Result<PredictionLearnerState> {
    checked_step(state, t, rates, &[Algorithm::Vmtdc])
}

/// One VMETD update: `F = γρ_{t−1}F + 1`, `θ += α(Fρδ−ω)φ`, `ω += β(Fρδ−ω)`.
pub fn vmetd_step(state: &PredictionLearnerState, t: &FeatTransition<'_>, rates: Rates) -> Result<PredictionLearnerState> {
    checked_step(state, t, rates, &[Algorithm::Vmetd])
}

/// `θ += αρδφ`.
pub fn td_step(state: &PredictionLearnerState, t: &FeatTransition<'_>, rates: Rates) -> Result<PredictionLearnerState> {
    checked_step(state, t, rates, &[Algorithm::Td])
}

pub fn tdc_step(state: &PredictionLearnerState, t: &FeatTransition<'_>, rates: Rates) -> Result<PredictionLearnerState> {
    checked_step(state, t, rates, &[Algorithm::Tdc])
}

pub fn etd_step(state: &PredictionLearnerState, t: &FeatTransition<'_>, rates: Rates) -> Result<PredictionLearnerState> {
    checked_step(state, t, rates, &[Algorithm::Etd])
}

/// Rates at step `k` of `schedule`.
pub fn rate_at(schedule: &StepSchedule, k: u64) -> Rates {
    schedule.rate_at(k)
}
