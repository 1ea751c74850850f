//! Linear action-value control: Sarsa, Q-learning, GQ, EQ and their
//! variance-minimization variants VMSarsa, VMQ, VMGQ, VMEQ.
//!
//! State-action features stack `φ(s)` into block `a` of an
//! `m·n_actions` vector, so `q(s,a) = θ[a·m..(a+1)·m]⊤φ(s)`.
//!
//! The VM variants replace `δ` by `δ − ω` in their base update and track
//! `ω` with step size `β`. The emphatic pair uses the greedy policy as
//! target and the ε-greedy policy as behavior when forming `ρ`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::prediction::Rates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ControlAlgorithm {
    Sarsa,
    #[serde(alias = "Q-learning")]
    Q,
    GQ,
    EQ,
    VMSarsa,
    VMQ,
    VMGQ,
    VMEQ,
}

/// Which base update a control algorithm uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    SemiGradient,
    GradientCorrected,
    Emphatic,
}

impl ControlAlgorithm {
    pub const ALL: [ControlAlgorithm; 8] = [
        ControlAlgorithm::Sarsa,
        ControlAlgorithm::Q,
        ControlAlgorithm::GQ,
        ControlAlgorithm::EQ,
        ControlAlgorithm::VMSarsa,
        ControlAlgorithm::VMQ,
        ControlAlgorithm::VMGQ,
        ControlAlgorithm::VMEQ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControlAlgorithm::Sarsa => "Sarsa",
            ControlAlgorithm::Q => "Q",
            ControlAlgorithm::GQ => "GQ",
            ControlAlgorithm::EQ => "EQ",
            ControlAlgorithm::VMSarsa => "VMSarsa",
            ControlAlgorithm::VMQ => "VMQ",
            ControlAlgorithm::VMGQ => "VMGQ",
            ControlAlgorithm::VMEQ => "VMEQ",
        }
    }

    pub fn is_variance_minimizing(self) -> bool {
        matches!(self, ControlAlgorithm::VMSarsa | ControlAlgorithm::VMQ | ControlAlgorithm::VMGQ | ControlAlgorithm::VMEQ)
    }

    /// Sarsa bootstraps on the sampled next action, everything else on the max.
    pub fn is_on_policy(self) -> bool {
        matches!(self, ControlAlgorithm::Sarsa | ControlAlgorithm::VMSarsa)
    }

    pub fn family(self) -> Family {
        match self {
            ControlAlgorithm::Sarsa | ControlAlgorithm::Q | ControlAlgorithm::VMSarsa | ControlAlgorithm::VMQ => {
                Family::SemiGradient
            }
            ControlAlgorithm::GQ | ControlAlgorithm::VMGQ => Family::GradientCorrected,
            ControlAlgorithm::EQ | ControlAlgorithm::VMEQ => Family::Emphatic,
        }
    }

    /// The variant without `ω`.
    pub fn base(self) -> ControlAlgorithm {
        match self {
            ControlAlgorithm::VMSarsa => ControlAlgorithm::Sarsa,
            ControlAlgorithm::VMQ => ControlAlgorithm::Q,
            ControlAlgorithm::VMGQ => ControlAlgorithm::GQ,
            ControlAlgorithm::VMEQ => ControlAlgorithm::EQ,
            other => other,
        }
    }
}

impl fmt::Display for ControlAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControlAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("q-learning") || s.eq_ignore_ascii_case("qlearning") {
            return Ok(ControlAlgorithm::Q);
        }
        ControlAlgorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown control algorithm '{s}'")))
    }
}

/// A transition with state features; the action-block layout is applied by
/// the learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlTransition<'a> {
    pub phi: &'a FeatureVector,
    pub a: usize,
    pub r: f64,
    pub phi_next: &'a FeatureVector,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlLearnerState {
    pub algorithm: ControlAlgorithm,
    pub gamma: f64,
    pub n_actions: usize,
    /// Dimension `m` of `φ(s)`.
    pub state_dim: usize,
    /// `m·n_actions` weights, block `a` for action `a`.
    pub theta: Vec<f64>,
    pub omega: f64,
    pub u: Vec<f64>,
    pub follow_on: f64,
    pub prev_rho: f64,
    pub epsilon: f64,
    pub step_index: u64,
}

impl ControlLearnerState {
    pub fn new(algorithm: ControlAlgorithm, gamma: f64, state_dim: usize, n_actions: usize, epsilon: f64) -> Result<Self> {
        if n_actions == 0 || state_dim == 0 {
            return Err(Error::Config("control learner needs at least one action and one feature".into()));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0,1], got {epsilon}")));
        }
        let n = state_dim * n_actions;
        Ok(Self {
            algorithm,
            gamma,
            n_actions,
            state_dim,
            theta: vec![0.0; n],
            omega: 0.0,
            u: vec![0.0; n],
            follow_on: 1.0,
            prev_rho: 0.0,
            epsilon,
            step_index: 0,
        })
    }

    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0,1], got {epsilon}")));
        }
        self.epsilon = epsilon;
        Ok(())
    }

    /// Reset the follow-on trace; `ω` persists across episodes.
    pub fn start_episode(&mut self) {
        self.follow_on = 1.0;
        self.prev_rho = 0.0;
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|x| x.is_finite()) && self.omega.is_finite()
    }

    fn offset(&self, a: usize) -> usize {
        a * self.state_dim
    }

    pub fn q_value(&self, phi_s: &FeatureVector, a: usize) -> f64 {
        phi_s.dot_at(&self.theta, self.offset(a))
    }

    pub fn q_values(&self, phi_s: &FeatureVector) -> Vec<f64> {
        (0..self.n_actions).map(|a| self.q_value(phi_s, a)).collect()
    }

    /// ε-greedy action for `φ(s)` under the current weights.
    pub fn act(&self, phi_s: &FeatureVector, rng: &mut dyn RngCore) -> usize {
        epsilon_greedy(&self.q_values(phi_s), self.epsilon, rng)
    }

    /// One learning step on `t` (taken with action `t.a`). Returns the next
    /// action, drawn ε-greedily from the pre-update `q(s', ·)`, or `None`
    /// when the transition is terminal.
    pub fn step(&mut self, t: &ControlTransition<'_>, rates: Rates, rng: &mut dyn RngCore) -> Option<usize> {
        debug_assert_eq!(t.phi.len(), self.state_dim);
        let q_sa = self.q_value(&t.phi, t.a);
        let (next_action, bootstrap, q_next) = if t.done {
            (None, 0.0, Vec::new())
        } else {
            let q_next = self.q_values(&t.phi_next);
            let a_next = epsilon_greedy(&q_next, self.epsilon, rng);
            let target =
                if self.algorithm.is_on_policy() { q_next[a_next] } else { q_next.iter().cloned().fold(f64::NEG_INFINITY, f64::max) };
            (Some(a_next), target, q_next)
        };
        let delta = t.r + self.gamma * bootstrap - q_sa;
        let vm = self.algorithm.is_variance_minimizing();
        let off_a = self.offset(t.a);

        match self.algorithm.family() {
            Family::SemiGradient => {
                let err = delta - self.omega;
                t.phi.add_scaled_at(&mut self.theta, off_a, rates.alpha * err);
                if vm {
                    self.omega += rates.beta * err;
                }
            }
            Family::GradientCorrected => {
                let err = delta - self.omega;
                let projected = t.phi.dot_at(&self.u, off_a);
                t.phi.add_scaled_at(&mut self.theta, off_a, rates.alpha * err);
                if !t.done {
                    // φ̄' = Σ_a' π_greedy(a'|s') φ(s', a')
                    let greedy = greedy_probabilities(&q_next);
                    for (b, p) in greedy.iter().enumerate().filter(|(_, p)| **p > 0.0) {
                        let off_b = self.offset(b);
                        t.phi_next.add_scaled_at(&mut self.theta, off_b, -rates.alpha * self.gamma * p * projected);
                    }
                }
                t.phi.add_scaled_at(&mut self.u, off_a, rates.zeta * (err - projected));
                if vm {
                    self.omega += rates.beta * err;
                }
            }
            Family::Emphatic => {
                let rho = {
                    let q_s = self.q_values(&t.phi);
                    let target = greedy_probabilities(&q_s)[t.a];
                    // With ε = 0 an update on a self-loop can demote the action
                    // already chosen, leaving μ(a|s) = 0 as well.
                    if target == 0.0 {
                        0.0
                    } else {
                        target / behavior_probability(&q_s, self.epsilon, t.a)
                    }
                };
                self.follow_on = self.gamma * self.prev_rho * self.follow_on + 1.0;
                let err = self.follow_on * delta - self.omega;
                t.phi.add_scaled_at(&mut self.theta, off_a, rates.alpha * err);
                if vm {
                    self.omega += rates.beta * err;
                }
                self.prev_rho = rho;
            }
        }
        self.step_index += 1;
        next_action
    }

    /// Actions maximizing `q(s, ·)`.
    pub fn greedy_actions(&self, phi_s: &FeatureVector) -> Vec<usize> {
        argmax_set(&self.q_values(phi_s))
    }
}

/// `q[a] = θ⊤φ(s,a)` for each action.
pub fn q_values(state: &ControlLearnerState, phi_s: &FeatureVector) -> Vec<f64> {
    state.q_values(phi_s)
}

/// Pure form of [`ControlLearnerState::step`] that checks the algorithm tag.
pub fn control_step(
    state: &ControlLearnerState,
    expected: ControlAlgorithm,
    t: &ControlTransition<'_>,
    rates: Rates,
    rng: &mut dyn RngCore,
) -> Result<(ControlLearnerState, Option<usize>)> {
    if state.algorithm != expected {
        return Err(Error::Config(format!("learner is {}, step expects {expected}", state.algorithm)));
    }
    let mut next = state.clone();
    let a = next.step(t, rates, rng);
    Ok((next, a))
}

/// Indices of the maximal entries. NaN entries never win; if every entry
/// is NaN all actions tie.
pub fn argmax_set(q: &[f64]) -> Vec<usize> {
    let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let set: Vec<usize> = (0..q.len()).filter(|&a| q[a] == best).collect();
    if set.is_empty() {
        (0..q.len()).collect()
    } else {
        set
    }
}

/// Greedy policy with ties shared uniformly.
pub fn greedy_probabilities(q: &[f64]) -> Vec<f64> {
    let best = argmax_set(q);
    let p = 1.0 / best.len() as f64;
    let mut out = vec![0.0; q.len()];
    for a in best {
        out[a] = p;
    }
    out
}

/// Probability that [`epsilon_greedy`] picks `a`.
pub fn behavior_probability(q: &[f64], epsilon: f64, a: usize) -> f64 {
    (1.0 - epsilon) * greedy_probabilities(q)[a] + epsilon / q.len() as f64
}

/// With probability ε a uniformly random action, otherwise a uniformly
/// random maximizer of `q`.
pub fn epsilon_greedy(q: &[f64], epsilon: f64, rng: &mut dyn RngCore) -> usize {
    assert!(!q.is_empty(), "epsilon_greedy needs at least one action");
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return rng.random_range(0..q.len());
    }
    let best = argmax_set(q);
    if best.len() == 1 {
        best[0]
    } else {
        best[rng.random_range(0..best.len())]
    }
}
