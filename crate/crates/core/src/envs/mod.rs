//! The five tasks. The two-state chain, Maze and CliffWalking also expose an
//! exact [`MdpSpec`](crate::mdp::MdpSpec); MountainCar and Acrobot are
//! continuous simulators.
//!
//! [`EnvInstance`] wraps any of them behind one episodic interface with a
//! step cap.

pub mod acrobot;
pub mod cliff;
pub mod maze;
pub mod mountain_car;
pub mod twostate;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Observation;
use crate::mdp::{sample_categorical, MdpSpec};

pub use acrobot::Acrobot;
pub use cliff::CliffWalking;
pub use maze::Maze;
pub use mountain_car::MountainCar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    TwoState,
    Maze,
    CliffWalking,
    MountainCar,
    Acrobot,
}

impl EnvKind {
    pub const ALL: [EnvKind; 5] =
        [EnvKind::TwoState, EnvKind::Maze, EnvKind::CliffWalking, EnvKind::MountainCar, EnvKind::Acrobot];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::TwoState => "two_state",
            EnvKind::Maze => "maze",
            EnvKind::CliffWalking => "cliff_walking",
            EnvKind::MountainCar => "mountain_car",
            EnvKind::Acrobot => "acrobot",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "twostate" => Ok(EnvKind::TwoState),
            "maze" => Ok(EnvKind::Maze),
            "cliffwalking" | "cliff" => Ok(EnvKind::CliffWalking),
            "mountaincar" => Ok(EnvKind::MountainCar),
            "acrobot" => Ok(EnvKind::Acrobot),
            _ => Err(Error::Config(format!("unknown environment '{s}'"))),
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvOutcome {
    pub observation: Observation,
    pub reward: f64,
    /// The task reached a terminal state.
    pub done: bool,
    /// The episode hit the step cap without terminating.
    pub truncated: bool,
}

impl EnvOutcome {
    pub fn episode_over(&self) -> bool {
        self.done || self.truncated
    }
}

/// Samples a finite MDP directly from its transition tensor.
#[derive(Debug, Clone)]
pub struct MdpSampler {
    mdp: MdpSpec,
    state: usize,
}

impl MdpSampler {
    pub fn new(mdp: MdpSpec) -> Self {
        Self { mdp, state: 0 }
    }

    pub fn mdp(&self) -> &MdpSpec {
        &self.mdp
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> usize {
        let starts: Vec<usize> = (0..self.mdp.n_states()).filter(|&s| !self.mdp.is_terminal(s)).collect();
        self.state = starts[rng.random_range(0..starts.len())];
        self.state
    }

    fn step(&mut self, a: usize, rng: &mut dyn RngCore) -> (usize, f64, bool) {
        let s = self.state;
        let probs: Vec<f64> = (0..self.mdp.n_states()).map(|next| self.mdp.prob(s, a, next)).collect();
        let next = sample_categorical(&probs, rng);
        self.state = next;
        (next, self.mdp.reward(s, a, next), self.mdp.is_terminal(next))
    }
}

#[derive(Debug, Clone)]
enum Dynamics {
    Chain(MdpSampler),
    Maze(Maze, usize),
    Cliff(CliffWalking, usize),
    MountainCar(MountainCar),
    Acrobot(Acrobot),
}

/// An episodic environment with a step cap.
#[derive(Debug, Clone)]
pub struct EnvInstance {
    kind: EnvKind,
    dynamics: Dynamics,
    steps_in_episode: usize,
    max_steps: usize,
}

/// Default cap for the two-state chain, which never terminates.
pub const TWO_STATE_MAX_STEPS: usize = usize::MAX;
pub const MAZE_MAX_STEPS: usize = 1000;
pub const CLIFF_MAX_STEPS: usize = 10_000;
pub const MOUNTAIN_CAR_MAX_STEPS: usize = 1000;
pub const ACROBOT_MAX_STEPS: usize = 500;

impl EnvInstance {
    pub fn two_state() -> Self {
        Self::from_mdp(EnvKind::TwoState, twostate::two_state_mdp().mdp, TWO_STATE_MAX_STEPS)
    }

    /// A sampler over an arbitrary finite MDP. Episodes start uniformly over
    /// non-terminal states.
    pub fn from_mdp(kind: EnvKind, mdp: MdpSpec, max_steps: usize) -> Self {
        Self::with_dynamics(kind, Dynamics::Chain(MdpSampler::new(mdp)), max_steps)
    }

    pub fn maze(maze: Maze) -> Self {
        let start = maze.start_state();
        Self::with_dynamics(EnvKind::Maze, Dynamics::Maze(maze, start), MAZE_MAX_STEPS)
    }

    pub fn cliff_walking() -> Self {
        let cliff = CliffWalking;
        Self::with_dynamics(EnvKind::CliffWalking, Dynamics::Cliff(cliff, cliff::START), CLIFF_MAX_STEPS)
    }

    pub fn mountain_car() -> Self {
        Self::with_dynamics(EnvKind::MountainCar, Dynamics::MountainCar(MountainCar::default()), MOUNTAIN_CAR_MAX_STEPS)
    }

    pub fn acrobot() -> Self {
        Self::with_dynamics(EnvKind::Acrobot, Dynamics::Acrobot(Acrobot::default()), ACROBOT_MAX_STEPS)
    }

    fn with_dynamics(kind: EnvKind, dynamics: Dynamics, max_steps: usize) -> Self {
        Self { kind, dynamics, steps_in_episode: 0, max_steps }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Result<Self> {
        if max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        self.max_steps = max_steps;
        Ok(self)
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn steps_in_episode(&self) -> usize {
        self.steps_in_episode
    }

    pub fn n_actions(&self) -> usize {
        match &self.dynamics {
            Dynamics::Chain(c) => c.mdp.n_actions(),
            Dynamics::Maze(..) => maze::N_ACTIONS,
            Dynamics::Cliff(..) => cliff::N_ACTIONS,
            Dynamics::MountainCar(_) => mountain_car::N_ACTIONS,
            Dynamics::Acrobot(_) => acrobot::N_ACTIONS,
        }
    }

    /// The exact model, for the finite tasks.
    pub fn mdp(&self, gamma: f64) -> Option<Result<MdpSpec>> {
        match &self.dynamics {
            Dynamics::Chain(c) => Some(c.mdp.with_gamma(gamma)),
            Dynamics::Maze(m, _) => Some(m.mdp(gamma)),
            Dynamics::Cliff(c, _) => Some(c.mdp(gamma)),
            _ => None,
        }
    }

    pub fn observation(&self) -> Observation {
        match &self.dynamics {
            Dynamics::Chain(c) => Observation::Discrete(c.state),
            Dynamics::Maze(_, s) | Dynamics::Cliff(_, s) => Observation::Discrete(*s),
            Dynamics::MountainCar(m) => Observation::Continuous(m.observation().to_vec()),
            Dynamics::Acrobot(a) => Observation::Continuous(a.observation().to_vec()),
        }
    }

    /// Start a new episode.
    pub fn reset(&mut self, rng: &mut dyn RngCore) -> Observation {
        self.steps_in_episode = 0;
        match &mut self.dynamics {
            Dynamics::Chain(c) => {
                c.reset(rng);
            }
            Dynamics::Maze(m, s) => *s = m.start_state(),
            Dynamics::Cliff(_, s) => *s = cliff::START,
            Dynamics::MountainCar(m) => m.reset(rng),
            Dynamics::Acrobot(a) => a.reset(rng),
        }
        self.observation()
    }

    /// Apply `action`. Stepping past the end of an episode is the caller's
    /// responsibility to avoid; the counter is not reset implicitly.
    pub fn step(&mut self, action: usize, rng: &mut dyn RngCore) -> Result<EnvOutcome> {
        if action >= self.n_actions() {
            return Err(Error::Dimension(format!("action {action} out of range for {} actions", self.n_actions())));
        }
        let (reward, done) = match &mut self.dynamics {
            Dynamics::Chain(c) => {
                let (_, r, done) = c.step(action, rng);
                (r, done)
            }
            Dynamics::Maze(m, s) => {
                let (next, r, done) = m.step(*s, action);
                *s = next;
                (r, done)
            }
            Dynamics::Cliff(c, s) => {
                let (next, r, done) = c.step(*s, action);
                *s = next;
                (r, done)
            }
            Dynamics::MountainCar(m) => m.step(action),
            Dynamics::Acrobot(a) => a.step(action),
        };
        self.steps_in_episode += 1;
        let truncated = !done && self.steps_in_episode >= self.max_steps;
        Ok(EnvOutcome { observation: self.observation(), reward, done, truncated })
    }
}

/// `(MdpSpec, EnvInstance)` for a maze layout.
pub fn maze_env(maze: Maze, gamma: f64) -> Result<(MdpSpec, EnvInstance)> {
    let mdp = maze.mdp(gamma)?;
    Ok((mdp, EnvInstance::maze(maze)))
}

/// `(MdpSpec, EnvInstance)` for CliffWalking. `gamma` must lie in `(0,1)`
/// for the model; pass `1.0` to [`value_iteration`](crate::mdp::value_iteration)
/// for the undiscounted task.
pub fn cliff_walking_env(gamma: f64) -> Result<(MdpSpec, EnvInstance)> {
    Ok((CliffWalking.mdp(gamma)?, EnvInstance::cliff_walking()))
}

pub fn mountain_car_env() -> EnvInstance {
    EnvInstance::mountain_car()
}

pub fn acrobot_env() -> EnvInstance {
    EnvInstance::acrobot()
}
