//! MountainCar with the reference dynamics:
//!
//! ```text
//! v ← clip(v + (a − 1)·0.001 − 0.0025·cos(3x), −0.07, 0.07)
//! x ← clip(x + v, −1.2, 0.6);  v ← 0 if x = −1.2 and v < 0
//! ```
//!
//! Reward −1 per step; the episode ends when `x ≥ 0.5` (and `v ≥ 0`).
//! Episodes start at `x ~ U[−0.6, −0.4]`, `v = 0`.

use rand::{Rng, RngCore};

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
pub const GOAL_VELOCITY: f64 = 0.0;
pub const FORCE: f64 = 0.001;
pub const GRAVITY: f64 = 0.0025;
pub const N_ACTIONS: usize = 3;

/// Observation bounds `(position, velocity)`.
pub const LOW: [f64; 2] = [MIN_POSITION, -MAX_SPEED];
pub const HIGH: [f64; 2] = [MAX_POSITION, MAX_SPEED];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountainCar {
    pub position: f64,
    pub velocity: f64,
}

impl Default for MountainCar {
    fn default() -> Self {
        Self { position: -0.5, velocity: 0.0 }
    }
}

impl MountainCar {
    pub fn reset(&mut self, rng: &mut dyn RngCore) {
        self.position = rng.random_range(-0.6..-0.4);
        self.velocity = 0.0;
    }

    pub fn observation(&self) -> [f64; 2] {
        [self.position, self.velocity]
    }

    /// Actions: 0 push left, 1 no push, 2 push right. Returns `(reward, done)`.
    pub fn step(&mut self, action: usize) -> (f64, bool) {
        let mut v = self.velocity + (action as f64 - 1.0) * FORCE + (3.0 * self.position).cos() * (-GRAVITY);
        v = v.clamp(-MAX_SPEED, MAX_SPEED);
        let mut x = self.position + v;
        x = x.clamp(MIN_POSITION, MAX_POSITION);
        if x == MIN_POSITION && v < 0.0 {
            v = 0.0;
        }
        self.position = x;
        self.velocity = v;
        let done = x >= GOAL_POSITION && v >= GOAL_VELOCITY;
        (-1.0, done)
    }
}
