//! Acrobot: a two-link pendulum actuated at the middle joint, with the
//! reference constants (unit masses, lengths and moments of inertia, centers
//! of mass at 0.5, `g = 9.8`, `dt = 0.2`) and the "book" equations of motion
//! integrated by one RK4 step per action.
//!
//! The observation is the raw state `(θ₁, θ₂, θ̇₁, θ̇₂)` with angles wrapped
//! to `[−π, π]` and velocities clipped to `±4π`, `±9π`. The episode ends
//! when the tip rises one link length above the pivot,
//! `−cos θ₁ − cos(θ₁+θ₂) > 1`. Reward is −1 per step and 0 on the
//! terminating step.

use std::f64::consts::PI;

use rand::{Rng, RngCore};

pub const DT: f64 = 0.2;
pub const LINK_LENGTH_1: f64 = 1.0;
pub const LINK_MASS_1: f64 = 1.0;
pub const LINK_MASS_2: f64 = 1.0;
pub const LINK_COM_POS_1: f64 = 0.5;
pub const LINK_COM_POS_2: f64 = 0.5;
pub const LINK_MOI: f64 = 1.0;
pub const GRAVITY: f64 = 9.8;
pub const MAX_VEL_1: f64 = 4.0 * PI;
pub const MAX_VEL_2: f64 = 9.0 * PI;
pub const TORQUES: [f64; 3] = [-1.0, 0.0, 1.0];
pub const N_ACTIONS: usize = 3;

/// Observation bounds.
pub const LOW: [f64; 4] = [-PI, -PI, -MAX_VEL_1, -MAX_VEL_2];
pub const HIGH: [f64; 4] = [PI, PI, MAX_VEL_1, MAX_VEL_2];

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Acrobot {
    pub state: [f64; 4],
}

fn derivatives(s: [f64; 4], torque: f64) -> [f64; 4] {
    let (m1, m2, l1, lc1, lc2, i1, i2, g) =
        (LINK_MASS_1, LINK_MASS_2, LINK_LENGTH_1, LINK_COM_POS_1, LINK_COM_POS_2, LINK_MOI, LINK_MOI, GRAVITY);
    let [theta1, theta2, dtheta1, dtheta2] = s;
    let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * theta2.cos()) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * theta2.cos()) + i2;
    let phi2 = m2 * lc2 * g * (theta1 + theta2 - PI / 2.0).cos();
    let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * theta2.sin()
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
        + (m1 * lc1 + m2 * l1) * g * (theta1 - PI / 2.0).cos()
        + phi2;
    let ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * theta2.sin() - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2]
}

fn axpy(y: [f64; 4], h: f64, k: [f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// One classical RK4 step of length `dt` under constant torque.
pub fn rk4_step(s: [f64; 4], torque: f64, dt: f64) -> [f64; 4] {
    let k1 = derivatives(s, torque);
    let k2 = derivatives(axpy(s, dt / 2.0, k1), torque);
    let k3 = derivatives(axpy(s, dt / 2.0, k2), torque);
    let k4 = derivatives(axpy(s, dt, k3), torque);
    std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Wrap `x` into `[lo, hi]` by whole periods.
pub fn wrap(mut x: f64, lo: f64, hi: f64) -> f64 {
    let period = hi - lo;
    while x > hi {
        x -= period;
    }
    while x < lo {
        x += period;
    }
    x
}

impl Acrobot {
    pub fn reset(&mut self, rng: &mut dyn RngCore) {
        self.state = std::array::from_fn(|_| rng.random_range(-0.1..0.1));
    }

    pub fn observation(&self) -> [f64; 4] {
        self.state
    }

    pub fn is_terminal(&self) -> bool {
        let [t1, t2, ..] = self.state;
        -t1.cos() - (t2 + t1).cos() > 1.0
    }

    /// Returns `(reward, done)`.
    pub fn step(&mut self, action: usize) -> (f64, bool) {
        let mut ns = rk4_step(self.state, TORQUES[action], DT);
        ns[0] = wrap(ns[0], -PI, PI);
        ns[1] = wrap(ns[1], -PI, PI);
        ns[2] = ns[2].clamp(-MAX_VEL_1, MAX_VEL_1);
        ns[3] = ns[3].clamp(-MAX_VEL_2, MAX_VEL_2);
        self.state = ns;
        let done = self.is_terminal();
        (if done { 0.0 } else { -1.0 }, done)
    }
}
