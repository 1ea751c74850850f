//! CliffWalking: 4×12 grid, start at the bottom-left corner, goal at the
//! bottom-right, the cells between them are cliff. Each move costs −1;
//! stepping into the cliff costs −100 and returns the agent to the start
//! without ending the episode. Moves off the grid leave the agent in place.
//!
//! State `s` is cell `(s / 12, s % 12)`. Actions follow the reference
//! environment: up 0, right 1, down 2, left 3.

use crate::error::Result;
use crate::mdp::MdpSpec;

pub const ROWS: usize = 4;
pub const COLS: usize = 12;
pub const N_STATES: usize = ROWS * COLS;
pub const N_ACTIONS: usize = 4;
pub const UP: usize = 0;
pub const RIGHT: usize = 1;
pub const DOWN: usize = 2;
pub const LEFT: usize = 3;
pub const START: usize = 3 * COLS;
pub const GOAL: usize = 3 * COLS + COLS - 1;
pub const CLIFF_REWARD: f64 = -100.0;
pub const STEP_REWARD: f64 = -1.0;
/// Return of the 13-move path along the cliff edge.
pub const OPTIMAL_RETURN: f64 = -13.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CliffWalking;

pub fn is_cliff(s: usize) -> bool {
    s > START && s < GOAL
}

impl CliffWalking {
    /// `(next, reward, done)`. The goal is absorbing with zero reward.
    pub fn step(&self, s: usize, a: usize) -> (usize, f64, bool) {
        if s == GOAL {
            return (s, 0.0, true);
        }
        let (r, c) = ((s / COLS) as isize, (s % COLS) as isize);
        let (dr, dc) = match a {
            UP => (-1, 0),
            RIGHT => (0, 1),
            DOWN => (1, 0),
            _ => (0, -1),
        };
        let nr = (r + dr).clamp(0, ROWS as isize - 1) as usize;
        let nc = (c + dc).clamp(0, COLS as isize - 1) as usize;
        let next = nr * COLS + nc;
        if is_cliff(next) {
            (START, CLIFF_REWARD, false)
        } else {
            (next, STEP_REWARD, next == GOAL)
        }
    }

    /// The exact model over all 48 cells (cliff cells are unreachable but
    /// kept so ids match grid positions).
    pub fn mdp(&self, gamma: f64) -> Result<MdpSpec> {
        let mut transition = vec![vec![vec![0.0; N_STATES]; N_ACTIONS]; N_STATES];
        let mut reward = vec![vec![vec![0.0; N_STATES]; N_ACTIONS]; N_STATES];
        for s in 0..N_STATES {
            for a in 0..N_ACTIONS {
                let (next, r, _) = self.step(s, a);
                transition[s][a][next] = 1.0;
                reward[s][a][next] = r;
            }
        }
        let terminal = (0..N_STATES).map(|s| s == GOAL).collect();
        MdpSpec::with_terminals(transition, reward, gamma, terminal)
    }

    /// States visited from the start when always taking `policy(s)`, up to
    /// the goal or the first repeat.
    pub fn follow(&self, policy: impl Fn(usize) -> usize) -> Vec<usize> {
        let mut path = vec![START];
        let mut s = START;
        while s != GOAL && path.len() <= N_STATES {
            s = self.step(s, policy(s)).0;
            if path.contains(&s) {
                break;
            }
            path.push(s);
        }
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::value_iteration;

    #[test]
    fn reference_semantics() {
        let env = CliffWalking;
        assert_eq!(env.step(START, RIGHT), (START, -100.0, false));
        assert_eq!(env.step(START, UP), (START - COLS, -1.0, false));
        assert_eq!(env.step(START, LEFT), (START, -1.0, false));
        assert_eq!(env.step(5, UP), (5, -1.0, false));
        assert_eq!(env.step(GOAL - COLS, DOWN), (GOAL, -1.0, true));
        assert_eq!(env.step(2 * COLS + 4, DOWN), (START, -100.0, false));
    }

    #[test]
    fn optimal_return_is_minus_thirteen() {
        let opt = value_iteration(&CliffWalking.mdp(0.9).unwrap(), 1.0, 1e-12, 10_000).unwrap();
        assert!((opt.values[START] - OPTIMAL_RETURN).abs() < 1e-9);
        let path = CliffWalking.follow(|s| opt.optimal_actions(s, 1e-9)[0]);
        assert_eq!(path.len(), 14);
        assert_eq!(*path.last().unwrap(), GOAL);
    }
}
