//! Grid maze. Every move costs −1; moves into a wall or off the grid leave
//! the agent in place. The episode ends on entering the goal.
//!
//! Layout files are plain text, one row per line:
//!
//! | char | meaning |
//! |------|---------|
//! | `S`  | start (exactly one) |
//! | `G`  | goal (exactly one) |
//! | `#`  | wall |
//! | `.`  | open cell |
//!
//! Blank lines and lines starting with `;` are ignored. States are the
//! non-wall cells numbered in row-major order.

use std::collections::VecDeque;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mdp::MdpSpec;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const N_ACTIONS: usize = 4;
pub const STEP_REWARD: f64 = -1.0;
pub const GAMMA: f64 = 0.99;

const DEFAULT_LAYOUT: &str = include_str!("../../data/maze_default.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Maze {
    rows: usize,
    cols: usize,
    /// State id of each cell, `None` for walls.
    index: Vec<Option<usize>>,
    /// `(row, col)` of each state.
    cells: Vec<(usize, usize)>,
    start: usize,
    goal: usize,
}

impl Maze {
    /// 10×10 layout whose shortest path (20 moves) is unique.
    pub fn default_layout() -> Self {
        Self::parse(DEFAULT_LAYOUT).expect("bundled layout is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> =
            text.lines().map(str::trim_end).filter(|l| !l.is_empty() && !l.starts_with(';')).collect();
        if lines.is_empty() {
            return Err(Error::Layout("empty layout".into()));
        }
        let cols = lines[0].chars().count();
        if lines.iter().any(|l| l.chars().count() != cols) {
            return Err(Error::Layout("rows have different lengths".into()));
        }
        let rows = lines.len();
        let mut index = Vec::with_capacity(rows * cols);
        let mut cells = Vec::new();
        let (mut start, mut goal) = (Vec::new(), Vec::new());
        for (r, line) in lines.iter().enumerate() {
            for (c, ch) in line.chars().enumerate() {
                if ch == '#' {
                    index.push(None);
                    continue;
                }
                let id = cells.len();
                match ch {
                    '.' => {}
                    'S' => start.push(id),
                    'G' => goal.push(id),
                    other => return Err(Error::Layout(format!("unexpected character '{other}' at row {r}, column {c}"))),
                }
                index.push(Some(id));
                cells.push((r, c));
            }
        }
        if start.len() != 1 || goal.len() != 1 {
            return Err(Error::Layout(format!(
                "need exactly one S and one G, found {} and {}",
                start.len(),
                goal.len()
            )));
        }
        let maze = Maze { rows, cols, index, cells, start: start[0], goal: goal[0] };
        if maze.shortest_path_len().is_none() {
            return Err(Error::Layout("goal is unreachable from start".into()));
        }
        Ok(maze)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_states(&self) -> usize {
        self.cells.len()
    }

    pub fn start_state(&self) -> usize {
        self.start
    }

    pub fn goal_state(&self) -> usize {
        self.goal
    }

    pub fn cell(&self, s: usize) -> (usize, usize) {
        self.cells[s]
    }

    pub fn state_at(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.rows || col >= self.cols {
            return None;
        }
        self.index[row * self.cols + col]
    }

    fn moved(&self, s: usize, a: usize) -> usize {
        let (r, c) = self.cells[s];
        let target = match a {
            UP => r.checked_sub(1).map(|r| (r, c)),
            DOWN => Some((r + 1, c)),
            LEFT => c.checked_sub(1).map(|c| (r, c)),
            RIGHT => Some((r, c + 1)),
            _ => None,
        };
        target.and_then(|(r, c)| self.state_at(r, c)).unwrap_or(s)
    }

    /// `(next, reward, done)`. The goal is absorbing with zero reward.
    pub fn step(&self, s: usize, a: usize) -> (usize, f64, bool) {
        if s == self.goal {
            return (s, 0.0, true);
        }
        let next = self.moved(s, a);
        (next, STEP_REWARD, next == self.goal)
    }

    /// The exact model; the goal is a terminal state.
    pub fn mdp(&self, gamma: f64) -> Result<MdpSpec> {
        let n = self.n_states();
        let mut transition = vec![vec![vec![0.0; n]; N_ACTIONS]; n];
        let mut reward = vec![vec![vec![0.0; n]; N_ACTIONS]; n];
        for s in 0..n {
            for a in 0..N_ACTIONS {
                let (next, r, _) = self.step(s, a);
                transition[s][a][next] = 1.0;
                reward[s][a][next] = r;
            }
        }
        let terminal = (0..n).map(|s| s == self.goal).collect();
        MdpSpec::with_terminals(transition, reward, gamma, terminal)
    }

    /// BFS distances from every state to the goal, `None` if unreachable.
    pub fn distances_to_goal(&self) -> Vec<Option<usize>> {
        let n = self.n_states();
        let mut dist = vec![None; n];
        dist[self.goal] = Some(0);
        let mut queue = VecDeque::from([self.goal]);
        // Moves are reversible, so searching outward from the goal works.
        while let Some(s) = queue.pop_front() {
            let d = dist[s].unwrap_or(0);
            for a in 0..N_ACTIONS {
                let next = self.moved(s, a);
                if dist[next].is_none() {
                    dist[next] = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    /// Number of moves on a shortest start→goal path.
    pub fn shortest_path_len(&self) -> Option<usize> {
        self.distances_to_goal()[self.start]
    }

    /// States along a path that always takes `policy(s)`, from the start
    /// until the goal or a repeat.
    pub fn follow(&self, policy: impl Fn(usize) -> usize) -> Vec<usize> {
        let mut path = vec![self.start];
        let mut s = self.start;
        while s != self.goal && path.len() <= self.n_states() {
            s = self.moved(s, policy(s));
            if path.contains(&s) {
                break;
            }
            path.push(s);
        }
        path
    }
}
