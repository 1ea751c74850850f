//! Finite-MDP algebra: policies, induced chains, stationary and follow-on
//! distributions, importance ratios, and sampled transitions.
//!
//! Everything here is dense `f64`. The environments of interest have at most
//! a few hundred states, so exact solves are cheap and we never fall back to
//! simulation when a closed form exists.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance for stochastic matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Smallest singular value of `P⊤ − I` that still counts as a null direction.
const NULLITY_TOL: f64 = 1e-9;

/// Condition-number ceiling for the dense solves in this module.
const MAX_CONDITION: f64 = 1e12;

/// A finite MDP given as explicit tensors `P[s][a][s']` and `R[s][a][s']`.
///
/// `terminal` optionally marks absorbing goal states of episodic tasks; a
/// sampled transition into such a state reports `done = true`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMdpSpec")]
pub struct MdpSpec {
    n_states: usize,
    n_actions: usize,
    transition: Vec<Vec<Vec<f64>>>,
    reward: Vec<Vec<Vec<f64>>>,
    gamma: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    terminal: Vec<bool>,
}

#[derive(Deserialize)]
struct RawMdpSpec {
    transition: Vec<Vec<Vec<f64>>>,
    reward: Vec<Vec<Vec<f64>>>,
    gamma: f64,
    #[serde(default)]
    terminal: Vec<bool>,
    // Redundant with the tensor shapes; accepted and cross-checked.
    n_states: Option<usize>,
    n_actions: Option<usize>,
}

impl TryFrom<RawMdpSpec> for MdpSpec {
    type Error = Error;

    fn try_from(raw: RawMdpSpec) -> Result<Self> {
        let spec = MdpSpec::with_terminals(raw.transition, raw.reward, raw.gamma, raw.terminal)?;
        if raw.n_states.is_some_and(|n| n != spec.n_states)
            || raw.n_actions.is_some_and(|n| n != spec.n_actions)
        {
            return Err(Error::InvalidModel(
                "declared n_states/n_actions disagree with tensor shapes".into(),
            ));
        }
        Ok(spec)
    }
}

impl MdpSpec {
    pub fn new(
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<Vec<f64>>>,
        gamma: f64,
    ) -> Result<Self> {
        Self::with_terminals(transition, reward, gamma, Vec::new())
    }

    pub fn with_terminals(
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<Vec<f64>>>,
        gamma: f64,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        let n_states = transition.len();
        if n_states == 0 {
            return Err(Error::InvalidModel("MDP needs at least one state".into()));
        }
        let n_actions = transition[0].len();
        if n_actions == 0 {
            return Err(Error::InvalidModel("MDP needs at least one action".into()));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidModel(format!("gamma must lie in (0,1), got {gamma}")));
        }
        if reward.len() != n_states {
            return Err(Error::Dimension(format!(
                "reward has {} states, transition has {n_states}",
                reward.len()
            )));
        }
        if !terminal.is_empty() && terminal.len() != n_states {
            return Err(Error::Dimension(format!(
                "terminal mask has {} entries for {n_states} states",
                terminal.len()
            )));
        }
        for s in 0..n_states {
            if transition[s].len() != n_actions || reward[s].len() != n_actions {
                return Err(Error::Dimension(format!("state {s} has a ragged action axis")));
            }
            for a in 0..n_actions {
                let row = &transition[s][a];
                if row.len() != n_states || reward[s][a].len() != n_states {
                    return Err(Error::Dimension(format!("P[{s}][{a}] or R[{s}][{a}] has wrong length")));
                }
                if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                    return Err(Error::InvalidModel(format!("P[{s}][{a}] has a negative or non-finite entry")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::InvalidModel(format!("P[{s}][{a}] sums to {sum}")));
                }
                if reward[s][a].iter().any(|r| !r.is_finite()) {
                    return Err(Error::InvalidModel(format!("R[{s}][{a}] has a non-finite entry")));
                }
            }
        }
        Ok(Self { n_states, n_actions, transition, reward, gamma, terminal })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[s][a][next]
    }

    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.reward[s][a][next]
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal.get(s).copied().unwrap_or(false)
    }

    /// Same dynamics with a different discount.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::with_terminals(self.transition.clone(), self.reward.clone(), gamma, self.terminal.clone())
    }
}

/// A stochastic policy `π[s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Policy {
    probs: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for Policy {
    type Error = Error;

    fn try_from(probs: Vec<Vec<f64>>) -> Result<Self> {
        Policy::new(probs)
    }
}

impl From<Policy> for Vec<Vec<f64>> {
    fn from(p: Policy) -> Self {
        p.probs
    }
}

impl Policy {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.is_empty() || probs[0].is_empty() {
            return Err(Error::InvalidModel("policy must be non-empty".into()));
        }
        let n_actions = probs[0].len();
        for (s, row) in probs.iter().enumerate() {
            if row.len() != n_actions {
                return Err(Error::Dimension(format!("policy row {s} has {} actions", row.len())));
            }
            if row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::InvalidModel(format!("policy row {s} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidModel(format!("policy row {s} sums to {sum}")));
            }
        }
        Ok(Self { probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        Self { probs: vec![vec![p; n_actions]; n_states] }
    }

    /// Deterministic policy choosing `actions[s]` in state `s`.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        let mut probs = vec![vec![0.0; n_actions]; actions.len()];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::Dimension(format!("action {a} out of range in state {s}")));
            }
            probs[s][a] = 1.0;
        }
        Self::new(probs)
    }

    pub fn n_states(&self) -> usize {
        self.probs.len()
    }

    pub fn n_actions(&self) -> usize {
        self.probs[0].len()
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s][a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s]
    }

    fn check_shape(&self, mdp: &MdpSpec) -> Result<()> {
        if self.n_states() != mdp.n_states() || self.n_actions() != mdp.n_actions() {
            return Err(Error::Dimension(format!(
                "policy is {}x{}, MDP is {}x{}",
                self.n_states(),
                self.n_actions(),
                mdp.n_states(),
                mdp.n_actions()
            )));
        }
        Ok(())
    }
}

/// One sampled experience `⟨s, a, r, s'⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
    pub done: bool,
}

/// `P_π[s][s'] = Σ_a π[s][a] P[s][a][s']`.
pub fn state_transition_matrix(mdp: &MdpSpec, pi: &Policy) -> Result<DMatrix<f64>> {
    pi.check_shape(mdp)?;
    let n = mdp.n_states();
    Ok(DMatrix::from_fn(n, n, |s, next| {
        (0..mdp.n_actions()).map(|a| pi.prob(s, a) * mdp.prob(s, a, next)).sum()
    }))
}

/// Expected one-step reward `r_π[s] = Σ_a π[s][a] Σ_{s'} P[s][a][s'] R[s][a][s']`.
pub fn expected_reward(mdp: &MdpSpec, pi: &Policy) -> Result<DVector<f64>> {
    pi.check_shape(mdp)?;
    let n = mdp.n_states();
    Ok(DVector::from_fn(n, |s, _| {
        (0..mdp.n_actions())
            .map(|a| {
                let inner: f64 = (0..n).map(|next| mdp.prob(s, a, next) * mdp.reward(s, a, next)).sum();
                pi.prob(s, a) * inner
            })
            .sum()
    }))
}

/// Stationary distribution of a row-stochastic matrix.
///
/// The null space of `P⊤ − I` is found with an SVD; more than one null
/// direction means the chain has several closed classes and the answer is not
/// unique. The vector itself comes from the bordered system where one balance
/// equation is replaced by `Σ d = 1`, which is nonsingular once the null space
/// is one-dimensional.
pub fn stationary_distribution(p_pi: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p_pi.nrows();
    if n == 0 || p_pi.ncols() != n {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", n, p_pi.ncols())));
    }
    for (s, row) in p_pi.row_iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-10 || row.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidModel(format!("row {s} is not a probability vector (sum {sum})")));
        }
    }

    let balance = p_pi.transpose() - DMatrix::<f64>::identity(n, n);
    let sv = balance.clone().svd(false, false).singular_values;
    let nullity = sv.iter().filter(|&&x| x < NULLITY_TOL).count();
    if nullity > 1 {
        return Err(Error::Degenerate(format!(
            "eigenvalue 1 has multiplicity {nullity}; stationary distribution is not unique"
        )));
    }

    let mut bordered = balance;
    bordered.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let mut d = solve_checked(bordered, rhs, "stationary distribution")?;

    for x in d.iter_mut() {
        if *x < 0.0 {
            if *x < -1e-10 {
                return Err(Error::Numeric(format!("stationary solve produced negative mass {x}")));
            }
            *x = 0.0;
        }
    }
    let total = d.sum();
    d /= total;

    let residual = (p_pi.transpose() * &d - &d).amax();
    if residual >= 1e-10 {
        return Err(Error::Numeric(format!("stationary residual {residual:e} too large")));
    }
    Ok(d)
}

/// Emphatic follow-on weighting `f = (I − γ P_π⊤)⁻¹ d_μ`.
pub fn followon_vector(mdp: &MdpSpec, pi: &Policy, d_mu: &DVector<f64>) -> Result<DVector<f64>> {
    followon_with_gamma(mdp, pi, d_mu, mdp.gamma())
}

/// [`followon_vector`] with an explicit discount, including `γ = 0`.
pub fn followon_with_gamma(
    mdp: &MdpSpec,
    pi: &Policy,
    d_mu: &DVector<f64>,
    gamma: f64,
) -> Result<DVector<f64>> {
    let n = mdp.n_states();
    if d_mu.len() != n {
        return Err(Error::Dimension(format!("d_mu has length {}, expected {n}", d_mu.len())));
    }
    if d_mu.iter().any(|&x| x < 0.0) || (d_mu.sum() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidModel("d_mu must be a probability vector".into()));
    }
    let p_pi = state_transition_matrix(mdp, pi)?;
    let system = DMatrix::<f64>::identity(n, n) - p_pi.transpose() * gamma;
    let f = solve_checked(system.clone(), d_mu.clone(), "follow-on vector")?;
    let residual = (system * &f - d_mu).amax();
    if residual >= 1e-10 {
        return Err(Error::Numeric(format!("follow-on residual {residual:e} too large")));
    }
    Ok(f)
}

/// `ρ = π(a|s) / μ(a|s)`.
pub fn importance_ratio(pi: &Policy, mu: &Policy, s: usize, a: usize) -> Result<f64> {
    if s >= pi.n_states() || s >= mu.n_states() || a >= pi.n_actions() || a >= mu.n_actions() {
        return Err(Error::Dimension(format!("(s={s}, a={a}) out of policy range")));
    }
    let target = pi.prob(s, a);
    let behavior = mu.prob(s, a);
    if behavior == 0.0 {
        if target > 0.0 {
            return Err(Error::Coverage { state: s, action: a, target });
        }
        return Ok(0.0);
    }
    Ok(target / behavior)
}

/// Check that `μ` covers `π` everywhere.
pub fn check_coverage(pi: &Policy, mu: &Policy) -> Result<()> {
    for s in 0..pi.n_states() {
        for a in 0..pi.n_actions() {
            importance_ratio(pi, mu, s, a)?;
        }
    }
    Ok(())
}

/// Draw an index from a discrete distribution by inverse CDF.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Roundoff can leave `acc` a hair below 1; fall back to the last
    // index with positive mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Sample `a ~ μ[s]`, `s' ~ P[s][a]`, and read off `R[s][a][s']`.
pub fn sample_transition<R: Rng + ?Sized>(mdp: &MdpSpec, mu: &Policy, s: usize, rng: &mut R) -> Transition {
    let a = sample_categorical(mu.row(s), rng);
    let s_next = sample_categorical(&mdp.transition[s][a], rng);
    Transition { s, a, r: mdp.reward(s, a, s_next), s_next, done: mdp.is_terminal(s_next) }
}

/// `v_π = (I − γ P_π)⁻¹ r_π`.
pub fn state_values(mdp: &MdpSpec, pi: &Policy) -> Result<DVector<f64>> {
    let n = mdp.n_states();
    let p_pi = state_transition_matrix(mdp, pi)?;
    let r_pi = expected_reward(mdp, pi)?;
    solve_checked(DMatrix::<f64>::identity(n, n) - p_pi * mdp.gamma(), r_pi, "state values")
}

/// Result of [`value_iteration`].
#[derive(Debug, Clone)]
pub struct OptimalValues {
    pub values: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl OptimalValues {
    /// Actions within `tol` of the best action value in state `s`.
    pub fn optimal_actions(&self, s: usize, tol: f64) -> Vec<usize> {
        let best = self.q[s].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..self.q[s].len()).filter(|&a| self.q[s][a] >= best - tol).collect()
    }
}

/// Bellman optimality iteration with an explicit discount in `(0, 1]`.
///
/// Terminal states are held at value zero, which makes `γ = 1` well posed
/// for shortest-path tasks whose goal is reachable from every state.
pub fn value_iteration(mdp: &MdpSpec, gamma: f64, tol: f64, max_iter: usize) -> Result<OptimalValues> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Config(format!("value iteration gamma must be in (0,1], got {gamma}")));
    }
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let mut values = vec![0.0; n];
    let mut q = vec![vec![0.0; na]; n];
    for it in 1..=max_iter {
        let mut change: f64 = 0.0;
        for s in 0..n {
            if mdp.is_terminal(s) {
                continue;
            }
            for a in 0..na {
                q[s][a] = (0..n)
                    .filter(|&next| mdp.prob(s, a, next) > 0.0)
                    .map(|next| mdp.prob(s, a, next) * (mdp.reward(s, a, next) + gamma * values[next]))
                    .sum();
            }
            let best = q[s].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            change = change.max((best - values[s]).abs());
            values[s] = best;
        }
        if change < tol {
            return Ok(OptimalValues { values, q, iterations: it });
        }
    }
    Err(Error::Numeric(format!("value iteration did not converge in {max_iter} sweeps")))
}

/// LU solve guarded by an SVD condition estimate.
pub(crate) fn solve_checked(a: DMatrix<f64>, b: DVector<f64>, context: &str) -> Result<DVector<f64>> {
    let condition = condition_number(&a);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Singular { condition, context: context.to_string() });
    }
    a.lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular { condition, context: context.to_string() })
}

/// 2-norm condition number `σ_max / σ_min`.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
