//! Exact key matrices `A`, vectors `b`, and their diagnostics.
//!
//! Each learner's expected update has the form `b − Aθ`; the smallest
//! eigenvalue of `(A + A⊤)/2` governs both stability and speed. This module
//! builds every `A` and `b` in closed form from an [`MdpSpec`], a discrete
//! feature map and a behavior/target policy pair:
//!
//! | algorithm | `A` | `b` |
//! |-----------|-----|-----|
//! | TD    | `Φ⊤D_μ(I−γP_π)Φ`                  | `Φ⊤D_μ r_π` |
//! | TDC   | `A_TD⊤ C⁻¹ A_TD`                  | `A_TD⊤ C⁻¹ b_TD` |
//! | ETD   | `Φ⊤F(I−γP_π)Φ`                    | `Φ⊤F r_π` |
//! | VMTD  | `Φ⊤(D_μ−d_μd_μ⊤)(I−γP_π)Φ`        | `Φ⊤(D_μ−d_μd_μ⊤) r_π` |
//! | VMTDC | `A_VMTD⊤ C⁻¹ A_VMTD`              | `A_VMTD⊤ C⁻¹ b_VMTD` |
//! | VMETD | `Φ⊤(F(I−γP_π)−d_μd_μ⊤)Φ`          | `Φ⊤(F−d_μf⊤) r_π` |
//!
//! with `C = Φ⊤D_μΦ`, `F = diag(f)` and `f = (I−γP_π⊤)⁻¹d_μ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::mdp::{
    check_coverage, condition_number, expected_reward, followon_vector, state_transition_matrix,
    stationary_distribution, MdpSpec, Policy,
};
use crate::prediction::Algorithm;

/// Condition-number ceiling for [`fixed_point`].
pub const MAX_CONDITION: f64 = 1e12;

/// Residual bound for [`fixed_point`].
pub const FIXED_POINT_RESIDUAL: f64 = 1e-8;

/// Relative singular-value threshold used for the feature rank check.
const RANK_TOL: f64 = 1e-10;

/// Everything needed to write down the expected updates.
#[derive(Debug, Clone)]
pub struct AnalysisSetting {
    pub mdp: MdpSpec,
    pub features: FeatureMap,
    pub behavior: Policy,
    pub target: Policy,
}

impl AnalysisSetting {
    pub fn new(mdp: MdpSpec, features: FeatureMap, behavior: Policy, target: Policy) -> Result<Self> {
        match features.n_states() {
            Some(n) if n == mdp.n_states() => {}
            Some(n) => {
                return Err(Error::Dimension(format!(
                    "feature map covers {n} states, MDP has {}",
                    mdp.n_states()
                )))
            }
            None => return Err(Error::Config("analysis needs tabular or explicit-matrix features".into())),
        }
        for p in [&behavior, &target] {
            if p.n_states() != mdp.n_states() || p.n_actions() != mdp.n_actions() {
                return Err(Error::Dimension("policy shape does not match MDP".into()));
            }
        }
        check_coverage(&target, &behavior)?;
        Ok(Self { mdp, features, behavior, target })
    }

    pub fn is_on_policy(&self) -> bool {
        self.behavior == self.target
    }

    /// The quantities shared by every key matrix.
    pub fn components(&self) -> Result<Components> {
        let n = self.mdp.n_states();
        let phi = self.features.feature_matrix()?;
        let p_mu = state_transition_matrix(&self.mdp, &self.behavior)?;
        let p_pi = state_transition_matrix(&self.mdp, &self.target)?;
        let d_mu = stationary_distribution(&p_mu)?;
        let r_pi = expected_reward(&self.mdp, &self.target)?;
        let f = followon_vector(&self.mdp, &self.target, &d_mu)?;
        let discounted = DMatrix::<f64>::identity(n, n) - &p_pi * self.mdp.gamma();
        let sv = phi.clone().svd(false, false).singular_values;
        let rank_tol = RANK_TOL * sv.max().max(1.0);
        let rank = sv.iter().filter(|&&x| x > rank_tol).count();
        Ok(Components {
            rank_deficient: rank < phi.ncols(),
            phi,
            p_pi,
            d_mu,
            f,
            r_pi,
            discounted,
        })
    }
}

/// Dense building blocks of the key matrices.
#[derive(Debug, Clone)]
pub struct Components {
    pub phi: DMatrix<f64>,
    pub p_pi: DMatrix<f64>,
    pub d_mu: DVector<f64>,
    /// Follow-on weighting `f`.
    pub f: DVector<f64>,
    pub r_pi: DVector<f64>,
    /// `I − γP_π`.
    pub discounted: DMatrix<f64>,
    pub rank_deficient: bool,
}

impl Components {
    fn d_mu_diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.d_mu)
    }

    /// `C = Φ⊤D_μΦ = E[φφ⊤]`.
    pub fn feature_covariance(&self) -> DMatrix<f64> {
        self.phi.transpose() * self.d_mu_diag() * &self.phi
    }

    /// `D_μ − d_μd_μ⊤`.
    fn centered_weighting(&self) -> DMatrix<f64> {
        self.d_mu_diag() - &self.d_mu * self.d_mu.transpose()
    }

    /// `X = F(I−γP_π) − d_μd_μ⊤`, the matrix inside `A_VMETD`.
    pub fn vmetd_core(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.f) * &self.discounted - &self.d_mu * self.d_mu.transpose()
    }
}

/// One algorithm's expected-update quantities.
#[derive(Debug, Clone)]
pub struct KeyMatrixResult {
    pub algorithm: Algorithm,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// `E[φφ⊤]`, present for TDC and VMTDC.
    pub c: Option<DMatrix<f64>>,
    pub min_sym_eig: f64,
    /// `A⁻¹b` when `A` is well conditioned.
    pub fixed_point: Option<DVector<f64>>,
    /// Φ lacks full column rank; eigenvalues then include spurious zeros.
    pub rank_deficient: bool,
}

pub fn key_matrix(setting: &AnalysisSetting, algorithm: Algorithm) -> Result<KeyMatrixResult> {
    let comps = setting.components()?;
    key_matrix_from(&comps, algorithm)
}

/// [`key_matrix`] over precomputed [`Components`].
pub fn key_matrix_from(comps: &Components, algorithm: Algorithm) -> Result<KeyMatrixResult> {
    let phi_t = comps.phi.transpose();
    let d = comps.d_mu_diag();

    let td = || (&phi_t * &d * &comps.discounted * &comps.phi, &phi_t * &d * &comps.r_pi);
    let vmtd = || {
        let w = comps.centered_weighting();
        (&phi_t * &w * &comps.discounted * &comps.phi, &phi_t * &w * &comps.r_pi)
    };
    let gradient_corrected = |(a, b): (DMatrix<f64>, DVector<f64>)| -> Result<_> {
        let c = comps.feature_covariance();
        if comps.rank_deficient {
            return Err(Error::Singular {
                condition: condition_number(&c),
                context: format!("{algorithm} needs C⁻¹ but the features are rank deficient"),
            });
        }
        let c_inv_a = solve_matrix(&c, &a, "feature covariance C")?;
        let c_inv_b = solve_matrix(&c, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()), "feature covariance C")?;
        let key = a.transpose() * c_inv_a;
        let vec = (a.transpose() * c_inv_b).column(0).into_owned();
        Ok((key, vec, c))
    };

    let (a, b, c) = match algorithm {
        Algorithm::Td => {
            let (a, b) = td();
            (a, b, None)
        }
        Algorithm::Tdc => {
            let (a, b, c) = gradient_corrected(td())?;
            (a, b, Some(c))
        }
        Algorithm::Etd => {
            let f = DMatrix::from_diagonal(&comps.f);
            (&phi_t * &f * &comps.discounted * &comps.phi, &phi_t * &f * &comps.r_pi, None)
        }
        Algorithm::Vmtd => {
            let (a, b) = vmtd();
            (a, b, None)
        }
        Algorithm::Vmtdc => {
            let (a, b, c) = gradient_corrected(vmtd())?;
            (a, b, Some(c))
        }
        Algorithm::Vmetd => {
            let weighting = DMatrix::from_diagonal(&comps.f) - &comps.d_mu * comps.f.transpose();
            (&phi_t * comps.vmetd_core() * &comps.phi, &phi_t * weighting * &comps.r_pi, None)
        }
    };

    let min_sym_eig = min_symmetric_eigenvalue(&a)?;
    let fixed_point = fixed_point(&a, &b).ok();
    Ok(KeyMatrixResult { algorithm, a, b, c, min_sym_eig, fixed_point, rank_deficient: comps.rank_deficient })
}

fn solve_matrix(c: &DMatrix<f64>, rhs: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    let condition = condition_number(c);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Singular { condition, context: context.to_string() });
    }
    c.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::Singular { condition, context: context.to_string() })
}

/// Smallest eigenvalue of `(A + A⊤)/2`.
pub fn min_symmetric_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    let sym = (a + a.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym).eigenvalues.min())
}

/// Full spectrum of `(A + A⊤)/2`, ascending.
pub fn symmetric_spectrum(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Solve `Aθ = b`, refusing ill-conditioned systems.
pub fn fixed_point(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "A is {}x{}, b has length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let condition = condition_number(a);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Singular { condition, context: "key matrix A".into() });
    }
    let theta = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular { condition, context: "key matrix A".into() })?;
    let residual = (a * &theta - b).amax();
    if residual >= FIXED_POINT_RESIDUAL {
        return Err(Error::Numeric(format!("fixed-point residual {residual:e} too large")));
    }
    Ok(theta)
}

/// Diagnostics behind the positive-definiteness arguments.
#[derive(Debug, Clone, Serialize)]
pub struct PdReport {
    /// Row sums of `X = F(I−γP_π) − d_μd_μ⊤`. Always equal to `(1−γ)f − d_μ`.
    pub row_sums: Vec<f64>,
    /// Column sums of `X`; identically zero.
    pub column_sums: Vec<f64>,
    pub rows_positive: bool,
    pub columns_zero: bool,
    /// Smallest eigenvalue of the symmetric part of `A_VMETD`.
    pub vmetd_min_sym_eig: f64,
    /// On-policy only: spectrum of the symmetric part of `Cov(φ, φ−γφ')`.
    pub covariance_spectrum: Option<Vec<f64>>,
}

/// Tolerance for "column sums are zero".
pub const COLUMN_SUM_TOL: f64 = 1e-10;

pub fn pd_diagnostics(setting: &AnalysisSetting) -> Result<PdReport> {
    let comps = setting.components()?;
    let x = comps.vmetd_core();
    let row_sums: Vec<f64> = x.row_iter().map(|r| r.sum()).collect();
    let column_sums: Vec<f64> = x.column_iter().map(|c| c.sum()).collect();
    let vmetd = key_matrix_from(&comps, Algorithm::Vmetd)?;
    let covariance_spectrum = if setting.is_on_policy() {
        Some(symmetric_spectrum(&key_matrix_from(&comps, Algorithm::Vmtd)?.a)?)
    } else {
        None
    };
    Ok(PdReport {
        rows_positive: row_sums.iter().all(|&r| r > 0.0),
        columns_zero: column_sums.iter().all(|c| c.abs() < COLUMN_SUM_TOL),
        row_sums,
        column_sums,
        vmetd_min_sym_eig: vmetd.min_sym_eig,
        covariance_spectrum,
    })
}

/// A random ergodic setting: every transition and policy probability is
/// bounded away from zero, and features are Gaussian with `n_features`
/// columns.
pub fn random_setting<R: Rng + ?Sized>(
    rng: &mut R,
    n_states: usize,
    n_actions: usize,
    n_features: usize,
    on_policy: bool,
) -> Result<AnalysisSetting> {
    fn simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let mut out: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let head: f64 = out[..n - 1].iter().sum();
        out[n - 1] = 1.0 - head;
        out
    }
    let transition = (0..n_states).map(|_| (0..n_actions).map(|_| simplex(rng, n_states)).collect()).collect();
    let reward = (0..n_states)
        .map(|_| (0..n_actions).map(|_| (0..n_states).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
        .collect();
    let gamma = rng.random_range(0.5..0.99);
    let mdp = MdpSpec::new(transition, reward, gamma)?;
    let behavior = Policy::new((0..n_states).map(|_| simplex(rng, n_actions)).collect())?;
    let target = if on_policy {
        behavior.clone()
    } else {
        Policy::new((0..n_states).map(|_| simplex(rng, n_actions)).collect())?
    };
    let phi = (0..n_states)
        .map(|_| {
            (0..n_features)
                .map(|_| {
                    // Box-Muller
                    let u1: f64 = rng.random::<f64>().max(1e-12);
                    let u2: f64 = rng.random();
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                })
                .collect()
        })
        .collect();
    AnalysisSetting::new(mdp, FeatureMap::matrix(phi)?, behavior, target)
}
