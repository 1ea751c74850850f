//! Off- and on-policy evaluation on the two-state chain.

use log::warn;
use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Metric, PolicyMode, Sampling};
use super::output::{aggregate, CurveSummary, RunRecord};
use super::run_rng;
use crate::analysis::{fixed_point, key_matrix, AnalysisSetting};
use crate::envs::twostate::two_state_mdp;
use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::mdp::{importance_ratio, sample_categorical, sample_transition, state_values};
use crate::prediction::{Algorithm, FeatTransition, PredictionLearnerState};

/// The exact setting behind an evaluation config.
pub fn evaluation_setting(config: &ExperimentConfig) -> Result<AnalysisSetting> {
    if config.env != EnvKind::TwoState {
        return Err(Error::Config(format!("evaluation needs an exact behavior/target setting; {} has none", config.env)));
    }
    let b = two_state_mdp();
    let target = match config.policy_mode {
        PolicyMode::On => b.equiprobable.clone(),
        PolicyMode::Off => b.always_right.clone(),
    };
    AnalysisSetting::new(b.mdp, b.features, b.equiprobable, target)
}

/// What one algorithm's curve measures.
#[derive(Debug, Clone)]
enum Target {
    Theta(DVector<f64>),
    Values(DVector<f64>),
}

/// Everything the runs of one config share.
#[derive(Debug, Clone)]
pub struct EvaluationSetup {
    pub setting: AnalysisSetting,
    phis: Vec<FeatureVector>,
    d_mu: Vec<f64>,
    /// `ρ[s][a]`.
    rho: Vec<Vec<f64>>,
    true_values: DVector<f64>,
}

impl EvaluationSetup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let setting = evaluation_setting(config)?;
        let n = setting.mdp.n_states();
        let phis = (0..n).map(|s| setting.features.state(s)).collect::<Result<Vec<_>>>()?;
        let comps = setting.components()?;
        let d_mu = comps.d_mu.iter().copied().collect();
        let rho = (0..n)
            .map(|s| {
                (0..setting.mdp.n_actions())
                    .map(|a| {
                        if setting.behavior.prob(s, a) > 0.0 {
                            importance_ratio(&setting.target, &setting.behavior, s, a)
                        } else {
                            Ok(0.0)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let true_values = state_values(&setting.mdp, &setting.target)?;
        Ok(Self { setting, phis, d_mu, rho, true_values })
    }

    fn target(&self, alg: Algorithm, metric: Metric) -> Target {
        if metric == Metric::ThetaError {
            match key_matrix(&self.setting, alg).and_then(|k| fixed_point(&k.a, &k.b)) {
                Ok(theta) => return Target::Theta(theta),
                Err(e) => warn!("{alg}: no fixed point ({e}); reporting rmsve instead"),
            }
        }
        Target::Values(self.true_values.clone())
    }

    fn measure(&self, target: &Target, theta: &[f64]) -> f64 {
        if theta.iter().any(|x| !x.is_finite()) {
            return f64::INFINITY;
        }
        match target {
            Target::Theta(star) => theta.iter().zip(star.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(),
            Target::Values(v) => self
                .phis
                .iter()
                .zip(&self.d_mu)
                .enumerate()
                .map(|(s, (phi, d))| d * (phi.dot(theta) - v[s]).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Result of one evaluation run.
#[derive(Debug, Clone)]
pub struct EvaluationRun {
    pub record: RunRecord,
    pub learner: PredictionLearnerState,
}

fn recorded(k: u64, every: u64, horizon: u64) -> bool {
    k % every == 0 || k == horizon
}

/// One seeded run of `alg`.
pub fn evaluation_run(config: &ExperimentConfig, setup: &EvaluationSetup, alg: Algorithm, run: u64) -> Result<EvaluationRun> {
    let mut rng: ChaCha8Rng = run_rng(config.seed, run);
    let m = setup.setting.features.dim();
    let theta0 = config.theta0.clone().unwrap_or_else(|| vec![1.0; m]);
    if theta0.len() != m {
        return Err(Error::Dimension(format!("theta0 has {} entries, features have {m}", theta0.len())));
    }
    let schedule = config.prediction_schedule(alg)?;
    let target = setup.target(alg, config.metric());
    let mdp = &setup.setting.mdp;
    let gamma = mdp.gamma();
    let mut learner = PredictionLearnerState::new(alg, gamma, theta0).with_correction(config.correction);

    let capacity = (config.horizon / config.record_every + 2) as usize;
    let mut index = Vec::with_capacity(capacity);
    let mut values = Vec::with_capacity(capacity);
    index.push(0);
    values.push(setup.measure(&target, &learner.theta));

    let mut s = sample_categorical(&setup.d_mu, &mut rng);
    let mut diverged = false;
    for k in 0..config.horizon {
        if !diverged {
            if config.sampling == Sampling::Iid {
                s = sample_categorical(&setup.d_mu, &mut rng);
            }
            let tr = sample_transition(mdp, &setup.setting.behavior, s, &mut rng);
            let t = FeatTransition {
                phi: &setup.phis[tr.s],
                phi_next: &setup.phis[tr.s_next],
                r: tr.r,
                rho: setup.rho[tr.s][tr.a],
                done: tr.done,
            };
            learner.update(&t, schedule.rate_at(k));
            if tr.done {
                learner.start_episode();
                s = sample_categorical(&setup.d_mu, &mut rng);
            } else {
                s = tr.s_next;
            }
            diverged = !learner.is_finite();
        }
        let step = k + 1;
        if recorded(step, config.record_every, config.horizon) {
            index.push(step);
            values.push(if diverged { f64::INFINITY } else { setup.measure(&target, &learner.theta) });
        }
    }
    Ok(EvaluationRun { record: RunRecord { algorithm: alg.name().to_string(), run, index, values }, learner })
}

/// All runs of every configured algorithm, ordered by algorithm then run.
pub fn evaluation_runs(config: &ExperimentConfig) -> Result<Vec<EvaluationRun>> {
    config.validate()?;
    let setup = EvaluationSetup::new(config)?;
    let algs = config.prediction_algorithms()?;
    let jobs: Vec<(Algorithm, u64)> =
        algs.iter().flat_map(|&a| (0..config.runs as u64).map(move |r| (a, r))).collect();
    jobs.par_iter().map(|&(alg, run)| evaluation_run(config, &setup, alg, run)).collect()
}

/// Mean/std curves per algorithm, in configured order.
pub fn run_evaluation(config: &ExperimentConfig) -> Result<Vec<CurveSummary>> {
    let runs = evaluation_runs(config)?;
    let records: Vec<RunRecord> = runs.into_iter().map(|r| r.record).collect();
    records.chunks(config.runs).map(aggregate).collect()
}

/// Exact `E[δ | θ]` under i.i.d. sampling from `d_μ` and the behavior policy,
/// with importance weighting.
pub fn expected_td_error(setting: &AnalysisSetting, theta: &[f64]) -> Result<f64> {
    let d = setting.components()?.d_mu;
    let mdp = &setting.mdp;
    let mut total = 0.0;
    for s in 0..mdp.n_states() {
        let v_s = setting.features.state(s)?.dot(theta);
        for a in 0..mdp.n_actions() {
            let mu = setting.behavior.prob(s, a);
            if mu == 0.0 {
                continue;
            }
            let rho = importance_ratio(&setting.target, &setting.behavior, s, a)?;
            for next in 0..mdp.n_states() {
                let p = mdp.prob(s, a, next);
                if p == 0.0 {
                    continue;
                }
                let boot = if mdp.is_terminal(next) { 0.0 } else { mdp.gamma() * setting.features.state(next)?.dot(theta) };
                total += d[s] * mu * p * rho * (mdp.reward(s, a, next) + boot - v_s);
            }
        }
    }
    Ok(total)
}
