//! Episodic control runs on Maze, CliffWalking, MountainCar and Acrobot.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Metric};
use super::output::{aggregate, CurveSummary, RunRecord};
use super::run_rng;
use crate::control::{ControlAlgorithm, ControlLearnerState, ControlTransition};
use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::features::FeatureMap;

/// Per-episode results of one run, and the learner it ended with.
#[derive(Debug, Clone)]
pub struct ControlRun {
    pub algorithm: ControlAlgorithm,
    pub run: u64,
    /// Undiscounted return of each episode.
    pub returns: Vec<f64>,
    /// Steps taken in each episode.
    pub steps: Vec<u64>,
    /// Whether each episode reached a terminal state.
    pub completed: Vec<bool>,
    /// First episode after which the weights were no longer finite. Later
    /// episodes are not played and record a return of −∞.
    pub diverged_at: Option<usize>,
    pub learner: ControlLearnerState,
    pub features: FeatureMap,
}

impl ControlRun {
    /// Greedy actions at discrete state `s` under the final weights.
    pub fn greedy_actions(&self, s: usize) -> Result<Vec<usize>> {
        Ok(self.learner.greedy_actions(&self.features.state(s)?))
    }

    pub fn record(&self, metric: Metric, every: u64) -> RunRecord {
        let keep = |i: usize| i as u64 % every == 0 || i + 1 == self.returns.len();
        let series: Vec<(u64, f64)> = (0..self.returns.len())
            .filter(|&i| keep(i))
            .map(|i| {
                let v = match metric {
                    Metric::EpisodeSteps => self.steps[i] as f64,
                    _ => self.returns[i],
                };
                (i as u64, v)
            })
            .collect();
        RunRecord {
            algorithm: self.algorithm.name().to_string(),
            run: self.run,
            index: series.iter().map(|p| p.0).collect(),
            values: series.iter().map(|p| p.1).collect(),
        }
    }
}

/// One seeded run of `alg` for `config.horizon` episodes.
pub fn control_run(config: &ExperimentConfig, alg: ControlAlgorithm, run: u64) -> Result<ControlRun> {
    if config.env == EnvKind::TwoState {
        return Err(Error::Config("control experiments need an episodic task".into()));
    }
    let mut rng: ChaCha8Rng = run_rng(config.seed, run);
    let mut env = config.env_instance()?;
    let features = config.control_features()?;
    let schedule = config.control_schedule(alg)?;
    let mut learner =
        ControlLearnerState::new(alg, config.control_gamma(), features.dim(), env.n_actions(), config.epsilon.at(0))?;

    let episodes = config.horizon as usize;
    let mut returns = Vec::with_capacity(episodes);
    let mut steps = Vec::with_capacity(episodes);
    let mut completed = Vec::with_capacity(episodes);
    let mut diverged_at = None;
    for episode in 0..config.horizon {
        if diverged_at.is_some() {
            returns.push(f64::NEG_INFINITY);
            steps.push(env.max_steps() as u64);
            completed.push(false);
            continue;
        }
        learner.set_epsilon(config.epsilon.at(episode))?;
        learner.start_episode();
        let rates = schedule.rate_at(episode);
        let mut phi = features.featurize(&env.reset(&mut rng))?;
        let mut action = learner.act(&phi, &mut rng);
        let (mut total, mut n) = (0.0, 0u64);
        let done = loop {
            let out = env.step(action, &mut rng)?;
            let phi_next = features.featurize(&out.observation)?;
            let t = ControlTransition { phi: &phi, a: action, r: out.reward, phi_next: &phi_next, done: out.done };
            let next = learner.step(&t, rates, &mut rng);
            total += out.reward;
            n += 1;
            if out.episode_over() {
                break out.done;
            }
            phi = phi_next;
            action = next.expect("non-terminal steps yield a next action");
        };
        returns.push(total);
        steps.push(n);
        completed.push(done);
        if !learner.is_finite() {
            diverged_at = Some(episode as usize);
        }
    }
    Ok(ControlRun { algorithm: alg, run, returns, steps, completed, diverged_at, learner, features })
}

/// All runs of every configured algorithm, ordered by algorithm then run.
pub fn control_runs(config: &ExperimentConfig) -> Result<Vec<ControlRun>> {
    config.validate()?;
    let algs = config.control_algorithms()?;
    let jobs: Vec<(ControlAlgorithm, u64)> =
        algs.iter().flat_map(|&a| (0..config.runs as u64).map(move |r| (a, r))).collect();
    jobs.par_iter().map(|&(alg, run)| control_run(config, alg, run)).collect()
}

/// Per-episode mean/std of the configured metric, in configured order.
pub fn summarize_control(config: &ExperimentConfig, runs: &[ControlRun]) -> Result<Vec<CurveSummary>> {
    let records: Vec<RunRecord> = runs.iter().map(|r| r.record(config.metric(), config.record_every)).collect();
    records.chunks(config.runs).map(aggregate).collect()
}

pub fn run_control(config: &ExperimentConfig) -> Result<Vec<CurveSummary>> {
    let runs = control_runs(config)?;
    summarize_control(config, &runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::ExperimentKind;

    fn config(env: EnvKind, algs: &[&str], runs: usize, episodes: u64) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ExperimentKind::Control, env, episodes);
        c.algorithms = algs.iter().map(|s| s.to_string()).collect();
        c.runs = runs;
        c
    }

    #[test]
    fn vmq_without_beta_reproduces_q() {
        let mut c = config(EnvKind::CliffWalking, &["Q", "VMQ"], 3, 30);
        c.rates.insert("VMQ".into(), crate::experiment::config::RateConfig { alpha: 0.1, zeta: Some(0.0), beta: Some(0.0) });
        let s = run_control(&c).unwrap();
        assert_eq!(s[0].mean, s[1].mean);
        assert_eq!(s[0].std, s[1].std);
    }

    #[test]
    fn episode_lengths_respect_cap() {
        let mut c = config(EnvKind::MountainCar, &["Sarsa"], 1, 3);
        c.max_steps = Some(50);
        let run = control_run(&c, ControlAlgorithm::Sarsa, 0).unwrap();
        assert!(run.steps.iter().all(|&n| n <= 50));
        assert_eq!(run.returns.len(), 3);
    }

    #[test]
    fn maze_returns_are_minus_steps() {
        let c = config(EnvKind::Maze, &["Q"], 1, 5);
        let run = control_run(&c, ControlAlgorithm::Q, 0).unwrap();
        for (r, n) in run.returns.iter().zip(&run.steps) {
            assert_eq!(*r, -(*n as f64));
        }
    }

    #[test]
    fn steps_metric_and_stride() {
        let mut c = config(EnvKind::Maze, &["Sarsa"], 2, 7);
        c.metric = Some(Metric::EpisodeSteps);
        c.record_every = 3;
        let s = run_control(&c).unwrap();
        assert_eq!(s[0].index, vec![0, 3, 6]);
        assert!(s[0].mean.iter().all(|&m| m >= 20.0));
    }

    #[test]
    fn diverged_runs_stop_and_record_negative_infinity() {
        let mut c = config(EnvKind::CliffWalking, &["Sarsa"], 1, 30);
        c.rates.insert("Sarsa".into(), crate::experiment::config::RateConfig { alpha: 1e6, zeta: None, beta: None });
        c.gamma = Some(1.0);
        c.decay = crate::experiment::config::DecayKind::Constant;
        let run = control_run(&c, ControlAlgorithm::Sarsa, 0).unwrap();
        let at = run.diverged_at.expect("huge step size should diverge");
        assert!(at < 29);
        assert!(run.returns[at + 1..].iter().all(|&r| r == f64::NEG_INFINITY));
        assert!(run.completed[at + 1..].iter().all(|&c| !c));
        assert_eq!(run.returns.len(), 30);
    }

    #[test]
    fn two_state_is_rejected() {
        let c = config(EnvKind::TwoState, &["Q"], 1, 1);
        assert!(control_run(&c, ControlAlgorithm::Q, 0).is_err());
    }
}
