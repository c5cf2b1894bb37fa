use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::dependence::{detect_dependence, DependenceReport, DependenceThresholds};
use super::evaluate::evaluate;
use super::metrics::{EvalSummary, RtaMode};
use super::spec::{AlgoSpec, ExperimentSpec};
use crate::agents::{Algorithm, Policy, PpoAgent, PpoBuffer, PpoRecord, SacAgent, SacRecord};
use crate::env::{EnvKind, MAX_STATE_DIM};
use crate::error::{ConfigError, LearnerError};
use crate::rng::{self, StreamRng};
use crate::rta::{make_filter, Filter, FilterKind};
use crate::safety::SafetySpec;
use crate::trainconfig::{rewrite, ConfigKind, Rewritten};

/// Safety bookkeeping of the training interaction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingCounters {
    pub steps: u64,
    pub episodes: u64,
    pub interventions: u64,
    /// Steps that ended outside the admissible set.
    pub violations: u64,
    pub violating_episodes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Zero-based index of the epoch just finished.
    pub epoch: usize,
    /// Training counters at the end of the epoch.
    pub training: TrainingCounters,
    pub on: EvalSummary,
    pub off: EvalSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub env: EnvKind,
    pub filter: FilterKind,
    pub config: ConfigKind,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub training: TrainingCounters,
    pub final_on: Option<EvalSummary>,
    pub final_off: Option<EvalSummary>,
    pub dependence: Option<DependenceReport>,
    /// Set when the learner aborted; curves up to that point are kept.
    pub failure: Option<String>,
}

impl RunResult {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// Trained learner, for checkpoints.
#[derive(Debug, Clone)]
pub enum TrainedAgent {
    Ppo(PpoAgent),
    Sac(SacAgent),
}

impl TrainedAgent {
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            TrainedAgent::Ppo(a) => a.tensors(),
            TrainedAgent::Sac(a) => a.tensors(),
        }
    }

    pub fn policy(&self) -> &dyn Policy {
        match self {
            TrainedAgent::Ppo(a) => a,
            TrainedAgent::Sac(a) => a,
        }
    }
}

pub struct TrainOutput {
    pub result: RunResult,
    pub agent: TrainedAgent,
}

/// Called after every epoch that produced a record.
pub type Observer<'a> = &'a mut dyn FnMut(&EpochRecord);

/// Trains one seed of `spec` and evaluates it.
pub fn train(spec: &ExperimentSpec, seed: u64) -> Result<TrainOutput, ConfigError> {
    train_observed(spec, seed, &mut |_| {})
}

pub fn train_observed(spec: &ExperimentSpec, seed: u64, observer: Observer<'_>) -> Result<TrainOutput, ConfigError> {
    spec.validate()?;
    match spec.env {
        EnvKind::Pendulum => Run::new(spec, seed, spec.pendulum_env())?.go(observer),
        EnvKind::Docking2d | EnvKind::Docking3d => Run::new(spec, seed, spec.docking_env())?.go(observer),
    }
}

struct Run<'a, E> {
    spec: &'a ExperimentSpec,
    seed: u64,
    env: E,
    train_filter: Filter,
    eval_filter: Filter,
    obs_scale: Vec<f64>,
    counters: TrainingCounters,
    init_rng: StreamRng,
    policy_rng: StreamRng,
    epochs: Vec<EpochRecord>,
}

/// Live episode state of the training loop.
struct Cursor<S> {
    state: S,
    t: usize,
    violated: bool,
}

impl<'a, E: SafetySpec> Run<'a, E> {
    fn new(spec: &'a ExperimentSpec, seed: u64, env: E) -> Result<Self, ConfigError> {
        let train_filter = match spec.training_filter() {
            FilterKind::None => Filter::none(),
            k => make_filter(k, &env, &spec.filter_params)?,
        };
        let eval_filter = match spec.filter {
            FilterKind::None => Filter::none(),
            k => make_filter(k, &env, &spec.filter_params)?,
        };
        let mut obs_scale = vec![0.0; env.obs_dim()];
        env.observation_scale(&mut obs_scale);
        Ok(Self {
            spec,
            seed,
            env,
            train_filter,
            eval_filter,
            obs_scale,
            counters: TrainingCounters::default(),
            init_rng: rng::stream(seed, rng::TRAIN_INIT),
            policy_rng: rng::stream(seed, rng::TRAIN_POLICY),
            epochs: Vec::new(),
        })
    }

    fn go(mut self, observer: Observer<'_>) -> Result<TrainOutput, ConfigError> {
        let mut net_rng = rng::stream(self.seed, rng::NET_INIT);
        let (act_dim, limit) = (self.env.action_dim(), self.env.action_bound());
        let (agent, failure) = match &self.spec.algorithm {
            AlgoSpec::Ppo(hp) => {
                let mut agent = PpoAgent::new(self.obs_scale.clone(), act_dim, limit, hp.clone(), &mut net_rng);
                let failure = self.ppo(&mut agent, observer).err();
                (TrainedAgent::Ppo(agent), failure)
            }
            AlgoSpec::Sac(hp) => {
                let mut agent = SacAgent::new(self.obs_scale.clone(), act_dim, limit, hp.clone(), &mut net_rng);
                let failure = self.sac(&mut agent, observer).err();
                (TrainedAgent::Sac(agent), failure)
            }
        };
        let mut result = RunResult {
            env: self.spec.env,
            filter: self.spec.filter,
            config: self.spec.config,
            algorithm: self.spec.algorithm.algorithm(),
            seed: self.seed,
            epochs: self.epochs.clone(),
            training: self.counters,
            final_on: None,
            final_off: None,
            dependence: None,
            failure: failure.map(|e| format!("{e}")),
        };
        if !result.failed() {
            let (on, off) = self.eval_both(agent.policy(), rng::FINAL_EVAL, self.spec.eval_episodes_final);
            result.dependence = Some(detect_dependence(&on, &off, &DependenceThresholds::default()));
            result.final_on = Some(on);
            result.final_off = Some(off);
        }
        Ok(TrainOutput { result, agent })
    }

    /// Both modes start from the same initial conditions.
    fn eval_both(&self, policy: &dyn Policy, stream: u64, episodes: usize) -> (EvalSummary, EvalSummary) {
        let base = rng::stream(self.seed, stream);
        let (_, on) = evaluate(policy, &self.env, &self.eval_filter, RtaMode::On, episodes, &mut base.clone());
        let (_, off) = evaluate(policy, &self.env, &self.eval_filter, RtaMode::Off, episodes, &mut base.clone());
        (on, off)
    }

    fn end_epoch(&mut self, epoch: usize, policy: &dyn Policy, observer: &mut dyn FnMut(&EpochRecord)) {
        if (epoch + 1) % self.spec.eval_every != 0 {
            return;
        }
        let (on, off) = self.eval_both(policy, rng::INTERIM_EVAL, self.spec.eval_episodes_interim);
        let rec = EpochRecord {
            epoch,
            training: self.counters,
            on,
            off,
        };
        observer(&rec);
        self.epochs.push(rec);
    }

    fn reset(&mut self) -> Cursor<E::State> {
        Cursor {
            state: self.env.sample_initial_state(&mut self.init_rng),
            t: 0,
            violated: false,
        }
    }

    fn observe(&self, s: &E::State) -> Vec<f64> {
        let mut o = [0.0; MAX_STATE_DIM];
        self.env.observe(s, &mut o[..self.env.obs_dim()]);
        o[..self.env.obs_dim()].to_vec()
    }

    /// Filter, step and rewrite one desired action. Returns the stored
    /// record pieces and the environment outcome.
    fn interact(&mut self, cur: &mut Cursor<E::State>, desired: &crate::env::Action) -> Interaction {
        let decision = self.train_filter.apply(&self.env, &cur.state, desired);
        let out = self.env.step(&cur.state, &decision.actuated, cur.t);
        let stored = rewrite(
            self.spec.config,
            desired,
            out.reward,
            &out.safety,
            &decision,
            out.safety_violated,
            self.env.punishment(),
        );
        self.counters.steps += 1;
        if decision.intervened {
            self.counters.interventions += 1;
        }
        if out.safety_violated {
            self.counters.violations += 1;
            if !cur.violated {
                self.counters.violating_episodes += 1;
                cur.violated = true;
            }
        }
        cur.t += 1;
        cur.state = out.next_state;
        if out.terminal.is_done() {
            self.counters.episodes += 1;
        }
        Interaction {
            stored,
            done: out.terminal.is_done(),
            absorbing: out.terminal.is_absorbing(),
        }
    }

    fn ppo(&mut self, agent: &mut PpoAgent, observer: Observer<'_>) -> Result<(), LearnerError> {
        let hp = agent.hp.clone();
        let mut buf = PpoBuffer::new(self.env.obs_dim(), self.env.action_dim(), hp.gamma, hp.gae_lambda);
        for epoch in 0..hp.epochs {
            // Every epoch collects fresh episodes; a path cut by the epoch
            // boundary bootstraps from the critic.
            let mut cur = self.reset();
            for t in 0..hp.epoch_length {
                let obs = self.observe(&cur.state);
                let step = agent.step(&obs, &mut self.policy_rng);
                let it = self.interact(&mut cur, &step.action);
                let log_prob = if it.stored.relabelled {
                    agent.log_prob(&obs, &it.stored.action)
                } else {
                    step.log_prob
                };
                buf.store(&PpoRecord {
                    obs,
                    action: it.stored.action,
                    reward: it.stored.reward,
                    value: step.value,
                    log_prob,
                });
                let last = t + 1 == hp.epoch_length;
                if it.done || last {
                    let v = if it.absorbing { 0.0 } else { agent.value(&self.observe(&cur.state)) };
                    buf.finish_path(v);
                    if it.done && !last {
                        cur = self.reset();
                    }
                }
            }
            let res = agent.update(&buf);
            buf.clear();
            res?;
            self.end_epoch(epoch, &*agent, &mut *observer);
        }
        Ok(())
    }

    fn sac(&mut self, agent: &mut SacAgent, observer: Observer<'_>) -> Result<(), LearnerError> {
        let hp = agent.hp.clone();
        let mut cur = self.reset();
        for epoch in 0..hp.epochs {
            for _ in 0..hp.epoch_length {
                let obs = self.observe(&cur.state);
                let a = agent.step(&obs, &mut self.policy_rng);
                let it = self.interact(&mut cur, &a);
                let next_obs = self.observe(&cur.state);
                agent.store(SacRecord {
                    obs,
                    action: it.stored.action,
                    reward: it.stored.reward,
                    next_obs,
                    done: it.absorbing,
                });
                if agent.ready() {
                    agent.update(&mut self.policy_rng)?;
                }
                if it.done {
                    cur = self.reset();
                }
            }
            self.end_epoch(epoch, &*agent, &mut *observer);
        }
        Ok(())
    }
}

struct Interaction {
    stored: Rewritten,
    done: bool,
    absorbing: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(config: ConfigKind, algorithm: Algorithm, epochs: usize) -> ExperimentSpec {
        let mut s = ExperimentSpec::new(EnvKind::Pendulum, FilterKind::ImplicitSimplex, config, algorithm);
        s.eval_episodes_interim = 2;
        s.eval_episodes_final = 3;
        match &mut s.algorithm {
            AlgoSpec::Ppo(h) => {
                h.epochs = epochs;
                h.epoch_length = 300;
                h.hidden = vec![16, 16];
                h.updates_per_epoch = 5;
            }
            AlgoSpec::Sac(h) => {
                h.epochs = epochs;
                h.epoch_length = 150;
                h.hidden = vec![16, 16];
                h.minibatch_size = 32;
            }
        }
        s
    }

    #[test]
    fn zero_epochs_only_evaluates() {
        let out = train(&small(ConfigKind::Baseline, Algorithm::Ppo, 0), 7).unwrap();
        assert!(out.result.epochs.is_empty());
        assert_eq!(out.result.training, TrainingCounters::default());
        assert_eq!(out.result.final_on.unwrap().episodes, 3);
        assert!(out.result.dependence.is_some());
    }

    #[test]
    fn same_seed_same_result() {
        for algo in [Algorithm::Ppo, Algorithm::Sac] {
            let s = small(ConfigKind::RtaCorrectedAction, algo, 2);
            let a = train(&s, 11).unwrap();
            let b = train(&s, 11).unwrap();
            assert_eq!(a.result, b.result);
            assert_eq!(a.agent.tensors(), b.agent.tensors());
        }
    }

    #[test]
    fn rta_training_on_pendulum_never_violates() {
        for config in [ConfigKind::RtaNoPunishment, ConfigKind::RtaPunishment, ConfigKind::RtaCorrectedAction] {
            for algo in [Algorithm::Ppo, Algorithm::Sac] {
                let r = train(&small(config, algo, 2), 3).unwrap().result;
                assert_eq!(r.training.violations, 0, "{config} {algo}");
                assert!(r.training.interventions > 0 || r.training.steps > 0);
                for e in &r.epochs {
                    assert_eq!(e.on.violations.mean, 0.0);
                }
            }
        }
    }

    #[test]
    fn eval_episode_count_does_not_touch_training() {
        let mut s = small(ConfigKind::RtaPunishment, Algorithm::Ppo, 2);
        let a = train(&s, 5).unwrap();
        s.eval_episodes_interim = 5;
        s.eval_episodes_final = 1;
        let b = train(&s, 5).unwrap();
        assert_eq!(a.agent.tensors(), b.agent.tensors());
        assert_eq!(a.result.training, b.result.training);
    }

    #[test]
    fn evaluation_leaves_parameters_alone() {
        let out = train(&small(ConfigKind::Baseline, Algorithm::Sac, 1), 2).unwrap();
        let before: Vec<Vec<f64>> = out.agent.tensors().iter().map(|(_, t)| t.to_vec()).collect();
        let env = crate::env::Pendulum::default();
        let mut r = rng::stream(1, 1);
        let _ = evaluate(out.agent.policy(), &env, &Filter::none(), RtaMode::Off, 3, &mut r);
        let after: Vec<Vec<f64>> = out.agent.tensors().iter().map(|(_, t)| t.to_vec()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let s = ExperimentSpec::new(EnvKind::Pendulum, FilterKind::ExplicitAsif, ConfigKind::Baseline, Algorithm::Ppo);
        assert!(train(&s, 1).is_err());
    }
}
