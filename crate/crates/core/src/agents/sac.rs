//! Soft actor-critic with twin Q networks, a fixed entropy coefficient and a
//! tanh-squashed Gaussian actor.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::dist::log_one_minus_tanh_sq;
use super::{all_finite, Activation, Adam, Mlp, Policy, ReplayBuffer, SacHyperparams, SacRecord};
use crate::env::{Action, MAX_ACTION_DIM};
use crate::error::LearnerError;
use crate::math::{self, LN_2PI};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Reparameterised squashed-Gaussian samples for a batch.
struct Squashed {
    /// `tanh(u)`, i.e. the action divided by the limit.
    t: Vec<f64>,
    logp: Vec<f64>,
    sigma: Vec<f64>,
    /// Whether each log-std was inside the clamp (has a gradient).
    free: Vec<bool>,
}

fn squash(head: &[f64], eps: &[f64], batch: usize, k: usize, limit: f64) -> Squashed {
    let mut out = Squashed {
        t: vec![0.0; batch * k],
        logp: vec![0.0; batch],
        sigma: vec![0.0; batch * k],
        free: vec![false; batch * k],
    };
    let ln_limit = math::ln(limit);
    for b in 0..batch {
        let row = &head[b * 2 * k..(b + 1) * 2 * k];
        for j in 0..k {
            let raw = row[k + j];
            let ls = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
            let sigma = math::exp(ls);
            let e = eps[b * k + j];
            let u = row[j] + sigma * e;
            let idx = b * k + j;
            out.t[idx] = math::tanh(u);
            out.sigma[idx] = sigma;
            out.free[idx] = raw > LOG_STD_MIN && raw < LOG_STD_MAX;
            out.logp[b] += -0.5 * e * e - ls - 0.5 * LN_2PI - log_one_minus_tanh_sq(u) - ln_limit;
        }
    }
    out
}

/// Rows `[obs | action / limit]` for a Q network.
fn critic_input(obs: &[f64], obs_dim: usize, t: &[f64], k: usize) -> Vec<f64> {
    let batch = obs.len() / obs_dim;
    let mut x = Vec::with_capacity(batch * (obs_dim + k));
    for b in 0..batch {
        x.extend_from_slice(&obs[b * obs_dim..(b + 1) * obs_dim]);
        x.extend_from_slice(&t[b * k..(b + 1) * k]);
    }
    x
}

/// Inputs for the SAC loss heads, in network units.
pub struct SacBatch<'a> {
    pub obs: &'a [f64],
    /// Stored actions divided by the actuator limit.
    pub actions: &'a [f64],
    pub rewards: &'a [f64],
    pub next_obs: &'a [f64],
    pub done: &'a [bool],
    /// Standard-normal noise for the next-state actions, `n x act_dim`.
    pub next_noise: &'a [f64],
}

pub struct SacNets<'a> {
    pub actor: &'a Mlp,
    pub q1: &'a Mlp,
    pub q2: &'a Mlp,
    pub q1_targ: &'a Mlp,
    pub q2_targ: &'a Mlp,
}

/// Entropy-regularised Bellman targets
/// `y = r + gamma (1 - d) (min_i Q_targ_i(s', a') - alpha log pi(a'|s'))`.
pub fn sac_targets(nets: &SacNets<'_>, batch: &SacBatch<'_>, gamma: f64, alpha: f64, limit: f64) -> Vec<f64> {
    let n = batch.rewards.len();
    let obs_dim = batch.obs.len() / n;
    let k = nets.actor.out_dim() / 2;
    let head = nets.actor.forward(batch.next_obs, n);
    let next = squash(head.output(), batch.next_noise, n, k, limit);
    let x = critic_input(batch.next_obs, obs_dim, &next.t, k);
    let q1 = nets.q1_targ.forward(&x, n);
    let q2 = nets.q2_targ.forward(&x, n);
    (0..n)
        .map(|b| {
            if batch.done[b] {
                batch.rewards[b]
            } else {
                let q = q1.output()[b].min(q2.output()[b]);
                batch.rewards[b] + gamma * (q - alpha * next.logp[b])
            }
        })
        .collect()
}

/// `mean((Q(s, a) - y)^2)` and its gradient for one Q network.
pub fn sac_critic_loss(q: &Mlp, obs: &[f64], actions: &[f64], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = targets.len();
    let obs_dim = obs.len() / n;
    let k = actions.len() / n;
    let x = critic_input(obs, obs_dim, actions, k);
    let cache = q.forward(&x, n);
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut up = vec![0.0; n];
    for b in 0..n {
        let e = cache.output()[b] - targets[b];
        loss += inv_n * e * e;
        up[b] = 2.0 * inv_n * e;
    }
    let mut grad = vec![0.0; q.num_params()];
    q.backward(&cache, &up, Some(&mut grad), None);
    (loss, grad)
}

/// `mean(alpha log pi(a|s) - min_i Q_i(s, a))` with `a` reparameterised by
/// `noise`; gradient with respect to the actor only.
pub fn sac_actor_loss(actor: &Mlp, q1: &Mlp, q2: &Mlp, obs: &[f64], noise: &[f64], alpha: f64, limit: f64) -> (f64, Vec<f64>) {
    let k = actor.out_dim() / 2;
    let n = noise.len() / k;
    let obs_dim = obs.len() / n;
    let cache = actor.forward(obs, n);
    let s = squash(cache.output(), noise, n, k, limit);
    let x = critic_input(obs, obs_dim, &s.t, k);
    let c1 = q1.forward(&x, n);
    let c2 = q2.forward(&x, n);
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut up1 = vec![0.0; n];
    let mut up2 = vec![0.0; n];
    for b in 0..n {
        let (v1, v2) = (c1.output()[b], c2.output()[b]);
        loss += inv_n * (alpha * s.logp[b] - v1.min(v2));
        if v1 <= v2 {
            up1[b] = 1.0;
        } else {
            up2[b] = 1.0;
        }
    }
    let width = obs_dim + k;
    let mut dx1 = vec![0.0; n * width];
    let mut dx2 = vec![0.0; n * width];
    q1.backward(&c1, &up1, None, Some(&mut dx1));
    q2.backward(&c2, &up2, None, Some(&mut dx2));
    let mut d_head = vec![0.0; n * 2 * k];
    for b in 0..n {
        for j in 0..k {
            let idx = b * k + j;
            let t = s.t[idx];
            let dq_dt = dx1[b * width + obs_dim + j] + dx2[b * width + obs_dim + j];
            // d/du of -ln(1 - tanh^2 u) is 2 tanh u.
            let d_u = inv_n * (alpha * 2.0 * t - dq_dt * (1.0 - t * t));
            d_head[b * 2 * k + j] = d_u;
            if s.free[idx] {
                d_head[b * 2 * k + k + j] = d_u * s.sigma[idx] * noise[idx] - inv_n * alpha;
            }
        }
    }
    let mut grad = vec![0.0; actor.num_params()];
    actor.backward(&cache, &d_head, Some(&mut grad), None);
    (loss, grad)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SacDiagnostics {
    pub critic_loss: f64,
    pub actor_loss: f64,
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    pub hp: SacHyperparams,
    act_dim: usize,
    act_limit: f64,
    obs_scale: Vec<f64>,
    actor: Mlp,
    q1: Mlp,
    q2: Mlp,
    q1_targ: Mlp,
    q2_targ: Mlp,
    actor_opt: Adam,
    q1_opt: Adam,
    q2_opt: Adam,
    replay: ReplayBuffer,
}

impl SacAgent {
    pub fn new<R: Rng + ?Sized>(
        obs_scale: Vec<f64>,
        act_dim: usize,
        act_limit: f64,
        hp: SacHyperparams,
        rng: &mut R,
    ) -> Self {
        let obs_dim = obs_scale.len();
        let sizes = |input: usize, out: usize| {
            let mut s = vec![input];
            s.extend_from_slice(&hp.hidden);
            s.push(out);
            s
        };
        // The mean half of the head is squashed by tanh when acting.
        let mut actor = Mlp::new(&sizes(obs_dim, 2 * act_dim), Activation::Relu, Activation::Identity);
        let mut q1 = Mlp::new(&sizes(obs_dim + act_dim, 1), Activation::Relu, hp.critic_output);
        let mut q2 = q1.clone();
        actor.init_orthogonal(rng, math::sqrt(2.0), 0.01);
        q1.init_orthogonal(rng, math::sqrt(2.0), 1.0);
        q2.init_orthogonal(rng, math::sqrt(2.0), 1.0);
        Self {
            act_dim,
            act_limit,
            obs_scale,
            actor_opt: Adam::new(actor.num_params(), hp.actor_lr),
            q1_opt: Adam::new(q1.num_params(), hp.critic_lr),
            q2_opt: Adam::new(q2.num_params(), hp.critic_lr),
            q1_targ: q1.clone(),
            q2_targ: q2.clone(),
            actor,
            q1,
            q2,
            replay: ReplayBuffer::new(hp.replay_size),
            hp,
        }
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("actor", self.actor.params()),
            ("q1", self.q1.params()),
            ("q2", self.q2.params()),
            ("q1_targ", self.q1_targ.params()),
            ("q2_targ", self.q2_targ.params()),
        ]
    }

    pub fn load_tensors(&mut self, tensors: &[(&str, &[f64])]) {
        for (name, data) in tensors {
            let net = match *name {
                "actor" => &mut self.actor,
                "q1" => &mut self.q1,
                "q2" => &mut self.q2,
                "q1_targ" => &mut self.q1_targ,
                "q2_targ" => &mut self.q2_targ,
                _ => continue,
            };
            net.params_mut().copy_from_slice(data);
        }
    }

    fn scaled(&self, obs: &[f64]) -> Vec<f64> {
        obs.iter().zip(&self.obs_scale).map(|(o, s)| o * s).collect()
    }

    fn to_action(&self, t: &[f64]) -> Action {
        let mut a = [0.0; MAX_ACTION_DIM];
        for (o, x) in a.iter_mut().zip(t) {
            *o = x * self.act_limit;
        }
        a
    }

    /// Stochastic action for exploration.
    pub fn step<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Action {
        let head = self.actor.predict(&self.scaled(obs));
        let eps: Vec<f64> = (0..self.act_dim).map(|_| rng.sample(StandardNormal)).collect();
        let s = squash(&head, &eps, 1, self.act_dim, self.act_limit);
        self.to_action(&s.t)
    }

    pub fn store(&mut self, record: SacRecord) {
        self.replay.push(record);
    }

    pub fn ready(&self) -> bool {
        self.replay.len() >= self.hp.minibatch_size.max(self.hp.update_after)
    }

    /// One twin-critic step, one actor step and a Polyak target update on a
    /// uniformly sampled minibatch.
    pub fn update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<SacDiagnostics, LearnerError> {
        let n = self.hp.minibatch_size;
        let k = self.act_dim;
        let idx = self.replay.sample_indices(rng, n);
        let mut obs = Vec::with_capacity(n * self.obs_scale.len());
        let mut next_obs = Vec::with_capacity(n * self.obs_scale.len());
        let mut actions = Vec::with_capacity(n * k);
        let mut rewards = Vec::with_capacity(n);
        let mut done = Vec::with_capacity(n);
        for &i in &idx {
            let r = self.replay.get(i);
            obs.extend(self.scaled(&r.obs));
            next_obs.extend(self.scaled(&r.next_obs));
            actions.extend(r.action[..k].iter().map(|a| a / self.act_limit));
            rewards.push(r.reward);
            done.push(r.done);
        }
        let next_noise: Vec<f64> = (0..n * k).map(|_| rng.sample(StandardNormal)).collect();
        let noise: Vec<f64> = (0..n * k).map(|_| rng.sample(StandardNormal)).collect();
        let batch = SacBatch {
            obs: &obs,
            actions: &actions,
            rewards: &rewards,
            next_obs: &next_obs,
            done: &done,
            next_noise: &next_noise,
        };
        let nets = SacNets {
            actor: &self.actor,
            q1: &self.q1,
            q2: &self.q2,
            q1_targ: &self.q1_targ,
            q2_targ: &self.q2_targ,
        };
        let y = sac_targets(&nets, &batch, self.hp.gamma, self.hp.alpha, self.act_limit);
        let (l1, g1) = sac_critic_loss(&self.q1, &obs, &actions, &y);
        let (l2, g2) = sac_critic_loss(&self.q2, &obs, &actions, &y);
        if !(l1 + l2).is_finite() || !all_finite(&g1) || !all_finite(&g2) {
            return Err(LearnerError::NonFinite {
                what: "critic loss",
                phase: "sac update",
            });
        }
        self.q1_opt.step(self.q1.params_mut(), &g1);
        self.q2_opt.step(self.q2.params_mut(), &g2);
        let (la, ga) = sac_actor_loss(&self.actor, &self.q1, &self.q2, &obs, &noise, self.hp.alpha, self.act_limit);
        if !la.is_finite() || !all_finite(&ga) {
            return Err(LearnerError::NonFinite {
                what: "actor loss",
                phase: "sac update",
            });
        }
        self.actor_opt.step(self.actor.params_mut(), &ga);
        self.q1_targ.polyak_from(&self.q1, self.hp.polyak);
        self.q2_targ.polyak_from(&self.q2, self.hp.polyak);
        Ok(SacDiagnostics {
            critic_loss: l1 + l2,
            actor_loss: la,
        })
    }
}

impl Policy for SacAgent {
    fn mean_action(&self, obs: &[f64]) -> Action {
        let head = self.actor.predict(&self.scaled(obs));
        let t: Vec<f64> = head[..self.act_dim].iter().map(|m| math::tanh(*m)).collect();
        self.to_action(&t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::mlp::tests::{numeric_gradient, rel_error};
    use crate::env::EnvKind;

    fn small_agent(seed: u64, critic_output: Activation) -> SacAgent {
        let mut hp = SacHyperparams::for_env(EnvKind::Docking2d);
        hp.hidden = vec![8, 8];
        hp.minibatch_size = 6;
        hp.critic_output = critic_output;
        let mut rng = crate::rng::stream(seed, 0);
        SacAgent::new(vec![1.0; 3], 2, 1.5, hp, &mut rng)
    }

    fn batch_data(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<bool>, Vec<f64>) {
        let mut rng = crate::rng::stream(seed, 5);
        let mut u = |len: usize, lo: f64, hi: f64| -> Vec<f64> { (0..len).map(|_| rng.random_range(lo..hi)).collect() };
        let obs = u(n * 3, -1.0, 1.0);
        let act = u(n * 2, -0.9, 0.9);
        let rew = u(n, -1.0, 1.0);
        let next = u(n * 3, -1.0, 1.0);
        let noise = u(n * 2, -2.0, 2.0);
        let done = (0..n).map(|i| i % 3 == 0).collect();
        (obs, act, rew, next, done, noise)
    }

    #[test]
    fn terminal_target_is_the_reward() {
        let a = small_agent(1, Activation::Relu);
        let (obs, act, rew, next, _, noise) = batch_data(1, 4);
        let done = vec![true; 4];
        let nets = SacNets {
            actor: &a.actor,
            q1: &a.q1,
            q2: &a.q2,
            q1_targ: &a.q1_targ,
            q2_targ: &a.q2_targ,
        };
        let batch = SacBatch {
            obs: &obs,
            actions: &act,
            rewards: &rew,
            next_obs: &next,
            done: &done,
            next_noise: &noise,
        };
        assert_eq!(sac_targets(&nets, &batch, 0.99, 0.2, 1.5), rew);
    }

    #[test]
    fn single_transition_target_by_hand() {
        let a = small_agent(2, Activation::Identity);
        let obs = [0.1, -0.2, 0.3];
        let next = [0.4, 0.5, -0.6];
        let eps = [0.3, -1.1];
        let nets = SacNets {
            actor: &a.actor,
            q1: &a.q1,
            q2: &a.q2,
            q1_targ: &a.q1_targ,
            q2_targ: &a.q2_targ,
        };
        let batch = SacBatch {
            obs: &obs,
            actions: &[0.2, 0.1],
            rewards: &[0.7],
            next_obs: &next,
            done: &[false],
            next_noise: &eps,
        };
        let y = sac_targets(&nets, &batch, 0.99, 0.2, 1.5)[0];
        // Scalar re-evaluation of the same quantities.
        let head = a.actor.predict(&next);
        let mut logp = 0.0;
        let mut t = [0.0; 2];
        for j in 0..2 {
            let ls = head[2 + j].clamp(-20.0, 2.0);
            let u = head[j] + ls.exp() * eps[j];
            t[j] = u.tanh();
            let normal = -0.5 * eps[j] * eps[j] - ls - 0.5 * (2.0 * core::f64::consts::PI).ln();
            logp += normal - (1.0 - t[j] * t[j]).ln() - 1.5f64.ln();
        }
        let x = [next[0], next[1], next[2], t[0], t[1]];
        let q = a.q1_targ.predict(&x)[0].min(a.q2_targ.predict(&x)[0]);
        let hand = 0.7 + 0.99 * (q - 0.2 * logp);
        assert!((y - hand).abs() < 1e-10, "{y} vs {hand}");
    }

    #[test]
    fn loss_head_gradients_match_differences() {
        for seed in 0..5 {
            for out in [Activation::Identity, Activation::Relu] {
                let a = small_agent(20 + seed, out);
                let n = 6;
                let (obs, act, _, _, _, noise) = batch_data(seed, n);
                let targets: Vec<f64> = (0..n).map(|i| i as f64 * 0.1 - 0.2).collect();
                let (_, g) = sac_critic_loss(&a.q1, &obs, &act, &targets);
                let mut probe = a.q1.clone();
                let fd = numeric_gradient(a.q1.params(), 1e-6, |p| {
                    probe.params_mut().copy_from_slice(p);
                    sac_critic_loss(&probe, &obs, &act, &targets).0
                });
                assert!(rel_error(&g, &fd) < 1e-4, "critic {}", rel_error(&g, &fd));

                let (_, g) = sac_actor_loss(&a.actor, &a.q1, &a.q2, &obs, &noise, 0.2, 1.5);
                let mut probe = a.actor.clone();
                let fd = numeric_gradient(a.actor.params(), 1e-6, |p| {
                    probe.params_mut().copy_from_slice(p);
                    sac_actor_loss(&probe, &a.q1, &a.q2, &obs, &noise, 0.2, 1.5).0
                });
                assert!(rel_error(&g, &fd) < 1e-4, "actor {}", rel_error(&g, &fd));
            }
        }
    }

    #[test]
    fn update_runs_and_targets_track_online_nets() {
        let mut a = small_agent(3, Activation::Identity);
        let mut rng = crate::rng::stream(3, 1);
        for i in 0..10 {
            let obs = vec![i as f64 * 0.1, 0.0, 1.0];
            let action = a.step(&obs, &mut rng);
            assert!(action[..2].iter().all(|x| x.abs() <= 1.5));
            a.store(SacRecord {
                obs,
                action,
                reward: 1.0,
                next_obs: vec![0.0, 0.1, 0.2],
                done: false,
            });
        }
        assert!(a.ready());
        let before = a.q1_targ.clone();
        a.update(&mut rng).unwrap();
        let moved: f64 = a
            .q1_targ
            .params()
            .iter()
            .zip(before.params())
            .map(|(x, y)| (x - y).abs())
            .sum();
        assert!(moved > 0.0);
    }
}
