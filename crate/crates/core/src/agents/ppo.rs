//! Clipped-surrogate PPO with a state-independent log-std.
//!
//! The Gaussian lives in actuator-normalised units (`action / limit`), so the
//! initial spread is comparable across plants.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::dist::{gaussian_log_prob, gaussian_log_prob_grad};
use super::{all_finite, Activation, Adam, Mlp, Policy, PpoHyperparams, PpoRecord};
use crate::env::{Action, MAX_ACTION_DIM};
use crate::error::LearnerError;
use crate::math;

/// `adv_t = sum_k (gamma lambda)^k delta_{t+k}` and rewards-to-go, for one
/// path whose tail is bootstrapped with `last_value`.
pub fn gae(rewards: &[f64], values: &[f64], last_value: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    let mut adv = vec![0.0; n];
    let mut ret = vec![0.0; n];
    let mut running_adv = 0.0;
    let mut running_ret = last_value;
    for t in (0..n).rev() {
        let next_v = if t + 1 < n { values[t + 1] } else { last_value };
        let delta = rewards[t] + gamma * next_v - values[t];
        running_adv = delta + gamma * lambda * running_adv;
        running_ret = rewards[t] + gamma * running_ret;
        adv[t] = running_adv;
        ret[t] = running_ret;
    }
    (adv, ret)
}

/// On-policy storage for one epoch.
#[derive(Debug, Clone)]
pub struct PpoBuffer {
    obs_dim: usize,
    act_dim: usize,
    gamma: f64,
    lambda: f64,
    obs: Vec<f64>,
    act: Vec<f64>,
    rew: Vec<f64>,
    val: Vec<f64>,
    logp: Vec<f64>,
    adv: Vec<f64>,
    ret: Vec<f64>,
    path_start: usize,
}

impl PpoBuffer {
    pub fn new(obs_dim: usize, act_dim: usize, gamma: f64, lambda: f64) -> Self {
        Self {
            obs_dim,
            act_dim,
            gamma,
            lambda,
            obs: Vec::new(),
            act: Vec::new(),
            rew: Vec::new(),
            val: Vec::new(),
            logp: Vec::new(),
            adv: Vec::new(),
            ret: Vec::new(),
            path_start: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.rew.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rew.is_empty()
    }

    pub fn clear(&mut self) {
        for v in [
            &mut self.obs,
            &mut self.act,
            &mut self.rew,
            &mut self.val,
            &mut self.logp,
            &mut self.adv,
            &mut self.ret,
        ] {
            v.clear();
        }
        self.path_start = 0;
    }

    pub fn store(&mut self, r: &PpoRecord) {
        assert_eq!(r.obs.len(), self.obs_dim);
        self.obs.extend_from_slice(&r.obs);
        self.act.extend_from_slice(&r.action[..self.act_dim]);
        self.rew.push(r.reward);
        self.val.push(r.value);
        self.logp.push(r.log_prob);
    }

    /// Closes the current path. `last_value` is 0 for absorbing terminals and
    /// `V(s_T)` for timeouts and epoch cuts.
    pub fn finish_path(&mut self, last_value: f64) {
        let range = self.path_start..self.len();
        let (adv, ret) = gae(&self.rew[range.clone()], &self.val[range], last_value, self.gamma, self.lambda);
        self.adv.extend(adv);
        self.ret.extend(ret);
        self.path_start = self.len();
    }

    pub fn advantages(&self) -> &[f64] {
        &self.adv
    }

    pub fn returns(&self) -> &[f64] {
        &self.ret
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PpoDiagnostics {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub actor_steps: usize,
    pub stopped_early: bool,
}

/// One update batch in network units.
pub struct PpoBatch<'a> {
    /// `n x obs_dim`, already scaled.
    pub obs: &'a [f64],
    /// `n x act_dim`, normalised by the actuator limit.
    pub actions: &'a [f64],
    pub advantages: &'a [f64],
    pub logp_old: &'a [f64],
}

impl PpoBatch<'_> {
    fn len(&self) -> usize {
        self.advantages.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorLoss {
    pub loss: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// Actor parameters followed by the log-std entries.
    pub grad: Vec<f64>,
}

/// `-mean(min(r A, clip(r, 1 - eps, 1 + eps) A))` and its gradient.
pub fn ppo_actor_loss(actor: &Mlp, log_std: &[f64], batch: &PpoBatch<'_>, clip: f64) -> ActorLoss {
    let n = batch.len();
    let k = log_std.len();
    let cache = actor.forward(batch.obs, n);
    let mu = cache.output();
    let mut d_mu = vec![0.0; n * k];
    let mut d_ls = vec![0.0; k];
    let (mut loss, mut kl, mut clipped) = (0.0, 0.0, 0usize);
    let inv_n = 1.0 / n as f64;
    for i in 0..n {
        let a = &batch.actions[i * k..(i + 1) * k];
        let m = &mu[i * k..(i + 1) * k];
        let logp = gaussian_log_prob(a, m, log_std);
        let ratio = math::exp(logp - batch.logp_old[i]);
        let adv = batch.advantages[i];
        let clipped_ratio = ratio.clamp(1.0 - clip, 1.0 + clip);
        loss -= inv_n * (ratio * adv).min(clipped_ratio * adv);
        kl += inv_n * (batch.logp_old[i] - logp);
        if (ratio - clipped_ratio).abs() > 0.0 {
            clipped += 1;
        }
        // The unclipped branch is active unless the ratio has left the trust
        // region on the side the advantage pushes towards.
        let active = if adv >= 0.0 { ratio <= 1.0 + clip } else { ratio >= 1.0 - clip };
        if active {
            let w = -inv_n * adv * ratio;
            gaussian_log_prob_grad(a, m, log_std, w, &mut d_mu[i * k..(i + 1) * k], &mut d_ls);
        }
    }
    let mut grad = vec![0.0; actor.num_params() + k];
    actor.backward(&cache, &d_mu, Some(&mut grad[..actor.num_params()]), None);
    grad[actor.num_params()..].copy_from_slice(&d_ls);
    ActorLoss {
        loss,
        approx_kl: kl,
        clip_fraction: clipped as f64 * inv_n,
        grad,
    }
}

/// `mean((V(s) - R)^2)` and its gradient.
pub fn ppo_critic_loss(critic: &Mlp, obs: &[f64], returns: &[f64]) -> (f64, Vec<f64>) {
    let n = returns.len();
    let cache = critic.forward(obs, n);
    let v = cache.output();
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut up = vec![0.0; n];
    for i in 0..n {
        let e = v[i] - returns[i];
        loss += inv_n * e * e;
        up[i] = 2.0 * inv_n * e;
    }
    let mut grad = vec![0.0; critic.num_params()];
    critic.backward(&cache, &up, Some(&mut grad), None);
    (loss, grad)
}

/// Output of one stochastic policy step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpoStep {
    /// Raw Gaussian sample in actuator units (not clipped).
    pub action: Action,
    pub log_prob: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct PpoAgent {
    pub hp: PpoHyperparams,
    act_dim: usize,
    act_limit: f64,
    obs_scale: Vec<f64>,
    actor: Mlp,
    critic: Mlp,
    log_std: Vec<f64>,
    actor_opt: Adam,
    critic_opt: Adam,
}

impl PpoAgent {
    pub fn new<R: Rng + ?Sized>(
        obs_scale: Vec<f64>,
        act_dim: usize,
        act_limit: f64,
        hp: PpoHyperparams,
        rng: &mut R,
    ) -> Self {
        let obs_dim = obs_scale.len();
        let sizes = |out: usize| {
            let mut s = vec![obs_dim];
            s.extend_from_slice(&hp.hidden);
            s.push(out);
            s
        };
        let mut actor = Mlp::new(&sizes(act_dim), Activation::Tanh, Activation::Identity);
        let mut critic = Mlp::new(&sizes(1), Activation::Tanh, Activation::Identity);
        actor.init_orthogonal(rng, math::sqrt(2.0), 0.01);
        critic.init_orthogonal(rng, math::sqrt(2.0), 1.0);
        let actor_opt = Adam::new(actor.num_params() + act_dim, hp.actor_lr);
        let critic_opt = Adam::new(critic.num_params(), hp.critic_lr);
        Self {
            log_std: vec![hp.log_std_init; act_dim],
            hp,
            act_dim,
            act_limit,
            obs_scale,
            actor,
            critic,
            actor_opt,
            critic_opt,
        }
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critic(&self) -> &Mlp {
        &self.critic
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    /// Named parameter tensors, for checkpoints and hashing.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("actor", self.actor.params()),
            ("critic", self.critic.params()),
            ("log_std", &self.log_std),
        ]
    }

    pub fn load_tensors(&mut self, actor: &[f64], critic: &[f64], log_std: &[f64]) {
        self.actor.params_mut().copy_from_slice(actor);
        self.critic.params_mut().copy_from_slice(critic);
        self.log_std.copy_from_slice(log_std);
    }

    fn scaled(&self, obs: &[f64]) -> Vec<f64> {
        obs.iter().zip(&self.obs_scale).map(|(o, s)| o * s).collect()
    }

    fn to_action(&self, normalised: &[f64]) -> Action {
        let mut a = [0.0; MAX_ACTION_DIM];
        for (o, x) in a.iter_mut().zip(normalised) {
            *o = x * self.act_limit;
        }
        a
    }

    fn normalise(&self, action: &Action) -> Vec<f64> {
        action[..self.act_dim].iter().map(|a| a / self.act_limit).collect()
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.critic.predict(&self.scaled(obs))[0]
    }

    /// Log-density of `action` (actuator units) in normalised coordinates.
    pub fn log_prob(&self, obs: &[f64], action: &Action) -> f64 {
        let mu = self.actor.predict(&self.scaled(obs));
        gaussian_log_prob(&self.normalise(action), &mu, &self.log_std)
    }

    pub fn step<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> PpoStep {
        let x = self.scaled(obs);
        let mu = self.actor.predict(&x);
        let sample: Vec<f64> = mu
            .iter()
            .zip(&self.log_std)
            .map(|(m, ls)| m + math::exp(*ls) * rng.sample::<f64, _>(StandardNormal))
            .collect();
        PpoStep {
            action: self.to_action(&sample),
            log_prob: gaussian_log_prob(&sample, &mu, &self.log_std),
            value: self.critic.predict(&x)[0],
        }
    }

    pub fn update(&mut self, buf: &PpoBuffer) -> Result<PpoDiagnostics, LearnerError> {
        let n = buf.len();
        assert_eq!(buf.adv.len(), n, "finish_path must close every path before update");
        let mut diag = PpoDiagnostics::default();
        if n == 0 {
            return Ok(diag);
        }
        let obs: Vec<f64> = buf
            .obs
            .chunks_exact(buf.obs_dim)
            .flat_map(|o| self.scaled(o))
            .collect();
        let actions: Vec<f64> = buf.act.iter().map(|a| a / self.act_limit).collect();
        let mut adv = buf.adv.clone();
        if self.hp.normalize_advantages && n > 1 {
            let mean = adv.iter().sum::<f64>() / n as f64;
            let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
            let std = math::sqrt(var);
            adv.iter_mut().for_each(|a| *a = (*a - mean) / (std + 1e-8));
        }
        let batch = PpoBatch {
            obs: &obs,
            actions: &actions,
            advantages: &adv,
            logp_old: &buf.logp,
        };
        let target = self.hp.target_kl;
        let mut saved: Option<(Mlp, Vec<f64>, Adam)> = None;
        let mut last_kl = 0.0;
        for i in 0..=self.hp.updates_per_epoch {
            let head = ppo_actor_loss(&self.actor, &self.log_std, &batch, self.hp.clip_ratio);
            if !head.loss.is_finite() || !all_finite(&head.grad) {
                return Err(LearnerError::NonFinite {
                    what: "actor loss",
                    phase: "ppo update",
                });
            }
            if i > 0 && head.approx_kl > target {
                diag.stopped_early = i < self.hp.updates_per_epoch;
                if head.approx_kl > 1.5 * target {
                    // The last step overshot: undo it.
                    let (actor, log_std, opt) = saved.take().expect("a step was taken");
                    self.actor = actor;
                    self.log_std = log_std;
                    self.actor_opt = opt;
                    diag.actor_steps = i - 1;
                    diag.approx_kl = last_kl;
                    diag.stopped_early = true;
                } else {
                    diag.actor_steps = i;
                    diag.approx_kl = head.approx_kl;
                }
                break;
            }
            diag.actor_loss = head.loss;
            diag.approx_kl = head.approx_kl;
            diag.clip_fraction = head.clip_fraction;
            diag.actor_steps = i;
            last_kl = head.approx_kl;
            if i == self.hp.updates_per_epoch {
                break;
            }
            saved = Some((self.actor.clone(), self.log_std.clone(), self.actor_opt.clone()));
            let mut params = self.actor.params().to_vec();
            params.extend_from_slice(&self.log_std);
            self.actor_opt.step(&mut params, &head.grad);
            let split = self.actor.num_params();
            self.actor.params_mut().copy_from_slice(&params[..split]);
            self.log_std.copy_from_slice(&params[split..]);
        }
        for _ in 0..self.hp.updates_per_epoch {
            let (loss, grad) = ppo_critic_loss(&self.critic, &obs, &buf.ret);
            if !loss.is_finite() || !all_finite(&grad) {
                return Err(LearnerError::NonFinite {
                    what: "critic loss",
                    phase: "ppo update",
                });
            }
            diag.critic_loss = loss;
            self.critic_opt.step(self.critic.params_mut(), &grad);
        }
        Ok(diag)
    }
}

impl Policy for PpoAgent {
    fn mean_action(&self, obs: &[f64]) -> Action {
        let mu = self.actor.predict(&self.scaled(obs));
        self.to_action(&mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::mlp::tests::{numeric_gradient, rel_error};
    use crate::env::EnvKind;

    #[test]
    fn gae_matches_direct_summation() {
        let r = [1.0, -0.5, 2.0, 0.25, 3.0];
        let v = [0.3, 0.1, -0.2, 0.5, 0.9];
        let last = 0.7;
        let (g, l) = (0.97, 0.9);
        let (adv, ret) = gae(&r, &v, last, g, l);
        let vals = |t: usize| if t < 5 { v[t] } else { last };
        for t in 0..5 {
            let mut a = 0.0;
            let mut rt = 0.0;
            for k in t..5 {
                let delta = r[k] + g * vals(k + 1) - v[k];
                a += (g * l).powi((k - t) as i32) * delta;
                rt += g.powi((k - t) as i32) * r[k];
            }
            rt += g.powi((5 - t) as i32) * last;
            assert!((adv[t] - a).abs() < 1e-12);
            assert!((ret[t] - rt).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_discount_advantage_is_reward_minus_value() {
        let r = [1.0, 2.0, 3.0];
        let v = [0.5, 2.5, -1.0];
        let (adv, ret) = gae(&r, &v, 9.0, 0.0, 0.0);
        assert_eq!(adv, vec![0.5, -0.5, 4.0]);
        assert_eq!(ret, r.to_vec());
    }

    fn agent(seed: u64, obs_dim: usize, act_dim: usize) -> PpoAgent {
        let mut hp = PpoHyperparams::for_env(EnvKind::Pendulum);
        hp.hidden = vec![8, 8];
        let mut rng = crate::rng::stream(seed, 0);
        PpoAgent::new(vec![1.0; obs_dim], act_dim, 2.0, hp, &mut rng)
    }

    #[test]
    fn recorded_log_prob_is_self_consistent() {
        let a = agent(1, 3, 2);
        let mut rng = crate::rng::stream(1, 1);
        let obs = [0.2, -0.1, 0.4];
        let s = a.step(&obs, &mut rng);
        assert!((a.log_prob(&obs, &s.action) - s.log_prob).abs() < 1e-12);
        assert_eq!(a.mean_action(&obs), a.mean_action(&obs));
    }

    #[test]
    fn zero_advantages_leave_the_actor_unchanged() {
        let mut a = agent(2, 3, 1);
        let mut buf = PpoBuffer::new(3, 1, 0.0, 0.0);
        let mut rng = crate::rng::stream(2, 1);
        for i in 0..16 {
            let obs = vec![i as f64 * 0.1, 0.5, -0.2];
            let s = a.step(&obs, &mut rng);
            // reward equal to the value gives zero advantage at gamma = 0
            buf.store(&PpoRecord {
                obs,
                action: s.action,
                reward: s.value,
                value: s.value,
                log_prob: s.log_prob,
            });
        }
        buf.finish_path(0.0);
        a.hp.normalize_advantages = false;
        let before = (a.actor.clone(), a.log_std.clone());
        a.update(&buf).unwrap();
        assert_eq!(before.0, a.actor);
        assert_eq!(before.1, a.log_std);
    }

    fn random_batch(seed: u64, n: usize, obs_dim: usize, act_dim: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rng = crate::rng::stream(seed, 3);
        let obs = (0..n * obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let act = (0..n * act_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let adv = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let logp = (0..n).map(|_| rng.random_range(-3.0..0.0)).collect();
        (obs, act, adv, logp)
    }

    #[test]
    fn actor_and_critic_gradients_match_differences() {
        for seed in 0..5 {
            let a = agent(10 + seed, 4, 2);
            let (obs, act, adv, _) = random_batch(seed, 12, 4, 2);
            // Old log-probs near the current ones keep most ratios unclipped.
            let mu = a.actor.forward(&obs, 12);
            let mut rng = crate::rng::stream(seed, 4);
            let logp: Vec<f64> = (0..12)
                .map(|i| {
                    gaussian_log_prob(&act[i * 2..i * 2 + 2], &mu.output()[i * 2..i * 2 + 2], &a.log_std)
                        + rng.random_range(-0.3..0.3)
                })
                .collect();
            let batch = PpoBatch {
                obs: &obs,
                actions: &act,
                advantages: &adv,
                logp_old: &logp,
            };
            let head = ppo_actor_loss(&a.actor, &a.log_std, &batch, 0.2);
            let mut probe = a.actor.clone();
            let split = probe.num_params();
            let mut theta = a.actor.params().to_vec();
            theta.extend_from_slice(&a.log_std);
            let fd = numeric_gradient(&theta, 1e-6, |p| {
                probe.params_mut().copy_from_slice(&p[..split]);
                ppo_actor_loss(&probe, &p[split..], &batch, 0.2).loss
            });
            assert!(rel_error(&head.grad, &fd) < 1e-4, "{}", rel_error(&head.grad, &fd));

            let ret: Vec<f64> = adv.iter().map(|x| x * 3.0).collect();
            let (_, g) = ppo_critic_loss(&a.critic, &obs, &ret);
            let mut probe = a.critic.clone();
            let fd = numeric_gradient(a.critic.params(), 1e-6, |p| {
                probe.params_mut().copy_from_slice(p);
                ppo_critic_loss(&probe, &obs, &ret).0
            });
            assert!(rel_error(&g, &fd) < 1e-4);
        }
    }

    #[test]
    fn early_stop_keeps_kl_within_bound() {
        let mut a = agent(3, 3, 1);
        a.hp.actor_lr = 0.05;
        a.actor_opt.lr = 0.05;
        let mut buf = PpoBuffer::new(3, 1, 0.0, 0.0);
        let mut rng = crate::rng::stream(3, 1);
        for i in 0..64 {
            let obs = vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos(), 0.1];
            let s = a.step(&obs, &mut rng);
            let reward = s.action[0];
            buf.store(&PpoRecord {
                obs,
                action: s.action,
                reward,
                value: s.value,
                log_prob: s.log_prob,
            });
        }
        buf.finish_path(0.0);
        let d = a.update(&buf).unwrap();
        assert!(d.approx_kl <= 1.5 * a.hp.target_kl, "{d:?}");
        assert!(d.stopped_early);
        // The reported KL is the KL of the parameters that were kept.
        let mut check = 0.0;
        for i in 0..buf.len() {
            let obs = &buf.obs[i * 3..i * 3 + 3];
            let act = [buf.act[i], 0.0, 0.0];
            check += (buf.logp[i] - a.log_prob(obs, &act)) / buf.len() as f64;
        }
        assert!((check - d.approx_kl).abs() < 1e-9);
    }
}
