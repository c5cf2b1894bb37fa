use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::mlp::Activation;
use crate::env::EnvKind;

/// PPO settings; `for_env` gives the published per-environment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpoHyperparams {
    pub epoch_length: usize,
    pub epochs: usize,
    pub gamma: f64,
    pub clip_ratio: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub updates_per_epoch: usize,
    pub target_kl: f64,
    pub gae_lambda: f64,
    pub max_episode_length: usize,
    pub hidden: Vec<usize>,
    pub log_std_init: f64,
    pub normalize_advantages: bool,
}

impl PpoHyperparams {
    pub fn for_env(env: EnvKind) -> Self {
        match env {
            EnvKind::Pendulum => Self {
                epoch_length: 4000,
                epochs: 100,
                gamma: 0.0,
                clip_ratio: 0.2,
                actor_lr: 3e-4,
                critic_lr: 1e-3,
                updates_per_epoch: 80,
                target_kl: 0.01,
                gae_lambda: 0.0,
                max_episode_length: 200,
                hidden: vec![64, 64],
                log_std_init: -0.5,
                normalize_advantages: true,
            },
            EnvKind::Docking2d | EnvKind::Docking3d => Self {
                epoch_length: 10564,
                epochs: 100,
                gamma: 0.988633,
                clip_ratio: 0.2,
                actor_lr: 0.001344,
                critic_lr: 0.001344,
                updates_per_epoch: 34,
                target_kl: 0.01,
                gae_lambda: 0.904496,
                max_episode_length: 1000,
                hidden: vec![64, 64],
                log_std_init: -0.5,
                normalize_advantages: true,
            },
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.clip_ratio > 0.0 && self.clip_ratio < 1.0) {
            return Err("clip_ratio must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err("gamma and gae_lambda must lie in [0, 1]");
        }
        if self.epoch_length == 0 || self.max_episode_length == 0 {
            return Err("epoch_length and max_episode_length must be positive");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0 && self.target_kl > 0.0) {
            return Err("learning rates and target_kl must be positive");
        }
        Ok(())
    }
}

/// SAC settings; `for_env` gives the published per-environment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SacHyperparams {
    pub epoch_length: usize,
    pub epochs: usize,
    pub replay_size: usize,
    pub gamma: f64,
    pub polyak: f64,
    pub alpha: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub minibatch_size: usize,
    pub update_after: usize,
    pub max_episode_length: usize,
    pub hidden: Vec<usize>,
    /// Output nonlinearity of the Q networks. The published table lists
    /// ReLU; `identity` lets Q go negative.
    pub critic_output: Activation,
}

impl SacHyperparams {
    pub fn for_env(env: EnvKind) -> Self {
        let (epoch_length, epochs, max_episode_length) = match env {
            EnvKind::Pendulum => (400, 40, 200),
            EnvKind::Docking2d | EnvKind::Docking3d => (1000, 1000, 1000),
        };
        Self {
            epoch_length,
            epochs,
            replay_size: 10_000,
            gamma: 0.99,
            polyak: 0.995,
            alpha: 0.2,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            minibatch_size: 256,
            update_after: 1,
            max_episode_length,
            hidden: vec![64, 64],
            critic_output: Activation::Relu,
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.polyak > 0.0 && self.polyak < 1.0) {
            return Err("polyak must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err("gamma must lie in [0, 1]");
        }
        if self.replay_size == 0 || self.minibatch_size == 0 || self.epoch_length == 0 {
            return Err("replay_size, minibatch_size and epoch_length must be positive");
        }
        if !(self.alpha >= 0.0 && self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err("alpha must be non-negative and learning rates positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables() {
        let p = PpoHyperparams::for_env(EnvKind::Pendulum);
        assert_eq!((p.gamma, p.gae_lambda, p.updates_per_epoch), (0.0, 0.0, 80));
        let d = PpoHyperparams::for_env(EnvKind::Docking3d);
        assert_eq!(d.epoch_length, 10564);
        let s = SacHyperparams::for_env(EnvKind::Pendulum);
        assert_eq!((s.epoch_length, s.epochs, s.replay_size), (400, 40, 10_000));
        for e in EnvKind::ALL {
            assert!(PpoHyperparams::for_env(e).validate().is_ok());
            assert!(SacHyperparams::for_env(e).validate().is_ok());
        }
    }
}
