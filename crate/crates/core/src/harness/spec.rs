use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::agents::{Algorithm, PpoHyperparams, SacHyperparams};
use crate::env::{DockingParams, EnvKind, PendulumParams};
use crate::error::ConfigError;
use crate::rta::{FilterKind, FilterParams};
use crate::trainconfig::{check_filter, ConfigKind};

/// Seeds of the published ten-agent runs.
pub const PAPER_SEEDS: [u64; 10] = [1630, 2241, 2320, 2990, 3281, 4930, 5640, 8005, 9348, 9462];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoSpec {
    Ppo(PpoHyperparams),
    Sac(SacHyperparams),
}

impl AlgoSpec {
    pub fn defaults(algorithm: Algorithm, env: EnvKind) -> Self {
        match algorithm {
            Algorithm::Ppo => AlgoSpec::Ppo(PpoHyperparams::for_env(env)),
            Algorithm::Sac => AlgoSpec::Sac(SacHyperparams::for_env(env)),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            AlgoSpec::Ppo(_) => Algorithm::Ppo,
            AlgoSpec::Sac(_) => Algorithm::Sac,
        }
    }

    pub fn epochs(&self) -> usize {
        match self {
            AlgoSpec::Ppo(h) => h.epochs,
            AlgoSpec::Sac(h) => h.epochs,
        }
    }

    pub fn max_episode_length(&self) -> usize {
        match self {
            AlgoSpec::Ppo(h) => h.max_episode_length,
            AlgoSpec::Sac(h) => h.max_episode_length,
        }
    }
}

/// One cell of a study: what to train, how, and how to evaluate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub env: EnvKind,
    /// RTA used in the training loop by the `rta_*` configurations and in
    /// every RTA-on evaluation. Baseline configurations train without it.
    pub filter: FilterKind,
    #[serde(default)]
    pub filter_params: FilterParams,
    pub config: ConfigKind,
    pub algorithm: AlgoSpec,
    pub seeds: Vec<u64>,
    pub eval_episodes_interim: usize,
    pub eval_episodes_final: usize,
    pub eval_every: usize,
    #[serde(default)]
    pub pendulum: PendulumParams,
    #[serde(default)]
    pub docking: DockingParams,
}

impl ExperimentSpec {
    pub fn new(env: EnvKind, filter: FilterKind, config: ConfigKind, algorithm: Algorithm) -> Self {
        Self {
            env,
            filter,
            filter_params: FilterParams::default(),
            config,
            algorithm: AlgoSpec::defaults(algorithm, env),
            seeds: PAPER_SEEDS.to_vec(),
            eval_episodes_interim: 10,
            eval_episodes_final: 100,
            eval_every: 1,
            pendulum: PendulumParams::default(),
            docking: DockingParams::default(),
        }
    }

    /// Filter in the training loop.
    pub fn training_filter(&self) -> FilterKind {
        if self.config.trains_with_rta() {
            self.filter
        } else {
            FilterKind::None
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.filter.supported_by(self.env) {
            return Err(ConfigError::UnsupportedFilter {
                env: self.env,
                filter: self.filter,
            });
        }
        check_filter(self.config, self.training_filter())?;
        if self.eval_every == 0 {
            return Err(ConfigError::InvalidParameter("eval_every must be >= 1".to_string()));
        }
        if self.filter_params.horizon == Some(0) {
            return Err(ConfigError::InvalidParameter("filter horizon must be >= 1".to_string()));
        }
        if let Some(g) = self.filter_params.barrier.gamma {
            if !(g > 0.0) {
                return Err(ConfigError::InvalidParameter("barrier gamma must be > 0".to_string()));
            }
        }
        let hp = match &self.algorithm {
            AlgoSpec::Ppo(h) => h.validate(),
            AlgoSpec::Sac(h) => h.validate(),
        };
        hp.map_err(|e| ConfigError::InvalidParameter(e.to_string()))
    }

    pub fn pendulum_env(&self) -> crate::env::Pendulum {
        let mut p = self.pendulum;
        p.max_episode_steps = self.algorithm.max_episode_length();
        crate::env::Pendulum::new(p)
    }

    pub fn docking_env(&self) -> crate::env::Docking {
        let mut p = self.docking;
        p.max_episode_steps = self.algorithm.max_episode_length();
        let plane = match self.env {
            EnvKind::Docking3d => crate::env::Plane::ThreeD,
            _ => crate::env::Plane::TwoD,
        };
        crate::env::Docking::new(p, plane)
    }
}
