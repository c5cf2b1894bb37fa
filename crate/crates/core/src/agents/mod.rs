//! Small from-scratch learners: an MLP with reverse-mode gradients, Adam,
//! PPO with a diagonal Gaussian policy and SAC with a squashed Gaussian.

pub mod adam;
pub mod dist;
pub mod hparams;
pub mod mlp;
pub mod ppo;
pub mod replay;
pub mod sac;

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use hparams::{PpoHyperparams, SacHyperparams};
pub use mlp::{Activation, Mlp};
pub use ppo::{PpoAgent, PpoBuffer, PpoDiagnostics};
pub use replay::ReplayBuffer;
pub use sac::{SacAgent, SacDiagnostics};

use crate::env::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ppo,
    Sac,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ppo => "ppo",
            Algorithm::Sac => "sac",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SacRecord {
    pub obs: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    /// Absorbing terminal: no bootstrap from `next_obs`.
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoRecord {
    pub obs: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub value: f64,
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransitionRecord {
    Sac(SacRecord),
    Ppo(PpoRecord),
}

/// Deterministic action for evaluation.
pub trait Policy {
    fn mean_action(&self, obs: &[f64]) -> Action;
}

pub(crate) fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}
