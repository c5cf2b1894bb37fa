//! How an RTA intervention is shown to the learner.
//!
//! Each configuration is a pure rewrite of one raw transition plus the
//! filter's decision into the `(action, reward)` pair the learner stores.

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::env::{Action, SafetyComponents};
use crate::error::ConfigError;
use crate::rta::{FilterDecision, FilterKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigKind {
    Baseline,
    BaselinePunishment,
    RtaNoPunishment,
    RtaPunishment,
    RtaCorrectedAction,
}

impl ConfigKind {
    pub const ALL: [ConfigKind; 5] = [
        ConfigKind::Baseline,
        ConfigKind::BaselinePunishment,
        ConfigKind::RtaNoPunishment,
        ConfigKind::RtaPunishment,
        ConfigKind::RtaCorrectedAction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConfigKind::Baseline => "baseline",
            ConfigKind::BaselinePunishment => "baseline_punishment",
            ConfigKind::RtaNoPunishment => "rta_no_punishment",
            ConfigKind::RtaPunishment => "rta_punishment",
            ConfigKind::RtaCorrectedAction => "rta_corrected_action",
        }
    }

    /// Whether training runs with the RTA filter in the loop.
    pub fn trains_with_rta(self) -> bool {
        !matches!(self, ConfigKind::Baseline | ConfigKind::BaselinePunishment)
    }

    fn punishes(self) -> bool {
        matches!(self, ConfigKind::BaselinePunishment | ConfigKind::RtaPunishment)
    }
}

impl fmt::Display for ConfigKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Baseline kinds train without a filter, the `rta_*` kinds need one.
pub fn check_filter(config: ConfigKind, training_filter: FilterKind) -> Result<(), ConfigError> {
    let has_filter = training_filter != FilterKind::None;
    if has_filter == config.trains_with_rta() {
        Ok(())
    } else {
        Err(ConfigError::FilterMismatch {
            config,
            filter: training_filter,
        })
    }
}

/// Events on one step that the punishment configurations may see.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SafetyEvents {
    pub violated: bool,
    pub intervened: bool,
}

/// Training signal. Safety components are dropped unless the configuration
/// punishes; terminal rewards are part of `base_reward` and always kept.
pub fn training_reward(
    config: ConfigKind,
    base_reward: f64,
    safety: &SafetyComponents,
    events: SafetyEvents,
    punishment: f64,
) -> f64 {
    if !config.punishes() {
        return base_reward;
    }
    let triggered = match config {
        ConfigKind::BaselinePunishment => events.violated,
        _ => events.intervened,
    };
    let mut r = base_reward + safety.over_max_velocity;
    if triggered {
        r += punishment;
    }
    r
}

/// What the learner stores for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rewritten {
    pub action: Action,
    pub reward: f64,
    /// The stored action differs from the one the policy sampled, so any
    /// log-probability must be re-evaluated.
    pub relabelled: bool,
}

/// Maps `(raw transition, decision)` to the stored tuple. `desired` is the
/// policy's own (unclipped) sample.
pub fn rewrite(
    config: ConfigKind,
    desired: &Action,
    base_reward: f64,
    safety: &SafetyComponents,
    decision: &FilterDecision,
    violated: bool,
    punishment: f64,
) -> Rewritten {
    let events = SafetyEvents {
        violated,
        intervened: decision.intervened,
    };
    let reward = training_reward(config, base_reward, safety, events, punishment);
    let relabelled = config == ConfigKind::RtaCorrectedAction && decision.intervened;
    Rewritten {
        action: if relabelled { decision.actuated } else { *desired },
        reward,
        relabelled,
    }
}
