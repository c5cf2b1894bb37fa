//! Deterministic discrete-time plants.
//!
//! An [`Environment`] is a pure state machine: `step` maps a state and an
//! action to a [`StepOutcome`] without touching any interior mutable state, so
//! the same value can be shared by the live loop, the RTA predictors and the
//! backup rollouts.

mod docking;
mod pendulum;

use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use docking::{Docking, DockingParams, DockingState, Plane};
pub use pendulum::{Pendulum, PendulumParams, PendulumState};

/// Largest action dimension of any environment. Unused trailing axes are 0.
pub const MAX_ACTION_DIM: usize = 3;
/// Largest flattened state dimension of any environment.
pub const MAX_STATE_DIM: usize = 6;

pub type Action = [f64; MAX_ACTION_DIM];
pub type StateVec = [f64; MAX_STATE_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Pendulum,
    Docking2d,
    Docking3d,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::Pendulum, EnvKind::Docking2d, EnvKind::Docking3d];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Pendulum => "pendulum",
            EnvKind::Docking2d => "docking2d",
            EnvKind::Docking3d => "docking3d",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Why an episode ended, if it did. Exactly one reason fires per episode end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    None,
    Docked,
    Crashed,
    OutOfBounds,
    ConstraintViolation,
    Timeout,
}

impl Terminal {
    pub fn is_done(self) -> bool {
        self != Terminal::None
    }

    /// True for episode ends that the value function must not bootstrap across.
    pub fn is_absorbing(self) -> bool {
        !matches!(self, Terminal::None | Terminal::Timeout)
    }
}

/// Reward terms that only count when a configuration asks for them during
/// training, but always count in evaluation returns.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SafetyComponents {
    /// `-0.1 - 0.1 (v_H - v_max)` when the speed exceeds `v_max`, else 0.
    pub over_max_velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<S> {
    pub next_state: S,
    /// Task reward (dense + terminal terms), identical for every configuration.
    pub reward: f64,
    pub terminal: Terminal,
    /// Some safety constraint `phi_i` is negative at `next_state`.
    pub safety_violated: bool,
    pub safety: SafetyComponents,
}

pub trait Environment {
    type State: Copy + fmt::Debug + PartialEq;

    fn kind(&self) -> EnvKind;
    /// Length of [`Environment::to_vec`] output that carries information.
    fn state_dim(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Symmetric per-axis actuator bound.
    fn action_bound(&self) -> f64;
    fn dt(&self) -> f64;
    fn max_episode_steps(&self) -> usize;

    fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// Pure dynamics, including input clipping and any state clipping/aliasing.
    fn propagate(&self, state: &Self::State, action: &Action) -> Self::State;

    /// One environment step. `steps_taken` is the number of steps already
    /// executed in the current episode.
    fn step(&self, state: &Self::State, action: &Action, steps_taken: usize)
        -> StepOutcome<Self::State>;

    fn observe(&self, state: &Self::State, out: &mut [f64]);

    /// Per-component multiplier a learner may apply to observations.
    fn observation_scale(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|s| *s = 1.0);
    }

    fn to_vec(&self, state: &Self::State) -> StateVec;
    fn from_vec(&self, v: &StateVec) -> Self::State;

    fn is_success(&self, terminal: Terminal) -> bool;

    /// Evaluation-return penalty for a step on which the RTA intervened.
    fn intervention_penalty(&self) -> f64;

    /// Constant punishment `p` used by the punishment configurations.
    fn punishment(&self) -> f64;

    fn clip_action(&self, action: &Action) -> Action {
        let bound = self.action_bound();
        let mut out = [0.0; MAX_ACTION_DIM];
        for (o, a) in out.iter_mut().zip(action).take(self.action_dim()) {
            *o = a.clamp(-bound, bound);
        }
        out
    }
}

/// Full reward for reported returns: task reward plus every safety term.
pub fn evaluation_reward<S>(
    outcome: &StepOutcome<S>,
    rta_intervening: bool,
    intervention_penalty: f64,
) -> f64 {
    let mut r = outcome.reward + outcome.safety.over_max_velocity;
    if rta_intervening {
        r += intervention_penalty;
    }
    r
}

pub(crate) fn assert_finite(values: &[f64], what: &str) {
    assert!(
        values.iter().all(|v| v.is_finite()),
        "non-finite {what}: {values:?}"
    );
}
