use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    assert_finite, Action, EnvKind, Environment, SafetyComponents, StateVec, StepOutcome,
    Terminal, MAX_STATE_DIM,
};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PendulumParams {
    pub g: f64,
    pub length: f64,
    pub mass: f64,
    pub dt: f64,
    pub torque_bound: f64,
    pub omega_bound: f64,
    pub theta_limit: f64,
    pub init_theta_bound: f64,
    pub init_omega_bound: f64,
    pub max_episode_steps: usize,
    pub reward_offset: f64,
    pub punishment: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            g: 10.0,
            length: 1.0,
            mass: 1.0,
            dt: 0.05,
            torque_bound: 15.0,
            omega_bound: 60.0,
            theta_limit: 1.0,
            init_theta_bound: 0.8,
            init_omega_bound: 1.0,
            max_episode_steps: 200,
            reward_offset: 5.0,
            punishment: -1.0,
        }
    }
}

/// Angle from upright (rad, aliased to `[-pi, pi)`) and angular rate (rad/s).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PendulumState {
    pub theta: f64,
    pub omega: f64,
}

impl PendulumState {
    pub fn new(theta: f64, omega: f64) -> Self {
        Self { theta, omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pendulum {
    pub params: PendulumParams,
}

impl Pendulum {
    pub fn new(params: PendulumParams) -> Self {
        Self { params }
    }

    /// Angular acceleration for torque `u` (already clipped).
    fn acceleration(&self, theta: f64, u: f64) -> f64 {
        let p = &self.params;
        -3.0 * p.g / (2.0 * p.length) * math::sin(theta + PI) + 3.0 * u / (p.mass * p.length * p.length)
    }

    /// Per-step reward at the reached state: `offset - (theta^2 + 0.1 omega^2 + 0.001 u^2)`.
    pub fn reward(&self, reached: &PendulumState, u: f64) -> f64 {
        self.params.reward_offset
            - (reached.theta * reached.theta + 0.1 * reached.omega * reached.omega + 0.001 * u * u)
    }
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new(PendulumParams::default())
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub(crate) fn alias_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = (theta + PI) % two_pi;
    if r < 0.0 {
        r += two_pi;
    }
    r - PI
}

impl Environment for Pendulum {
    type State = PendulumState;

    fn kind(&self) -> EnvKind {
        EnvKind::Pendulum
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn obs_dim(&self) -> usize {
        3
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn action_bound(&self) -> f64 {
        self.params.torque_bound
    }

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn max_episode_steps(&self) -> usize {
        self.params.max_episode_steps
    }

    fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> PendulumState {
        let tb = self.params.init_theta_bound;
        let wb = self.params.init_omega_bound;
        PendulumState {
            theta: rng.random_range(-tb..=tb),
            omega: rng.random_range(-wb..=wb),
        }
    }

    fn propagate(&self, s: &PendulumState, action: &Action) -> PendulumState {
        assert_finite(&[s.theta, s.omega, action[0]], "pendulum input");
        let p = &self.params;
        let u = action[0].clamp(-p.torque_bound, p.torque_bound);
        let acc = self.acceleration(s.theta, u);
        // omega update first; theta uses omega_t plus the acc * dt^2 term.
        let omega = s.omega + acc * p.dt;
        let theta = s.theta + s.omega * p.dt + acc * p.dt * p.dt;
        PendulumState {
            theta: alias_angle(theta),
            omega: omega.clamp(-p.omega_bound, p.omega_bound),
        }
    }

    fn step(&self, s: &PendulumState, action: &Action, steps_taken: usize) -> StepOutcome<PendulumState> {
        let p = &self.params;
        let u = action[0].clamp(-p.torque_bound, p.torque_bound);
        let next = self.propagate(s, action);
        let reward = self.reward(&next, u);
        let violated = math::abs(next.theta) > p.theta_limit;
        let terminal = if violated {
            Terminal::ConstraintViolation
        } else if steps_taken + 1 >= p.max_episode_steps {
            Terminal::Timeout
        } else {
            Terminal::None
        };
        StepOutcome {
            next_state: next,
            reward,
            terminal,
            safety_violated: violated,
            safety: SafetyComponents::default(),
        }
    }

    fn observe(&self, s: &PendulumState, out: &mut [f64]) {
        out[0] = math::cos(s.theta);
        out[1] = math::sin(s.theta);
        out[2] = s.omega;
    }

    fn to_vec(&self, s: &PendulumState) -> StateVec {
        let mut v = [0.0; MAX_STATE_DIM];
        v[0] = s.theta;
        v[1] = s.omega;
        v
    }

    fn from_vec(&self, v: &StateVec) -> PendulumState {
        PendulumState {
            theta: v[0],
            omega: v[1],
        }
    }

    /// Success means the episode ran to the step limit without a violation.
    fn is_success(&self, terminal: Terminal) -> bool {
        terminal == Terminal::Timeout
    }

    fn intervention_penalty(&self) -> f64 {
        0.0
    }

    fn punishment(&self) -> f64 {
        self.params.punishment
    }
}
