use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    assert_finite, Action, EnvKind, Environment, SafetyComponents, StateVec, StepOutcome,
    Terminal, MAX_STATE_DIM,
};
use crate::math;

/// Clohessy-Wiltshire docking parameters. Units: m, s, kg, N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DockingParams {
    /// Mean motion of the chief orbit, rad/s.
    pub mean_motion: f64,
    pub mass: f64,
    /// Per-axis thrust bound, N.
    pub force_bound: f64,
    pub docking_radius: f64,
    /// Maximum allowed speed inside the docking radius, m/s.
    pub docking_speed: f64,
    pub oob_radius: f64,
    pub init_radius_min: f64,
    pub init_radius_max: f64,
    pub v_max: f64,
    /// Slope `c` of the distance-dependent speed limit, 1/s.
    pub speed_limit_slope: f64,
    pub max_episode_steps: usize,
    pub dt: f64,
    pub proximity_coeff: f64,
    /// Punishment (and evaluation penalty) for an RTA intervention.
    pub rta_punishment: f64,
    /// Gain of the velocity-damping backup controller, 1/s.
    pub backup_gain: f64,
}

impl Default for DockingParams {
    fn default() -> Self {
        let n = 0.001027;
        Self {
            mean_motion: n,
            mass: 12.0,
            force_bound: 1.0,
            docking_radius: 20.0,
            docking_speed: 0.2,
            oob_radius: 200.0,
            init_radius_min: 100.0,
            init_radius_max: 150.0,
            v_max: 10.0,
            speed_limit_slope: 2.0 * n,
            max_episode_steps: 1000,
            dt: 1.0,
            proximity_coeff: 0.0125,
            rta_punishment: -0.001,
            backup_gain: 0.2,
        }
    }
}

/// Deputy position and velocity relative to the chief.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DockingState {
    pub pos: [f64; 3],
    pub vel: [f64; 3],
}

impl DockingState {
    pub fn new(pos: [f64; 3], vel: [f64; 3]) -> Self {
        Self { pos, vel }
    }

    pub fn distance(&self) -> f64 {
        math::norm(&self.pos)
    }

    pub fn speed(&self) -> f64 {
        math::norm(&self.vel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    /// `z` and `z'` are held at 0; actions are `[F_x, F_y]`.
    TwoD,
    ThreeD,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Docking {
    pub params: DockingParams,
    pub plane: Plane,
}

impl Docking {
    pub fn new(params: DockingParams, plane: Plane) -> Self {
        Self { params, plane }
    }

    pub fn axes(&self) -> usize {
        match self.plane {
            Plane::TwoD => 2,
            Plane::ThreeD => 3,
        }
    }

    /// `s' = A s + B u` with the CWH matrices in Euler form.
    fn advance(&self, s: &DockingState, force: &[f64; 3]) -> DockingState {
        let p = &self.params;
        let n = p.mean_motion;
        let dt = p.dt;
        let [x, y, z] = s.pos;
        let [vx, vy, vz] = s.vel;
        let ax = 3.0 * n * n * x + 2.0 * n * vy + force[0] / p.mass;
        let ay = -2.0 * n * vx + force[1] / p.mass;
        let az = -n * n * z + force[2] / p.mass;
        DockingState {
            pos: [x + vx * dt, y + vy * dt, z + vz * dt],
            vel: [vx + ax * dt, vy + ay * dt, vz + az * dt],
        }
    }

    fn clipped_force(&self, action: &Action) -> [f64; 3] {
        let b = self.params.force_bound;
        let mut f = [0.0; 3];
        for (fi, a) in f.iter_mut().zip(action).take(self.axes()) {
            *fi = a.clamp(-b, b);
        }
        f
    }

    fn over_max_velocity(&self, speed: f64) -> f64 {
        let vmax = self.params.v_max;
        if speed > vmax {
            -0.1 - 0.1 * (speed - vmax)
        } else {
            0.0
        }
    }

    /// Safety constraint values at a state. See [`crate::safety`].
    pub(crate) fn phis(&self, s: &DockingState) -> [f64; 4] {
        let p = &self.params;
        let v2 = p.v_max * p.v_max;
        [
            p.docking_speed - s.speed() + p.speed_limit_slope * s.distance(),
            v2 - s.vel[0] * s.vel[0],
            v2 - s.vel[1] * s.vel[1],
            v2 - s.vel[2] * s.vel[2],
        ]
    }
}

impl Environment for Docking {
    type State = DockingState;

    fn kind(&self) -> EnvKind {
        match self.plane {
            Plane::TwoD => EnvKind::Docking2d,
            Plane::ThreeD => EnvKind::Docking3d,
        }
    }

    fn state_dim(&self) -> usize {
        2 * self.axes()
    }

    fn obs_dim(&self) -> usize {
        2 * self.axes()
    }

    fn action_dim(&self) -> usize {
        self.axes()
    }

    fn action_bound(&self) -> f64 {
        self.params.force_bound
    }

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn max_episode_steps(&self) -> usize {
        self.params.max_episode_steps
    }

    /// At rest, at a uniform radius in `[min, max]` and a uniform direction
    /// on the circle (2D) or sphere (3D).
    fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> DockingState {
        let p = &self.params;
        let r = rng.random_range(p.init_radius_min..=p.init_radius_max);
        let azimuth = rng.random_range(0.0..2.0 * PI);
        let pos = match self.plane {
            Plane::TwoD => [r * math::cos(azimuth), r * math::sin(azimuth), 0.0],
            Plane::ThreeD => {
                let cz: f64 = rng.random_range(-1.0..=1.0);
                let ring = math::sqrt((1.0 - cz * cz).max(0.0));
                [
                    r * ring * math::cos(azimuth),
                    r * ring * math::sin(azimuth),
                    r * cz,
                ]
            }
        };
        DockingState { pos, vel: [0.0; 3] }
    }

    fn propagate(&self, s: &DockingState, action: &Action) -> DockingState {
        assert_finite(&s.pos, "docking position");
        assert_finite(&s.vel, "docking velocity");
        assert_finite(action, "docking action");
        let next = self.advance(s, &self.clipped_force(action));
        match self.plane {
            Plane::TwoD => DockingState {
                pos: [next.pos[0], next.pos[1], 0.0],
                vel: [next.vel[0], next.vel[1], 0.0],
            },
            Plane::ThreeD => next,
        }
    }

    fn step(&self, s: &DockingState, action: &Action, steps_taken: usize) -> StepOutcome<DockingState> {
        let p = &self.params;
        let next = self.propagate(s, action);
        let d0 = s.distance();
        let d1 = next.distance();
        let speed = next.speed();
        let mut reward = p.proximity_coeff * (d0 - d1);
        let terminal = if d1 <= p.docking_radius {
            if speed <= p.docking_speed {
                Terminal::Docked
            } else {
                Terminal::Crashed
            }
        } else if d1 > p.oob_radius {
            Terminal::OutOfBounds
        } else if steps_taken + 1 >= p.max_episode_steps {
            Terminal::Timeout
        } else {
            Terminal::None
        };
        reward += match terminal {
            Terminal::Docked => 1.0,
            Terminal::Crashed | Terminal::OutOfBounds | Terminal::Timeout => -1.0,
            Terminal::None | Terminal::ConstraintViolation => 0.0,
        };
        let safety_violated = self.phis(&next).iter().any(|&phi| phi < 0.0);
        StepOutcome {
            next_state: next,
            reward,
            terminal,
            safety_violated,
            safety: SafetyComponents {
                over_max_velocity: self.over_max_velocity(speed),
            },
        }
    }

    fn observe(&self, s: &DockingState, out: &mut [f64]) {
        let k = self.axes();
        out[..k].copy_from_slice(&s.pos[..k]);
        out[k..2 * k].copy_from_slice(&s.vel[..k]);
    }

    /// Positions in hundreds of metres, velocities in units of `v_max / 20`.
    fn observation_scale(&self, out: &mut [f64]) {
        let k = self.axes();
        let vs = 20.0 / self.params.v_max;
        out[..k].iter_mut().for_each(|s| *s = 0.01);
        out[k..2 * k].iter_mut().for_each(|s| *s = vs);
    }

    fn to_vec(&self, s: &DockingState) -> StateVec {
        let mut v = [0.0; MAX_STATE_DIM];
        self.observe(s, &mut v);
        v
    }

    fn from_vec(&self, v: &StateVec) -> DockingState {
        let k = self.axes();
        let mut s = DockingState::default();
        s.pos[..k].copy_from_slice(&v[..k]);
        s.vel[..k].copy_from_slice(&v[k..2 * k]);
        s
    }

    fn is_success(&self, terminal: Terminal) -> bool {
        terminal == Terminal::Docked
    }

    fn intervention_penalty(&self) -> f64 {
        self.params.rta_punishment
    }

    fn punishment(&self) -> f64 {
        self.params.rta_punishment
    }
}
