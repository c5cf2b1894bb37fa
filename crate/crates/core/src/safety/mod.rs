//! Safety semantics per environment: constraints `phi_i` defining the
//! admissible set, explicit control-invariant constraints `h_i` with analytic
//! gradients, backup controllers, and backup rollouts.

mod docking;
mod pendulum;

use arrayvec::ArrayVec;

use crate::env::{Action, Environment, StateVec};

/// Maximum number of constraints of any environment.
pub const MAX_CONSTRAINTS: usize = 4;

pub type ConstraintValues = ArrayVec<f64, MAX_CONSTRAINTS>;

/// One explicit constraint `h_i` evaluated at a state, with its gradient with
/// respect to the flattened state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barrier {
    pub value: f64,
    pub gradient: StateVec,
}

pub type Barriers = ArrayVec<Barrier, MAX_CONSTRAINTS>;

/// Exact control-affine one-step model `s' = drift + input * u` in flattened
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlAffine {
    pub drift: StateVec,
    /// `input[i][j] = d s'_i / d u_j`.
    pub input: [[f64; 3]; 6],
}

pub trait SafetySpec: Environment {
    /// `phi_i(state)` for every constraint, in a fixed order.
    fn constraints(&self, state: &Self::State) -> ConstraintValues;

    fn admissible(&self, state: &Self::State) -> bool {
        self.constraints(state).iter().all(|&phi| phi >= 0.0)
    }

    /// Backup control law. Always within actuator bounds.
    fn backup(&self, state: &Self::State) -> Action;

    /// Default horizon `k` for implicit (trajectory based) monitoring.
    fn backup_horizon(&self) -> usize;

    /// States from which the backup is known to stay admissible forever; an
    /// implicit rollout that reaches this region can stop early.
    fn in_recovery_region(&self, state: &Self::State) -> bool;

    /// Explicit `h_i` values and gradients, if the environment defines them.
    fn explicit_barriers(&self, state: &Self::State) -> Option<Barriers>;

    fn control_affine(&self, state: &Self::State) -> Option<ControlAffine>;

    /// Lipschitz constant of each `phi_i` (Euclidean norm on the flattened
    /// state) over the admissible region.
    fn lipschitz(&self) -> ConstraintValues;
}

/// `min_i phi_i(state)`.
pub fn min_constraint<E: SafetySpec>(env: &E, state: &E::State) -> f64 {
    env.constraints(state)
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// States `phi_1 .. phi_k` of the closed loop under the backup policy, using
/// the live step function. `k >= 1`.
pub fn rollout_backup<E: SafetySpec>(env: &E, state: &E::State, k: usize) -> alloc::vec::Vec<E::State> {
    assert!(k >= 1, "rollout horizon must be at least one step");
    let mut out = alloc::vec::Vec::with_capacity(k);
    let mut s = *state;
    for _ in 0..k {
        s = env.propagate(&s, &env.backup(&s));
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Docking, DockingParams, Pendulum, PendulumState, Plane};
    use rand::Rng;

    #[test]
    fn one_step_rollout_is_a_plain_step() {
        let env = Pendulum::default();
        let s = PendulumState::new(0.4, -0.3);
        let r = rollout_backup(&env, &s, 1);
        assert_eq!(r[0], env.step(&s, &env.backup(&s), 0).next_state);
    }

    #[test]
    fn pendulum_rollout_from_point_nine_heads_back() {
        let env = Pendulum::default();
        let traj = rollout_backup(&env, &PendulumState::new(0.9, 0.0), 10);
        let mut prev = 0.9;
        for s in &traj {
            assert!(s.theta < prev, "theta {} !< {prev}", s.theta);
            prev = s.theta;
        }
    }

    #[test]
    fn backup_rollouts_never_violate_from_initial_states() {
        let p = Pendulum::default();
        let d2 = Docking::new(DockingParams::default(), Plane::TwoD);
        let d3 = Docking::new(DockingParams::default(), Plane::ThreeD);
        let mut rng = crate::rng::stream(5, 0);
        for _ in 0..1000 {
            let s = p.sample_initial_state(&mut rng);
            assert!(rollout_backup(&p, &s, 200).iter().all(|x| p.admissible(x)));
        }
        for env in [d2, d3] {
            for _ in 0..200 {
                let mut s = env.sample_initial_state(&mut rng);
                for v in s.vel.iter_mut().take(env.axes()) {
                    *v = rng.random_range(-0.25..0.25);
                }
                if !env.admissible(&s) {
                    continue;
                }
                assert!(rollout_backup(&env, &s, 500).iter().all(|x| env.admissible(x)));
            }
        }
    }
}
