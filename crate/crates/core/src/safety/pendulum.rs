use core::f64::consts::PI;

use super::{Barriers, ConstraintValues, ControlAffine, SafetySpec};
use crate::env::{Action, Pendulum, PendulumState};
use crate::math;

impl Pendulum {
    /// `phi_1 = theta_limit - |theta|`.
    pub fn phi(&self, s: &PendulumState) -> f64 {
        self.params.theta_limit - math::abs(s.theta)
    }

    /// Proportional backup torque `clamp(-(32/pi) theta, -15, 15)`.
    pub fn backup_torque(&self, s: &PendulumState) -> f64 {
        let b = self.params.torque_bound;
        (-32.0 / PI * s.theta).clamp(-b, b)
    }
}

impl SafetySpec for Pendulum {
    fn constraints(&self, s: &PendulumState) -> ConstraintValues {
        let mut v = ConstraintValues::new();
        v.push(self.phi(s));
        v
    }

    fn backup(&self, s: &PendulumState) -> Action {
        [self.backup_torque(s), 0.0, 0.0]
    }

    fn backup_horizon(&self) -> usize {
        100
    }

    /// The initial-condition box.
    fn in_recovery_region(&self, s: &PendulumState) -> bool {
        math::abs(s.theta) <= self.params.init_theta_bound
            && math::abs(s.omega) <= self.params.init_omega_bound
    }

    // Only implicit monitoring is defined for the pendulum.
    fn explicit_barriers(&self, _: &PendulumState) -> Option<Barriers> {
        None
    }

    fn control_affine(&self, _: &PendulumState) -> Option<ControlAffine> {
        None
    }

    fn lipschitz(&self) -> ConstraintValues {
        let mut v = ConstraintValues::new();
        v.push(1.0);
        v
    }
}
