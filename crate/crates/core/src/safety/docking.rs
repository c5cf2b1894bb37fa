use super::{Barrier, Barriers, ConstraintValues, ControlAffine, SafetySpec};
use crate::env::{Action, Docking, DockingState, Environment, MAX_STATE_DIM};
use crate::math;

impl Docking {
    /// `[v_D - v_H + c d_H, v_max^2 - x'^2, v_max^2 - y'^2, v_max^2 - z'^2]`.
    pub fn constraint_values(&self, s: &DockingState) -> [f64; 4] {
        self.phis(s)
    }

    /// Per-axis velocity damping `clamp(-k_v m v, -F, F)`.
    pub fn backup_force(&self, s: &DockingState) -> Action {
        let p = &self.params;
        let mut u = [0.0; 3];
        for (ui, v) in u.iter_mut().zip(&s.vel).take(self.axes()) {
            *ui = (-p.backup_gain * p.mass * v).clamp(-p.force_bound, p.force_bound);
        }
        u
    }

    /// Gradients of the four constraints in the full 6-d coordinates
    /// `[x, y, z, x', y', z']`.
    fn full_gradients(&self, s: &DockingState) -> [[f64; 6]; 4] {
        let c = self.params.speed_limit_slope;
        let d = s.distance();
        let v = s.speed();
        let mut g = [[0.0; 6]; 4];
        for i in 0..3 {
            if d > 0.0 {
                g[0][i] = c * s.pos[i] / d;
            }
            if v > 0.0 {
                g[0][3 + i] = -s.vel[i] / v;
            }
            g[1 + i][3 + i] = -2.0 * s.vel[i];
        }
        g
    }

    fn project(&self, full: &[f64; 6]) -> [f64; MAX_STATE_DIM] {
        let k = self.axes();
        let mut out = [0.0; MAX_STATE_DIM];
        out[..k].copy_from_slice(&full[..k]);
        out[k..2 * k].copy_from_slice(&full[3..3 + k]);
        out
    }
}

impl SafetySpec for Docking {
    fn constraints(&self, s: &DockingState) -> ConstraintValues {
        self.phis(s).into_iter().collect()
    }

    fn backup(&self, s: &DockingState) -> Action {
        self.backup_force(s)
    }

    fn backup_horizon(&self) -> usize {
        500
    }

    /// Speed at or below the docking speed: the speed limit holds at any
    /// distance and the damping law only slows the deputy further.
    fn in_recovery_region(&self, s: &DockingState) -> bool {
        s.speed() <= self.params.docking_speed
    }

    /// `h_i = phi_i`: every constraint is a speed bound that the damping
    /// backup can always restore.
    fn explicit_barriers(&self, s: &DockingState) -> Option<Barriers> {
        let values = self.phis(s);
        let grads = self.full_gradients(s);
        Some(
            values
                .iter()
                .zip(grads.iter())
                .map(|(&value, g)| Barrier {
                    value,
                    gradient: self.project(g),
                })
                .collect(),
        )
    }

    fn control_affine(&self, s: &DockingState) -> Option<ControlAffine> {
        let drift = self.to_vec(&self.propagate(s, &[0.0; 3]));
        let k = self.axes();
        let gain = self.params.dt / self.params.mass;
        let mut input = [[0.0; 3]; 6];
        for (j, row) in input.iter_mut().skip(k).take(k).enumerate() {
            row[j] = gain;
        }
        Some(ControlAffine { drift, input })
    }

    /// `phi_1`: `sqrt(c^2 + 1)`; `phi_2..4`: `2 v_max` on the admissible set.
    fn lipschitz(&self) -> ConstraintValues {
        let c = self.params.speed_limit_slope;
        let lv = 2.0 * self.params.v_max;
        [math::sqrt(c * c + 1.0), lv, lv, lv].into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{DockingParams, Plane};
    use crate::safety::rollout_backup;
    use proptest::prelude::*;
    use rand::Rng;

    fn d2() -> Docking {
        Docking::new(DockingParams::default(), Plane::TwoD)
    }

    fn d3() -> Docking {
        Docking::new(DockingParams::default(), Plane::ThreeD)
    }

    #[test]
    fn constraint_examples() {
        let env = d3();
        let at_rest = DockingState::new([100.0, 0.0, 0.0], [0.0; 3]);
        let phi = env.constraint_values(&at_rest);
        assert!((phi[0] - (0.2 + 0.2054)).abs() < 1e-12);
        assert_eq!(&phi[1..], &[100.0, 100.0, 100.0]);
        let fast = DockingState::new([100.0, 0.0, 0.0], [10.0, 0.0, 0.0]);
        assert_eq!(env.constraint_values(&fast)[1], 0.0);
        assert_eq!(d2().constraints(&at_rest).len(), 4);
    }

    #[test]
    fn backup_examples() {
        let env = d3();
        assert_eq!(env.backup_force(&DockingState::default()), [0.0; 3]);
        let s = DockingState::new([50.0, 0.0, 0.0], [5.0, 0.0, 0.0]);
        assert_eq!(env.backup_force(&s), [-1.0, 0.0, 0.0]);
        // Unsaturated: -0.2 * 12 * 0.1 = -0.24.
        let s = DockingState::new([50.0, 0.0, 0.0], [0.0, 0.1, 0.0]);
        assert!((env.backup_force(&s)[1] + 0.24).abs() < 1e-15);
    }

    #[test]
    fn backup_keeps_velocity_limits_for_500_steps() {
        let mut rng = crate::rng::stream(21, 0);
        for env in [d2(), d3()] {
            let mut checked = 0;
            while checked < 1000 {
                let mut s = DockingState::default();
                for i in 0..env.axes() {
                    s.pos[i] = rng.random_range(-200.0..200.0);
                    s.vel[i] = rng.random_range(-10.0..10.0);
                }
                if s.speed() > env.params.v_max {
                    continue;
                }
                checked += 1;
                for x in rollout_backup(&env, &s, 500) {
                    let phi = env.constraint_values(&x);
                    assert!(phi[1..].iter().all(|&p| p >= 0.0), "{s:?} -> {x:?}");
                }
            }
        }
    }

    #[test]
    fn explicit_set_members_admit_a_safe_next_state() {
        let mut rng = crate::rng::stream(22, 0);
        for env in [d2(), d3()] {
            let mut checked = 0;
            while checked < 1000 {
                let mut s = env.sample_initial_state(&mut rng);
                let d = rng.random_range(20.0..200.0);
                let scale = d / s.distance();
                s.pos.iter_mut().for_each(|p| *p *= scale);
                for i in 0..env.axes() {
                    s.vel[i] = rng.random_range(-0.7..0.7);
                }
                let member = env.explicit_barriers(&s).unwrap().iter().all(|b| b.value >= 0.0);
                if !member {
                    continue;
                }
                checked += 1;
                let next = env.propagate(&s, &env.backup(&s));
                assert!(env.admissible(&next), "{s:?}");
                assert!(env.explicit_barriers(&next).unwrap().iter().all(|b| b.value >= 0.0));
            }
        }
    }

    #[test]
    fn recovery_region_is_invariant_under_backup() {
        let mut rng = crate::rng::stream(23, 0);
        let env = d3();
        for _ in 0..300 {
            let mut s = env.sample_initial_state(&mut rng);
            let d = rng.random_range(0.0..200.0);
            let scale = d / s.distance();
            s.pos.iter_mut().for_each(|p| *p *= scale);
            let dir: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let speed = rng.random_range(0.0..0.2);
            let n = math::norm(&dir);
            for i in 0..3 {
                s.vel[i] = dir[i] / n * speed;
            }
            for x in rollout_backup(&env, &s, 500) {
                assert!(env.admissible(&x));
                assert!(env.in_recovery_region(&x));
            }
        }
    }

    #[test]
    fn velocity_gradient_is_exact() {
        let env = d3();
        let s = DockingState::new([30.0, -40.0, 10.0], [0.3, -0.1, 0.05]);
        let b = env.explicit_barriers(&s).unwrap();
        assert_eq!(b[1].gradient, [0.0, 0.0, 0.0, -0.6, 0.0, 0.0]);
        let c = env.params.speed_limit_slope;
        let d = s.distance();
        for i in 0..3 {
            assert!((b[0].gradient[i] - c * s.pos[i] / d).abs() < 1e-15);
        }
    }

    fn finite_difference(env: &Docking, s: &DockingState, i: usize, dim: usize) -> f64 {
        let h = 1e-6;
        let base = env.to_vec(s);
        let mut plus = base;
        let mut minus = base;
        plus[dim] += h;
        minus[dim] -= h;
        let fp = env.constraint_values(&env.from_vec(&plus))[i];
        let fm = env.constraint_values(&env.from_vec(&minus))[i];
        (fp - fm) / (2.0 * h)
    }

    #[test]
    fn analytic_gradients_match_central_differences() {
        let mut rng = crate::rng::stream(24, 0);
        for env in [d2(), d3()] {
            for _ in 0..100 {
                let mut s = DockingState::default();
                for i in 0..env.axes() {
                    s.pos[i] = rng.random_range(-150.0..150.0);
                    s.vel[i] = rng.random_range(-1.0..1.0);
                }
                let b = env.explicit_barriers(&s).unwrap();
                for (i, barrier) in b.iter().enumerate() {
                    let fd: alloc::vec::Vec<f64> =
                        (0..env.state_dim()).map(|dim| finite_difference(&env, &s, i, dim)).collect();
                    let an = &barrier.gradient[..env.state_dim()];
                    let diff = math::norm(&fd.iter().zip(an).map(|(a, b)| a - b).collect::<alloc::vec::Vec<_>>());
                    let scale = math::norm(an).max(math::norm(&fd)).max(1e-12);
                    assert!(diff / scale < 1e-5 || diff < 1e-9, "constraint {i}: {an:?} vs {fd:?}");
                }
            }
        }
    }

    #[test]
    fn control_affine_model_reproduces_step() {
        let env = d3();
        let s = DockingState::new([30.0, -40.0, 10.0], [0.3, -0.1, 0.05]);
        let u = [0.4, -0.7, 0.2];
        let m = env.control_affine(&s).unwrap();
        let next = env.to_vec(&env.propagate(&s, &u));
        for i in 0..6 {
            let pred = m.drift[i] + (0..3).map(|j| m.input[i][j] * u[j]).sum::<f64>();
            assert!((pred - next[i]).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn backup_within_bounds(
            v in proptest::array::uniform3(-1e6f64..1e6),
            p in proptest::array::uniform3(-1e6f64..1e6),
        ) {
            let u = d3().backup_force(&DockingState::new(p, v));
            prop_assert!(u.iter().all(|x| x.abs() <= 1.0));
        }

        #[test]
        fn admissibility_survives_small_perturbations(
            x in 20.0f64..200.0, vx in -0.3f64..0.3, vy in -0.3f64..0.3,
            dir in proptest::array::uniform4(-1.0f64..1.0),
        ) {
            let env = d2();
            let s = DockingState::new([x, 0.0, 0.0], [vx, vy, 0.0]);
            let phi = env.constraint_values(&s);
            let eps = phi.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assume!(eps > 1e-6);
            let l = env.lipschitz().iter().copied().fold(0.0, f64::max);
            let n = math::norm(&dir).max(1e-9);
            let r = 0.999 * eps / l;
            let mut v = env.to_vec(&s);
            for i in 0..4 {
                v[i] += dir[i] / n * r;
            }
            prop_assert!(env.admissible(&env.from_vec(&v)));
        }
    }
}
