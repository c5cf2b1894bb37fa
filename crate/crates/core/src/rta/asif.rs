use arrayvec::ArrayVec;

use super::qp::{solve_qp, HalfSpace, QpProblem};
use super::simplex::backup_recovers;
use super::{BarrierParams, Diagnostics, Fallback, FilterDecision};
use crate::env::{Action, StateVec, MAX_ACTION_DIM};
use crate::error::ConfigError;
use crate::math;
use crate::safety::{Barrier, SafetySpec};

/// Linearised discrete barrier rows
/// `grad h_i . (f(s, u) - s) >= -gamma dt h_i(s)`, written as `a . u >= b`.
///
/// Both docking plants are control affine, so `f(s, u) = drift + B u` and the
/// rows are exactly linear in `u`.
pub fn barrier_constraint_rows<E: SafetySpec>(
    env: &E,
    state: &E::State,
    barriers: &[Barrier],
    gamma: f64,
) -> Result<ArrayVec<HalfSpace, 4>, ConfigError> {
    let model = env
        .control_affine(state)
        .ok_or(ConfigError::NoBarrierModel(env.kind()))?;
    let s = env.to_vec(state);
    let n = env.state_dim();
    let m = env.action_dim();
    let dt = env.dt();
    Ok(barriers
        .iter()
        .map(|bar| {
            let mut a = [0.0; MAX_ACTION_DIM];
            for (j, aj) in a.iter_mut().enumerate().take(m) {
                *aj = (0..n).map(|i| bar.gradient[i] * model.input[i][j]).sum();
            }
            let drift: f64 = (0..n).map(|i| bar.gradient[i] * (model.drift[i] - s[i])).sum();
            HalfSpace {
                a,
                b: -gamma * dt * bar.value - drift,
            }
        })
        .collect())
}

fn solve_and_verify<E: SafetySpec, V: Fn(&E::State) -> bool>(
    env: &E,
    state: &E::State,
    desired: &Action,
    rows: ArrayVec<HalfSpace, 4>,
    params: &BarrierParams,
    in_safe_set: V,
) -> FilterDecision {
    let bound = env.action_bound();
    let problem = QpProblem {
        dim: env.action_dim(),
        target: *desired,
        rows,
        lower: -bound,
        upper: bound,
        tolerance: params.slack_tolerance,
    };
    let slacks = |u: &Action| problem.rows.iter().map(|r| r.slack(u)).collect();
    let fallback = |why: Fallback| {
        let backup = env.backup(state);
        FilterDecision::replace(
            desired,
            backup,
            Diagnostics {
                slack: slacks(&backup),
                fallback: Some(why),
            },
        )
    };
    let solution = match solve_qp(&problem) {
        Ok(s) => s,
        Err(_) => return fallback(Fallback::Infeasible),
    };
    let diff: [f64; 3] = core::array::from_fn(|i| solution.u[i] - desired[i]);
    let correction = math::norm(&diff);
    let actuated = if correction > params.intervention_threshold {
        solution.u
    } else {
        *desired
    };
    if !in_safe_set(&env.propagate(state, &actuated)) {
        return fallback(Fallback::Unverified);
    }
    let diagnostics = Diagnostics {
        slack: slacks(&actuated),
        fallback: None,
    };
    if correction > params.intervention_threshold {
        FilterDecision::replace(desired, actuated, diagnostics)
    } else {
        let mut d = FilterDecision::pass(*desired);
        d.diagnostics = diagnostics;
        d
    }
}

/// QP over the explicit barrier rows. The chosen action is checked against
/// the exact one-step prediction; if the linearisation was too optimistic the
/// backup is used instead.
pub fn explicit_asif<E: SafetySpec>(env: &E, state: &E::State, desired: &Action, params: &BarrierParams) -> FilterDecision {
    let barriers = env
        .explicit_barriers(state)
        .expect("explicit ASIF requires explicit barriers");
    let gamma = params.gamma_for(env.dt());
    let rows = barrier_constraint_rows(env, state, &barriers, gamma)
        .expect("explicit ASIF requires a control-affine model");
    solve_and_verify(env, state, desired, rows, params, |next| {
        env.explicit_barriers(next)
            .is_some_and(|b| b.iter().all(|h| h.value >= 0.0))
    })
}

/// `min` over the backup rollout `s_0 = s, ..., s_k` of `min_i phi_i`. The
/// rollout stops at the first state inside the recovery region, which the
/// backup never leaves.
fn trajectory_min<E: SafetySpec>(env: &E, start: &E::State, horizon: usize) -> f64 {
    let mut s = *start;
    let mut worst = crate::safety::min_constraint(env, &s);
    for _ in 0..horizon {
        if env.in_recovery_region(&s) {
            break;
        }
        s = env.propagate(&s, &env.backup(&s));
        worst = worst.min(crate::safety::min_constraint(env, &s));
    }
    worst
}

/// Implicit barrier `h(s) = min_{j<=k} min_i phi_i(phi_j^{u_b}(s))`, truncated
/// at the recovery region, with a central finite-difference gradient (per-dimension step
/// `1e-4 max(|s_i|, 1)`).
pub fn implicit_barrier<E: SafetySpec>(env: &E, state: &E::State, horizon: usize) -> Barrier {
    let value = trajectory_min(env, state, horizon);
    let base = env.to_vec(state);
    let mut gradient: StateVec = [0.0; 6];
    for (i, g) in gradient.iter_mut().enumerate().take(env.state_dim()) {
        let h = 1e-4 * base[i].abs().max(1.0);
        let mut plus = base;
        let mut minus = base;
        plus[i] += h;
        minus[i] -= h;
        let fp = trajectory_min(env, &env.from_vec(&plus), horizon);
        let fm = trajectory_min(env, &env.from_vec(&minus), horizon);
        *g = (fp - fm) / (2.0 * h);
    }
    Barrier { value, gradient }
}

/// One barrier row from the implicit barrier, solved like [`explicit_asif`]
/// and verified with a backup rollout from the predicted state.
pub fn implicit_asif<E: SafetySpec>(
    env: &E,
    state: &E::State,
    desired: &Action,
    horizon: usize,
    params: &BarrierParams,
) -> FilterDecision {
    let barrier = implicit_barrier(env, state, horizon);
    let gamma = params.gamma_for(env.dt());
    let rows = barrier_constraint_rows(env, state, &[barrier], gamma)
        .expect("implicit ASIF requires a control-affine model");
    solve_and_verify(env, state, desired, rows, params, |next| {
        backup_recovers(env, next, horizon, |x| env.in_recovery_region(x))
    })
}
