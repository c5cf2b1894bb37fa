use super::{Diagnostics, FilterDecision};
use crate::env::Action;
use crate::safety::SafetySpec;

fn switch_to_backup<E: SafetySpec>(env: &E, state: &E::State, desired: &Action, diagnostics: Diagnostics) -> FilterDecision {
    FilterDecision::replace(desired, env.backup(state), diagnostics)
}

/// One-step prediction under `desired`; pass it through iff the predicted
/// state satisfies every explicit `h_i`.
pub fn explicit_simplex<E: SafetySpec>(env: &E, state: &E::State, desired: &Action) -> FilterDecision {
    let predicted = env.propagate(state, desired);
    let barriers = env
        .explicit_barriers(&predicted)
        .expect("explicit simplex requires explicit barriers");
    let diagnostics = Diagnostics {
        slack: barriers.iter().map(|b| b.value).collect(),
        fallback: None,
    };
    if barriers.iter().all(|b| b.value >= 0.0) {
        let mut d = FilterDecision::pass(*desired);
        d.diagnostics = diagnostics;
        d
    } else {
        switch_to_backup(env, state, desired, diagnostics)
    }
}

/// True when the backup trajectory from `start` stays admissible for
/// `horizon` steps or reaches the recovery region first. `start` itself is
/// checked as well.
pub(crate) fn backup_recovers<E: SafetySpec, X: Fn(&E::State) -> bool>(
    env: &E,
    start: &E::State,
    horizon: usize,
    early_exit: X,
) -> bool {
    if !env.admissible(start) {
        return false;
    }
    let mut s = *start;
    if early_exit(&s) {
        return true;
    }
    for _ in 0..horizon {
        s = env.propagate(&s, &env.backup(&s));
        if !env.admissible(&s) {
            return false;
        }
        if early_exit(&s) {
            return true;
        }
    }
    true
}

/// Predict the `desired` step, then roll the backup from the prediction for
/// up to `horizon` steps; intervene on any admissible-set violation. The
/// environment's recovery region is the early exit.
pub fn implicit_simplex<E: SafetySpec>(env: &E, state: &E::State, desired: &Action, horizon: usize) -> FilterDecision {
    implicit_simplex_with_exit(env, state, desired, horizon, |s| env.in_recovery_region(s))
}

pub fn implicit_simplex_with_exit<E: SafetySpec, X: Fn(&E::State) -> bool>(
    env: &E,
    state: &E::State,
    desired: &Action,
    horizon: usize,
    early_exit: X,
) -> FilterDecision {
    assert!(horizon >= 1, "implicit horizon must be at least one step");
    let predicted = env.propagate(state, desired);
    let diagnostics = Diagnostics {
        slack: env.constraints(&predicted),
        fallback: None,
    };
    if backup_recovers(env, &predicted, horizon, early_exit) {
        let mut d = FilterDecision::pass(*desired);
        d.diagnostics = diagnostics;
        d
    } else {
        switch_to_backup(env, state, desired, diagnostics)
    }
}
