//! Run time assurance filters.
//!
//! Four monitoring classes are provided: explicit and implicit simplex
//! (switch wholesale to the backup controller) and explicit and implicit
//! ASIF (minimally perturb the desired action subject to barrier rows). Every
//! filter is a pure function of `(environment, state, desired action)`.

mod asif;
pub mod qp;
mod simplex;

use core::fmt;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

pub use asif::{barrier_constraint_rows, explicit_asif, implicit_asif, implicit_barrier};
pub use simplex::{explicit_simplex, implicit_simplex, implicit_simplex_with_exit};

use crate::env::{Action, EnvKind};
use crate::error::ConfigError;
use crate::math;
use crate::safety::{SafetySpec, MAX_CONSTRAINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    None,
    ExplicitSimplex,
    ImplicitSimplex,
    ExplicitAsif,
    ImplicitAsif,
}

impl FilterKind {
    pub const ALL: [FilterKind; 5] = [
        FilterKind::None,
        FilterKind::ExplicitSimplex,
        FilterKind::ImplicitSimplex,
        FilterKind::ExplicitAsif,
        FilterKind::ImplicitAsif,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::None => "none",
            FilterKind::ExplicitSimplex => "explicit_simplex",
            FilterKind::ImplicitSimplex => "implicit_simplex",
            FilterKind::ExplicitAsif => "explicit_asif",
            FilterKind::ImplicitAsif => "implicit_asif",
        }
    }

    /// Filters defined for an environment. The pendulum only has implicit
    /// simplex monitoring.
    pub fn supported_by(self, env: EnvKind) -> bool {
        match env {
            EnvKind::Pendulum => matches!(self, FilterKind::None | FilterKind::ImplicitSimplex),
            EnvKind::Docking2d | EnvKind::Docking3d => true,
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Strengthening of the discrete barrier condition
/// `h(f(s, u)) >= (1 - gamma dt) h(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierParams {
    /// Class-kappa gain, 1/s. `None` uses `0.05 / dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Feasibility tolerance on QP rows.
    #[serde(default = "default_slack")]
    pub slack_tolerance: f64,
    /// Corrections at or below this norm are treated as pass-through.
    #[serde(default = "default_dead_band")]
    pub intervention_threshold: f64,
}

fn default_slack() -> f64 {
    1e-9
}

fn default_dead_band() -> f64 {
    1e-6
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self {
            gamma: None,
            slack_tolerance: default_slack(),
            intervention_threshold: default_dead_band(),
        }
    }
}

impl BarrierParams {
    pub fn gamma_for(&self, dt: f64) -> f64 {
        self.gamma.unwrap_or(0.1 / dt * 0.5)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterParams {
    /// Backup rollout horizon for implicit filters; `None` uses the
    /// environment default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub barrier: BarrierParams,
}

/// Why an ASIF filter substituted the backup action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    /// The QP had no feasible point.
    Infeasible,
    /// The QP action would leave the safe set once the nonlinear one-step
    /// prediction is checked.
    Unverified,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Simplex: constraint values at the predicted state. ASIF: row slacks at
    /// the actuated action.
    pub slack: ArrayVec<f64, MAX_CONSTRAINTS>,
    pub fallback: Option<Fallback>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterDecision {
    pub actuated: Action,
    pub intervened: bool,
    /// `|u_act - u_desired|_2`.
    pub correction: f64,
    pub diagnostics: Diagnostics,
}

impl FilterDecision {
    pub fn pass(desired: Action) -> Self {
        Self {
            actuated: desired,
            intervened: false,
            correction: 0.0,
            diagnostics: Diagnostics::default(),
        }
    }

    pub(crate) fn replace(desired: &Action, actuated: Action, diagnostics: Diagnostics) -> Self {
        let diff: [f64; 3] = core::array::from_fn(|i| actuated[i] - desired[i]);
        Self {
            actuated,
            intervened: true,
            correction: math::norm(&diff),
            diagnostics,
        }
    }
}

/// A configured, stateless per-step filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Filter {
    kind: FilterKind,
    horizon: usize,
    barrier: BarrierParams,
}

impl Filter {
    pub fn none() -> Self {
        Self {
            kind: FilterKind::None,
            horizon: 1,
            barrier: BarrierParams::default(),
        }
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn apply<E: SafetySpec>(&self, env: &E, state: &E::State, desired: &Action) -> FilterDecision {
        let desired = env.clip_action(desired);
        match self.kind {
            FilterKind::None => FilterDecision::pass(desired),
            FilterKind::ExplicitSimplex => explicit_simplex(env, state, &desired),
            FilterKind::ImplicitSimplex => implicit_simplex(env, state, &desired, self.horizon),
            FilterKind::ExplicitAsif => explicit_asif(env, state, &desired, &self.barrier),
            FilterKind::ImplicitAsif => implicit_asif(env, state, &desired, self.horizon, &self.barrier),
        }
    }
}

/// Builds the filter for `kind`, rejecting pairings the environment does not
/// define.
pub fn make_filter<E: SafetySpec>(kind: FilterKind, env: &E, params: &FilterParams) -> Result<Filter, ConfigError> {
    if !kind.supported_by(env.kind()) {
        return Err(ConfigError::UnsupportedFilter { env: env.kind(), filter: kind });
    }
    let horizon = params.horizon.unwrap_or_else(|| env.backup_horizon());
    if horizon == 0 {
        return Err(ConfigError::InvalidParameter("implicit horizon must be >= 1".into()));
    }
    let gamma = params.barrier.gamma_for(env.dt());
    if !(gamma > 0.0) {
        return Err(ConfigError::InvalidParameter("barrier gamma must be > 0".into()));
    }
    Ok(Filter {
        kind,
        horizon,
        barrier: params.barrier,
    })
}
