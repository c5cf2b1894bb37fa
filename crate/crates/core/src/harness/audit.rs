use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::evaluate::run_episode;
use super::metrics::RtaMode;
use crate::env::{Action, Docking, DockingParams, EnvKind, Pendulum, Plane};
use crate::error::ConfigError;
use crate::rng;
use crate::rta::{make_filter, Filter, FilterKind, FilterParams};
use crate::safety::SafetySpec;

/// Outcome of driving one (environment, filter) pairing with a uniformly
/// random policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRow {
    pub env: EnvKind,
    pub filter: FilterKind,
    pub episodes: usize,
    pub steps: u64,
    pub interventions: u64,
    pub violations: u64,
    pub violating_episodes: usize,
}

/// Every implemented filter pairing, followed by the unfiltered pendulum
/// control case.
pub fn audit_pairings() -> Vec<(EnvKind, FilterKind)> {
    let mut v: Vec<_> = EnvKind::ALL
        .iter()
        .flat_map(|&e| FilterKind::ALL[1..].iter().filter(move |f| f.supported_by(e)).map(move |&f| (e, f)))
        .collect();
    v.push((EnvKind::Pendulum, FilterKind::None));
    v
}

pub fn audit_filters(episodes: usize, seed: u64) -> Result<Vec<AuditRow>, ConfigError> {
    audit_pairings().into_iter().map(|(e, f)| audit_one(e, f, episodes, seed)).collect()
}

pub fn audit_one(env: EnvKind, filter: FilterKind, episodes: usize, seed: u64) -> Result<AuditRow, ConfigError> {
    match env {
        EnvKind::Pendulum => audit_env(&Pendulum::default(), filter, episodes, seed),
        EnvKind::Docking2d => audit_env(&Docking::new(DockingParams::default(), Plane::TwoD), filter, episodes, seed),
        EnvKind::Docking3d => audit_env(&Docking::new(DockingParams::default(), Plane::ThreeD), filter, episodes, seed),
    }
}

fn audit_env<E: SafetySpec>(env: &E, kind: FilterKind, episodes: usize, seed: u64) -> Result<AuditRow, ConfigError> {
    let filter = match kind {
        FilterKind::None => Filter::none(),
        k => make_filter(k, env, &FilterParams::default())?,
    };
    let stream = 0x0a0d_0000 + ((env.kind() as u64) << 8) + kind as u64;
    let mut init = rng::stream(seed, stream);
    let mut act_rng = rng::stream(seed, stream + 0x100_0000);
    let (dim, bound) = (env.action_dim(), env.action_bound());
    let mut row = AuditRow {
        env: env.kind(),
        filter: kind,
        episodes,
        steps: 0,
        interventions: 0,
        violations: 0,
        violating_episodes: 0,
    };
    for _ in 0..episodes {
        let m = run_episode(env, &filter, RtaMode::On, &mut init, |_, _| {
            let mut a: Action = [0.0; 3];
            for x in a.iter_mut().take(dim) {
                *x = act_rng.random_range(-bound..=bound);
            }
            a
        });
        row.steps += m.length as u64;
        row.interventions += m.interventions as u64;
        row.violations += m.violations as u64;
        if m.violations > 0 {
            row.violating_episodes += 1;
        }
    }
    Ok(row)
}
