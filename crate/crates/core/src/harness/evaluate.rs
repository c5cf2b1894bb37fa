use alloc::vec::Vec;

use rand::Rng;

use super::metrics::{EpisodeMetrics, EvalSummary, RtaMode};
use crate::agents::Policy;
use crate::env::{evaluation_reward, Action, MAX_STATE_DIM};
use crate::rta::{Filter, FilterDecision};
use crate::safety::SafetySpec;

/// Plays one episode from a fresh initial state. `act` maps the state and
/// observation to the desired action. With `mode == Off` the filter is
/// bypassed and only the actuator clip applies.
pub fn run_episode<E, R, A>(env: &E, filter: &Filter, mode: RtaMode, init_rng: &mut R, mut act: A) -> EpisodeMetrics
where
    E: SafetySpec,
    R: Rng + ?Sized,
    A: FnMut(&E::State, &[f64]) -> Action,
{
    let mut s = env.sample_initial_state(init_rng);
    let mut obs = [0.0; MAX_STATE_DIM];
    let obs = &mut obs[..env.obs_dim()];
    let mut m = EpisodeMetrics {
        ret: 0.0,
        length: 0,
        success: false,
        interventions: 0,
        violations: 0,
        correction: 0.0,
    };
    let mut correction_sum = 0.0;
    loop {
        env.observe(&s, obs);
        let desired = act(&s, obs);
        let decision = match mode {
            RtaMode::On => filter.apply(env, &s, &desired),
            RtaMode::Off => FilterDecision::pass(env.clip_action(&desired)),
        };
        let out = env.step(&s, &decision.actuated, m.length);
        m.ret += evaluation_reward(&out, decision.intervened, env.intervention_penalty());
        m.length += 1;
        if decision.intervened {
            m.interventions += 1;
            correction_sum += decision.correction;
        }
        if out.safety_violated {
            m.violations += 1;
        }
        s = out.next_state;
        if out.terminal.is_done() {
            m.success = env.is_success(out.terminal);
            break;
        }
    }
    if m.interventions > 0 {
        m.correction = correction_sum / m.interventions as f64;
    }
    m
}

/// Frozen, deterministic evaluation of `policy`.
pub fn evaluate<E, P, R>(
    policy: &P,
    env: &E,
    filter: &Filter,
    mode: RtaMode,
    episodes: usize,
    rng: &mut R,
) -> (Vec<EpisodeMetrics>, EvalSummary)
where
    E: SafetySpec,
    P: Policy + ?Sized,
    R: Rng + ?Sized,
{
    let eps: Vec<EpisodeMetrics> = (0..episodes)
        .map(|_| run_episode(env, filter, mode, rng, |_, obs| policy.mean_action(obs)))
        .collect();
    let summary = EvalSummary::from_episodes(mode, &eps);
    (eps, summary)
}
