use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RtaMode {
    On,
    Off,
}

impl RtaMode {
    pub fn name(self) -> &'static str {
        match self {
            RtaMode::On => "on",
            RtaMode::Off => "off",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeMetrics {
    /// Sum of evaluation rewards (every safety term included).
    pub ret: f64,
    pub length: usize,
    pub success: bool,
    pub interventions: usize,
    /// Steps that ended outside the admissible set.
    pub violations: usize,
    /// Mean `|u_act - u_desired|` over intervening steps, 0 without any.
    pub correction: f64,
}

impl EpisodeMetrics {
    /// The shared "interventions / violations" column: interventions with
    /// the RTA on, violations with it off.
    pub fn interventions_or_violations(&self, mode: RtaMode) -> usize {
        match mode {
            RtaMode::On => self.interventions,
            RtaMode::Off => self.violations,
        }
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count();
        if n == 0 {
            return Self::default();
        }
        let mean = values.clone().sum::<f64>() / n as f64;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        Self {
            mean,
            std: math::sqrt(var),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    #[serde(rename = "return")]
    pub ret: Stat,
    pub length: Stat,
    pub success: Stat,
    pub interventions_or_violations: Stat,
    pub interventions: Stat,
    pub violations: Stat,
    pub correction: Stat,
    /// Episodes with at least one violating step.
    pub violating_episodes: usize,
}

impl EvalSummary {
    /// Per-episode mean and spread; an empty list gives all zeros.
    pub fn from_episodes(mode: RtaMode, eps: &[EpisodeMetrics]) -> Self {
        let it = eps.iter();
        Self {
            episodes: eps.len(),
            ret: Stat::of(it.clone().map(|e| e.ret)),
            length: Stat::of(it.clone().map(|e| e.length as f64)),
            success: Stat::of(it.clone().map(|e| if e.success { 1.0 } else { 0.0 })),
            interventions_or_violations: Stat::of(it.clone().map(|e| e.interventions_or_violations(mode) as f64)),
            interventions: Stat::of(it.clone().map(|e| e.interventions as f64)),
            violations: Stat::of(it.clone().map(|e| e.violations as f64)),
            correction: Stat::of(it.clone().map(|e| e.correction)),
            violating_episodes: eps.iter().filter(|e| e.violations > 0).count(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_all_zero() {
        let s = EvalSummary::from_episodes(RtaMode::On, &[]);
        assert_eq!(s, EvalSummary::default());
    }

    #[test]
    fn population_spread() {
        let s = Stat::of([1.0, 3.0].into_iter());
        assert_eq!(s, Stat { mean: 2.0, std: 1.0 });
    }
}
