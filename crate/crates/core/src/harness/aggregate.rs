use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::metrics::RtaMode;
use super::train::RunResult;
use crate::math;

/// Mean with a symmetric normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl Band {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// `mean ± 1.96 s / sqrt(n)` with the sample standard deviation `s`. A
/// single value has half-width 0. Values are sorted first so the result does
/// not depend on their order.
pub fn mean_ci(values: &[f64]) -> Band {
    let n = values.len();
    if n == 0 {
        return Band::default();
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Band { mean, half_width: 0.0, n };
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Band {
        mean,
        half_width: 1.96 * math::sqrt(var) / math::sqrt(n as f64),
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMetric {
    Return,
    Success,
}

impl CurveMetric {
    pub const ALL: [CurveMetric; 2] = [CurveMetric::Return, CurveMetric::Success];

    pub fn name(self) -> &'static str {
        match self {
            CurveMetric::Return => "return",
            CurveMetric::Success => "success",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochBands {
    pub epoch: usize,
    pub return_on: Band,
    pub return_off: Band,
    pub success_on: Band,
    pub success_off: Band,
}

impl EpochBands {
    pub fn get(&self, metric: CurveMetric, mode: RtaMode) -> Band {
        match (metric, mode) {
            (CurveMetric::Return, RtaMode::On) => self.return_on,
            (CurveMetric::Return, RtaMode::Off) => self.return_off,
            (CurveMetric::Success, RtaMode::On) => self.success_on,
            (CurveMetric::Success, RtaMode::Off) => self.success_off,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub runs: usize,
    /// One row per evaluated epoch, over the runs that reached it.
    pub epochs: Vec<EpochBands>,
    pub final_return_on: Band,
    pub final_return_off: Band,
    pub final_success_on: Band,
    pub final_success_off: Band,
}

/// Per-epoch mean and 95% band of the interim evaluation means of each run.
pub fn aggregate_seeds(results: &[RunResult]) -> StudySummary {
    let mut epochs: Vec<usize> = results.iter().flat_map(|r| r.epochs.iter().map(|e| e.epoch)).collect();
    epochs.sort_unstable();
    epochs.dedup();
    let rows = epochs
        .into_iter()
        .map(|epoch| {
            let recs: Vec<_> = results.iter().filter_map(|r| r.epochs.iter().find(|e| e.epoch == epoch)).collect();
            let col = |f: &dyn Fn(&super::train::EpochRecord) -> f64| mean_ci(&recs.iter().map(|r| f(r)).collect::<Vec<_>>());
            EpochBands {
                epoch,
                return_on: col(&|r| r.on.ret.mean),
                return_off: col(&|r| r.off.ret.mean),
                success_on: col(&|r| r.on.success.mean),
                success_off: col(&|r| r.off.success.mean),
            }
        })
        .collect();
    let finals: Vec<_> = results.iter().filter_map(|r| r.final_on.zip(r.final_off)).collect();
    let fcol = |f: &dyn Fn(&(super::EvalSummary, super::EvalSummary)) -> f64| mean_ci(&finals.iter().map(f).collect::<Vec<_>>());
    StudySummary {
        runs: results.len(),
        epochs: rows,
        final_return_on: fcol(&|p| p.0.ret.mean),
        final_return_off: fcol(&|p| p.1.ret.mean),
        final_success_on: fcol(&|p| p.0.success.mean),
        final_success_off: fcol(&|p| p.1.success.mean),
    }
}
