//! Multi-seed experiment execution: training loops, frozen evaluations in
//! both RTA modes, aggregation across seeds and dependence detection.

mod aggregate;
mod audit;
mod dependence;
mod evaluate;
mod metrics;
mod spec;
mod train;

pub use aggregate::{aggregate_seeds, mean_ci, Band, CurveMetric, EpochBands, StudySummary};
pub use audit::{audit_filters, audit_one, audit_pairings, AuditRow};
pub use dependence::{detect_dependence, detect_dependence_stats, DependenceReport, DependenceThresholds, ModeStats};
pub use evaluate::{evaluate, run_episode};
pub use metrics::{EpisodeMetrics, EvalSummary, RtaMode, Stat};
pub use spec::{AlgoSpec, ExperimentSpec, PAPER_SEEDS};
pub use train::{train, train_observed, EpochRecord, Observer, RunResult, TrainOutput, TrainedAgent, TrainingCounters};
