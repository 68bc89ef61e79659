//! Experiment harness: the boosting attack comparison, split stability,
//! top-k significance analysis, competition replay, and the synthetic
//! fixtures they run on.
//!
//! Every experiment is a pure function of its config and seed. Repetitions
//! run in parallel but are collected in index order.

mod accuracy;
mod boosting;
pub mod fixtures;
mod replay;
pub mod report;
mod significance;
mod stability;

pub use accuracy::{run_nonadaptive_accuracy, AccuracyConfig, AccuracyTrial};
pub use boosting::{
    run_boosting_experiment, AttackSetting, BoostingRecord, ExperimentConfig, ExperimentReport,
    SettingSummary,
};
pub use replay::{
    compare_mechanisms, perturbation_diff, replay_competition, report_from, test_inversions,
    InversionTest, MechanismReplay, Perturbation, RecordedCompetition, ReplayReport,
};
pub use significance::{
    compare_pairs, run_significance_analysis, PairTest, SignificanceRow, SignificanceTable,
    SIGNIFICANCE_LEVEL,
};
pub use stability::{run_split_stability, HalfScoreRecord, StabilityConfig, StabilityReport, StabilityRow};

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub(crate) fn summarize(v: &[f64]) -> (f64, f64) {
    let m = crate::stats::mean(v);
    (m, crate::stats::sample_std(v).unwrap_or(0.0))
}
