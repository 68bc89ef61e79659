//! Leaderboard mechanisms for machine-learning competitions.
//!
//! The crate contains three sequential scoring mechanisms (the Ladder with a
//! fixed step, its parameter-free variant driven by a paired significance
//! threshold, and a Kaggle-style rounding reference), the two compositions
//! that turn a single-sequence mechanism into a multi-team leaderboard, the
//! boosting adversary that attacks them, and the statistics needed to
//! measure how far a published leaderboard drifts from the truth.
//!
//! Module map:
//!
//! - [`losses`]: loss functions, empirical loss and grid rounding.
//! - [`mechanisms`]: mechanism state machines and leaderboard compositions.
//! - [`stats`]: paired t-test, Student tail probabilities, Bonferroni,
//!   Hoeffding envelopes and the leaderboard-error metric.
//! - [`attack`]: the boosting attack over a submit-only oracle.
//! - [`store`]: competitions on disk, submission parsing, the event log.
//! - [`simlab`]: seeded experiments, fixtures and replay.

pub mod attack;
mod error;
pub mod losses;
pub mod mechanisms;
pub mod rng;
pub mod simlab;
pub mod stats;
pub mod store;

pub use error::{Error, Result};
pub use losses::{
    clipped_log_loss, empirical_loss, round_to_grid, zero_one_loss, Grid, GridValue, Label,
    LabelAlphabet, LabelVector, LossKind, LossVector, Predictions,
};
pub use mechanisms::{
    Incumbent, KaggleState, LadderPfState, LadderState, LeaderboardEntry, MechanismSpec,
    MechanismState, StepOutcome,
};
pub use stats::TTestResult;
