//! Sequential scoring mechanisms and leaderboard compositions.
//!
//! Each mechanism is a small state machine fed one submission at a time.
//! [`MechanismState`] wraps the three kinds behind one interface taking a
//! [`LossVector`]; the fixed-step Ladder and the Kaggle reference only look
//! at its mean, the parameter-free Ladder needs the whole vector.

mod compose;
mod kaggle;
mod ladder;
mod ladder_pf;

pub use compose::{per_team_leaderboard, LeaderboardEntry, PerRankBoard, PerTeamBoard};
pub use kaggle::{kaggle_step, KaggleState};
pub use ladder::LadderState;
pub use ladder_pf::LadderPfState;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::losses::{Grid, LossVector};
use crate::Result;

/// Multiplier in the default Ladder step `(ln(k n) / n)^(1/3)`.
pub const DEFAULT_ETA_CONSTANT: f64 = 1.0;

/// Default fixed step for a public split of `n` examples and an expected
/// `k_hint` submissions (defaults to `n`).
pub fn default_eta(n: usize, k_hint: Option<usize>) -> f64 {
    let n = n.max(1) as f64;
    let k = k_hint.map_or(n, |k| k as f64).max(2.0);
    DEFAULT_ETA_CONSTANT * ((k * n).ln() / n).cbrt()
}

/// The best score a mechanism instance has released, or the initial
/// "nothing released yet" state. Serialized as the string `"infinity"` or a
/// number.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Incumbent {
    #[default]
    Infinity,
    Score(f64),
}

impl Incumbent {
    pub fn score(self) -> Option<f64> {
        match self {
            Incumbent::Infinity => None,
            Incumbent::Score(s) => Some(s),
        }
    }
}

impl Serialize for Incumbent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Incumbent::Infinity => s.serialize_str("infinity"),
            Incumbent::Score(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Incumbent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Incumbent::Score(v)),
            Raw::Str(s) if s == "infinity" => Ok(Incumbent::Infinity),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"infinity\", got {s:?}"
            ))),
        }
    }
}

/// Result of feeding one submission to a mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// The value released for this submission.
    pub reported: f64,
    /// Whether the instance's incumbent best changed.
    pub improved: bool,
}

/// Mechanism choice and parameters, as stored in a competition spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MechanismSpec {
    Ladder { eta: f64 },
    LadderPf,
    Kaggle { alpha: f64 },
}

impl MechanismSpec {
    pub const KAGGLE_DEFAULT_ALPHA: f64 = 1e-5;

    pub fn name(&self) -> &'static str {
        match self {
            MechanismSpec::Ladder { .. } => "ladder",
            MechanismSpec::LadderPf => "ladder-pf",
            MechanismSpec::Kaggle { .. } => "kaggle",
        }
    }

    /// Fresh state for a scoring subset of `n` examples.
    pub fn instantiate(&self, n: usize) -> Result<MechanismState> {
        Ok(match *self {
            MechanismSpec::Ladder { eta } => MechanismState::Ladder(LadderState::new(eta)?),
            MechanismSpec::LadderPf => MechanismState::LadderPf(LadderPfState::new(n)?),
            MechanismSpec::Kaggle { alpha } => MechanismState::Kaggle(KaggleState::new(alpha)?),
        })
    }

    /// Grid every released value of this mechanism lies on.
    pub fn grid(&self, n: usize) -> Result<Grid> {
        match *self {
            MechanismSpec::Ladder { eta } => Grid::new(eta),
            MechanismSpec::LadderPf => Grid::reciprocal(n as u64),
            MechanismSpec::Kaggle { alpha } => Grid::new(alpha),
        }
    }
}

/// Snapshot of any mechanism instance: kind, parameters, incumbent and
/// counters. Serializes to a self-describing JSON record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MechanismState {
    Ladder(LadderState),
    LadderPf(LadderPfState),
    Kaggle(KaggleState),
}

impl MechanismState {
    pub fn step(&mut self, losses: &LossVector) -> Result<StepOutcome> {
        match self {
            MechanismState::Ladder(s) => Ok(s.step(losses.mean())),
            MechanismState::LadderPf(s) => s.step(losses),
            MechanismState::Kaggle(s) => Ok(s.step(losses.mean())),
        }
    }

    /// The instance's current leaderboard score.
    pub fn best(&self) -> Incumbent {
        match self {
            MechanismState::Ladder(s) => s.best(),
            MechanismState::LadderPf(s) => s.best(),
            MechanismState::Kaggle(s) => s.best(),
        }
    }

    pub fn steps_seen(&self) -> u64 {
        match self {
            MechanismState::Ladder(s) => s.steps_seen(),
            MechanismState::LadderPf(s) => s.steps_seen(),
            MechanismState::Kaggle(s) => s.steps_seen(),
        }
    }

    pub fn spec(&self) -> MechanismSpec {
        match self {
            MechanismState::Ladder(s) => MechanismSpec::Ladder { eta: s.eta() },
            MechanismState::LadderPf(_) => MechanismSpec::LadderPf,
            MechanismState::Kaggle(s) => MechanismSpec::Kaggle { alpha: s.alpha() },
        }
    }
}
