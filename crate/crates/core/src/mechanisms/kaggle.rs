use serde::{Deserialize, Serialize};

use super::{Incumbent, StepOutcome};
use crate::losses::Grid;
use crate::Result;

/// The Kaggle reference mechanism: every submission gets its empirical
/// loss rounded to the `alpha` grid.
pub fn kaggle_step(empirical: f64, alpha: f64) -> Result<f64> {
    Ok(Grid::new(alpha)?.round(empirical).value())
}

/// Kaggle release rule plus the per-team bookkeeping a leaderboard needs.
/// Releases themselves are stateless; `best` is the smallest release so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KaggleState {
    alpha: Grid,
    best: Incumbent,
    steps_seen: u64,
}

impl KaggleState {
    pub fn new(alpha: f64) -> Result<Self> {
        Ok(KaggleState {
            alpha: Grid::new(alpha)?,
            best: Incumbent::Infinity,
            steps_seen: 0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.step()
    }

    pub fn best(&self) -> Incumbent {
        self.best
    }

    pub fn steps_seen(&self) -> u64 {
        self.steps_seen
    }

    pub fn step(&mut self, empirical: f64) -> StepOutcome {
        self.steps_seen += 1;
        let reported = self.alpha.round(empirical).value();
        let improved = match self.best {
            Incumbent::Infinity => true,
            Incumbent::Score(b) => reported < b,
        };
        if improved {
            self.best = Incumbent::Score(reported);
        }
        StepOutcome { reported, improved }
    }
}
