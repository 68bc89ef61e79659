use serde::{Deserialize, Serialize};

use super::{Incumbent, StepOutcome};
use crate::losses::Grid;
use crate::Result;

/// Fixed-step Ladder.
///
/// A submission releases its rounded empirical loss only if it beats the
/// incumbent by more than `eta`; otherwise the incumbent is repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderState {
    eta: Grid,
    best: Incumbent,
    steps_seen: u64,
    updates_emitted: u64,
}

impl LadderState {
    pub fn new(eta: f64) -> Result<Self> {
        Ok(LadderState {
            eta: Grid::new(eta)?,
            best: Incumbent::Infinity,
            steps_seen: 0,
            updates_emitted: 0,
        })
    }

    /// State whose incumbent is `best` rounded to the step grid.
    pub fn with_incumbent(eta: f64, best: f64) -> Result<Self> {
        let mut s = LadderState::new(eta)?;
        s.best = Incumbent::Score(s.eta.round(best).value());
        Ok(s)
    }

    pub fn eta(&self) -> f64 {
        self.eta.step()
    }

    pub fn best(&self) -> Incumbent {
        self.best
    }

    pub fn steps_seen(&self) -> u64 {
        self.steps_seen
    }

    pub fn updates_emitted(&self) -> u64 {
        self.updates_emitted
    }

    pub fn step(&mut self, empirical: f64) -> StepOutcome {
        self.steps_seen += 1;
        let accept = match self.best {
            Incumbent::Infinity => true,
            Incumbent::Score(best) => empirical < best - self.eta.step(),
        };
        if accept {
            let released = self.eta.round(empirical).value();
            self.best = Incumbent::Score(released);
            self.updates_emitted += 1;
            StepOutcome {
                reported: released,
                improved: true,
            }
        } else {
            StepOutcome {
                reported: self.best.score().expect("incumbent set after first step"),
                improved: false,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn below_threshold_repeats_incumbent() {
        let mut s = LadderState::with_incumbent(0.01, 0.35).unwrap();
        let out = s.step(0.342);
        assert_eq!(out.reported, 0.35);
        assert!(!out.improved);
        assert_eq!(s.steps_seen(), 1);
    }

    #[test]
    fn clear_improvement_releases() {
        let mut s = LadderState::with_incumbent(0.01, 0.35).unwrap();
        let out = s.step(0.33);
        assert_eq!(out.reported, 0.33);
        assert!(out.improved);
        assert_eq!(s.best(), Incumbent::Score(0.33));
    }

    #[test]
    fn first_submission_always_releases() {
        let mut s = LadderState::new(0.01).unwrap();
        assert_eq!(s.best(), Incumbent::Infinity);
        let out = s.step(0.5);
        assert_eq!(out.reported, 0.5);
        assert_eq!(s.updates_emitted(), 1);
    }

    #[test]
    fn equality_at_threshold_does_not_update() {
        let mut s = LadderState::with_incumbent(0.25, 0.75).unwrap();
        assert!(!s.step(0.5).improved);
        assert!(s.step(0.49).improved);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(LadderState::new(0.0).is_err());
    }

    proptest! {
        #[test]
        fn reports_non_increasing_on_grid(stream in proptest::collection::vec(0.0f64..1.0, 1..300), eta in 0.005f64..0.3) {
            let mut s = LadderState::new(eta).unwrap();
            let grid = Grid::new(eta).unwrap();
            let mut last = f64::INFINITY;
            for x in stream {
                let r = s.step(x).reported;
                prop_assert!(r <= last);
                prop_assert!(grid.contains(r));
                last = r;
            }
            prop_assert!(s.updates_emitted() <= (2.0 / eta).ceil() as u64 + 1);
        }
    }
}
