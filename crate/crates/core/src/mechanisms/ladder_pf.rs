use serde::{Deserialize, Serialize};

use super::{Incumbent, StepOutcome};
use crate::losses::{Grid, LossVector};
use crate::{Error, Result};

/// Parameter-free Ladder.
///
/// The margin is `s / sqrt(n)` where `s` is the sample standard deviation of
/// the per-example difference between the candidate's losses and the
/// incumbent's. Releases are rounded to the `1/n` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderPfState {
    n: usize,
    best: Incumbent,
    best_losses: LossVector,
    steps_seen: u64,
    updates_emitted: u64,
}

impl LadderPfState {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(format!(
                "parameter-free Ladder needs at least 2 examples, got {n}"
            )));
        }
        Ok(LadderPfState {
            n,
            best: Incumbent::Infinity,
            best_losses: LossVector::zeros(n),
            steps_seen: 0,
            updates_emitted: 0,
        })
    }

    /// State with a given incumbent score and loss vector.
    pub fn with_incumbent(best: f64, best_losses: LossVector) -> Result<Self> {
        let mut s = LadderPfState::new(best_losses.len())?;
        s.best = Incumbent::Score(s.grid().round(best).value());
        s.best_losses = best_losses;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn best(&self) -> Incumbent {
        self.best
    }

    pub fn best_losses(&self) -> &LossVector {
        &self.best_losses
    }

    pub fn steps_seen(&self) -> u64 {
        self.steps_seen
    }

    pub fn updates_emitted(&self) -> u64 {
        self.updates_emitted
    }

    pub fn grid(&self) -> Grid {
        Grid::reciprocal(self.n as u64).expect("n >= 2")
    }

    pub fn step(&mut self, losses: &LossVector) -> Result<StepOutcome> {
        if losses.len() != self.n {
            return Err(Error::input(format!(
                "loss vector has {} entries, mechanism scores {}",
                losses.len(),
                self.n
            )));
        }
        self.steps_seen += 1;
        let accept = match self.best {
            Incumbent::Infinity => true,
            Incumbent::Score(best) => self.beats(best, losses),
        };
        if accept {
            let released = self.grid().round(losses.mean()).value();
            self.best = Incumbent::Score(released);
            self.best_losses = losses.clone();
            self.updates_emitted += 1;
            Ok(StepOutcome {
                reported: released,
                improved: true,
            })
        } else {
            Ok(StepOutcome {
                reported: best_or_panic(self.best),
                improved: false,
            })
        }
    }

    /// `mean(l) < best - std(l - l_best) / sqrt(n)`, multiplied through by
    /// `n` and squared. With `best = k/n` and `sum = sum(l)` this is
    /// `k - sum > 0` and `(k - sum)^2 (n - 1) > n Σd² - (Σd)²`. Every term is
    /// an integer for 0/1 losses, so boundary cases compare exactly.
    fn beats(&self, best: f64, losses: &LossVector) -> bool {
        let n = self.n as f64;
        let k = self.grid().round(best).multiple() as f64;
        let gap = k - losses.sum();
        if gap <= 0.0 {
            return false;
        }
        let (mut sd, mut sd2) = (0.0, 0.0);
        for (a, b) in losses.values().iter().zip(self.best_losses.values()) {
            let d = a - b;
            sd += d;
            sd2 += d * d;
        }
        let scaled_var = (n * sd2 - sd * sd).max(0.0);
        gap * gap * (n - 1.0) > scaled_var
    }
}

fn best_or_panic(best: Incumbent) -> f64 {
    best.score().expect("incumbent set after first step")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::sample_std;
    use proptest::prelude::*;

    fn lv(v: Vec<f64>) -> LossVector {
        LossVector::new(v).unwrap()
    }

    #[test]
    fn first_submission_releases_on_reciprocal_grid() {
        let mut s = LadderPfState::new(10).unwrap();
        let out = s
            .step(&lv(vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!(out.reported, 0.5);
        assert!(out.improved);
        assert_eq!(s.best(), Incumbent::Score(0.5));
    }

    #[test]
    fn strict_boundary_does_not_update() {
        // Incumbent 0.40 over n = 100 (40 ones). Candidate differs by +1 on 10
        // examples and -1 on 15, so its mean is 0.35 and the difference has
        // sample std exactly 0.5: threshold 0.40 - 0.5/10 = 0.35, not beaten.
        let n = 100;
        let best: Vec<f64> = (0..n).map(|i| if i < 40 { 1.0 } else { 0.0 }).collect();
        let mut cand = best.clone();
        for c in cand.iter_mut().take(15) {
            *c = 0.0;
        }
        for c in cand.iter_mut().skip(40).take(10) {
            *c = 1.0;
        }
        let diff: Vec<f64> = cand.iter().zip(&best).map(|(a, b)| a - b).collect();
        assert!((sample_std(&diff).unwrap() - 0.5).abs() < 1e-15);
        let cand = lv(cand);
        assert!((cand.mean() - 0.35).abs() < 1e-15);

        let mut s = LadderPfState::with_incumbent(0.40, lv(best)).unwrap();
        let out = s.step(&cand).unwrap();
        assert_eq!(out.reported, 0.4);
        assert!(!out.improved);
    }

    #[test]
    fn one_more_example_crosses_boundary() {
        let n = 100;
        let best: Vec<f64> = (0..n).map(|i| if i < 40 { 1.0 } else { 0.0 }).collect();
        let mut cand = best.clone();
        for c in cand.iter_mut().take(16) {
            *c = 0.0;
        }
        for c in cand.iter_mut().skip(40).take(10) {
            *c = 1.0;
        }
        let mut s = LadderPfState::with_incumbent(0.40, lv(best)).unwrap();
        let out = s.step(&lv(cand)).unwrap();
        assert!(out.improved);
        assert_eq!(out.reported, 0.34);
    }

    #[test]
    fn resubmitting_incumbent_is_degenerate_no_op() {
        let v = lv(vec![1.0, 0.0, 1.0, 1.0]);
        let mut s = LadderPfState::new(4).unwrap();
        s.step(&v).unwrap();
        let out = s.step(&v).unwrap();
        assert!(!out.improved);
        assert_eq!(out.reported, 0.75);
        assert_eq!(s.updates_emitted(), 1);
        assert_eq!(s.steps_seen(), 2);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let mut s = LadderPfState::new(4).unwrap();
        assert!(s.step(&lv(vec![0.0, 1.0])).is_err());
        assert_eq!(s.steps_seen(), 0);
    }

    /// Direct transcription of the acceptance rule, for comparison.
    fn textbook_accepts(best: f64, best_losses: &[f64], cand: &[f64]) -> bool {
        let n = cand.len() as f64;
        let diff: Vec<f64> = cand.iter().zip(best_losses).map(|(a, b)| a - b).collect();
        let s = sample_std(&diff).unwrap();
        let mean = cand.iter().sum::<f64>() / n;
        mean < best - s / n.sqrt()
    }

    proptest! {
        #[test]
        fn agrees_with_textbook_rule_off_boundary(
            pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 5..80),
        ) {
            let (inc, cand): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let mut s = LadderPfState::new(inc.len()).unwrap();
            s.step(&lv(inc.clone())).unwrap();
            let best = s.best().score().unwrap();
            let textbook = textbook_accepts(best, &inc, &cand);
            // skip near-ties where the two float evaluations may legitimately differ
            let n = cand.len() as f64;
            let diff: Vec<f64> = cand.iter().zip(&inc).map(|(a, b)| a - b).collect();
            let margin = best - sample_std(&diff).unwrap() / n.sqrt() - cand.iter().sum::<f64>() / n;
            prop_assume!(margin.abs() > 1e-9);
            let out = s.step(&lv(cand)).unwrap();
            prop_assert_eq!(out.improved, textbook);
        }

        #[test]
        fn reports_non_increasing_on_grid(
            rows in proptest::collection::vec(proptest::collection::vec(0u8..2, 20), 1..60),
        ) {
            let mut s = LadderPfState::new(20).unwrap();
            let grid = Grid::reciprocal(20).unwrap();
            let mut last = f64::INFINITY;
            for row in rows {
                let r = s.step(&lv(row.into_iter().map(f64::from).collect())).unwrap().reported;
                prop_assert!(r <= last);
                prop_assert!(grid.contains(r));
                last = r;
            }
        }
    }
}
