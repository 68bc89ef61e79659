//! Is the top private score really better than the ones behind it?

use serde::{Deserialize, Serialize};

use crate::losses::LossVector;
use crate::stats::{bonferroni, paired_t};
use crate::{Error, Result};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Paired test of one pair of loss vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    /// `None` when the differences have zero variance.
    pub statistic: Option<f64>,
    pub p_raw: Option<f64>,
    pub p_corrected: Option<f64>,
    pub significant: bool,
    pub degenerate: bool,
}

/// Two-sided paired t-tests of each `(a, b)` pair, Bonferroni-corrected over
/// the non-degenerate pairs.
pub fn compare_pairs(pairs: &[(&LossVector, &LossVector)], alpha: f64) -> Result<Vec<PairTest>> {
    let mut raw = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        match paired_t(a.values(), b.values()) {
            Ok(t) => raw.push(Some((t.statistic, t.p_value_two_sided()))),
            Err(Error::DegenerateDifference) => raw.push(None),
            Err(e) => return Err(e),
        }
    }
    let live: Vec<f64> = raw.iter().flatten().map(|&(_, p)| p).collect();
    let mut corrected = bonferroni(&live).into_iter();
    Ok(raw
        .into_iter()
        .map(|r| match r {
            Some((t, p)) => {
                let pc = corrected.next().expect("one corrected value per live pair");
                PairTest {
                    statistic: Some(t),
                    p_raw: Some(p),
                    p_corrected: Some(pc),
                    significant: pc < alpha,
                    degenerate: false,
                }
            }
            None => PairTest {
                statistic: None,
                p_raw: None,
                p_corrected: None,
                significant: false,
                degenerate: true,
            },
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    /// Public rank of the submission compared against rank 1.
    pub rank: usize,
    #[serde(flatten)]
    pub test: PairTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceTable {
    pub alpha: f64,
    /// Number of pairs the correction divides by.
    pub comparisons: usize,
    pub rows: Vec<SignificanceRow>,
}

impl SignificanceTable {
    pub fn flagged(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.test.significant)
            .map(|r| r.rank)
            .collect()
    }
}

/// `private_losses[i]` belongs to the submission at public rank `i + 1`.
/// Tests rank 1 against each of ranks `2..=m` on the private examples.
pub fn run_significance_analysis(private_losses: &[LossVector]) -> Result<SignificanceTable> {
    if private_losses.len() < 2 {
        return Err(Error::input(format!(
            "significance analysis needs at least 2 submissions, got {}",
            private_losses.len()
        )));
    }
    let top = &private_losses[0];
    let pairs: Vec<(&LossVector, &LossVector)> = private_losses[1..].iter().map(|l| (l, top)).collect();
    let tests = compare_pairs(&pairs, SIGNIFICANCE_LEVEL)?;
    let comparisons = tests.iter().filter(|t| !t.degenerate).count();
    Ok(SignificanceTable {
        alpha: SIGNIFICANCE_LEVEL,
        comparisons,
        rows: tests
            .into_iter()
            .enumerate()
            .map(|(i, test)| SignificanceRow { rank: i + 2, test })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: &[f64]) -> LossVector {
        LossVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_vectors_are_degenerate() {
        let a = lv(&[0.0, 1.0, 1.0, 0.0]);
        let t = run_significance_analysis(&[a.clone(), a]).unwrap();
        assert!(t.rows[0].test.degenerate);
        assert_eq!(t.comparisons, 0);
        assert!(t.flagged().is_empty());
    }

    #[test]
    fn two_submissions_are_uncorrected() {
        let a = lv(&[0.0, 1.0, 1.0, 0.0, 1.0]);
        let b = lv(&[1.0, 1.0, 0.0, 0.0, 1.0]);
        let t = run_significance_analysis(&[a, b]).unwrap();
        assert_eq!(t.rows[0].test.p_raw, t.rows[0].test.p_corrected);
    }

    #[test]
    fn needs_two() {
        assert!(run_significance_analysis(&[lv(&[0.5])]).is_err());
    }
}
