//! Loss functions, empirical loss and grid rounding.
//!
//! Every loss in this crate is reported on the unit interval. Mechanisms and
//! the concentration bounds in [`crate::stats`] rely on that range.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A class label. Labels of an alphabet of size `k` are `0..k`.
pub type Label = u32;

/// Clipping constant for [`clipped_log_loss`].
pub const LOG_LOSS_P_MIN: f64 = 1e-15;

/// The set of admissible labels `0..size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAlphabet {
    size: u32,
}

impl LabelAlphabet {
    pub const BINARY: LabelAlphabet = LabelAlphabet { size: 2 };

    pub fn new(size: u32) -> Result<Self> {
        if size < 2 {
            return Err(Error::input(format!(
                "label alphabet needs at least 2 labels, got {size}"
            )));
        }
        Ok(LabelAlphabet { size })
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn contains(&self, label: Label) -> bool {
        label < self.size
    }

    fn check(&self, label: Label) -> Result<()> {
        if self.contains(label) {
            Ok(())
        } else {
            Err(Error::input(format!(
                "label {label} outside alphabet 0..{}",
                self.size
            )))
        }
    }
}

/// Predicted labels, one per test example.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(Vec<Label>);

impl LabelVector {
    /// Builds a vector after checking every label against `alphabet`.
    pub fn new(labels: Vec<Label>, alphabet: LabelAlphabet) -> Result<Self> {
        if let Some((i, &bad)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| !alphabet.contains(l))
        {
            return Err(Error::input(format!(
                "label {bad} at position {i} outside alphabet 0..{}",
                alphabet.size()
            )));
        }
        Ok(LabelVector(labels))
    }

    /// Binary vector from booleans (`true` → 1).
    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        LabelVector(bits.into_iter().map(Label::from).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Label> {
        self.0
    }
}

impl std::ops::Index<usize> for LabelVector {
    type Output = Label;

    fn index(&self, i: usize) -> &Label {
        &self.0[i]
    }
}

/// What a team submits: hard labels, or probabilities of label 1 for
/// log-loss competitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictions {
    Labels(LabelVector),
    Probabilities(Vec<f64>),
}

impl Predictions {
    pub fn len(&self) -> usize {
        match self {
            Predictions::Labels(v) => v.len(),
            Predictions::Probabilities(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Newline-separated decimal values, no header, trailing newline.
    ///
    /// Probabilities use the shortest representation that round-trips, so
    /// two ingestion forms of the same submission hash identically.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        use std::fmt::Write;
        let mut out = String::with_capacity(self.len() * 2);
        match self {
            Predictions::Labels(v) => {
                for l in v.as_slice() {
                    writeln!(out, "{l}").unwrap();
                }
            }
            Predictions::Probabilities(p) => {
                for x in p {
                    writeln!(out, "{x}").unwrap();
                }
            }
        }
        out.into_bytes()
    }
}

/// Per-example losses in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LossVector {
    values: Vec<f64>,
    sum: f64,
}

impl LossVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("loss vector is empty"));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::input(format!("loss {bad} outside [0, 1]")));
        }
        let sum = values.iter().sum();
        Ok(LossVector { values, sum })
    }

    /// The all-zero vector the parameter-free Ladder starts from.
    pub fn zeros(n: usize) -> Self {
        LossVector {
            values: vec![0.0; n],
            sum: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.values.len() as f64
    }
}

impl TryFrom<Vec<f64>> for LossVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        LossVector::new(values)
    }
}

impl From<LossVector> for Vec<f64> {
    fn from(v: LossVector) -> Self {
        v.values
    }
}

/// 0/1 loss: 1 iff the labels differ.
pub fn zero_one_loss(predicted: Label, actual: Label, alphabet: LabelAlphabet) -> Result<f64> {
    alphabet.check(predicted)?;
    alphabet.check(actual)?;
    Ok(if predicted == actual { 0.0 } else { 1.0 })
}

/// Binary cross-entropy with `p` clipped to `[P_MIN, 1 - P_MIN]`, divided by
/// `-ln P_MIN` so the worst case is exactly 1.
pub fn clipped_log_loss(predicted_prob: f64, actual: Label) -> Result<f64> {
    if !(0.0..=1.0).contains(&predicted_prob) {
        return Err(Error::input(format!(
            "probability {predicted_prob} outside [0, 1]"
        )));
    }
    if actual > 1 {
        return Err(Error::input(format!(
            "log loss needs a binary label, got {actual}"
        )));
    }
    Ok(log_loss_unchecked(predicted_prob, actual))
}

#[inline]
fn log_loss_unchecked(p: f64, actual: Label) -> f64 {
    let p = p.clamp(LOG_LOSS_P_MIN, 1.0 - LOG_LOSS_P_MIN);
    let raw = if actual == 1 { -p.ln() } else { -(1.0 - p).ln() };
    (raw / -LOG_LOSS_P_MIN.ln()).clamp(0.0, 1.0)
}

/// Loss function identifier stored with a competition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    ZeroOne,
    ClippedLog,
}

impl LossKind {
    /// Per-example losses of `submission` against `truth` over `subset`.
    pub fn loss_vector(
        self,
        submission: &Predictions,
        truth: &LabelVector,
        subset: &[usize],
    ) -> Result<LossVector> {
        if subset.is_empty() {
            return Err(Error::input("empty scoring subset"));
        }
        if submission.len() != truth.len() {
            return Err(Error::input(format!(
                "submission has {} entries, truth has {}",
                submission.len(),
                truth.len()
            )));
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= truth.len()) {
            return Err(Error::input(format!(
                "index {bad} out of range for {} examples",
                truth.len()
            )));
        }
        let truth = truth.as_slice();
        let values: Vec<f64> = match (self, submission) {
            (LossKind::ZeroOne, Predictions::Labels(pred)) => {
                let pred = pred.as_slice();
                subset
                    .iter()
                    .map(|&i| if pred[i] == truth[i] { 0.0 } else { 1.0 })
                    .collect()
            }
            (LossKind::ClippedLog, Predictions::Probabilities(p)) => {
                if let Some(&bad) = subset.iter().find(|&&i| truth[i] > 1) {
                    return Err(Error::input(format!(
                        "log loss needs binary truth, example {bad} has label {}",
                        truth[bad]
                    )));
                }
                if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                    return Err(Error::input(format!("probability {bad} outside [0, 1]")));
                }
                subset
                    .iter()
                    .map(|&i| log_loss_unchecked(p[i], truth[i]))
                    .collect()
            }
            (kind, _) => {
                return Err(Error::input(format!(
                    "{kind:?} loss cannot score this kind of submission"
                )))
            }
        };
        let sum = values.iter().sum();
        Ok(LossVector { values, sum })
    }
}

/// Mean per-example loss of `submission` over `subset`.
pub fn empirical_loss(
    loss: LossKind,
    submission: &Predictions,
    truth: &LabelVector,
    subset: &[usize],
) -> Result<f64> {
    Ok(loss.loss_vector(submission, truth, subset)?.mean())
}

/// Rounding grid: integer multiples of a positive step.
///
/// When the step is the reciprocal of an integer (0.01, 1e-5, 1/n) the grid
/// keeps that integer and computes values as `k / d`, which gives the
/// correctly rounded decimal (`35 / 100 == 0.35`) instead of `35 * 0.01`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Grid {
    step: f64,
    denominator: Option<u64>,
}

impl Grid {
    pub fn new(step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::input(format!("grid step must be positive, got {step}")));
        }
        let inv = 1.0 / step;
        let d = inv.round();
        let denominator = ((1.0..9.0e15).contains(&d) && (inv - d).abs() <= 1e-9 * d).then_some(d as u64);
        Ok(Grid { step, denominator })
    }

    /// The `1/n` grid.
    pub fn reciprocal(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("grid denominator must be positive"));
        }
        Ok(Grid {
            step: 1.0 / n as f64,
            denominator: Some(n),
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `x / step`, computed as `x * d` on reciprocal grids.
    fn quotient(&self, x: f64) -> f64 {
        match self.denominator {
            Some(d) => x * d as f64,
            None => x / self.step,
        }
    }

    pub fn value_of(&self, multiple: i64) -> f64 {
        match self.denominator {
            Some(d) => multiple as f64 / d as f64,
            None => multiple as f64 * self.step,
        }
    }

    /// Nearest multiple; exact halves go away from zero.
    ///
    /// A quotient within a few ulps of `k + 1/2` counts as a tie, so that
    /// decimal inputs like `0.015` on the `0.01` grid round the way they
    /// read rather than the way their binary approximation falls.
    pub fn round(&self, x: f64) -> GridValue {
        let q = self.quotient(x);
        let floor = q.floor();
        let frac = q - floor;
        let tol = 8.0 * f64::EPSILON * q.abs().max(1.0);
        let multiple = if (frac - 0.5).abs() <= tol {
            if q >= 0.0 {
                floor + 1.0
            } else {
                floor
            }
        } else {
            q.round()
        };
        GridValue {
            multiple: multiple as i64,
            grid: *self,
        }
    }

    /// Whether `x` is (to rounding precision) a multiple of the step.
    pub fn contains(&self, x: f64) -> bool {
        let v = self.round(x).value();
        (v - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(self.step)
    }
}

impl TryFrom<f64> for Grid {
    type Error = Error;

    fn try_from(step: f64) -> Result<Self> {
        Grid::new(step)
    }
}

impl From<Grid> for f64 {
    fn from(g: Grid) -> f64 {
        g.step
    }
}

/// A value known to sit on a grid, kept as the integer multiple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridValue {
    multiple: i64,
    grid: Grid,
}

impl GridValue {
    pub fn multiple(&self) -> i64 {
        self.multiple
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn value(&self) -> f64 {
        self.grid.value_of(self.multiple)
    }
}

/// `x` rounded to the nearest integer multiple of `step`.
pub fn round_to_grid(x: f64, step: f64) -> Result<GridValue> {
    Ok(Grid::new(step)?.round(x))
}
