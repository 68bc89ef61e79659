//! How much a private score moves when the private set is halved at random.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::summarize;
use crate::losses::LossVector;
use crate::rng::stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub repetitions: usize,
    pub seed: u64,
}

impl StabilityConfig {
    pub fn new(seed: u64) -> Self {
        StabilityConfig { repetitions: 20, seed }
    }
}

/// Both half-scores of one submission under one random halving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfScoreRecord {
    pub rep: usize,
    pub submission: usize,
    pub size_a: usize,
    pub half_a: f64,
    pub size_b: usize,
    pub half_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub submission: usize,
    pub full_score: f64,
    /// Size-weighted mean of the two half-scores, averaged over repetitions.
    pub half_mean: f64,
    /// Sample standard deviation of all half-scores.
    pub half_std: f64,
    pub half_min: f64,
    pub half_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub config: StabilityConfig,
    pub records: Vec<HalfScoreRecord>,
    pub summary: Vec<StabilityRow>,
}

/// Splits the private set into two halves `repetitions` times and rescores
/// every submission on each half. All submissions share each halving. With
/// an odd number of examples the leftover one joins a half chosen by a
/// seeded coin.
pub fn run_split_stability(private_losses: &[LossVector], config: StabilityConfig) -> Result<StabilityReport> {
    let first = private_losses
        .first()
        .ok_or_else(|| Error::input("split stability needs at least one submission"))?;
    let n = first.len();
    if n < 2 {
        return Err(Error::input("split stability needs at least 2 private examples"));
    }
    if let Some(bad) = private_losses.iter().find(|l| l.len() != n) {
        return Err(Error::input(format!(
            "loss vectors differ in length: {} vs {n}",
            bad.len()
        )));
    }
    if config.repetitions == 0 {
        return Err(Error::input("repetitions must be at least 1"));
    }

    let mut records = Vec::with_capacity(config.repetitions * private_losses.len());
    let mut order: Vec<usize> = (0..n).collect();
    for rep in 0..config.repetitions {
        let mut rng = stream(config.seed, rep as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut cut = n / 2;
        if n % 2 == 1 && rng.random::<bool>() {
            cut += 1;
        }
        let (a, b) = order.split_at(cut);
        for (submission, losses) in private_losses.iter().enumerate() {
            let v = losses.values();
            let sum = |idx: &[usize]| idx.iter().map(|&i| v[i]).sum::<f64>();
            records.push(HalfScoreRecord {
                rep,
                submission,
                size_a: a.len(),
                half_a: sum(a) / a.len() as f64,
                size_b: b.len(),
                half_b: sum(b) / b.len() as f64,
            });
        }
    }

    let summary = private_losses
        .iter()
        .enumerate()
        .map(|(submission, losses)| {
            let mine: Vec<&HalfScoreRecord> = records.iter().filter(|r| r.submission == submission).collect();
            let halves: Vec<f64> = mine.iter().flat_map(|r| [r.half_a, r.half_b]).collect();
            let weighted: Vec<f64> = mine
                .iter()
                .map(|r| (r.size_a as f64 * r.half_a + r.size_b as f64 * r.half_b) / n as f64)
                .collect();
            let (_, half_std) = summarize(&halves);
            StabilityRow {
                submission,
                full_score: losses.mean(),
                half_mean: summarize(&weighted).0,
                half_std,
                half_min: halves.iter().copied().fold(f64::INFINITY, f64::min),
                half_max: halves.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();

    Ok(StabilityReport {
        config,
        records,
        summary,
    })
}
