//! Leaderboard error of the Ladder on classifiers chosen without feedback.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mechanisms::LadderState;
use crate::rng::stream;
use crate::stats::{hoeffding_epsilon, leaderboard_error};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyConfig {
    pub k: usize,
    pub n: usize,
    pub eta: f64,
    pub delta: f64,
    pub trials: usize,
    /// True error rates are drawn uniformly from this range.
    pub error_range: (f64, f64),
    pub seed: u64,
}

impl AccuracyConfig {
    pub fn standard(seed: u64) -> Self {
        AccuracyConfig {
            k: 1000,
            n: 4000,
            eta: 0.02,
            delta: 0.05,
            trials: 20,
            error_range: (0.3, 0.5),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTrial {
    pub trial: usize,
    pub leaderboard_error: f64,
    /// Hoeffding accuracy plus the Ladder step size.
    pub bound: f64,
    pub within_bound: bool,
    pub distinct_releases: usize,
}

/// `k` fixed classifiers with known error rates are scored on `n` fresh
/// examples each trial; the Ladder's releases are compared against the
/// running best true error.
pub fn run_nonadaptive_accuracy(config: &AccuracyConfig) -> Result<Vec<AccuracyTrial>> {
    if config.k == 0 || config.n == 0 || config.trials == 0 {
        return Err(Error::input("k, n and trials must be positive"));
    }
    let (lo, hi) = config.error_range;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::input(format!("bad error range ({lo}, {hi})")));
    }
    let epsilon = hoeffding_epsilon(config.k as u64, config.n as u64, config.delta)?;
    let bound = epsilon + config.eta;
    (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(config.seed, trial as u64);
            let mut ladder = LadderState::new(config.eta)?;
            let mut truth = Vec::with_capacity(config.k);
            let mut reported = Vec::with_capacity(config.k);
            let mut distinct = Vec::new();
            for _ in 0..config.k {
                let p: f64 = rng.random_range(lo..=hi);
                let errors = (0..config.n).filter(|_| rng.random_bool(p)).count();
                let out = ladder.step(errors as f64 / config.n as f64);
                truth.push(p);
                reported.push(out.reported);
                if distinct.last() != Some(&out.reported) {
                    distinct.push(out.reported);
                }
            }
            let err = leaderboard_error(&truth, &reported)?;
            Ok(AccuracyTrial {
                trial,
                leaderboard_error: err,
                bound,
                within_bound: err <= bound,
                distinct_releases: distinct.len(),
            })
        })
        .collect()
}
