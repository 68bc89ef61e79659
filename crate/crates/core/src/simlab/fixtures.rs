//! Synthetic data for the experiments: a full competition log, planted
//! significance vectors, and loss vectors with a known error count.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::losses::{LabelAlphabet, LabelVector, LossKind, LossVector, Predictions};
use crate::mechanisms::MechanismSpec;
use crate::rng::{derive_seed, stream, SimRng};
use crate::store::{split_assign, Competition, CompetitionSpec, Composition};
use crate::{Error, Result};

/// Shape and generation parameters of a synthetic competition.
///
/// Every team owns a private prediction vector. On a team-specific subset
/// of examples (a `mixing_weight` fraction) it copies a shared base
/// prediction instead, which makes strong submissions correlated. A team's
/// successive submissions re-draw a shrinking fraction of its vector, so
/// they improve over time and stay correlated with each other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitionFixtureConfig {
    pub id: String,
    pub teams: usize,
    pub submissions: usize,
    pub n_total: usize,
    pub public_fraction: f64,
    /// Mechanism whose scores are recorded in the log.
    pub mechanism: MechanismSpec,
    pub mixing_weight: f64,
    /// Accuracy of the shared base prediction.
    pub base_accuracy: f64,
    /// Accuracy of a team vector is drawn from this range.
    pub team_accuracy: (f64, f64),
    /// Fraction of a team vector re-drawn at random on its first submission.
    pub initial_noise: f64,
    /// Lowers the base accuracy on public examples only.
    pub underfit_offset: f64,
    pub seed: u64,
}

impl CompetitionFixtureConfig {
    /// 200 teams, 1785 submissions, 12000 examples of which 3600 public.
    pub fn standard(seed: u64) -> Self {
        CompetitionFixtureConfig {
            id: "photo-quality-synthetic".into(),
            teams: 200,
            submissions: 1785,
            n_total: 12000,
            public_fraction: 0.3,
            mechanism: MechanismSpec::Kaggle {
                alpha: MechanismSpec::KAGGLE_DEFAULT_ALPHA,
            },
            mixing_weight: 0.7,
            base_accuracy: 0.75,
            team_accuracy: (0.5, 0.8),
            initial_noise: 0.2,
            underfit_offset: 0.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.teams == 0 || self.submissions < self.teams {
            return Err(Error::input(format!(
                "need at least one submission per team ({} teams, {} submissions)",
                self.teams, self.submissions
            )));
        }
        if !unit(self.mixing_weight) || !unit(self.base_accuracy) || !unit(self.initial_noise) {
            return Err(Error::input("mixing weight, base accuracy and noise must lie in [0, 1]"));
        }
        let (lo, hi) = self.team_accuracy;
        if !(unit(lo) && unit(hi) && lo <= hi) {
            return Err(Error::input(format!("bad team accuracy range ({lo}, {hi})")));
        }
        if !unit(self.base_accuracy - self.underfit_offset) {
            return Err(Error::input("underfit offset pushes the base accuracy outside [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSummary {
    pub teams: usize,
    pub submissions: usize,
    pub n_public: usize,
    pub n_private: usize,
}

fn noisy_copy(truth: &[u32], accuracy: f64, rng: &mut SimRng) -> Vec<u32> {
    truth
        .iter()
        .map(|&y| if rng.random_bool(accuracy) { y } else { 1 - y })
        .collect()
}

/// Writes a complete competition (spec, truth, blobs, event log) to `dir`.
pub fn generate_competition(dir: &Path, config: &CompetitionFixtureConfig, force: bool) -> Result<FixtureSummary> {
    config.validate()?;
    let n = config.n_total;
    let mut rng = stream(config.seed, 0);
    let split = split_assign(n, config.public_fraction, derive_seed(config.seed, 1))?;
    let truth: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();

    let mut is_public = vec![false; n];
    for &i in &split.public {
        is_public[i] = true;
    }
    let base: Vec<u32> = (0..n)
        .map(|i| {
            let acc = if is_public[i] {
                config.base_accuracy - config.underfit_offset
            } else {
                config.base_accuracy
            };
            if rng.random_bool(acc) {
                truth[i]
            } else {
                1 - truth[i]
            }
        })
        .collect();

    // one submission each, the rest spread with lognormal-ish team activity
    let activity: Vec<f64> = (0..config.teams)
        .map(|_| {
            let z: f64 = (0..4).map(|_| rng.random::<f64>()).sum::<f64>() - 2.0;
            (1.5 * z).exp()
        })
        .collect();
    let total: f64 = activity.iter().sum();
    let mut counts = vec![1usize; config.teams];
    let mut cumulative = Vec::with_capacity(config.teams);
    let mut acc = 0.0;
    for a in &activity {
        acc += a / total;
        cumulative.push(acc);
    }
    for _ in config.teams..config.submissions {
        let u: f64 = rng.random();
        let j = cumulative.partition_point(|&c| c < u).min(config.teams - 1);
        counts[j] += 1;
    }

    // global submission order: every (team, attempt) gets a random time
    let mut schedule: Vec<(f64, usize)> = Vec::with_capacity(config.submissions);
    for (team, &c) in counts.iter().enumerate() {
        let mut times: Vec<f64> = (0..c).map(|_| rng.random()).collect();
        times.sort_by(f64::total_cmp);
        schedule.extend(times.into_iter().map(|t| (t, team)));
    }
    schedule.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let spec = CompetitionSpec {
        id: config.id.clone(),
        alphabet: LabelAlphabet::BINARY,
        n_total: n,
        split: split.clone(),
        loss: LossKind::ZeroOne,
        mechanism: config.mechanism,
        composition: Composition::PerTeam,
        raw_scale: 1.0,
        split_seed: Some(derive_seed(config.seed, 1)),
        closed: false,
    };
    let truth_vec = LabelVector::new(truth.clone(), LabelAlphabet::BINARY)?;
    let mut comp = Competition::create(dir, spec, &truth_vec, force)?;
    comp.set_durable(false);

    struct Team {
        vector: Vec<u32>,
        uses_base: Vec<bool>,
        rng: SimRng,
        done: usize,
    }
    let (lo, hi) = config.team_accuracy;
    let mut teams: Vec<Team> = (0..config.teams)
        .map(|j| {
            let mut trng = stream(config.seed, 2 + j as u64);
            let accuracy = trng.random_range(lo..=hi);
            let vector = noisy_copy(&truth, accuracy, &mut trng);
            let uses_base = (0..n).map(|_| trng.random_bool(config.mixing_weight)).collect();
            Team {
                vector,
                uses_base,
                rng: trng,
                done: 0,
            }
        })
        .collect();

    let start_ms = 1_300_000_000_000u64;
    let span_ms = 90 * 24 * 3600 * 1000u64;
    for (t, team_idx) in schedule {
        let team = &mut teams[team_idx];
        let remaining = 1.0 - team.done as f64 / counts[team_idx] as f64;
        let noise = config.initial_noise * remaining;
        let labels: Vec<u32> = (0..n)
            .map(|i| {
                if team.uses_base[i] {
                    base[i]
                } else if team.rng.random_bool(noise) {
                    team.rng.random_range(0..2)
                } else {
                    team.vector[i]
                }
            })
            .collect();
        team.done += 1;
        let preds = Predictions::Labels(LabelVector::new(labels, LabelAlphabet::BINARY)?);
        let ts = start_ms + (t * span_ms as f64) as u64;
        comp.submit(&format!("team-{team_idx:03}"), &preds, ts)?;
    }

    Ok(FixtureSummary {
        teams: config.teams,
        submissions: config.submissions,
        n_public: split.public.len(),
        n_private: split.private.len(),
    })
}

/// Private loss vectors of the top `m` submissions with a planted effect.
///
/// Rank 1 makes an error on each example with probability `base_error`.
/// Every other rank is rank 1 with `swaps` error/non-error pairs exchanged,
/// so its mean loss is exactly the same. Planted ranks additionally turn
/// `shift` correct examples into errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSignificanceConfig {
    pub n: usize,
    pub m: usize,
    pub planted: Vec<usize>,
    pub shift: usize,
    pub swaps: usize,
    pub base_error: f64,
    pub seed: u64,
}

impl PlantedSignificanceConfig {
    /// 8400 private examples, top 10, ranks 8 and 9 planted.
    pub fn standard(seed: u64) -> Self {
        PlantedSignificanceConfig {
            n: 8400,
            m: 10,
            planted: vec![8, 9],
            shift: 150,
            swaps: 300,
            base_error: 0.3,
            seed,
        }
    }
}

pub fn planted_significance_fixture(config: &PlantedSignificanceConfig) -> Result<Vec<LossVector>> {
    if config.m < 2 {
        return Err(Error::input("need at least 2 ranks"));
    }
    if let Some(&r) = config.planted.iter().find(|&&r| r < 2 || r > config.m) {
        return Err(Error::input(format!("planted rank {r} outside 2..={}", config.m)));
    }
    let mut rng = stream(config.seed, 0);
    let top: Vec<f64> = (0..config.n)
        .map(|_| if rng.random_bool(config.base_error) { 1.0 } else { 0.0 })
        .collect();
    let ones = top.iter().filter(|&&x| x == 1.0).count();
    if ones < config.swaps || config.n - ones < config.swaps + config.shift {
        return Err(Error::input("too few examples for the requested swaps and shift"));
    }

    let mut out = vec![LossVector::new(top.clone())?];
    for rank in 2..=config.m {
        let mut v = top.clone();
        let mut err: Vec<usize> = (0..config.n).filter(|&i| v[i] == 1.0).collect();
        let mut ok: Vec<usize> = (0..config.n).filter(|&i| v[i] == 0.0).collect();
        err.shuffle(&mut rng);
        ok.shuffle(&mut rng);
        for s in 0..config.swaps {
            v[err[s]] = 0.0;
            v[ok[s]] = 1.0;
        }
        if config.planted.contains(&rank) {
            for &i in &ok[config.swaps..config.swaps + config.shift] {
                v[i] = 1.0;
            }
        }
        out.push(LossVector::new(v)?);
    }
    Ok(out)
}

/// Loss vectors over `n` examples with exactly `round(rate * n)` errors
/// each, in random positions.
pub fn planted_loss_fixture(n: usize, rates: &[f64], seed: u64) -> Result<Vec<LossVector>> {
    let mut rng = stream(seed, 0);
    rates
        .iter()
        .map(|&rate| {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::input(format!("error rate {rate} outside [0, 1]")));
            }
            let errors = (rate * n as f64).round() as usize;
            let mut v: Vec<f64> = (0..n).map(|i| if i < errors { 1.0 } else { 0.0 }).collect();
            v.shuffle(&mut rng);
            LossVector::new(v)
        })
        .collect()
}
