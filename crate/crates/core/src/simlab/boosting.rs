//! The boosting attack run against several mechanisms on shared hidden labels.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::summarize;
use crate::attack::{AttackConfig, AttackVariant, BoostingAttack, MechanismOracle};
use crate::losses::{LabelVector, Label};
use crate::mechanisms::MechanismSpec;
use crate::rng::{derive_seed, stream};
use crate::store::split_assign;
use crate::{Error, Result};

/// A mechanism and the attack variant run against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSetting {
    pub name: String,
    pub mechanism: MechanismSpec,
    pub variant: AttackVariant,
}

impl AttackSetting {
    /// Kaggle at α = 1e-5, Kaggle at α = 1/√n (both attacked with the
    /// threshold rule), and the parameter-free Ladder attacked with the
    /// improvement rule.
    pub fn standard(n_public: usize) -> Vec<AttackSetting> {
        vec![
            AttackSetting {
                name: "kaggle-fine".into(),
                mechanism: MechanismSpec::Kaggle {
                    alpha: MechanismSpec::KAGGLE_DEFAULT_ALPHA,
                },
                variant: AttackVariant::ThresholdHalf,
            },
            AttackSetting {
                name: "kaggle-coarse".into(),
                mechanism: MechanismSpec::Kaggle {
                    alpha: 1.0 / (n_public as f64).sqrt(),
                },
                variant: AttackVariant::ThresholdHalf,
            },
            AttackSetting {
                name: "ladder-pf".into(),
                mechanism: MechanismSpec::LadderPf,
                variant: AttackVariant::ImprovementSelected,
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_total: usize,
    pub public_fraction: f64,
    pub k: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub settings: Vec<AttackSetting>,
}

impl ExperimentConfig {
    /// 12000 labels, a third of them public, 400 queries, 5 repetitions.
    pub fn boosting(seed: u64) -> Self {
        let mut c = ExperimentConfig {
            n_total: 12000,
            public_fraction: 1.0 / 3.0,
            k: 400,
            repetitions: 5,
            seed,
            settings: Vec::new(),
        };
        c.settings = AttackSetting::standard(c.n_public());
        c
    }

    pub fn n_public(&self) -> usize {
        (self.public_fraction * self.n_total as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.public_fraction > 0.0 && self.public_fraction < 1.0) {
            return Err(Error::input(format!(
                "public fraction must lie in (0, 1), got {}",
                self.public_fraction
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::input("repetitions must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::input("k must be at least 1"));
        }
        if self.settings.is_empty() {
            return Err(Error::input("no mechanism settings to run"));
        }
        let n = self.n_public();
        if n < 2 || n >= self.n_total {
            return Err(Error::input(format!(
                "public fraction {} of {} labels leaves a side with too few labels",
                self.public_fraction, self.n_total
            )));
        }
        for s in &self.settings {
            s.mechanism.instantiate(n)?;
        }
        Ok(())
    }
}

/// One step of one attack run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingRecord {
    pub setting: String,
    pub rep: usize,
    pub step: usize,
    /// Score released for the random query of this step.
    pub query_reported: f64,
    /// Lowest score released so far.
    pub best_reported: f64,
    pub selected: usize,
    /// Score the mechanism would release for the current majority vector.
    pub boosted_reported: f64,
    pub boosted_public_loss: f64,
    /// True loss of the majority vector on the labels outside the public split.
    pub boosted_holdout_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSummary {
    pub setting: String,
    pub mechanism: MechanismSpec,
    pub variant: AttackVariant,
    pub final_reported_mean: f64,
    pub final_reported_std: f64,
    pub final_public_loss_mean: f64,
    pub final_holdout_loss_mean: f64,
    pub final_holdout_loss_std: f64,
    pub min_reported_mean: f64,
    pub selected_mean: f64,
    pub final_reported: Vec<f64>,
    pub final_holdout_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<BoostingRecord>,
    pub summary: Vec<SettingSummary>,
}

impl ExperimentReport {
    pub fn setting(&self, name: &str) -> Option<&SettingSummary> {
        self.summary.iter().find(|s| s.setting == name)
    }

    pub fn trace<'a>(&'a self, setting: &'a str, rep: usize) -> impl Iterator<Item = &'a BoostingRecord> + 'a {
        self.records
            .iter()
            .filter(move |r| r.setting == setting && r.rep == rep)
    }
}

fn error_rate(pred: &[Label], truth: &[Label], idx: &[usize]) -> f64 {
    let wrong = idx.iter().filter(|&&i| pred[i] != truth[i]).count();
    wrong as f64 / idx.len() as f64
}

fn run_repetition(config: &ExperimentConfig, rep: usize) -> Result<Vec<BoostingRecord>> {
    let mut labels = stream(config.seed, rep as u64);
    let truth = LabelVector::from_bits((0..config.n_total).map(|_| labels.random::<bool>()));
    let split = split_assign(config.n_total, config.public_fraction, derive_seed(config.seed, 2 * rep as u64))?;
    let attack_seed = derive_seed(config.seed, 2 * rep as u64 + 1);

    let mut out = Vec::with_capacity(config.k * config.settings.len());
    for setting in &config.settings {
        let mut oracle = MechanismOracle::new(setting.mechanism, &truth, &split.public)?;
        let mut attack = BoostingAttack::new(AttackConfig {
            k: config.k,
            n_total: config.n_total,
            seed: attack_seed,
            variant: setting.variant,
        })?;
        let mut best = f64::INFINITY;
        for step in 1..=config.k {
            let reported = attack.step(&mut oracle)?;
            best = best.min(reported);
            let boosted = attack.boosted().expect("a query was issued");
            out.push(BoostingRecord {
                setting: setting.name.clone(),
                rep,
                step,
                query_reported: reported,
                best_reported: best,
                selected: attack.selected_count(),
                boosted_reported: oracle.probe(&boosted)?,
                boosted_public_loss: error_rate(boosted.as_slice(), truth.as_slice(), &split.public),
                boosted_holdout_loss: error_rate(boosted.as_slice(), truth.as_slice(), &split.private),
            });
        }
    }
    Ok(out)
}

/// Runs every setting in every repetition. Each repetition draws fresh
/// hidden labels and a fresh split; within a repetition all settings see
/// the same labels and the same random queries.
pub fn run_boosting_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let per_rep: Vec<Vec<BoostingRecord>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(config, rep))
        .collect::<Result<_>>()?;
    let records: Vec<BoostingRecord> = per_rep.into_iter().flatten().collect();
    let summary = config
        .settings
        .iter()
        .map(|s| summarize_setting(config, s, &records))
        .collect();
    Ok(ExperimentReport {
        config: config.clone(),
        records,
        summary,
    })
}

fn summarize_setting(config: &ExperimentConfig, s: &AttackSetting, records: &[BoostingRecord]) -> SettingSummary {
    let mine: Vec<&BoostingRecord> = records.iter().filter(|r| r.setting == s.name).collect();
    let finals: Vec<&BoostingRecord> = mine.iter().copied().filter(|r| r.step == config.k).collect();
    let col = |f: fn(&BoostingRecord) -> f64| -> Vec<f64> { finals.iter().map(|r| f(r)).collect() };
    let final_reported = col(|r| r.boosted_reported);
    let final_holdout_loss = col(|r| r.boosted_holdout_loss);
    let (final_reported_mean, final_reported_std) = summarize(&final_reported);
    let (final_holdout_loss_mean, final_holdout_loss_std) = summarize(&final_holdout_loss);
    let min_reported: Vec<f64> = (0..config.repetitions)
        .map(|rep| {
            mine.iter()
                .filter(|r| r.rep == rep)
                .map(|r| r.boosted_reported)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    SettingSummary {
        setting: s.name.clone(),
        mechanism: s.mechanism,
        variant: s.variant,
        final_reported_mean,
        final_reported_std,
        final_public_loss_mean: summarize(&col(|r| r.boosted_public_loss)).0,
        final_holdout_loss_mean,
        final_holdout_loss_std,
        min_reported_mean: summarize(&min_reported).0,
        selected_mean: summarize(&col(|r| r.selected as f64)).0,
        final_reported,
        final_holdout_loss,
    }
}
