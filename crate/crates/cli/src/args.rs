//! Flag value types shared across commands.

use std::path::Path;
use std::str::FromStr;

use anyhow::Context;
use ladder_core::mechanisms::default_eta;
use ladder_core::{LossVector, MechanismSpec};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::config::usage;

/// `ladder[:ETA]`, `ladder-pf` or `kaggle[:ALPHA]`. A ladder without a step
/// uses the default step for the public split size; a kaggle without a
/// step rounds to 1e-5.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "String")]
pub struct MechanismArg {
    kind: MechanismName,
    param: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum MechanismName {
    Ladder,
    LadderPf,
    Kaggle,
}

impl FromStr for MechanismArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => {
                let v: f64 = p.trim().parse().map_err(|_| format!("bad step {p:?} in {s:?}"))?;
                (n.trim(), Some(v))
            }
            None => (s.trim(), None),
        };
        let kind = match name {
            "ladder" => MechanismName::Ladder,
            "ladder-pf" => MechanismName::LadderPf,
            "kaggle" => MechanismName::Kaggle,
            _ => return Err(format!("unknown mechanism {name:?} (expected ladder, ladder-pf or kaggle)")),
        };
        if kind == MechanismName::LadderPf && param.is_some() {
            return Err("ladder-pf takes no step".into());
        }
        Ok(MechanismArg { kind, param })
    }
}

impl TryFrom<String> for MechanismArg {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl MechanismArg {
    pub fn is_ladder(&self) -> bool {
        self.kind == MechanismName::Ladder
    }

    pub fn is_kaggle(&self) -> bool {
        self.kind == MechanismName::Kaggle
    }

    pub fn with_param(mut self, param: f64) -> Self {
        self.param = Some(param);
        self
    }

    pub fn resolve(&self, n_public: usize) -> MechanismSpec {
        match self.kind {
            MechanismName::Ladder => MechanismSpec::Ladder {
                eta: self.param.unwrap_or_else(|| default_eta(n_public, None)),
            },
            MechanismName::LadderPf => MechanismSpec::LadderPf,
            MechanismName::Kaggle => MechanismSpec::Kaggle {
                alpha: self.param.unwrap_or(MechanismSpec::KAGGLE_DEFAULT_ALPHA),
            },
        }
    }
}

/// Parses a kebab-case enum value through its serde representation.
pub fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

/// Loss table: a header row naming the submissions, then one row per
/// example with one column per submission.
pub fn read_loss_table(path: &Path) -> anyhow::Result<(Vec<String>, Vec<LossVector>)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes.as_slice());
    let names: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| usage(format!("{}: line {line}: {e}", path.display())))?;
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let v: f64 = field
                .parse()
                .map_err(|_| usage(format!("{}: line {line}: bad loss {field:?}", path.display())))?;
            col.push(v);
        }
    }
    let losses = columns
        .into_iter()
        .zip(&names)
        .map(|(c, name)| LossVector::new(c).with_context(|| format!("{}: column {name}", path.display())))
        .collect::<anyhow::Result<_>>()?;
    Ok((names, losses))
}

pub fn loss_table_bytes(names: &[String], losses: &[LossVector]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(names)?;
    let n = losses.first().map_or(0, LossVector::len);
    for i in 0..n {
        w.write_record(losses.iter().map(|l| l.values()[i].to_string()))?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("loss table: {e}"))
}
