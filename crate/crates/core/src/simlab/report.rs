//! Tabular report output: CSV with a header row plus a JSON sidecar.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::{Error, Result};

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::input(format!("report row: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| Error::input(format!("report buffer: {e}")))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    std::fs::write(path, csv_bytes(rows)?).map_err(|e| Error::io(path, e))
}

/// Fields excluded from reproducibility comparisons.
#[derive(Debug, Clone, Serialize)]
pub struct Volatile {
    pub generated_at_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sidecar<'a, C: Serialize, S: Serialize> {
    pub kind: &'a str,
    /// Absent for deterministic reports that draw no randomness.
    pub seed: Option<u64>,
    pub config: &'a C,
    pub summary: &'a S,
    pub volatile: Volatile,
}

impl<'a, C: Serialize, S: Serialize> Sidecar<'a, C, S> {
    pub fn new(kind: &'a str, seed: Option<u64>, config: &'a C, summary: &'a S) -> Self {
        let generated_at_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        Sidecar {
            kind,
            seed,
            config,
            summary,
            volatile: Volatile { generated_at_ms },
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: u32,
        b: f64,
    }

    #[test]
    fn header_and_shortest_floats() {
        let out = csv_bytes(&[Row { a: 1, b: 0.1 }, Row { a: 2, b: 1.0 / 3.0 }]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "a,b\n1,0.1\n2,0.3333333333333333\n"
        );
    }
}
