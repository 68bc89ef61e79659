//! Where report tables and sidecars go.
//!
//! With `--out DIR` every table is written to `DIR/<name>.csv` and the
//! sidecar to `DIR/<name>.json`. Without it the primary table goes to
//! standard output and everything else is skipped.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ladder_core::simlab::report::{csv_bytes, Sidecar};
use serde::Serialize;

pub struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> anyhow::Result<Output> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Output { dir })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn table<T: Serialize>(&self, name: &str, rows: &[T], primary: bool) -> anyhow::Result<()> {
        let bytes = csv_bytes(rows)?;
        self.emit(&format!("{name}.csv"), &bytes, primary)
    }

    /// Raw CSV bytes, for tables whose columns are not known statically.
    pub fn emit(&self, file: &str, bytes: &[u8], primary: bool) -> anyhow::Result<()> {
        match &self.dir {
            Some(d) => {
                let path = d.join(file);
                std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
                log::debug!("wrote {}", path.display());
            }
            None if primary => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
            }
            None => {}
        }
        Ok(())
    }

    pub fn sidecar<C: Serialize, S: Serialize>(&self, name: &str, sidecar: &Sidecar<'_, C, S>) -> anyhow::Result<()> {
        if let Some(d) = &self.dir {
            sidecar.write(&d.join(format!("{name}.json")))?;
        }
        Ok(())
    }
}
