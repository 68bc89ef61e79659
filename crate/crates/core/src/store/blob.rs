//! Content-addressed submission payloads.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Lowercase hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn is_digest(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

/// A directory of files named by the hex digest of their contents.
#[derive(Debug, Clone)]
pub struct BlobStore {
    dir: PathBuf,
    sync: bool,
}

impl BlobStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(BlobStore { dir, sync: true })
    }

    /// Whether `put` syncs each blob before publishing it.
    pub fn set_sync(&mut self, sync: bool) {
        self.sync = sync;
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_of(&self, digest: &str) -> Result<PathBuf> {
        if !is_digest(digest) {
            return Err(Error::input(format!("{digest:?} is not a hex SHA-256 digest")));
        }
        Ok(self.dir.join(digest))
    }

    pub fn contains(&self, digest: &str) -> bool {
        self.path_of(digest).is_ok_and(|p| p.exists())
    }

    /// Stores `bytes` and returns their digest. Writing goes through a
    /// temporary file so readers never see a partial blob.
    pub fn put(&self, bytes: &[u8]) -> Result<String> {
        let d = digest(bytes);
        let path = self.dir.join(&d);
        if path.exists() {
            return Ok(d);
        }
        static NEXT: AtomicU64 = AtomicU64::new(0);
        let unique = NEXT.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(".{d}.{}.{unique}.tmp", std::process::id()));
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            if self.sync {
                f.sync_data()?;
            }
            fs::rename(&tmp, &path)
        };
        write().map_err(|e| {
            let _ = fs::remove_file(&tmp);
            Error::io(&path, e)
        })?;
        Ok(d)
    }

    pub fn get(&self, digest: &str) -> Result<Vec<u8>> {
        let path = self.path_of(digest)?;
        fs::read(&path).map_err(|e| Error::io(&path, e))
    }
}
