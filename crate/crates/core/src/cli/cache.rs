//! Covariance cache keyed by the point hash.

use std::path::{Path, PathBuf};

use crate::covariance::{load, save, CovarianceSet};
use crate::error::{Error, Result};

fn stem(dir: &Path, hash: &str) -> PathBuf {
    dir.join(hash)
}

pub fn lookup(dir: &Path, hash: &str) -> Result<Option<CovarianceSet>> {
    let s = stem(dir, hash);
    if !s.with_extension("omcv").exists() || !s.with_extension("json").exists() {
        return Ok(None);
    }
    match load(&s) {
        Ok(set) => Ok(Some(set)),
        Err(e) => {
            log::warn!("ignoring unreadable cache entry {}: {e}", s.display());
            Ok(None)
        }
    }
}

pub fn store(dir: &Path, hash: &str, set: &CovarianceSet) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save(set, stem(dir, hash))
}
