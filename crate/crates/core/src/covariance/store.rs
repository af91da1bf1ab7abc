//! Binary covariance container with a JSON sidecar.
//!
//! `<stem>.omcv` holds the magic `OMCV`, a little-endian `u32` version, a
//! `u64` dimension and the row-major matrix as little-endian `f64`.
//! `<stem>.json` carries grid, partition and provenance.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CovarianceMeta, CovarianceSet, Partition, TimeGrid};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"OMCV";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Sidecar {
    dim: usize,
    grid: TimeGrid,
    partition: Partition,
    transposed: bool,
    payload_sha256: String,
    meta: CovarianceMeta,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("omcv"), stem.with_extension("json"))
}

pub fn save(set: &CovarianceSet, stem: impl AsRef<Path>) -> Result<()> {
    let (bin, json) = paths(stem.as_ref());
    let mut payload = Vec::with_capacity(16 + 8 * set.v.len());
    payload.extend_from_slice(MAGIC);
    payload.extend_from_slice(&VERSION.to_le_bytes());
    payload.extend_from_slice(&(set.dim as u64).to_le_bytes());
    for x in &set.v {
        payload.extend_from_slice(&x.to_le_bytes());
    }
    let digest = hex::encode(Sha256::digest(&payload));
    std::fs::File::create(&bin)
        .and_then(|mut f| f.write_all(&payload))
        .map_err(|e| Error::io(&bin, e))?;
    let side = Sidecar {
        dim: set.dim,
        grid: set.grid,
        partition: set.partition,
        transposed: set.transposed,
        payload_sha256: digest,
        meta: set.meta.clone(),
    };
    let text = serde_json::to_string_pretty(&side)?;
    std::fs::write(&json, text).map_err(|e| Error::io(&json, e))
}

pub fn load(stem: impl AsRef<Path>) -> Result<CovarianceSet> {
    let (bin, json) = paths(stem.as_ref());
    let text = std::fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let side: Sidecar = serde_json::from_str(&text)?;
    let mut payload = Vec::new();
    std::fs::File::open(&bin)
        .and_then(|mut f| f.read_to_end(&mut payload))
        .map_err(|e| Error::io(&bin, e))?;
    if hex::encode(Sha256::digest(&payload)) != side.payload_sha256 {
        return Err(Error::Config(format!("{} does not match its sidecar checksum", bin.display())));
    }
    if payload.len() < 16 || &payload[..4] != MAGIC {
        return Err(Error::Config(format!("{} is not a covariance container", bin.display())));
    }
    let version = u32::from_le_bytes(payload[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Config(format!("unsupported container version {version}")));
    }
    let dim = u64::from_le_bytes(payload[8..16].try_into().unwrap()) as usize;
    if dim != side.dim || payload.len() != 16 + 8 * dim * dim {
        return Err(Error::Dimension(format!("container holds {} bytes for dim {dim}", payload.len())));
    }
    let v = payload[16..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(CovarianceSet {
        dim,
        v,
        grid: side.grid,
        partition: side.partition,
        transposed: side.transposed,
        meta: side.meta,
    })
}
