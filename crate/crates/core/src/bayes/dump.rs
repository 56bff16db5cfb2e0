//! Chain files: `u64` little-endian header length, a JSON header, then the
//! stored positions as little-endian `f64`, sample after sample.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::hmc::{Chain, HmcConfig};
use crate::autodiff::Architecture;
use crate::error::{PinnError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainHeader {
    pub arch: Architecture,
    pub config: HmcConfig,
    pub seed: u64,
    pub dim: usize,
    pub n_samples: usize,
    pub acceptance_rate: Option<f64>,
    pub burn_in_acceptance: Option<f64>,
}

fn schema(path: &Path, reason: impl Into<String>) -> PinnError {
    PinnError::Schema {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn write_chain(path: &Path, chain: &Chain, arch: &Architecture, seed: u64) -> Result<()> {
    let header = ChainHeader {
        arch: arch.clone(),
        config: chain.config.clone(),
        seed,
        dim: chain.dim(),
        n_samples: chain.len(),
        acceptance_rate: chain.acceptance_rate,
        burn_in_acceptance: chain.burn_in_acceptance,
    };
    let json = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for v in chain.flat() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_chain(path: &Path) -> Result<(Chain, ChainHeader)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| schema(path, "truncated header length"))?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 20 {
        return Err(schema(path, format!("implausible header length {len}")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(|_| schema(path, "truncated header"))?;
    let header: ChainHeader =
        serde_json::from_slice(&json).map_err(|e| schema(path, format!("bad header: {e}")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != header.dim * header.n_samples * 8 {
        return Err(schema(path, "sample block does not match the header"));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut chain = Chain::from_samples(header.dim, values, header.config.clone())
        .map_err(|e| schema(path, e.to_string()))?;
    chain.acceptance_rate = header.acceptance_rate;
    chain.burn_in_acceptance = header.burn_in_acceptance;
    Ok((chain, header))
}
