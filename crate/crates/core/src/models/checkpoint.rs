//! Parameter files: `u64` little-endian header length, a JSON header, then
//! the flat parameters as little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Architecture, NetworkParams};
use crate::error::{PinnError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub arch: Architecture,
    pub seed: u64,
    pub epochs: usize,
    pub total_len: usize,
}

fn schema(path: &Path, reason: impl Into<String>) -> PinnError {
    PinnError::Schema {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn write_checkpoint(path: &Path, params: &NetworkParams, seed: u64, epochs: usize) -> Result<()> {
    let header = CheckpointHeader {
        arch: params.arch().clone(),
        seed,
        epochs,
        total_len: params.total_len(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for v in params.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(NetworkParams, CheckpointHeader)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| schema(path, "truncated header length"))?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 20 {
        return Err(schema(path, format!("implausible header length {len}")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(|_| schema(path, "truncated header"))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&json).map_err(|e| schema(path, format!("bad header: {e}")))?;
    if header.total_len != header.arch.param_len() {
        return Err(schema(path, "header length does not match its architecture"));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != header.total_len * 8 {
        return Err(schema(
            path,
            format!("expected {} parameters, found {} bytes", header.total_len, bytes.len()),
        ));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let params = NetworkParams::from_flat(&header.arch, values)?;
    Ok((params, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let arch = Architecture::new(2, vec![3, 3], 2).unwrap();
        let p = NetworkParams::xavier_with_biases(&arch, &mut stream(1, Stream::Init)).unwrap();
        write_checkpoint(&path, &p, 1, 250).unwrap();
        let (q, h) = read_checkpoint(&path).unwrap();
        assert_eq!(p, q);
        assert_eq!(h.epochs, 250);
    }

    #[test]
    fn truncated_file_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let arch = Architecture::new(1, vec![2], 1).unwrap();
        let p = NetworkParams::zeros(&arch).unwrap();
        write_checkpoint(&path, &p, 0, 0).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(PinnError::Schema { .. })));
    }
}
