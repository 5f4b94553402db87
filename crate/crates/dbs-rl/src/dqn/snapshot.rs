//! Flat binary parameter snapshots.
//!
//! Layout (little-endian): magic `QSNP`, architecture tag byte
//! (0 = linear, 1 = one hidden layer), u32 hidden units, u32 input dim,
//! u32 action count, u32 parameter count, then the parameters as f64s.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::model::{ApproxModel, Architecture};

const MAGIC: &[u8; 4] = b"QSNP";

/// Serialize a model into the snapshot wire format.
pub fn snapshot_bytes(model: &ApproxModel) -> Vec<u8> {
    let (tag, hidden) = match model.arch {
        Architecture::Linear => (0u8, 0u32),
        Architecture::OneHidden { hidden } => (1u8, hidden as u32),
    };
    let mut bytes = Vec::with_capacity(21 + model.theta.len() * 8);
    bytes.extend_from_slice(MAGIC);
    bytes.push(tag);
    bytes.extend_from_slice(&hidden.to_le_bytes());
    bytes.extend_from_slice(&(model.input_dim as u32).to_le_bytes());
    bytes.extend_from_slice(&(model.n_actions as u32).to_le_bytes());
    bytes.extend_from_slice(&(model.theta.len() as u32).to_le_bytes());
    for w in &model.theta {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    bytes
}

pub fn write_snapshot(path: &Path, model: &ApproxModel) -> Result<()> {
    let bytes = snapshot_bytes(model);
    let mut file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(&bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_snapshot(path: &Path) -> Result<ApproxModel> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() < 21 || &bytes[0..4] != MAGIC {
        return Err(Error::MalformedSnapshot("bad magic or truncated header".into()));
    }
    let tag = bytes[4];
    let read_u32 = |offset: usize| {
        u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("length checked"))
    };
    let hidden = read_u32(5) as usize;
    let input_dim = read_u32(9) as usize;
    let n_actions = read_u32(13) as usize;
    let theta_len = read_u32(17) as usize;
    let arch = match tag {
        0 => Architecture::Linear,
        1 => Architecture::OneHidden { hidden },
        other => {
            return Err(Error::MalformedSnapshot(format!(
                "unknown architecture tag {other}"
            )))
        }
    };
    if arch.param_count(input_dim, n_actions) != theta_len {
        return Err(Error::MalformedSnapshot(format!(
            "parameter count {theta_len} does not match the header architecture"
        )));
    }
    if bytes.len() != 21 + theta_len * 8 {
        return Err(Error::MalformedSnapshot(format!(
            "expected {} bytes, found {}",
            21 + theta_len * 8,
            bytes.len()
        )));
    }
    let theta = bytes[21..]
        .chunks_exact(8)
        .map(|chunk| f64::from_le_bytes(chunk.try_into().expect("chunked by 8")))
        .collect();
    Ok(ApproxModel {
        arch,
        input_dim,
        n_actions,
        theta,
    })
}
