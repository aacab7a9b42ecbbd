//! Serialized forms of spectra and FIM matrices.

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FIMJ_MAGIC: [u8; 4] = *b"FIMJ";
pub const FIMJ_VERSION: u32 = 1;

/// JSON summary `{eigenvalues, trace, D, eps1, beta_at_D}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumExport {
    pub eigenvalues: Vec<f64>,
    pub trace: f64,
    #[serde(rename = "D")]
    pub coded_dim: usize,
    pub eps1: Option<f64>,
    #[serde(rename = "beta_at_D")]
    pub beta_at_d: f64,
}

/// Writes a matrix as a 16-byte header (`FIMJ`, version, rows, cols as
/// little-endian `u32`) followed by row-major little-endian `f64`s.
pub fn write_fimj<W: Write>(mut out: W, j: &Array2<f64>) -> Result<()> {
    let (rows, cols) = j.dim();
    let dim = |x: usize| u32::try_from(x).map_err(|_| Error::invalid(format!("dimension {x} exceeds u32")));
    out.write_all(&FIMJ_MAGIC)?;
    out.write_all(&FIMJ_VERSION.to_le_bytes())?;
    out.write_all(&dim(rows)?.to_le_bytes())?;
    out.write_all(&dim(cols)?.to_le_bytes())?;
    let mut buf = Vec::with_capacity(cols * 8);
    for row in j.outer_iter() {
        buf.clear();
        for x in row {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_fimj<R: Read>(mut input: R) -> Result<Array2<f64>> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if header[..4] != FIMJ_MAGIC {
        return Err(Error::Format("missing FIMJ magic".into()));
    }
    let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != FIMJ_VERSION {
        return Err(Error::Format(format!("unsupported FIMJ version {version}")));
    }
    let (rows, cols) = (word(8) as usize, word(12) as usize);
    let mut bytes = vec![0u8; rows * cols * 8];
    input.read_exact(&mut bytes)?;
    let data: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Format(e.to_string()))
}
