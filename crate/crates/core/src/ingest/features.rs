//! Binary feature-matrix file, so stored results can be re-evaluated without
//! re-running preprocessing:
//!
//! ```text
//! "SSCF" | u32 version = 1 | u32 f | u32 t | u32 n
//! per column: u16 id_len | id (UTF-8) | f*t f64 (little-endian)
//! ```

use std::fs;
use std::io::Read;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::preprocess::FeatureMatrix;

const MAGIC: &[u8; 4] = b"SSCF";
const VERSION: u32 = 1;

/// True when `path` is a regular file starting with the feature-file magic.
pub fn is_features_file(path: impl AsRef<Path>) -> bool {
    let mut head = [0u8; 4];
    fs::File::open(path.as_ref())
        .and_then(|mut f| f.read_exact(&mut head))
        .is_ok()
        && &head == MAGIC
}

pub fn write_features(features: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (f, t) = features.shape();
    let mut out = Vec::with_capacity(20 + features.n() * (2 + 8 * features.d()));
    out.extend_from_slice(MAGIC);
    for v in [VERSION, f as u32, t as u32, features.n() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for (j, id) in features.ids().iter().enumerate() {
        let len = u16::try_from(id.len()).map_err(|_| Error::Validation(format!("id {id:?} too long")))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for v in features.column(j) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut pos = 0usize;
    let mut take = |n: usize, what: &str| -> Result<&[u8]> {
        if buf.len() - pos < n {
            return Err(Error::format(
                path,
                format!("byte {pos}"),
                format!("unexpected end of file reading {what}"),
            ));
        }
        let s = &buf[pos..pos + n];
        pos += n;
        Ok(s)
    };
    if take(4, "magic")? != MAGIC {
        return Err(Error::format(path, "byte 0", "bad magic, expected \"SSCF\""));
    }
    let mut header = [0u32; 4];
    for (i, h) in header.iter_mut().enumerate() {
        *h = u32::from_le_bytes(take(4, ["version", "f", "t", "n"][i])?.try_into().unwrap());
    }
    let [version, f, t, n] = header.map(|v| v as usize);
    if version != VERSION as usize {
        return Err(Error::format(path, "byte 4", format!("unsupported version {version}")));
    }
    let d = f * t;
    let mut ids = Vec::with_capacity(n);
    let mut data = Array2::zeros((d, n));
    for j in 0..n {
        let len = u16::from_le_bytes(take(2, "id length")?.try_into().unwrap()) as usize;
        let id = std::str::from_utf8(take(len, "id")?)
            .map_err(|_| Error::format(path, "id", "id is not valid UTF-8"))?
            .to_owned();
        ids.push(id);
        let raw = take(8 * d, "column")?;
        for (dst, c) in data.column_mut(j).iter_mut().zip(raw.chunks_exact(8)) {
            *dst = f64::from_le_bytes(c.try_into().unwrap());
        }
    }
    let consumed = pos;
    if consumed != buf.len() {
        return Err(Error::format(path, format!("byte {consumed}"), "trailing bytes"));
    }
    FeatureMatrix::new(data, ids, (f, t))
}
