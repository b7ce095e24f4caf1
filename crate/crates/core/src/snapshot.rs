//! `NVGRID1` binary snapshots and their JSON sidecars.
//!
//! Layout (all little-endian): the 8-byte magic `b"NVGRID1\0"`, `u32 nx`,
//! `u32 ny`, `f64 wx`, `f64 wy`, `f64 t`, then `nx * ny` `f64` samples with
//! the x index fastest.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{NvError, Result};
use crate::grid::{RealField, TorusGrid};

pub const MAGIC: &[u8; 8] = b"NVGRID1\0";
const HEADER_LEN: usize = 8 + 4 + 4 + 8 + 8 + 8;

/// Metadata written next to every snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub format: String,
    pub field: String,
    pub nx: u32,
    pub ny: u32,
    pub wx: f64,
    pub wy: f64,
    pub t: f64,
}

pub fn encode(field: &RealField, t: f64) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    out.extend_from_slice(&g.wx().to_le_bytes());
    out.extend_from_slice(&g.wy().to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in field.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

/// Parses a snapshot, returning the field and its time stamp.
pub fn decode(bytes: &[u8]) -> Result<(RealField, f64)> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(NvError::Contract("not an NVGRID1 snapshot".into()));
    }
    let nx = read_u32(bytes, 8) as usize;
    let ny = read_u32(bytes, 12) as usize;
    let wx = read_f64(bytes, 16);
    let wy = read_f64(bytes, 24);
    let t = read_f64(bytes, 32);
    let grid = TorusGrid::new(wx, wy, nx, ny)?;
    let expected = HEADER_LEN + 8 * grid.len();
    if bytes.len() != expected {
        return Err(NvError::Shape {
            expected,
            got: bytes.len(),
        });
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((RealField::from_vec(grid, data)?, t))
}

/// Writes `<stem>.nvgrid` and `<stem>.json`; returns the binary path.
pub fn write(dir: &Path, stem: &str, name: &str, field: &RealField, t: f64) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let bin = dir.join(format!("{stem}.nvgrid"));
    fs::File::create(&bin)?.write_all(&encode(field, t))?;
    let g = field.grid();
    let meta = SnapshotMeta {
        format: "NVGRID1".into(),
        field: name.into(),
        nx: g.nx() as u32,
        ny: g.ny() as u32,
        wx: g.wx(),
        wy: g.wy(),
        t,
    };
    fs::write(
        dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(bin)
}

pub fn read(path: &Path) -> Result<(RealField, f64)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_exact() {
        let g = TorusGrid::new(3.0, 5.0, 8, 16).unwrap();
        let f = RealField::from_fn(g, |x, y| x + 10.0 * y);
        let bytes = encode(&f, 1.25);
        assert_eq!(&bytes[..8], b"NVGRID1\0");
        assert_eq!(read_u32(&bytes, 8), 8);
        assert_eq!(read_u32(&bytes, 12), 16);
        assert_eq!(read_f64(&bytes, 16), 3.0);
        assert_eq!(read_f64(&bytes, 24), 5.0);
        assert_eq!(read_f64(&bytes, 32), 1.25);
        assert_eq!(bytes.len(), 40 + 8 * 128);
        // x index fastest: second sample is (x1, y0)
        assert_eq!(read_f64(&bytes, 48), g.x(1));
        let (back, t) = decode(&bytes).unwrap();
        assert_eq!(t, 1.25);
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_truncated_and_foreign_bytes() {
        let g = TorusGrid::new(1.0, 1.0, 8, 8).unwrap();
        let bytes = encode(&RealField::zeros(g), 0.0);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
    }
}
