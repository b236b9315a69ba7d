//! Binary grid cache.
//!
//! Layout (little-endian): magic `GSPH`, `u16` version = 1, `u32` width,
//! `u32` height, then `width·height` records of `(f32 src_u, f32 src_v, u8 valid)`.

use std::io::Write;
use std::path::Path;

use super::grid::SampleGrid;
use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 4] = b"GSPH";
pub const GRID_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4;
const RECORD_LEN: usize = 4 + 4 + 1;

pub fn encode_grid(grid: &SampleGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + grid.len() * RECORD_LEN);
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&GRID_VERSION.to_le_bytes());
    out.extend_from_slice(&grid.width.to_le_bytes());
    out.extend_from_slice(&grid.height.to_le_bytes());
    for i in 0..grid.len() {
        out.extend_from_slice(&grid.src_u[i].to_le_bytes());
        out.extend_from_slice(&grid.src_v[i].to_le_bytes());
        out.push(grid.valid[i] as u8);
    }
    out
}

pub fn decode_grid(bytes: &[u8]) -> Result<SampleGrid> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format("grid file truncated in header"));
    }
    if &bytes[0..4] != GRID_MAGIC {
        return Err(Error::format("grid file has wrong magic bytes"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != GRID_VERSION {
        return Err(Error::format(format!(
            "unsupported grid version {version}, expected {GRID_VERSION}"
        )));
    }
    let width = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
    let height = u32::from_le_bytes(bytes[10..14].try_into().unwrap());
    let n = width as usize * height as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != n * RECORD_LEN {
        return Err(Error::format(format!(
            "grid body holds {} bytes, expected {} for {width}x{height}",
            body.len(),
            n * RECORD_LEN
        )));
    }
    let mut src_u = Vec::with_capacity(n);
    let mut src_v = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for rec in body.chunks_exact(RECORD_LEN) {
        src_u.push(f32::from_le_bytes(rec[0..4].try_into().unwrap()));
        src_v.push(f32::from_le_bytes(rec[4..8].try_into().unwrap()));
        valid.push(match rec[8] {
            0 => false,
            1 => true,
            b => return Err(Error::format(format!("invalid validity byte {b}"))),
        });
    }
    SampleGrid::new(width, height, src_u, src_v, valid)
}

pub fn save_grid(grid: &SampleGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_grid(grid)).map_err(|e| Error::io(path, e))
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<SampleGrid> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grid(&bytes)
}
