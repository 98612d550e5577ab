//! Binary field files: a 16-byte header (`"PCSF"`, `u32` d, `u32` m,
//! `u32` reserved = 0, all little-endian) followed by `m^d` little-endian
//! `f64` values in row-major node order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, GridSpec};
use crate::percolation::Field;

pub const MAGIC: &[u8; 4] = b"PCSF";
pub const HEADER_LEN: usize = 16;

pub fn encode_field(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.side() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for &x in field.values() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8], boundary: Boundary) -> Result<Field> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected PCSF".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4-byte slice"));
    let (d, m, reserved) = (word(4) as usize, word(8) as usize, word(12));
    if reserved != 0 {
        return Err(Error::Format(format!("reserved header word is {reserved}, expected 0")));
    }
    let grid = GridSpec::new(d, m, boundary).map_err(|e| Error::Format(e.to_string()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {} for d={d}, m={m}",
            body.len(),
            8 * grid.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Field::new(grid, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_field<W: Write>(mut w: W, field: &Field) -> Result<()> {
    w.write_all(&encode_field(field))?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R, boundary: Boundary) -> Result<Field> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_field(&bytes, boundary)
}

pub fn save_field(path: &Path, field: &Field) -> Result<()> {
    fs::write(path, encode_field(field))?;
    Ok(())
}

pub fn load_field(path: &Path, boundary: Boundary) -> Result<Field> {
    decode_field(&fs::read(path)?, boundary)
}
