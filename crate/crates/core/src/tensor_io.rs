//! Binary tensor dumps: `u32` rank, one `u32` per dimension, then the
//! elements as `f32`, everything little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Upper bound on the rank accepted when reading.
const MAX_RANK: u32 = 8;

pub fn write_tensor(mut w: impl Write, dims: &[usize], data: &[f32]) -> Result<()> {
    let count: usize = dims.iter().product();
    if count != data.len() {
        return Err(Error::Format(format!("dims {dims:?} describe {count} elements, got {}", data.len())));
    }
    let dim32 = |d: usize| u32::try_from(d).map_err(|_| Error::Format(format!("dimension {d} exceeds u32")));
    w.write_all(&dim32(dims.len())?.to_le_bytes())?;
    for &d in dims {
        w.write_all(&dim32(d)?.to_le_bytes())?;
    }
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

/// Reads one tensor, returning its dims and elements.
pub fn read_tensor(mut r: impl Read) -> Result<(Vec<usize>, Vec<f32>)> {
    let rank = read_u32(&mut r)?;
    if rank > MAX_RANK {
        return Err(Error::Format(format!("rank {rank} exceeds {MAX_RANK}")));
    }
    let dims = (0..rank).map(|_| read_u32(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("element count overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 4 {
        return Err(Error::Format(format!("expected {} data bytes, found {}", count * 4, bytes.len())));
    }
    let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok((dims, data))
}

pub fn save_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    write_tensor(BufWriter::new(File::create(path)?), &[m.rows(), m.cols()], m.data())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let (dims, data) = read_tensor(BufReader::new(File::open(path)?))?;
    match dims[..] {
        [rows, cols] => Matrix::from_vec(rows, cols, data),
        _ => Err(Error::Format(format!("expected a rank-2 tensor, found dims {dims:?}"))),
    }
}
