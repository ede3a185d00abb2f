//! `DTEN` files: the magic `DTEN`, little-endian `u64` order `d`, `d` dimensions,
//! then the `f64` payload with the first index fastest.

use std::io::{Read, Write};
use std::path::Path;

use flipflop_core::DenseTensor;

use super::dmat::{read_payload, read_u64};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DTEN";

pub fn read(mut r: impl Read) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::format("DTEN", "missing magic"))?;
    if &magic != MAGIC {
        return Err(Error::format("DTEN", "bad magic"));
    }
    let d = read_u64(&mut r, "DTEN")?;
    if d == 0 || d > 64 {
        return Err(Error::format("DTEN", format!("unsupported order {d}")));
    }
    let mut dims = Vec::with_capacity(d as usize);
    for _ in 0..d {
        let v = read_u64(&mut r, "DTEN")?;
        dims.push(usize::try_from(v).map_err(|_| Error::format("DTEN", "dimension too large"))?);
    }
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &x| acc.checked_mul(x))
        .ok_or_else(|| Error::format("DTEN", "dimensions overflow"))?;
    let data = read_payload(&mut r, len, "DTEN")?;
    Ok(DenseTensor::new(dims, data)?)
}

pub fn write(mut w: impl Write, t: &DenseTensor) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(t.order() as u64).to_le_bytes())?;
    for &d in t.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in t.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<DenseTensor> {
    read(super::open(path)?)
}

pub fn save(path: &Path, t: &DenseTensor) -> Result<()> {
    write(super::create(path)?, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = DenseTensor::new(vec![2, 3, 1], (0..6).map(f64::from).collect()).unwrap();
        let mut buf = Vec::new();
        write(&mut buf, &t).unwrap();
        assert_eq!(buf.len(), 4 + 8 * 4 + 6 * 8);
        assert_eq!(read(&buf[..]).unwrap(), t);
        assert!(read(&buf[..buf.len() - 8]).is_err());
    }
}
