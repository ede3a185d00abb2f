//! `DMAT` files: the magic `DMAT`, little-endian `u64` rows and cols, then the
//! column-major `f64` payload.

use std::io::{Read, Write};
use std::path::Path;

use flipflop_core::DenseMatrix;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DMAT";

pub(crate) fn read_u64(r: &mut impl Read, what: &'static str) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::format(what, "truncated header"))?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_payload(r: &mut impl Read, len: usize, what: &'static str) -> Result<Vec<f64>> {
    let bytes = len.checked_mul(8).ok_or_else(|| Error::format(what, "dimensions overflow"))?;
    let mut buf = Vec::new();
    r.take(bytes as u64).read_to_end(&mut buf)?;
    if buf.len() != bytes {
        return Err(Error::format(what, format!("expected {bytes} payload bytes, found {}", buf.len())));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::format(what, "trailing bytes after payload"));
    }
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn read(mut r: impl Read) -> Result<DenseMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::format("DMAT", "missing magic"))?;
    if &magic != MAGIC {
        return Err(Error::format("DMAT", "bad magic"));
    }
    let rows = usize::try_from(read_u64(&mut r, "DMAT")?).map_err(|_| Error::format("DMAT", "rows too large"))?;
    let cols = usize::try_from(read_u64(&mut r, "DMAT")?).map_err(|_| Error::format("DMAT", "cols too large"))?;
    let len = rows.checked_mul(cols).ok_or_else(|| Error::format("DMAT", "dimensions overflow"))?;
    let data = read_payload(&mut r, len, "DMAT")?;
    Ok(DenseMatrix::from_col_major(rows, cols, data)?)
}

pub fn write(mut w: impl Write, m: &DenseMatrix) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<DenseMatrix> {
    read(super::open(path)?)
}

pub fn save(path: &Path, m: &DenseMatrix) -> Result<()> {
    write(super::create(path)?, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_layout() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let mut buf = Vec::new();
        write(&mut buf, &m).unwrap();
        assert_eq!(&buf[..4], b"DMAT");
        assert_eq!(buf.len(), 4 + 16 + 6 * 8);
        // Column-major: the second stored value is A(1, 0).
        assert_eq!(f64::from_le_bytes(buf[28..36].try_into().unwrap()), 4.0);
        assert_eq!(read(&buf[..]).unwrap(), m);
    }

    #[test]
    fn rejects_damage() {
        let m = DenseMatrix::identity(2);
        let mut buf = Vec::new();
        write(&mut buf, &m).unwrap();
        assert!(read(&buf[..buf.len() - 1]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read(&long[..]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read(&bad[..]).is_err());
        assert!(read(&buf[..10]).is_err());
    }
}
