//! Small matrices as CSV text, one matrix row per line, no header.

use std::io::{Read, Write};
use std::path::Path;

use flipflop_core::DenseMatrix;

use crate::error::{Error, Result};

pub fn read(r: impl Read) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::format("CSV matrix", format!("row {}: {f:?}: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format("CSV matrix", "no rows"));
    }
    Ok(DenseMatrix::from_rows(&rows)?)
}

pub fn write(w: impl Write, m: &DenseMatrix) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.rows() {
        wtr.write_record(m.row(i).iter().map(|v| format!("{v:e}")))?;
    }
    wtr.flush()?;
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
    fn parses_rows() {
        let m = read("1, 2\n# note\n3,4.5\n".as_bytes()).unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.5]]).unwrap());
        assert!(read("1,2\n3\n".as_bytes()).is_err());
        assert!(read("1,x\n".as_bytes()).is_err());
        let mut out = Vec::new();
        write(&mut out, &m).unwrap();
        assert_eq!(read(&out[..]).unwrap(), m);
    }
}
