//! File formats for matrices, tensors, observation sets and SVD results.

pub mod csv_matrix;
pub mod dmat;
pub mod dten;
pub mod obs;
pub mod svd_files;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use flipflop_core::DenseMatrix;

use crate::error::{Error, Result};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(Error::io(path))
}

/// Buffered writer for a new file, with the path attached to errors.
pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    create(path)
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(Error::io(path))
}

/// Loads a matrix, choosing the format by extension: `.csv` is text, anything else DMAT.
pub fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => csv_matrix::load(path),
        _ => dmat::load(path),
    }
}

/// Saves a matrix, choosing the format by extension as [`load_matrix`] does.
pub fn save_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => csv_matrix::save(path, m),
        _ => dmat::save(path, m),
    }
}
