//! An [`ApproxSvd`] on disk: `<prefix>.U.dmat`, `<prefix>.sigma.dmat` (`k x 1`),
//! `<prefix>.V.dmat` and a `<prefix>.meta` sidecar of `key=value` lines.

use std::io::Write;
use std::path::{Path, PathBuf};

use flipflop_core::{ApproxSvd, DenseMatrix};

use super::dmat;
use crate::config::Config;
use crate::error::{Error, Result};

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn paths(prefix: &Path) -> [PathBuf; 4] {
    [".U.dmat", ".sigma.dmat", ".V.dmat", ".meta"].map(|s| with_suffix(prefix, s))
}

/// Writes the factors and a sidecar holding `k` followed by `meta`.
pub fn save(prefix: &Path, svd: &ApproxSvd, meta: &[(&str, String)]) -> Result<()> {
    let [u, s, v, m] = paths(prefix);
    dmat::save(&u, &svd.u)?;
    dmat::save(&s, &DenseMatrix::from_col_major(svd.k, 1, svd.sigma.clone())?)?;
    dmat::save(&v, &svd.v)?;
    let mut w = super::create(&m)?;
    writeln!(w, "k={}", svd.k)?;
    for (key, val) in meta {
        writeln!(w, "{key}={val}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the factors back together with the sidecar.
pub fn load(prefix: &Path) -> Result<(ApproxSvd, Config)> {
    let [u, s, v, m] = paths(prefix);
    let u = dmat::load(&u)?;
    let sigma = dmat::load(&s)?;
    let v = dmat::load(&v)?;
    let text = std::fs::read_to_string(&m).map_err(Error::io(&m))?;
    let meta = Config::parse(&text)?;
    let k = sigma.rows();
    if sigma.cols() != 1 || u.cols() != k || v.cols() != k {
        return Err(Error::format("SVD files", "factor shapes disagree"));
    }
    if meta.get::<usize>("k")? != Some(k) {
        return Err(Error::format("SVD files", "sidecar k disagrees with the factors"));
    }
    Ok((ApproxSvd { u, sigma: sigma.into_vec(), v, k }, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("run");
        let svd = ApproxSvd {
            u: DenseMatrix::identity(3).leading_cols(2),
            sigma: vec![2.0, 1.0],
            v: DenseMatrix::identity(4).leading_cols(2),
            k: 2,
        };
        save(&prefix, &svd, &[("seed", "7".into()), ("method", "flipflop".into())]).unwrap();
        let (back, meta) = load(&prefix).unwrap();
        assert_eq!(back.u, svd.u);
        assert_eq!(back.sigma, svd.sigma);
        assert_eq!(back.v, svd.v);
        assert_eq!(meta.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(meta.get_str("method"), Some("flipflop"));
    }
}
