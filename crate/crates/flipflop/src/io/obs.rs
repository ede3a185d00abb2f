//! Observation sets as text.
//!
//! The native format has one `i j value` triple per line with 0-based indices;
//! blank lines and lines starting with `#` are skipped. The MovieLens loader reads
//! `user item rating [timestamp]` lines separated by `::`, tabs, commas or spaces,
//! and maps user and item ids to dense 0-based indices in increasing id order.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use flipflop_core::ialm::ObservationSet;

use crate::error::{Error, Result};

fn parse<T: std::str::FromStr>(field: Option<&str>, line: usize, what: &'static str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let f = field.ok_or_else(|| Error::format(what, format!("line {line}: missing field")))?;
    f.parse().map_err(|e| Error::format(what, format!("line {line}: {f:?}: {e}")))
}

/// Reads `i j value` lines. Without `shape`, it is one past the largest index seen.
pub fn read_triplets(r: impl BufRead, shape: Option<(usize, usize)>) -> Result<ObservationSet> {
    let mut idx = Vec::new();
    let mut val = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let i: usize = parse(it.next(), n + 1, "observation file")?;
        let j: usize = parse(it.next(), n + 1, "observation file")?;
        let v: f64 = parse(it.next(), n + 1, "observation file")?;
        if it.next().is_some() {
            return Err(Error::format("observation file", format!("line {}: expected 3 fields", n + 1)));
        }
        idx.push((i, j));
        val.push(v);
    }
    let shape = shape.unwrap_or_else(|| idx.iter().fold((0, 0), |(m, n), &(i, j)| (m.max(i + 1), n.max(j + 1))));
    Ok(ObservationSet::new(idx, val, shape)?)
}

pub fn write_triplets(mut w: impl Write, obs: &ObservationSet) -> Result<()> {
    for (&(i, j), v) in obs.indices().iter().zip(obs.values()) {
        writeln!(w, "{i} {j} {v:e}")?;
    }
    w.flush()?;
    Ok(())
}

/// A MovieLens-style rating file with its id maps: `users[i]` is the original id of row `i`.
#[derive(Clone, Debug)]
pub struct Ratings {
    pub obs: ObservationSet,
    pub users: Vec<u64>,
    pub items: Vec<u64>,
}

pub fn read_movielens(r: impl BufRead) -> Result<Ratings> {
    let mut raw = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if t.contains("::") {
            t.split("::").map(str::trim).collect()
        } else {
            t.split(|c: char| c == '\t' || c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect()
        };
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::format("rating file", format!("line {}: expected 3 or 4 fields", n + 1)));
        }
        let u: u64 = parse(Some(fields[0]), n + 1, "rating file")?;
        let i: u64 = parse(Some(fields[1]), n + 1, "rating file")?;
        let v: f64 = parse(Some(fields[2]), n + 1, "rating file")?;
        raw.push((u, i, v));
    }
    let dense = |ids: Vec<u64>| -> (Vec<u64>, BTreeMap<u64, usize>) {
        let map: BTreeMap<u64, usize> = ids.into_iter().map(|id| (id, 0)).collect();
        let order: Vec<u64> = map.keys().copied().collect();
        let map = order.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        (order, map)
    };
    let (users, umap) = dense(raw.iter().map(|r| r.0).collect());
    let (items, imap) = dense(raw.iter().map(|r| r.1).collect());
    let idx = raw.iter().map(|r| (umap[&r.0], imap[&r.1])).collect();
    let val = raw.iter().map(|r| r.2).collect();
    let obs = ObservationSet::new(idx, val, (users.len(), items.len()))?;
    Ok(Ratings { obs, users, items })
}

pub fn load_triplets(path: &Path, shape: Option<(usize, usize)>) -> Result<ObservationSet> {
    read_triplets(super::open(path)?, shape)
}

pub fn save_triplets(path: &Path, obs: &ObservationSet) -> Result<()> {
    write_triplets(super::create(path)?, obs)
}

pub fn load_movielens(path: &Path) -> Result<Ratings> {
    read_movielens(super::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets() {
        let o = read_triplets("# header\n1 0 2.5\n0 2 -1\n\n".as_bytes(), None).unwrap();
        assert_eq!(o.shape(), (2, 3));
        assert_eq!(o.indices(), &[(0, 2), (1, 0)]);
        let mut out = Vec::new();
        write_triplets(&mut out, &o).unwrap();
        assert_eq!(read_triplets(&out[..], Some((2, 3))).unwrap(), o);
        assert!(read_triplets("0 0 1\n0 0 2\n".as_bytes(), None).is_err());
        assert!(read_triplets("0 0\n".as_bytes(), None).is_err());
        assert!(read_triplets("5 0 1\n".as_bytes(), Some((2, 2))).is_err());
    }

    #[test]
    fn movielens_separators() {
        let a = read_movielens("10::7::4::978300760\n3::7::5::978302109\n10::2::1::0\n".as_bytes()).unwrap();
        assert_eq!(a.users, vec![3, 10]);
        assert_eq!(a.items, vec![2, 7]);
        assert_eq!(a.obs.indices(), &[(0, 1), (1, 0), (1, 1)]);
        assert_eq!(a.obs.values(), &[5.0, 1.0, 4.0]);
        let b = read_movielens("10\t7\t4\t978300760\n3\t7\t5\t978302109\n10\t2\t1\t0\n".as_bytes()).unwrap();
        assert_eq!(b.obs, a.obs);
        assert!(read_movielens("1 2\n".as_bytes()).is_err());
    }
}
