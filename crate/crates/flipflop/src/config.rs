//! `key=value` text configuration. Blank lines and `#` comments are ignored; keys
//! may appear once.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
    read: RefCell<BTreeSet<String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config { line: n + 1, msg: format!("expected key=value, got {line:?}") })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config { line: n + 1, msg: "empty key".into() });
            }
            if cfg.entries.insert(k.to_string(), (n + 1, v.trim().to_string())).is_some() {
                return Err(Error::Config { line: n + 1, msg: format!("duplicate key {k:?}") });
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::parse(&text)
    }

    /// Sets or replaces a key, as a command-line override would.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.read.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.read.borrow_mut().insert(key.to_string());
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => {
                v.parse().map(Some).map_err(|e| Error::Config { line: *line, msg: format!("{key}: {v:?}: {e}") })
            }
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// A comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.read.borrow_mut().insert(key.to_string());
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    let s = s.trim();
                    s.parse().map_err(|e| Error::Config { line: *line, msg: format!("{key}: {s:?}: {e}") })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Fails on the first key that no getter asked for.
    pub fn reject_unknown(&self) -> Result<()> {
        let read = self.read.borrow();
        match self.entries.iter().find(|(k, _)| !read.contains(*k)) {
            Some((k, (line, _))) => Err(Error::Config { line: *line, msg: format!("unknown key {k:?}") }),
            None => Ok(()),
        }
    }
}
