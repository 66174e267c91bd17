//! Flat `key = value` experiment configuration.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Parsed configuration. Every lookup is recorded so that keys nobody asked
/// for can be reported as errors once a command has read its parameters.
#[derive(Debug)]
pub struct Config {
    entries: BTreeMap<String, String>,
    lines: BTreeMap<String, usize>,
    used: RefCell<BTreeSet<String>>,
    tol_scale: f64,
    tolerances: RefCell<BTreeMap<String, f64>>,
}

impl Config {
    pub fn load(path: &Path, tol_scale: f64) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, tol_scale)
    }

    pub fn parse(text: &str, tol_scale: f64) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        let mut lines = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::validation(
                    "config",
                    format!("line {}: expected `key = value`", no + 1),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(CliError::validation("config", format!("line {}: bad key `{key}`", no + 1)));
            }
            if let Some(first) = lines.insert(key.to_string(), no + 1) {
                return Err(CliError::validation(
                    key,
                    format!("defined on line {first} and again on line {}", no + 1),
                ));
            }
            entries.insert(key.to_string(), value.to_string());
        }
        Ok(Self {
            entries,
            lines,
            used: RefCell::default(),
            tol_scale,
            tolerances: RefCell::default(),
        })
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn tol_scale(&self) -> f64 {
        self.tol_scale
    }

    /// Tolerances in effect, after scaling of defaults.
    pub fn tolerances(&self) -> BTreeMap<String, f64> {
        self.tolerances.borrow().clone()
    }

    /// SHA-256 of the canonical form: sorted `key=value` lines, so comments,
    /// spacing and ordering do not change the hash.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.entries {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Fails on keys that were never looked up.
    pub fn reject_unknown(&self) -> CliResult<()> {
        let used = self.used.borrow();
        match self.entries.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(CliError::validation(
                k,
                format!("unknown key for this command (line {})", self.lines[k]),
            )),
            None => Ok(()),
        }
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn choice<'a>(&self, key: &str, default: &'a str, options: &[&'a str]) -> CliResult<&'a str> {
        let v = self.raw(key).unwrap_or(default);
        options
            .iter()
            .find(|o| **o == v)
            .copied()
            .ok_or_else(|| CliError::validation(key, format!("`{v}` is not one of {}", options.join(", "))))
    }

    fn parse_f64(key: &str, v: &str) -> CliResult<f64> {
        let x: f64 = v
            .parse()
            .map_err(|_| CliError::validation(key, format!("`{v}` is not a number")))?;
        if !x.is_finite() {
            return Err(CliError::validation(key, "must be finite"));
        }
        Ok(x)
    }

    pub fn opt_f64(&self, key: &str) -> CliResult<Option<f64>> {
        self.raw(key).map(|v| Self::parse_f64(key, v)).transpose()
    }

    pub fn f64(&self, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    pub fn required_f64(&self, key: &str) -> CliResult<f64> {
        self.opt_f64(key)?
            .ok_or_else(|| CliError::validation(key, "required"))
    }

    pub fn positive(&self, key: &str, default: f64) -> CliResult<f64> {
        let x = self.f64(key, default)?;
        ensure(x > 0.0, key, format!("must be positive, got {x}"))?;
        Ok(x)
    }

    /// A tolerance: an explicit value is taken as is, the default is
    /// multiplied by the tolerance scale.
    pub fn tol(&self, key: &str, default: f64) -> CliResult<f64> {
        let x = match self.opt_f64(key)? {
            Some(x) => x,
            None => default * self.tol_scale,
        };
        ensure(x > 0.0, key, format!("must be positive, got {x}"))?;
        self.tolerances.borrow_mut().insert(key.to_string(), x);
        Ok(x)
    }

    pub fn u64(&self, key: &str, default: u64) -> CliResult<u64> {
        match self.raw(key) {
            Some(v) => v
                .parse()
                .map_err(|_| CliError::validation(key, format!("`{v}` is not a non-negative integer"))),
            None => Ok(default),
        }
    }

    pub fn count(&self, key: &str, default: usize, min: usize) -> CliResult<usize> {
        let x = self.u64(key, default as u64)? as usize;
        ensure(x >= min, key, format!("must be at least {min}, got {x}"))?;
        Ok(x)
    }

    pub fn bool(&self, key: &str, default: bool) -> CliResult<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(CliError::validation(key, format!("`{v}` is not a boolean"))),
        }
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let xs = v
            .split(',')
            .map(|s| Self::parse_f64(key, s.trim()))
            .collect::<CliResult<Vec<_>>>()?;
        ensure(!xs.is_empty(), key, "empty list")?;
        Ok(Some(xs))
    }
}

pub fn ensure(cond: bool, key: &str, reason: impl Into<String>) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::validation(key, reason))
    }
}
