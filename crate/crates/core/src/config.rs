//! `key = value` configuration text for [`EngineConfig`].
//!
//! Keys are the config field names. Blank lines and `#` comments are
//! ignored; unknown keys and malformed values are errors. `radius` accepts
//! `auto` for the size-dependent default.

use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::engine::EngineConfig;
use crate::error::{Error, Result};

pub const KEYS: &[&str] = &[
    "patch_n",
    "sigma",
    "lambda",
    "mu_smooth",
    "mu_edge",
    "mu1_smooth",
    "mu1_edge",
    "edge_threshold",
    "basis_levels",
    "basis_sharpness",
    "max_iters",
    "step_c",
    "radius",
    "tol",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

impl EngineConfig {
    /// Sets one field by name. Does not validate the resulting config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "patch_n" => self.patch_n = parse("patch_n", value)?,
            "sigma" => self.sigma = parse("sigma", value)?,
            "lambda" => self.lambda = parse("lambda", value)?,
            "mu_smooth" => self.mu_smooth = parse("mu_smooth", value)?,
            "mu_edge" => self.mu_edge = parse("mu_edge", value)?,
            "mu1_smooth" => self.mu1_smooth = parse("mu1_smooth", value)?,
            "mu1_edge" => self.mu1_edge = parse("mu1_edge", value)?,
            "edge_threshold" => self.edge_threshold = parse("edge_threshold", value)?,
            "basis_levels" => self.basis_levels = parse("basis_levels", value)?,
            "basis_sharpness" => self.basis_sharpness = parse("basis_sharpness", value)?,
            "max_iters" => self.max_iters = parse("max_iters", value)?,
            "step_c" => self.step_c = parse("step_c", value)?,
            "radius" => {
                self.radius = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse("radius", value)?)
                }
            }
            "tol" => self.tol = parse("tol", value)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override as given on the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {assignment:?}")))?;
        self.set(k, v)
    }

    /// Applies every assignment in a config text on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = match line.split_once('#') {
                Some((before, _)) => before,
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip_prefix(e))))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Canonical text form: every key in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let _ = writeln!(s, "{key} = {}", self.value_text(key));
        }
        s
    }

    fn value_text(&self, key: &str) -> String {
        match key {
            "patch_n" => self.patch_n.to_string(),
            "sigma" => self.sigma.to_string(),
            "lambda" => self.lambda.to_string(),
            "mu_smooth" => self.mu_smooth.to_string(),
            "mu_edge" => self.mu_edge.to_string(),
            "mu1_smooth" => self.mu1_smooth.to_string(),
            "mu1_edge" => self.mu1_edge.to_string(),
            "edge_threshold" => self.edge_threshold.to_string(),
            "basis_levels" => self.basis_levels.to_string(),
            "basis_sharpness" => self.basis_sharpness.to_string(),
            "max_iters" => self.max_iters.to_string(),
            "step_c" => self.step_c.to_string(),
            "radius" => self.radius.map_or_else(|| "auto".to_string(), |r| r.to_string()),
            "tol" => self.tol.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// First 16 hex digits of the SHA-256 of [`to_text`](Self::to_text).
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_text().as_bytes());
        hash.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}
