//! `key = value` solver configuration files.
//!
//! ```text
//! # comments run to end of line
//! ranks   = 3,3,3
//! alpha   = 0.25,0.25,0.5
//! tau     = 0.01          # one value is broadcast to every mode
//! lambda  = 0.01
//! gamma_X = 0.1
//! gamma_A = 2.3
//! rho     = 1
//! max_iter = 500
//! tol     = 1e-5
//! init    = spectral      # or random
//! seed    = 0
//! freeze_multipliers = false
//! ```
//!
//! Missing keys keep their defaults, unknown or repeated keys are errors.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::solver::{InitScheme, LratmConfig};

fn scalar<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(line, format!("`{key}`: cannot parse `{value}`")))
}

fn list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| scalar(line, key, v.trim()))
        .collect()
}

pub fn parse_config(text: &str) -> Result<LratmConfig> {
    let mut cfg = LratmConfig::default();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::parse(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(Error::parse(line, format!("`{key}` has no value")));
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::parse(line, format!("`{key}` given twice")));
        }
        match key {
            "ranks" => cfg.ranks = list(line, key, value)?,
            "alpha" => {
                cfg.alpha = list(line, key, value)?;
                let sum: f64 = cfg.alpha.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::parse(line, format!("`alpha` sums to {sum}, expected 1")));
                }
            }
            "tau" => cfg.tau = list(line, key, value)?,
            "lambda" => cfg.lambda = list(line, key, value)?,
            "gamma_X" => cfg.gamma_x = scalar(line, key, value)?,
            "gamma_A" => cfg.gamma_a = scalar(line, key, value)?,
            "rho" => cfg.rho = list(line, key, value)?,
            "max_iter" => cfg.max_iter = scalar(line, key, value)?,
            "tol" => cfg.tol = scalar(line, key, value)?,
            "init" => {
                cfg.init = value
                    .parse::<InitScheme>()
                    .map_err(|e| Error::parse(line, e.to_string()))?
            }
            "seed" => cfg.seed = scalar(line, key, value)?,
            "freeze_multipliers" => cfg.freeze_multipliers = scalar(line, key, value)?,
            other => return Err(Error::parse(line, format!("unknown key `{other}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<LratmConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Serializes a configuration in the format [`parse_config`] reads.
pub fn format_config(cfg: &LratmConfig) -> String {
    let mut out = String::new();
    if !cfg.ranks.is_empty() {
        writeln!(out, "ranks = {}", join(&cfg.ranks)).unwrap();
    }
    if !cfg.alpha.is_empty() {
        writeln!(out, "alpha = {}", join(&cfg.alpha)).unwrap();
    }
    writeln!(out, "tau = {}", join(&cfg.tau)).unwrap();
    writeln!(out, "lambda = {}", join(&cfg.lambda)).unwrap();
    writeln!(out, "gamma_X = {}", cfg.gamma_x).unwrap();
    writeln!(out, "gamma_A = {}", cfg.gamma_a).unwrap();
    writeln!(out, "rho = {}", join(&cfg.rho)).unwrap();
    writeln!(out, "max_iter = {}", cfg.max_iter).unwrap();
    writeln!(out, "tol = {}", cfg.tol).unwrap();
    writeln!(out, "init = {}", cfg.init).unwrap();
    writeln!(out, "seed = {}", cfg.seed).unwrap();
    writeln!(out, "freeze_multipliers = {}", cfg.freeze_multipliers).unwrap();
    out
}
