//! Plain-text input formats.
//!
//! Run configs hold `key=value` lines (the nine factor keys plus
//! `max_ticks`); levels files hold `name=low,high` lines. Blank lines and
//! `#` comments are ignored. Anything else is an error carrying its line
//! number.

use std::collections::HashSet;

use thiserror::Error;

use crate::experiments::{FactorLevels, LevelsError};
use crate::params::{to_u32, Factor, ParamError, SimParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key=value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: `{value}` is not a number")]
    Number { line: usize, value: String },
    #[error("line {line}: {source}")]
    Param { line: usize, source: ParamError },
    #[error("line {line}: {source}")]
    Levels { line: usize, source: LevelsError },
}

fn entries(text: &str) -> impl Iterator<Item = Result<(usize, &str, &str), ConfigError>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            return None;
        }
        Some(match content.split_once('=') {
            Some((key, value)) if !key.trim().is_empty() => Ok((line, key.trim(), value.trim())),
            _ => Err(ConfigError::Syntax { line }),
        })
    })
}

fn number(line: usize, text: &str) -> Result<f64, ConfigError> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::Number {
            line,
            value: text.to_string(),
        })
}

fn check_duplicate(seen: &mut HashSet<String>, line: usize, key: &str) -> Result<(), ConfigError> {
    if seen.insert(key.to_string()) {
        Ok(())
    } else {
        Err(ConfigError::DuplicateKey {
            line,
            key: key.to_string(),
        })
    }
}

/// Parses a run config. Missing keys keep the all-low defaults and a
/// 1500-tick limit. Range checks are left to [`SimParams::validate`].
pub fn parse_run_config(text: &str) -> Result<SimParams, ConfigError> {
    let mut params = SimParams::default();
    let mut seen = HashSet::new();
    for entry in entries(text) {
        let (line, key, value) = entry?;
        check_duplicate(&mut seen, line, key)?;
        let value = number(line, value)?;
        if key == "max_ticks" {
            params.max_ticks =
                to_u32("max_ticks", value).map_err(|source| ConfigError::Param { line, source })?;
            continue;
        }
        let factor = Factor::from_key(key).ok_or_else(|| ConfigError::UnknownKey {
            line,
            key: key.to_string(),
        })?;
        params
            .set_factor(factor, value)
            .map_err(|source| ConfigError::Param { line, source })?;
    }
    Ok(params)
}

/// Parses a levels file. Factors not listed keep their default levels.
pub fn parse_levels(text: &str) -> Result<FactorLevels, ConfigError> {
    let mut levels = FactorLevels::default();
    let mut seen = HashSet::new();
    for entry in entries(text) {
        let (line, key, value) = entry?;
        let factor = Factor::from_key(key).ok_or_else(|| ConfigError::UnknownKey {
            line,
            key: key.to_string(),
        })?;
        check_duplicate(&mut seen, line, key)?;
        let (low, high) = value.split_once(',').ok_or(ConfigError::Syntax { line })?;
        levels
            .set(
                factor,
                number(line, low.trim())?,
                number(line, high.trim())?,
            )
            .map_err(|source| ConfigError::Levels { line, source })?;
    }
    Ok(levels)
}

/// Levels file text for `levels`, one line per factor in table order.
pub fn format_levels(levels: &FactorLevels) -> String {
    Factor::ALL
        .iter()
        .map(|&f| {
            let (low, high) = levels.get(f);
            format!("{}={low},{high}\n", f.key())
        })
        .collect()
}
