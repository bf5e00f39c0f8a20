//! Experiment configuration files: flat `key = value` lines, `#` comments,
//! blank lines ignored. Unknown or duplicate keys are errors so a typo can
//! never silently fall back to a default.

use std::collections::HashSet;
use std::fs;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

use crate::experiment::{Engine, ExperimentConfig};

/// Read and parse a config file.
pub fn load_config(path: &str) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config `{path}`"))?;
    parse_config(&text).with_context(|| format!("in config `{path}`"))
}

/// Parse config text into a validated [`ExperimentConfig`].
///
/// Recognized keys (all optional except `n_grid`):
/// `n_grid`, `replicates`, `alpha`, `seed`, `engine`, `sweeps`, `burn_in`,
/// `thin`, `chains`, `data_model`, `enumeration_cap`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut have_grid = false;

    for (ix, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let lineno = ix + 1;
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {lineno}: expected `key = value`, got `{line}`"))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            bail!("line {lineno}: key `{key}` has an empty value");
        }

        match key {
            "n_grid" => {
                cfg.n_grid = value
                    .split(',')
                    .map(|tok| {
                        tok.trim()
                            .parse::<usize>()
                            .with_context(|| format!("line {lineno}: bad n_grid entry `{tok}`"))
                    })
                    .collect::<Result<_>>()?;
                have_grid = true;
            }
            "replicates" => cfg.replicates = parse_scalar(value, key, lineno)?,
            "alpha" => cfg.alpha = parse_scalar(value, key, lineno)?,
            "seed" => cfg.seed = parse_scalar(value, key, lineno)?,
            "engine" => {
                cfg.engine = Engine::from_str(value)
                    .with_context(|| format!("line {lineno}: bad engine"))?
            }
            "sweeps" => cfg.sweeps = parse_scalar(value, key, lineno)?,
            "burn_in" => cfg.burn_in = parse_scalar(value, key, lineno)?,
            "thin" => cfg.thin = parse_scalar(value, key, lineno)?,
            "chains" => cfg.chains = parse_scalar(value, key, lineno)?,
            "data_model" => {
                cfg.data_model = value
                    .parse()
                    .with_context(|| format!("line {lineno}: bad data_model"))?
            }
            "enumeration_cap" => cfg.enumeration_cap = parse_scalar(value, key, lineno)?,
            other => bail!("line {lineno}: unknown key `{other}`"),
        }

        // `seen` keys borrow from a static list so the set can outlive `line`.
        let canonical = KEYS.iter().find(|&&k| k == key).expect("matched above");
        if !seen.insert(canonical) {
            bail!("line {lineno}: duplicate key `{key}`");
        }
    }

    if !have_grid {
        bail!("missing required key `n_grid`");
    }
    cfg.validate()?;
    Ok(cfg)
}

const KEYS: [&str; 11] = [
    "n_grid",
    "replicates",
    "alpha",
    "seed",
    "engine",
    "sweeps",
    "burn_in",
    "thin",
    "chains",
    "data_model",
    "enumeration_cap",
];

fn parse_scalar<T: FromStr>(value: &str, key: &str, lineno: usize) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    value
        .parse::<T>()
        .with_context(|| format!("line {lineno}: bad value `{value}` for `{key}`"))
}
