//! Data ingestion and simulation: newline-delimited real files (or stdin)
//! and the two generative models the experiments draw from.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Read observations from `path`, or from stdin when `path` is `-`.
/// One real per line, decimal notation; blank lines are ignored.
pub fn read_data(path: &str) -> Result<Vec<f64>> {
    let text = if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .context("reading data from stdin")?;
        buf
    } else {
        std::fs::read_to_string(Path::new(path))
            .with_context(|| format!("reading data file `{path}`"))?
    };
    parse_data(&text).with_context(|| format!("parsing data from `{path}`"))
}

/// Parse newline-delimited reals; blank lines are skipped.
pub fn parse_data(text: &str) -> Result<Vec<f64>> {
    let mut xs = Vec::new();
    for (ix, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let x: f64 = line
            .parse()
            .with_context(|| format!("line {}: `{line}` is not a real number", ix + 1))?;
        if !x.is_finite() {
            bail!("line {}: observation must be finite, got {x}", ix + 1);
        }
        xs.push(x);
    }
    if xs.is_empty() {
        bail!("no observations found");
    }
    Ok(xs)
}

/// Generative model for simulated observations.
#[derive(Debug, Clone, PartialEq)]
pub enum DataModel {
    /// X ~ 𝒩(0, 1) i.i.d. — the single-component truth the experiments
    /// probe the posterior with.
    StandardNormal,
    /// Equal-variance Gaussian mixture: (weight, mean) pairs, unit variance.
    GaussianMixture(Vec<(f64, f64)>),
}

impl FromStr for DataModel {
    type Err = anyhow::Error;

    /// `standard-normal`, or `gaussian-mixture(w:m,w:m,…)` with weights
    /// summing to 1 — e.g. `gaussian-mixture(0.5:-2,0.5:2)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "standard-normal" {
            return Ok(DataModel::StandardNormal);
        }
        let Some(inner) = s
            .strip_prefix("gaussian-mixture(")
            .and_then(|rest| rest.strip_suffix(')'))
        else {
            bail!(
                "unknown data model `{s}`; expected `standard-normal` or \
                 `gaussian-mixture(w:m,…)`"
            );
        };
        let mut components = Vec::new();
        for part in inner.split(',') {
            let part = part.trim();
            let Some((w, m)) = part.split_once(':') else {
                bail!("mixture component `{part}` is not of the form weight:mean");
            };
            let weight: f64 = w
                .trim()
                .parse()
                .with_context(|| format!("mixture weight `{w}`"))?;
            let mean: f64 = m
                .trim()
                .parse()
                .with_context(|| format!("mixture mean `{m}`"))?;
            if !weight.is_finite() || weight <= 0.0 {
                bail!("mixture weight {weight} must be a positive real");
            }
            if !mean.is_finite() {
                bail!("mixture mean must be finite");
            }
            components.push((weight, mean));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if (total - 1.0).abs() > 1e-9 {
            bail!("mixture weights sum to {total}, not 1");
        }
        Ok(DataModel::GaussianMixture(components))
    }
}

impl fmt::Display for DataModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataModel::StandardNormal => write!(f, "standard-normal"),
            DataModel::GaussianMixture(cs) => {
                write!(f, "gaussian-mixture(")?;
                for (i, (w, m)) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{w}:{m}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Draw n observations. Consumption of the generator stream is fixed per
/// model — one normal per item, plus one uniform for the component choice
/// when (and only when) the mixture has more than one component — so a
/// single-component mixture at mean 0 reproduces `StandardNormal` draws
/// bit for bit under the same seed.
pub fn simulate_data<R: Rng + ?Sized>(model: &DataModel, n: usize, rng: &mut R) -> Vec<f64> {
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(rng);
        let x = match model {
            DataModel::StandardNormal => z,
            DataModel::GaussianMixture(cs) => {
                let mean = if cs.len() == 1 {
                    cs[0].1
                } else {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut chosen = cs[cs.len() - 1].1;
                    for &(w, m) in cs {
                        acc += w;
                        if u < acc {
                            chosen = m;
                            break;
                        }
                    }
                    chosen
                };
                mean + z
            }
        };
        xs.push(x);
    }
    xs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_values_and_skips_blanks() {
        let xs = parse_data("1.5\n\n-2.25\n\n0\n").unwrap();
        assert_eq!(xs, vec![1.5, -2.25, 0.0]);
    }

    #[test]
    fn rejects_garbage_and_empty() {
        assert!(parse_data("1.0\nhello\n").is_err());
        assert!(parse_data("inf\n").is_err());
        assert!(parse_data("\n\n").is_err());
    }

    #[test]
    fn model_parsing_round_trips() {
        assert_eq!(
            "standard-normal".parse::<DataModel>().unwrap(),
            DataModel::StandardNormal
        );
        let m: DataModel = "gaussian-mixture(0.5:-2, 0.5:2)".parse().unwrap();
        assert_eq!(m, DataModel::GaussianMixture(vec![(0.5, -2.0), (0.5, 2.0)]));
        assert_eq!(m.to_string(), "gaussian-mixture(0.5:-2,0.5:2)");

        assert!("gaussian-mixture(0.5:-2)".parse::<DataModel>().is_err()); // weights ≠ 1
        assert!("gaussian-mixture(1.0)".parse::<DataModel>().is_err());
        assert!("gaussian-mixture(-1.0:0,2.0:1)".parse::<DataModel>().is_err());
        assert!("triangular".parse::<DataModel>().is_err());
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let model = DataModel::StandardNormal;
        let a = simulate_data(&model, 50, &mut ChaCha8Rng::seed_from_u64(4));
        let b = simulate_data(&model, 50, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_mixture_equals_standard_normal_stream() {
        let mix: DataModel = "gaussian-mixture(1.0:0)".parse().unwrap();
        let a = simulate_data(&mix, 100, &mut ChaCha8Rng::seed_from_u64(9));
        let b = simulate_data(
            &DataModel::StandardNormal,
            100,
            &mut ChaCha8Rng::seed_from_u64(9),
        );
        assert_eq!(a, b);
    }

    #[test]
    fn large_sample_mean_is_near_zero() {
        let xs = simulate_data(
            &DataModel::StandardNormal,
            1_000_000,
            &mut ChaCha8Rng::seed_from_u64(123),
        );
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.004, "sample mean {mean}");
    }

    #[test]
    fn mixture_components_land_near_their_means() {
        // With means at ±6 and unit variances, the sign of a draw identifies
        // its component except with probability Φ(−6) ≈ 1e-9.
        let mix: DataModel = "gaussian-mixture(0.5:-6,0.5:6)".parse().unwrap();
        let xs = simulate_data(&mix, 10_000, &mut ChaCha8Rng::seed_from_u64(55));
        let near_low = xs.iter().filter(|x| **x < 0.0).count();
        let frac = near_low as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "component fraction {frac}");
    }
}
