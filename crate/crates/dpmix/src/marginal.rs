//! Single-cluster marginal likelihoods for the normal model with known
//! observation variance and a conjugate normal prior on the component mean.
//!
//! At the standard defaults (prior mean 0, prior variance 1, observation
//! variance 1) the marginal of a cluster S reduces to the closed form
//!
//! ```text
//! m(x_S) = (k+1)^{−1/2} · p₀(x_S) · exp( ½ (Σ_{j∈S} x_j)² / (k+1) ),   k = |S|,
//! ```
//!
//! where p₀ is the product of standard normal densities. The ratio
//! h(x_S) = m(x_S)/p₀(x_S) depends on x_S only through (k, Σx_j) and is the
//! kernel all cluster-count statistics in this crate are built from.

use crate::error::{Error, Result};
use crate::math::LOG_2PI;

/// Sufficient statistics of one cluster under the unit-variance normal
/// model: the cluster size and the sum of its observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterStat {
    /// Number of items in the cluster; must be ≥ 1.
    pub size: usize,
    /// Sum of the observations in the cluster.
    pub sum: f64,
}

impl ClusterStat {
    pub fn new(size: usize, sum: f64) -> Self {
        debug_assert!(size >= 1, "cluster size must be ≥ 1");
        ClusterStat { size, sum }
    }

    /// Statistics of the cluster containing exactly the given observations.
    pub fn from_xs(xs: &[f64]) -> Self {
        debug_assert!(!xs.is_empty());
        ClusterStat {
            size: xs.len(),
            sum: xs.iter().sum(),
        }
    }
}

/// Parameters of the component model: observations are N(θ, obs_var) given a
/// component mean θ ~ N(prior_mean, prior_var). Defaults (0, 1, 1) give the
/// standard normal Dirichlet process mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub prior_mean: f64,
    pub prior_var: f64,
    pub obs_var: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            prior_mean: 0.0,
            prior_var: 1.0,
            obs_var: 1.0,
        }
    }
}

impl ModelParams {
    pub fn new(prior_mean: f64, prior_var: f64, obs_var: f64) -> Result<Self> {
        if !prior_mean.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "prior mean must be finite, got {prior_mean}"
            )));
        }
        if !(prior_var.is_finite() && prior_var > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "prior variance must be positive, got {prior_var}"
            )));
        }
        if !(obs_var.is_finite() && obs_var > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "observation variance must be positive, got {obs_var}"
            )));
        }
        Ok(ModelParams {
            prior_mean,
            prior_var,
            obs_var,
        })
    }
}

/// log p₀(xs) = Σ_j log N(x_j | 0, 1), the baseline standard normal
/// log-density of the data.
pub fn log_p0(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    let n = xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| x * x).sum();
    -0.5 * (ss + n * LOG_2PI)
}

/// log h(k, s) = −½ log(k+1) + ½ s²/(k+1): the log marginal-to-baseline
/// ratio log[m(x_S)/p₀(x_S)] of a cluster with size k and sum s, at the
/// default model parameters.
#[inline]
pub fn log_h(stat: ClusterStat) -> f64 {
    debug_assert!(stat.size >= 1);
    let kp1 = stat.size as f64 + 1.0;
    -0.5 * kp1.ln() + 0.5 * stat.sum * stat.sum / kp1
}

/// log m(x_S): the marginal likelihood of one cluster with the component
/// mean integrated out,
///
/// m(x_S) = ∫ ∏_{j∈S} N(x_j | θ, obs_var) · N(θ | prior_mean, prior_var) dθ,
///
/// in the general conjugate normal–normal form. At the default parameters
/// this reduces to the (k+1)^{−1/2} p₀ exp(·) closed form, which the test
/// suite pins against quadrature.
///
/// `stat` must match `xs` (that redundancy is deliberate: callers that track
/// incremental statistics get them cross-checked here).
pub fn log_single_cluster_marginal(
    stat: ClusterStat,
    params: ModelParams,
    xs: &[f64],
) -> Result<f64> {
    if stat.size != xs.len() {
        return Err(Error::ContractViolation(format!(
            "cluster statistics claim size {} but {} observations were given",
            stat.size,
            xs.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::InvalidArgument(
            "cluster marginal requires at least one observation".into(),
        ));
    }
    let sum: f64 = xs.iter().sum();
    let tol = 1e-9 * sum.abs().max(1.0);
    if (stat.sum - sum).abs() > tol {
        return Err(Error::ContractViolation(format!(
            "cluster statistics claim sum {} but observations sum to {}",
            stat.sum, sum
        )));
    }

    let k = stat.size as f64;
    let sv = params.obs_var;
    let pv = params.prior_var;
    let mu = params.prior_mean;
    let ss: f64 = xs.iter().map(|x| x * x).sum();
    // Precision form of the conjugate update: posterior precision of θ is
    // Λ = k/σ² + 1/τ², with linear term b = Σx/σ² + μ/τ².
    let precision = k / sv + 1.0 / pv;
    let b = sum / sv + mu / pv;
    Ok(
        -0.5 * k * (LOG_2PI + sv.ln()) - 0.5 * (pv * precision).ln()
            - 0.5 * (ss / sv + mu * mu / pv)
            + 0.5 * b * b / precision,
    )
}
