//! Computable checks on the bound chain that drives the one-cluster
//! posterior down: the two-block split inequality, the exact
//! two-vs-one-cluster ratio bound, U-statistics of the likelihood-ratio
//! kernel h, and the partial-sum lower bound on R₂.
//!
//! Everything here is checked in log domain: the R statistics overflow in
//! linear domain long before n reaches 10⁴.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exact::exact_joint_over_t;
use crate::marginal::{log_h, ClusterStat};
use crate::math::{ln_binomial, LogSumAcc};
use crate::partition::{Concentration, Partition};

/// Both sides of the split inequality
///
/// ```text
/// m(x_{1:n}) / (m(x_{A₁}) m(x_{A₂}))  ≤  √(a₁+1)√(a₂+1)/√(n+1) · e^{x̄²/2},
/// ```
///
/// in log domain, for one two-block split {A₁, A₂} with |A_i| = a_i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitReport {
    /// log of the marginal ratio m(x) / (m(x_{A₁}) m(x_{A₂})).
    pub lhs_log: f64,
    /// log of the bound √(a₁+1)√(a₂+1)/√(n+1) · e^{x̄²/2}.
    pub rhs_log: f64,
    /// rhs_log − lhs_log; nonnegative up to round-off.
    pub slack: f64,
}

/// Evaluate the split inequality for one two-block partition of the data.
pub fn check_split_inequality(xs: &[f64], split: &Partition) -> Result<SplitReport> {
    if split.n() != xs.len() {
        return Err(Error::ContractViolation(format!(
            "split partitions {} items but {} observations were given",
            split.n(),
            xs.len()
        )));
    }
    if split.num_blocks() != 2 {
        return Err(Error::ContractViolation(format!(
            "split must have exactly two blocks, got {}",
            split.num_blocks()
        )));
    }
    let n = xs.len();
    // The baseline densities p₀ cancel between the full set and the two
    // blocks, so the marginal ratio is a ratio of h values.
    let full = ClusterStat::from_xs(xs);
    let mut lhs_log = log_h(full);
    let mut block_sizes = [0usize; 2];
    for (bi, block) in split.blocks().iter().enumerate() {
        let stat = ClusterStat::from_xs(&block.iter().map(|&i| xs[i]).collect::<Vec<_>>());
        lhs_log -= log_h(stat);
        block_sizes[bi] = stat.size;
    }
    let xbar = full.sum / n as f64;
    let rhs_log = 0.5 * ((block_sizes[0] + 1) as f64).ln()
        + 0.5 * ((block_sizes[1] + 1) as f64).ln()
        - 0.5 * ((n + 1) as f64).ln()
        + 0.5 * xbar * xbar;
    Ok(SplitReport {
        lhs_log,
        rhs_log,
        slack: rhs_log - lhs_log,
    })
}

/// Exact log ratio p(x, T=2)/p(x, T=1) at α = 1, paired with its proven
/// lower bound log[1/(2√2) · e^{−x̄²/2}]. The ratio requires exhaustive
/// enumeration, so n must be at enumeration scale. The bound chain is only
/// established at α = 1, which is hardwired here.
pub fn proposition_ratio_bound(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "the two-vs-one-cluster ratio needs n ≥ 2".into(),
        ));
    }
    let alpha = Concentration::new(1.0).expect("1.0 is a valid concentration");
    let joint = exact_joint_over_t(xs, alpha)?;
    let ratio_log = joint.log_joint(2) - joint.log_joint(1);
    let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
    let bound_log = -(2.0 * std::f64::consts::SQRT_2).ln() - 0.5 * xbar * xbar;
    Ok((ratio_log, bound_log))
}

/// A U-statistic evaluation: the average of h(x_S) over size-k subsets S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UStatReport {
    /// Subset size.
    pub k: usize,
    /// The U_k estimate (linear domain).
    pub value: f64,
    /// Whether all C(n,k) subsets entered the average.
    pub exact: bool,
    /// Batch-means standard error of `value`; only for the sampled path
    /// (the exact path has no Monte Carlo error).
    pub std_error: Option<f64>,
}

const DEFAULT_SUBSET_BUDGET: u64 = 100_000;
const U_STAT_BATCHES: u64 = 20;

/// U_k = C(n,k)⁻¹ Σ_{|S|=k} h(x_S), exactly when C(n,k) fits in `budget`
/// (default 10⁵), otherwise an unbiased average over `budget` uniformly
/// drawn subsets. h is heavy-tailed (its variance is infinite), so the
/// sampled standard error describes the realized draws, not a tail-safe
/// confidence radius.
pub fn u_statistic<R: Rng + ?Sized>(
    xs: &[f64],
    k: usize,
    budget: Option<u64>,
    rng: &mut R,
) -> Result<UStatReport> {
    let n = xs.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "subset size k = {k} must satisfy 1 ≤ k ≤ n = {n}"
        )));
    }
    let budget = budget.unwrap_or(DEFAULT_SUBSET_BUDGET);
    if budget == 0 {
        return Err(Error::InvalidArgument(
            "subset-sample budget must be ≥ 1".into(),
        ));
    }
    let log_count = ln_binomial(n, k);
    if log_count <= (budget as f64).ln() + 1e-12 {
        let mut acc = LogSumAcc::new();
        for_each_combination(n, k, |subset| {
            acc.add(log_h(stat_of(xs, subset)));
        });
        let log_u = acc.total() - (acc.count() as f64).ln();
        return Ok(UStatReport {
            k,
            value: log_u.exp(),
            exact: true,
            std_error: None,
        });
    }

    // Sampled path: i.i.d. uniform subsets, averaged in linear domain so the
    // estimate stays unbiased; batch means give the standard error.
    let n_batches = U_STAT_BATCHES.min(budget);
    let batch_len = budget / n_batches;
    let mut batch_means = Vec::with_capacity(n_batches as usize);
    for _ in 0..n_batches {
        let mut sum = crate::math::CompensatedSum::new();
        for _ in 0..batch_len {
            let subset = rand::seq::index::sample(rng, n, k);
            let mut s = 0.0;
            for i in subset.iter() {
                s += xs[i];
            }
            sum.add(log_h(ClusterStat::new(k, s)).exp());
        }
        batch_means.push(sum.total() / batch_len as f64);
    }
    let mean = batch_means.iter().sum::<f64>() / n_batches as f64;
    let std_error = if n_batches > 1 {
        let var = batch_means
            .iter()
            .map(|m| (m - mean) * (m - mean))
            .sum::<f64>()
            / ((n_batches * (n_batches - 1)) as f64);
        Some(var.sqrt())
    } else {
        None
    };
    Ok(UStatReport {
        k,
        value: mean,
        exact: false,
        std_error,
    })
}

fn stat_of(xs: &[f64], subset: &[usize]) -> ClusterStat {
    let mut sum = 0.0;
    for &i in subset {
        sum += xs[i];
    }
    ClusterStat::new(subset.len(), sum)
}

/// Visit every k-combination of {0,…,n−1} in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Advance: find the rightmost index that can still move up.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Log of the partial-sum lower bound on R₂ at α = 1:
///
/// ```text
/// log Σ_{k=1}^{K} [n / (2k(n−k))] · U_k(xs),
/// ```
///
/// with every U_k computed exactly. Increasing K can only grow the bound
/// (all terms are positive). Enumeration-scale n only: the cumulative subset
/// count across k ≤ K is capped at 10⁷.
pub fn r2_lower_bound(xs: &[f64], k_max: usize) -> Result<f64> {
    let n = xs.len();
    if k_max == 0 || k_max >= n {
        return Err(Error::InvalidArgument(format!(
            "K = {k_max} must satisfy 1 ≤ K ≤ n−1 = {}",
            n.max(1) - 1
        )));
    }
    let total: f64 = (1..=k_max).map(|k| ln_binomial(n, k).exp()).sum();
    if total > 1e7 {
        return Err(Error::ResourceLimit {
            what: "exact U-statistic subsets",
            requested: total as usize,
            cap: 10_000_000,
        });
    }
    let mut acc = LogSumAcc::new();
    for k in 1..=k_max {
        let mut uk = LogSumAcc::new();
        for_each_combination(n, k, |subset| {
            uk.add(log_h(stat_of(xs, subset)));
        });
        let log_uk = uk.total() - (uk.count() as f64).ln();
        let log_coef = (n as f64).ln() - (2.0 * (k * (n - k)) as f64).ln();
        acc.add(log_coef + log_uk);
    }
    Ok(acc.total())
}

/// H_K = Σ_{k=1}^K 1/k, summed smallest-first for accuracy. Satisfies
/// log K < H_K ≤ log K + 1.
pub fn harmonic_number(k_max: usize) -> f64 {
    assert!(k_max >= 1, "harmonic numbers start at K = 1");
    let mut sum = 0.0;
    for k in (1..=k_max).rev() {
        sum += 1.0 / k as f64;
    }
    sum
}
