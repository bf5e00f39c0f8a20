//! Set partitions, the Chinese restaurant process (CRP) over them, and the
//! induced prior on the number of clusters.
//!
//! Partitions are stored unordered in a canonical form (blocks sorted by
//! their minimum element). The CRP mass used throughout is the
//! unordered-partition mass
//!
//! ```text
//! p(A) = α^t · ∏_i (|A_i| − 1)! / α^(n),    α^(n) = α(α+1)⋯(α+n−1),
//! ```
//!
//! i.e. the ordered-partition mass times t!. Every quantity this crate
//! exposes (priors and posteriors on the number of clusters, marginal
//! likelihoods) is identical under the ordered and unordered conventions;
//! working unordered avoids a t!-fold enumeration blowup.

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{ln_gamma, LogSumAcc};
use crate::posterior::PosteriorOverT;

/// Largest `n` for which exhaustive partition enumeration is allowed by
/// default. Bell(13) ≈ 2.8×10⁷ keeps runtime and memory predictable.
pub const DEFAULT_ENUMERATION_CAP: usize = 13;

/// CRP concentration parameter α > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concentration {
    alpha: f64,
}

impl Concentration {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "concentration must be positive and finite, got {alpha}"
            )));
        }
        Ok(Concentration { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// A set partition of `{0, …, n−1}` in canonical form.
///
/// Item indices are zero-based; the canonical form orders blocks by their
/// minimum element, which makes unordered partitions directly comparable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    n: usize,
}

impl Partition {
    /// Build a partition from blocks, validating that they are nonempty,
    /// pairwise disjoint, and cover `{0, …, n−1}`. Blocks and their contents
    /// are sorted into canonical form.
    pub fn new(blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut covered = 0usize;
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidArgument("empty block in partition".into()));
            }
            for &ix in block {
                if ix >= n {
                    return Err(Error::InvalidArgument(format!(
                        "item index {ix} out of range for n = {n}"
                    )));
                }
                if seen[ix] {
                    return Err(Error::InvalidArgument(format!(
                        "item index {ix} appears in more than one block"
                    )));
                }
                seen[ix] = true;
                covered += 1;
            }
        }
        if covered != n {
            return Err(Error::InvalidArgument(format!(
                "blocks cover {covered} items, expected {n}"
            )));
        }
        let mut blocks = blocks;
        for block in &mut blocks {
            block.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Partition { blocks, n })
    }

    /// Construct without validation; caller guarantees canonical form.
    pub(crate) fn from_canonical_blocks(blocks: Vec<Vec<usize>>, n: usize) -> Self {
        Partition { blocks, n }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of items.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks t.
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }
}

/// log α^(n) = log[α(α+1)⋯(α+n−1)] = log Γ(α+n) − log Γ(α); 0 for n = 0.
pub fn log_rising_factorial(alpha: f64, n: usize) -> f64 {
    debug_assert!(alpha > 0.0);
    if n == 0 {
        return 0.0;
    }
    ln_gamma(alpha + n as f64) - ln_gamma(alpha)
}

/// log of the unordered CRP mass of a partition:
/// t·log α + Σ_i log(|A_i| − 1)! − log α^(n).
///
/// Masses over all partitions of a fixed `n` sum to one.
pub fn crp_log_mass(partition: &Partition, alpha: Concentration) -> f64 {
    let a = alpha.alpha();
    let t = partition.num_blocks() as f64;
    let mut log_num = t * a.ln();
    for block in partition.blocks() {
        log_num += ln_gamma(block.len() as f64); // log (|A_i| − 1)!
    }
    log_num - log_rising_factorial(a, partition.n())
}

/// Streaming enumeration of all set partitions of `{0, …, n−1}` in
/// lexicographic restricted-growth-string order (which is also canonical
/// form: labels appear in first-use order, so blocks are sorted by minimum
/// element). The number of partitions is the n-th Bell number.
#[derive(Debug, Clone)]
pub struct SetPartitions {
    labels: Vec<usize>,
    // max_label[j] = 1 + max(labels[0..j]); the label at position j may take
    // any value in 0..=max_label[j].
    max_label: Vec<usize>,
    started: bool,
    done: bool,
}

impl SetPartitions {
    fn new(n: usize) -> Self {
        SetPartitions {
            labels: vec![0; n],
            max_label: vec![1; n],
            started: false,
            done: false,
        }
    }

    fn current(&self) -> Partition {
        let n = self.labels.len();
        let t = self.labels.iter().copied().max().unwrap_or(0) + 1;
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); t];
        for (ix, &label) in self.labels.iter().enumerate() {
            blocks[label].push(ix);
        }
        Partition::from_canonical_blocks(blocks, n)
    }

    fn advance(&mut self) -> bool {
        let n = self.labels.len();
        // Find the rightmost position (never 0) whose label can grow.
        for j in (1..n).rev() {
            if self.labels[j] < self.max_label[j] {
                self.labels[j] += 1;
                let carry = self.max_label[j].max(self.labels[j] + 1);
                for k in j + 1..n {
                    self.labels[k] = 0;
                    self.max_label[k] = carry;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for SetPartitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.current());
        }
        if self.advance() {
            Some(self.current())
        } else {
            self.done = true;
            None
        }
    }
}

/// Enumerate all set partitions of `{0, …, n−1}` under the default cap.
pub fn enumerate_partitions(n: usize) -> Result<SetPartitions> {
    enumerate_partitions_with_cap(n, DEFAULT_ENUMERATION_CAP)
}

/// Enumerate with an explicit cap; `n` above the cap is refused because the
/// Bell number (and therefore runtime) grows super-exponentially.
pub fn enumerate_partitions_with_cap(n: usize, cap: usize) -> Result<SetPartitions> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "partition enumeration requires n ≥ 1".into(),
        ));
    }
    if n > cap {
        return Err(Error::ResourceLimit {
            what: "set partition enumeration",
            requested: n,
            cap,
        });
    }
    Ok(SetPartitions::new(n))
}

/// Exact CRP prior on the number of clusters t for a sample of size `n`:
///
/// p(t) = α^t |s(n,t)| / α^(n),
///
/// with |s(n,t)| the unsigned Stirling numbers of the first kind, computed
/// in log domain via the recurrence |s(n+1,t)| = n·|s(n,t)| + |s(n,t−1)|.
/// O(n²) time, O(n) memory; valid far beyond the enumeration cap.
pub fn prior_num_clusters(n: usize, alpha: Concentration) -> Result<PosteriorOverT> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "prior on cluster count requires n ≥ 1".into(),
        ));
    }
    let a = alpha.alpha();
    // log |s(m, t)| for the current row m, index t−1.
    let mut row = vec![0.0f64]; // m = 1: |s(1,1)| = 1
    for m in 1..n {
        let lm = (m as f64).ln();
        let mut next = vec![f64::NEG_INFINITY; m + 1];
        for (ti, &v) in row.iter().enumerate() {
            // contributes m·|s(m,t)| to |s(m+1,t)| …
            let grown = lm + v;
            next[ti] = log_add_exp(next[ti], grown);
            // … and |s(m,t)| to |s(m+1,t+1)|.
            next[ti + 1] = log_add_exp(next[ti + 1], v);
        }
        row = next;
    }
    let log_rising = log_rising_factorial(a, n);
    let ln_a = a.ln();
    let log_weights: Vec<f64> = row
        .iter()
        .enumerate()
        .map(|(ti, &ls)| (ti as f64 + 1.0) * ln_a + ls - log_rising)
        .collect();
    PosteriorOverT::from_log_weights(log_weights)
}

#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Draw one partition of `{0, …, n−1}` from the CRP by sequential seating:
/// item i joins an existing block with probability |B|/(i+α), or opens a new
/// block with probability α/(i+α). Blocks are created in first-appearance
/// order, so the result is already canonical.
pub fn sample_crp<R: Rng + ?Sized>(n: usize, alpha: Concentration, rng: &mut R) -> Partition {
    assert!(n >= 1, "sample_crp requires n ≥ 1");
    let a = alpha.alpha();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let total = i as f64 + a;
        let u: f64 = rng.random::<f64>() * total;
        let mut cum = 0.0;
        let mut chosen = blocks.len();
        for (bi, block) in blocks.iter().enumerate() {
            cum += block.len() as f64;
            if u < cum {
                chosen = bi;
                break;
            }
        }
        if chosen == blocks.len() {
            blocks.push(vec![i]);
        } else {
            blocks[chosen].push(i);
        }
    }
    Partition::from_canonical_blocks(blocks, n)
}

/// Group the enumerated CRP masses by block count: the enumeration-path prior
/// on t. This is the slow cross-check for [`prior_num_clusters`]; exposed so
/// callers can run the same dual-route comparison the test suite relies on.
pub fn prior_num_clusters_by_enumeration(
    n: usize,
    alpha: Concentration,
    cap: usize,
) -> Result<PosteriorOverT> {
    let mut accs: Vec<LogSumAcc> = (0..n).map(|_| LogSumAcc::new()).collect();
    for partition in enumerate_partitions_with_cap(n, cap)? {
        let t = partition.num_blocks();
        accs[t - 1].add(crp_log_mass(&partition, alpha));
    }
    PosteriorOverT::from_log_weights(accs.iter().map(|a| a.total()).collect())
}
