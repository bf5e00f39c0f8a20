//! Collapsed Gibbs sampler over cluster assignments, for estimating the
//! posterior on the number of clusters at sample sizes far beyond the
//! exact-enumeration cap.
//!
//! One sweep resamples each item's assignment in turn from its full
//! conditional: with the item removed, joining an existing cluster with
//! statistics (k, s) has unnormalized log weight
//!
//! ```text
//! log k − ½[log(k+2) − log(k+1)] + (s+x)²/(2(k+2)) − s²/(2(k+1)),
//! ```
//!
//! and opening a new cluster has log weight log α − ½log 2 + x²/4 (the
//! baseline density factor common to every option is dropped). The weight of
//! joining a cluster is affine in (1, x, x²) with coefficients that depend
//! only on (k, s), which the sampler exploits heavily.
//!
//! # The stay gate
//!
//! On data that keeps one or two dominant clusters, most reassignment draws
//! leave the item where it is. Each draw here uses inversion sampling with a
//! single uniform `u` and a fixed candidate order (other clusters in slot
//! order, then a new cluster, then the current cluster last), so the item
//! stays exactly when `u ≥ q`, with `q` the probability of leaving. An O(1)
//! upper bound `Q ≥ q` therefore gives an exact shortcut: if `u ≥ Q` the
//! item stays and nothing else needs computing. The bound treats the largest
//! other cluster exactly and covers the rest with the envelope
//!
//! ```text
//! sup_s [join weight of a size-k cluster with sum s] = k·e^{x²/2} · √((k+1)/(k+2)),
//! ```
//!
//! (the supremum sits at s = x(k+1)), so Σ_{others} weight ≤ e^{x²/2} Σ k.
//! Draws that fail the gate fall through to the full computation with the
//! same `u`, which preserves the exact kernel bit for bit — a property the
//! test suite asserts by comparing gated and ungated trajectories.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::marginal::ClusterStat;
use crate::partition::{sample_crp, Concentration, Partition};

/// Clusters at least this large use the stay gate; for smaller clusters the
/// bound is rarely tight enough to pay for itself.
const GATE_MIN_SIZE: usize = 32;

/// Relative inflation applied to the stay-gate bound so that floating-point
/// round-off in the bound arithmetic can never undercut the exact weights.
const GATE_SAFETY: f64 = 1e-9;

/// Sweeps between from-scratch recomputations of the incremental cluster
/// sums in [`estimate_posterior_t`].
const DRIFT_CHECK_INTERVAL: usize = 1000;

/// Allowed absolute discrepancy between incremental and recomputed sums.
const DRIFT_TOLERANCE: f64 = 1e-9;

/// Number of batches used for batch-means standard errors.
const N_BATCHES: usize = 20;

/// How a chain's initial clustering is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Every item in one cluster (t = 1).
    AllInOne,
    /// Every item alone (t = n).
    AllSingletons,
    /// A draw from the CRP prior.
    PriorDraw,
}

/// Assignment vector plus per-cluster sufficient statistics. Cluster labels
/// are dense indices `0..n_clusters()`; `clusters[label]` holds that
/// cluster's statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub assignments: Vec<usize>,
    pub clusters: Vec<ClusterStat>,
}

impl GibbsState {
    /// Number of items.
    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    /// Number of clusters t.
    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Check the state invariants against the data: labels in range, every
    /// cluster nonempty, sizes exact, and incremental sums within `tol` of a
    /// from-scratch recomputation.
    pub fn validate(&self, xs: &[f64], tol: f64) -> Result<()> {
        if self.assignments.len() != xs.len() {
            return Err(Error::ContractViolation(format!(
                "state tracks {} items but {} observations were given",
                self.assignments.len(),
                xs.len()
            )));
        }
        let t = self.clusters.len();
        let mut sizes = vec![0usize; t];
        let mut sums = vec![0.0f64; t];
        for (&label, &x) in self.assignments.iter().zip(xs) {
            if label >= t {
                return Err(Error::ContractViolation(format!(
                    "assignment label {label} out of range for {t} clusters"
                )));
            }
            sizes[label] += 1;
            sums[label] += x;
        }
        for (label, stat) in self.clusters.iter().enumerate() {
            if sizes[label] == 0 {
                return Err(Error::ContractViolation(format!(
                    "cluster {label} has no items assigned"
                )));
            }
            if stat.size != sizes[label] {
                return Err(Error::ContractViolation(format!(
                    "cluster {label} claims size {} but {} items are assigned",
                    stat.size, sizes[label]
                )));
            }
            if (stat.sum - sums[label]).abs() > tol {
                return Err(Error::NumericalDrift {
                    quantity: "cluster sum",
                    drift: (stat.sum - sums[label]).abs(),
                    tolerance: tol,
                });
            }
        }
        Ok(())
    }

    /// The set partition induced by the assignments (labels forgotten).
    pub fn canonical_partition(&self) -> Partition {
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); self.clusters.len()];
        for (ix, &label) in self.assignments.iter().enumerate() {
            blocks[label].push(ix);
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Partition::from_canonical_blocks(blocks, self.assignments.len())
    }
}

/// Markov chain run length configuration. `burn_in` sweeps are discarded
/// from the front of the `n_sweeps` total; the retained sweeps are sampled
/// every `thin`-th.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub init: InitMode,
}

impl Default for ChainConfig {
    /// The defaults validated against the exact posterior at small n:
    /// 50,000 sweeps, 10,000 burn-in, thinning 10.
    fn default() -> Self {
        ChainConfig {
            n_sweeps: 50_000,
            burn_in: 10_000,
            thin: 10,
            seed: 0,
            init: InitMode::AllInOne,
        }
    }
}

impl ChainConfig {
    /// Number of retained (post-burn-in, thinned) samples.
    pub fn n_samples(&self) -> usize {
        if self.burn_in >= self.n_sweeps {
            return 0;
        }
        (self.n_sweeps - self.burn_in).div_ceil(self.thin)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sweeps == 0 {
            return Err(Error::Configuration("n_sweeps must be ≥ 1".into()));
        }
        if self.burn_in >= self.n_sweeps {
            return Err(Error::Configuration(format!(
                "burn-in ({}) must be smaller than the sweep count ({})",
                self.burn_in, self.n_sweeps
            )));
        }
        if self.thin == 0 {
            return Err(Error::Configuration("thinning interval must be ≥ 1".into()));
        }
        if self.n_samples() < N_BATCHES {
            return Err(Error::Configuration(format!(
                "{} sweeps with burn-in {} and thinning {} retain only {} samples; \
                 at least {N_BATCHES} are needed for batch-means standard errors",
                self.n_sweeps,
                self.burn_in,
                self.thin,
                self.n_samples()
            )));
        }
        Ok(())
    }
}

/// Build an initial state. `alpha` is used only by [`InitMode::PriorDraw`];
/// the deterministic modes ignore it and the generator.
pub fn init_state<R: Rng + ?Sized>(
    xs: &[f64],
    mode: InitMode,
    alpha: Concentration,
    rng: &mut R,
) -> GibbsState {
    assert!(!xs.is_empty(), "init_state requires at least one observation");
    match mode {
        InitMode::AllInOne => GibbsState {
            assignments: vec![0; xs.len()],
            clusters: vec![ClusterStat::from_xs(xs)],
        },
        InitMode::AllSingletons => GibbsState {
            assignments: (0..xs.len()).collect(),
            clusters: xs.iter().map(|&x| ClusterStat::new(1, x)).collect(),
        },
        InitMode::PriorDraw => {
            let partition = sample_crp(xs.len(), alpha, rng);
            let mut assignments = vec![0usize; xs.len()];
            let mut clusters = Vec::with_capacity(partition.num_blocks());
            for (label, block) in partition.blocks().iter().enumerate() {
                let mut sum = 0.0;
                for &ix in block {
                    assignments[ix] = label;
                    sum += xs[ix];
                }
                clusters.push(ClusterStat::new(block.len(), sum));
            }
            GibbsState {
                assignments,
                clusters,
            }
        }
    }
}

/// One systematic-scan sweep of the collapsed Gibbs kernel: items 0..n in
/// order, each reassigned from its full conditional. Consumes exactly one
/// uniform draw per item. This is the plain reference kernel;
/// [`estimate_posterior_t`] runs the same kernel through the stay gate.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut GibbsState,
    xs: &[f64],
    alpha: Concentration,
    rng: &mut R,
) {
    assert_eq!(
        state.assignments.len(),
        xs.len(),
        "state and data disagree on n"
    );
    let mut sampler = Sampler::from_state(state, xs, alpha, false);
    sampler.sweep(rng);
    sampler.write_state(state);
}

/// Monte Carlo estimate of the posterior over the number of clusters, with
/// batch-means standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTEstimate {
    probs: Vec<f64>,
    std_errors: Vec<f64>,
    n_samples: usize,
}

impl PosteriorTEstimate {
    /// Largest representable t (the number of items n).
    pub fn n(&self) -> usize {
        self.probs.len()
    }

    /// Estimated probability of t (1-based).
    pub fn prob(&self, t: usize) -> f64 {
        assert!(t >= 1 && t <= self.probs.len(), "t = {t} out of range");
        self.probs[t - 1]
    }

    /// Batch-means standard error of `prob(t)`.
    pub fn std_error(&self, t: usize) -> f64 {
        assert!(t >= 1 && t <= self.std_errors.len(), "t = {t} out of range");
        self.std_errors[t - 1]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn std_errors(&self) -> &[f64] {
        &self.std_errors
    }

    /// Number of retained samples behind the estimate.
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// The most probable t; ties resolve to the smallest t.
    pub fn mode(&self) -> usize {
        let mut best = 0usize;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best + 1
    }
}

/// Run one chain and histogram the number of clusters over the retained
/// sweeps. Deterministic given `cfg.seed`. Every `1000` sweeps the
/// incrementally maintained cluster sums are recomputed from scratch;
/// disagreement beyond `1e-9` aborts with a numerical-drift error rather
/// than silently correcting course.
pub fn estimate_posterior_t(
    xs: &[f64],
    alpha: Concentration,
    cfg: &ChainConfig,
) -> Result<PosteriorTEstimate> {
    if xs.is_empty() {
        return Err(Error::InvalidArgument(
            "posterior estimation requires at least one observation".into(),
        ));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "observations must be finite".into(),
        ));
    }
    cfg.validate()?;

    let n = xs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let state = init_state(xs, cfg.init, alpha, &mut rng);
    let mut sampler = Sampler::from_state(&state, xs, alpha, true);

    let mut t_samples: Vec<u32> = Vec::with_capacity(cfg.n_samples());
    for sweep_ix in 0..cfg.n_sweeps {
        sampler.sweep(&mut rng);
        if (sweep_ix + 1).is_multiple_of(DRIFT_CHECK_INTERVAL) {
            sampler.recompute_sums()?;
        }
        if sweep_ix >= cfg.burn_in && (sweep_ix - cfg.burn_in).is_multiple_of(cfg.thin) {
            t_samples.push(sampler.n_clusters() as u32);
        }
    }

    // Batch means: split the retained samples into N_BATCHES equal batches
    // (a sub-batch remainder is dropped so the error estimate and the point
    // estimate see the same samples).
    let batch_len = t_samples.len() / N_BATCHES;
    debug_assert!(batch_len >= 1, "cfg.validate() guarantees ≥ {N_BATCHES} samples");
    let used = batch_len * N_BATCHES;
    let mut probs = vec![0.0f64; n];
    for &t in &t_samples[..used] {
        probs[t as usize - 1] += 1.0;
    }
    for p in &mut probs {
        *p /= used as f64;
    }
    let mut std_errors = vec![0.0f64; n];
    for (ti, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let t = (ti + 1) as u32;
        let mut var_acc = 0.0;
        for b in 0..N_BATCHES {
            let batch = &t_samples[b * batch_len..(b + 1) * batch_len];
            let mean = batch.iter().filter(|&&s| s == t).count() as f64 / batch_len as f64;
            var_acc += (mean - p) * (mean - p);
        }
        std_errors[ti] = (var_acc / (N_BATCHES * (N_BATCHES - 1)) as f64).sqrt();
    }

    Ok(PosteriorTEstimate {
        probs,
        std_errors,
        n_samples: used,
    })
}

/// The sweep engine shared by the plain and gated paths. Cluster slots are
/// kept dense; a death swaps the last slot in (relabeling its members), and
/// the per-slot weight coefficients (a, b, c) with join weight a + b·x + c·x²
/// are refreshed whenever a slot's statistics change.
struct Sampler<'a> {
    xs: &'a [f64],
    x2: Vec<f64>,
    /// e^{x²/2} per item; envelope factor of the stay gate.
    eh: Vec<f64>,
    /// (α/√2)·e^{x²/4} per item; exact new-cluster weight for the gate.
    en: Vec<f64>,
    ln_alpha: f64,
    half_ln2: f64,
    sizes: Vec<usize>,
    sums: Vec<f64>,
    ca: Vec<f64>,
    cb: Vec<f64>,
    cc: Vec<f64>,
    assign: Vec<u32>,
    buf: Vec<f64>,
    gated: bool,
    /// Slot indices of the largest and second-largest clusters (by size);
    /// `usize::MAX` when absent. Only the gate consults these, and only for
    /// tightness — any live slot would be correct.
    top1: usize,
    top2: usize,
    fast_draws: u64,
    slow_draws: u64,
}

impl<'a> Sampler<'a> {
    fn from_state(state: &GibbsState, xs: &'a [f64], alpha: Concentration, gated: bool) -> Self {
        let a = alpha.alpha();
        let x2: Vec<f64> = xs.iter().map(|&x| x * x).collect();
        let (eh, en) = if gated {
            (
                x2.iter().map(|&v| (0.5 * v).exp()).collect(),
                x2.iter()
                    .map(|&v| a / std::f64::consts::SQRT_2 * (0.25 * v).exp())
                    .collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        let mut sampler = Sampler {
            xs,
            x2,
            eh,
            en,
            ln_alpha: a.ln(),
            half_ln2: 0.5 * std::f64::consts::LN_2,
            sizes: state.clusters.iter().map(|c| c.size).collect(),
            sums: state.clusters.iter().map(|c| c.sum).collect(),
            ca: vec![0.0; state.clusters.len()],
            cb: vec![0.0; state.clusters.len()],
            cc: vec![0.0; state.clusters.len()],
            assign: state.assignments.iter().map(|&l| l as u32).collect(),
            buf: Vec::with_capacity(64),
            gated,
            top1: usize::MAX,
            top2: usize::MAX,
            fast_draws: 0,
            slow_draws: 0,
        };
        for i in 0..sampler.sizes.len() {
            sampler.refresh_coefs(i);
        }
        sampler.rescan_tops();
        sampler
    }

    fn write_state(&self, state: &mut GibbsState) {
        state.assignments = self.assign.iter().map(|&l| l as usize).collect();
        state.clusters = self
            .sizes
            .iter()
            .zip(&self.sums)
            .map(|(&k, &s)| ClusterStat::new(k, s))
            .collect();
    }

    fn n_clusters(&self) -> usize {
        self.sizes.len()
    }

    /// Join-weight coefficients of slot `i` from its (k, s): the log weight
    /// of adding an outside item x is ca + cb·x + cc·x².
    fn refresh_coefs(&mut self, i: usize) {
        let k = self.sizes[i];
        let s = self.sums[i];
        let kp1 = (k + 1) as f64;
        let kp2 = (k + 2) as f64;
        self.ca[i] = (k as f64).ln() - 0.5 * (kp2.ln() - kp1.ln())
            + s * s * (0.5 / kp2 - 0.5 / kp1);
        self.cb[i] = s / kp2;
        self.cc[i] = 0.5 / kp2;
    }

    fn rescan_tops(&mut self) {
        let mut i1 = usize::MAX;
        let mut k1 = 0usize;
        let mut i2 = usize::MAX;
        let mut k2 = 0usize;
        for (i, &k) in self.sizes.iter().enumerate() {
            if k > k1 {
                i2 = i1;
                k2 = k1;
                i1 = i;
                k1 = k;
            } else if k > k2 {
                i2 = i;
                k2 = k;
            }
        }
        self.top1 = i1;
        self.top2 = i2;
    }

    /// Upper bound on the probability that item `j` (currently in slot `c`,
    /// size ≥ 2) leaves it. Ratios are taken against the exact stay weight:
    ///
    /// * the largest other cluster enters with its exact weight,
    /// * every remaining cluster is covered by the k·e^{x²/2} envelope,
    /// * the new-cluster option enters exactly via the precomputed en.
    ///
    /// Infinities or NaN from extreme inputs are harmless: the comparison
    /// `u ≥ NaN` is false, which routes the draw to the full computation.
    #[inline]
    fn leave_bound(&self, j: usize, c: usize) -> f64 {
        let n = self.xs.len();
        let x = self.xs[j];
        let kc = self.sizes[c];
        let s = self.sums[c];
        // Exact log stay weight: remove x from (kc, s), then weigh rejoining.
        // (s − x + x)² collapses to s², leaving only the (s−x)² term.
        let kcf = kc as f64;
        let d = s - x;
        let l_stay = (kcf - 1.0).ln() - 0.5 * ((kcf + 1.0).ln() - kcf.ln())
            + s * s * (0.5 / (kcf + 1.0))
            - d * d * (0.5 / kcf);
        let to = if self.top1 != c { self.top1 } else { self.top2 };
        let (w_top, k_top) = if to != usize::MAX {
            let lw = self.ca[to] + x * self.cb[to] + self.x2[j] * self.cc[to];
            ((lw - l_stay).exp(), self.sizes[to])
        } else {
            (0.0, 0)
        };
        let rest = (n - kc - k_top) as f64;
        let blanket = (rest * self.eh[j] + self.en[j]) * (-l_stay).exp();
        let q = (w_top + blanket) / (w_top + blanket + 1.0);
        q * (1.0 + GATE_SAFETY)
    }

    fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.xs.len();
        for j in 0..n {
            let u: f64 = rng.random();
            let c0 = self.assign[j] as usize;

            if self.gated && self.sizes[c0] >= GATE_MIN_SIZE && u >= self.leave_bound(j, c0) {
                self.fast_draws += 1;
                continue;
            }
            self.slow_draws += 1;

            let x = self.xs[j];
            let x2 = self.x2[j];

            // Remove the item; a death swaps the last slot into c0.
            self.sizes[c0] -= 1;
            self.sums[c0] -= x;
            let mut cur = c0;
            if self.sizes[c0] == 0 {
                let last = self.sizes.len() - 1;
                self.sizes.swap_remove(c0);
                self.sums.swap_remove(c0);
                self.ca.swap_remove(c0);
                self.cb.swap_remove(c0);
                self.cc.swap_remove(c0);
                if c0 < self.sizes.len() {
                    for a in self.assign.iter_mut() {
                        if *a as usize == last {
                            *a = c0 as u32;
                        }
                    }
                }
                cur = usize::MAX;
            } else {
                self.refresh_coefs(c0);
            }

            // Candidate order: other clusters in slot order, new cluster,
            // current cluster last. The running max deliberately excludes the
            // current cluster: its weight often dominates, and exp of a
            // moderately positive argument is exact and cannot overflow here.
            let t = self.sizes.len();
            self.buf.clear();
            let mut wmax = f64::NEG_INFINITY;
            for i in 0..t {
                let lw = self.ca[i] + x * self.cb[i] + x2 * self.cc[i];
                if i != cur && lw > wmax {
                    wmax = lw;
                }
                self.buf.push(lw);
            }
            let lw_new = self.ln_alpha - self.half_ln2 + 0.25 * x2;
            if lw_new > wmax {
                wmax = lw_new;
            }

            let w_cur = if cur != usize::MAX {
                (self.buf[cur] - wmax).exp()
            } else {
                0.0
            };
            let mut w_others = 0.0;
            for (i, w) in self.buf.iter_mut().enumerate() {
                if i == cur {
                    *w = 0.0;
                    continue;
                }
                *w = (*w - wmax).exp();
                w_others += *w;
            }
            let w_new = (lw_new - wmax).exp();
            w_others += w_new;

            let target = u * (w_others + w_cur);
            let idx = if cur != usize::MAX && target >= w_others {
                cur
            } else {
                let mut cum = 0.0;
                let mut chosen = t; // falls through to the new cluster
                for (i, &w) in self.buf.iter().enumerate() {
                    if i == cur {
                        continue;
                    }
                    cum += w;
                    if target < cum {
                        chosen = i;
                        break;
                    }
                }
                chosen
            };

            if idx == t {
                self.sizes.push(1);
                self.sums.push(x);
                self.ca.push(0.0);
                self.cb.push(0.0);
                self.cc.push(0.0);
                self.refresh_coefs(t);
            } else {
                self.sizes[idx] += 1;
                self.sums[idx] += x;
                self.refresh_coefs(idx);
            }
            self.assign[j] = idx as u32;
            self.rescan_tops();
        }
    }

    /// Recompute every cluster sum from the assignments, fail hard if the
    /// incremental state drifted beyond tolerance, then adopt the fresh sums
    /// (and dependent coefficients) to reset round-off growth.
    fn recompute_sums(&mut self) -> Result<()> {
        let t = self.sizes.len();
        let mut fresh = vec![0.0f64; t];
        for (j, &label) in self.assign.iter().enumerate() {
            fresh[label as usize] += self.xs[j];
        }
        let mut worst = 0.0f64;
        for (new, old) in fresh.iter().zip(&self.sums[..t]) {
            worst = worst.max((new - old).abs());
        }
        if worst > DRIFT_TOLERANCE {
            return Err(Error::NumericalDrift {
                quantity: "incremental cluster sums",
                drift: worst,
                tolerance: DRIFT_TOLERANCE,
            });
        }
        self.sums = fresh;
        for i in 0..t {
            self.refresh_coefs(i);
        }
        Ok(())
    }
}
