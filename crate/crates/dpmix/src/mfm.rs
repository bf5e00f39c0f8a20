//! A finite mixture with a prior on the number of components s — the
//! consistent alternative for component-count inference, implemented at
//! exact-enumeration scale as a behavioral contrast to the Dirichlet
//! process mixture.
//!
//! The model: s ~ pmf_s (truncated at s_max), mixing proportions
//! π | s ~ Dirichlet(γ, …, γ), labels z_j | π i.i.d. categorical, and each
//! component's data marginal is the same conjugate m(·) as the DPM's.
//! Collapsing π gives, for a label vector z with occupancy counts n_i,
//!
//! ```text
//! p(x, z | s) = Γ(sγ)/Γ(sγ+n) · ∏_{i=1}^s Γ(γ+n_i)/Γ(γ) · ∏_{occupied i} m(x_{z=i}).
//! ```
//!
//! The posterior over s is computed by two independent enumerations — over
//! raw label vectors z ∈ {1..s}ⁿ, and over set partitions weighted by the
//! s!/(s−t)! ways to label a t-block partition injectively — which must
//! agree to ~1e-10 and serve as each other's oracle.

use crate::error::{Error, Result};
use crate::marginal::{log_h, log_p0, ClusterStat};
use crate::math::{ln_factorial, ln_gamma, log_sum_exp, LogSumAcc};
use crate::partition::enumerate_partitions;

/// Cap on sₘₐₓⁿ for the label-vector enumeration.
const ASSIGNMENT_ENUMERATION_CAP: f64 = 1e7;

/// Prior specification for the finite mixture: a pmf on the number of
/// components s ∈ {1, …, s_max} and the symmetric Dirichlet parameter γ.
#[derive(Debug, Clone, PartialEq)]
pub struct MfmConfig {
    pmf_s: Vec<f64>,
    dirichlet_param: f64,
}

impl MfmConfig {
    /// Build from unnormalized positive weights on s = 1, …, len(weights);
    /// the weights are renormalized to a pmf.
    pub fn new(weights: Vec<f64>, dirichlet_param: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Configuration(
                "the prior on s needs at least one support point".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::Configuration(
                "prior weights on s must be finite and strictly positive".into(),
            ));
        }
        if !dirichlet_param.is_finite() || dirichlet_param <= 0.0 {
            return Err(Error::Configuration(format!(
                "Dirichlet parameter must be a positive real, got {dirichlet_param}"
            )));
        }
        let total: f64 = weights.iter().sum();
        Ok(MfmConfig {
            pmf_s: weights.iter().map(|w| w / total).collect(),
            dirichlet_param,
        })
    }

    /// The default prior p(s) ∝ 2⁻ˢ truncated at `s_max`: a light tail, so
    /// truncating the infinite support loses almost nothing.
    pub fn geometric(s_max: usize, dirichlet_param: f64) -> Result<Self> {
        if s_max == 0 {
            return Err(Error::Configuration("s_max must be ≥ 1".into()));
        }
        MfmConfig::new(
            (1..=s_max).map(|s| 0.5_f64.powi(s as i32)).collect(),
            dirichlet_param,
        )
    }

    /// Truncation bound: the largest s with prior mass.
    pub fn s_max(&self) -> usize {
        self.pmf_s.len()
    }

    /// The normalized prior pmf on s (index s−1).
    pub fn pmf_s(&self) -> &[f64] {
        &self.pmf_s
    }

    pub fn dirichlet_param(&self) -> f64 {
        self.dirichlet_param
    }
}

/// Posterior over the number of components by brute-force enumeration of
/// all label vectors z ∈ {1..s}ⁿ for each s ≤ s_max. Feasible while
/// s_maxⁿ ≤ 10⁷. Returns probabilities indexed by s−1.
pub fn mfm_posterior_s_assignments(xs: &[f64], cfg: &MfmConfig) -> Result<Vec<f64>> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "posterior over s requires at least one observation".into(),
        ));
    }
    let s_max = cfg.s_max();
    let states = (s_max as f64).powi(n as i32);
    if states > ASSIGNMENT_ENUMERATION_CAP {
        return Err(Error::ResourceLimit {
            what: "label-vector enumeration states",
            requested: if states < usize::MAX as f64 {
                states as usize
            } else {
                usize::MAX
            },
            cap: ASSIGNMENT_ENUMERATION_CAP as usize,
        });
    }

    let gamma = cfg.dirichlet_param;
    let base = log_p0(xs);
    let mut log_post = Vec::with_capacity(s_max);
    for s in 1..=s_max {
        let mut walk = LabelWalk {
            xs,
            gamma,
            counts: vec![0usize; s],
            sums: vec![0.0f64; s],
            acc: LogSumAcc::new(),
        };
        walk.descend(0, 0.0);
        let log_l = ln_gamma(s as f64 * gamma) - ln_gamma(s as f64 * gamma + n as f64)
            + walk.acc.total()
            + base;
        log_post.push(cfg.pmf_s[s - 1].ln() + log_l);
    }
    Ok(normalize(log_post))
}

/// Depth-first walk over label vectors. The running weight carries the
/// collapsed-Dirichlet factor incrementally — assigning an item to a
/// component holding c items multiplies by (γ + c) — plus the h-ratio
/// update of that component's marginal.
struct LabelWalk<'a> {
    xs: &'a [f64],
    gamma: f64,
    counts: Vec<usize>,
    sums: Vec<f64>,
    acc: LogSumAcc,
}

impl LabelWalk<'_> {
    fn descend(&mut self, depth: usize, log_w: f64) {
        if depth == self.xs.len() {
            self.acc.add(log_w);
            return;
        }
        let x = self.xs[depth];
        for i in 0..self.counts.len() {
            let c = self.counts[i];
            let old_sum = self.sums[i];
            let mut d = (self.gamma + c as f64).ln()
                + log_h(ClusterStat::new(c + 1, old_sum + x));
            if c > 0 {
                d -= log_h(ClusterStat::new(c, old_sum));
            }
            self.counts[i] = c + 1;
            self.sums[i] = old_sum + x;
            self.descend(depth + 1, log_w + d);
            self.counts[i] = c;
            self.sums[i] = old_sum;
        }
    }
}

/// Posterior over the number of components by enumeration of set
/// partitions: a t-block partition can be labeled injectively with s
/// components in s!/(s−t)! ways, and the collapsed weight depends on the
/// labeling only through the block sizes. Independent of — and must agree
/// with — [`mfm_posterior_s_assignments`].
pub fn mfm_posterior_s_partitions(xs: &[f64], cfg: &MfmConfig) -> Result<Vec<f64>> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "posterior over s requires at least one observation".into(),
        ));
    }
    let s_max = cfg.s_max();
    let gamma = cfg.dirichlet_param;

    // Γ(γ+j)/Γ(γ) per block size j, and Γ(sγ)/Γ(sγ+n) per s, precomputed.
    let lgam0 = ln_gamma(gamma);
    let block_factor: Vec<f64> = (0..=n)
        .map(|j| ln_gamma(gamma + j as f64) - lgam0)
        .collect();
    let s_factor: Vec<f64> = (1..=s_max)
        .map(|s| ln_gamma(s as f64 * gamma) - ln_gamma(s as f64 * gamma + n as f64))
        .collect();

    let mut accs: Vec<LogSumAcc> = (0..s_max).map(|_| LogSumAcc::new()).collect();
    for partition in enumerate_partitions(n)? {
        let t = partition.num_blocks();
        if t > s_max {
            continue;
        }
        let mut body = 0.0;
        for block in partition.blocks() {
            let mut sum = 0.0;
            for &ix in block {
                sum += xs[ix];
            }
            body += block_factor[block.len()] + log_h(ClusterStat::new(block.len(), sum));
        }
        for s in t..=s_max {
            let multiplicity = ln_factorial(s) - ln_factorial(s - t);
            accs[s - 1].add(multiplicity + s_factor[s - 1] + body);
        }
    }

    let base = log_p0(xs);
    let log_post: Vec<f64> = (1..=s_max)
        .map(|s| cfg.pmf_s[s - 1].ln() + accs[s - 1].total() + base)
        .collect();
    Ok(normalize(log_post))
}

fn normalize(log_post: Vec<f64>) -> Vec<f64> {
    let z = log_sum_exp(&log_post);
    log_post.iter().map(|lw| (lw - z).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_data(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn config_validation() {
        assert!(MfmConfig::new(vec![], 1.0).is_err());
        assert!(MfmConfig::new(vec![1.0, 0.0], 1.0).is_err());
        assert!(MfmConfig::new(vec![1.0, -1.0], 1.0).is_err());
        assert!(MfmConfig::new(vec![1.0], 0.0).is_err());
        assert!(MfmConfig::new(vec![1.0], f64::NAN).is_err());
        assert!(MfmConfig::geometric(0, 1.0).is_err());

        let cfg = MfmConfig::geometric(3, 1.0).unwrap();
        assert_eq!(cfg.s_max(), 3);
        // 2⁻ˢ over {1,2,3} renormalizes to (4/7, 2/7, 1/7).
        assert!((cfg.pmf_s()[0] - 4.0 / 7.0).abs() < 1e-15);
        assert!((cfg.pmf_s()[1] - 2.0 / 7.0).abs() < 1e-15);
        assert!((cfg.pmf_s()[2] - 1.0 / 7.0).abs() < 1e-15);
        assert!((cfg.pmf_s().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_observation_returns_the_prior() {
        // One data point's likelihood is m(x₁) regardless of s, so the
        // posterior is the prior — for both enumeration paths.
        let cfg = MfmConfig::geometric(4, 1.3).unwrap();
        let xs = [0.42];
        for post in [
            mfm_posterior_s_assignments(&xs, &cfg).unwrap(),
            mfm_posterior_s_partitions(&xs, &cfg).unwrap(),
        ] {
            for (s0, (got, prior)) in post.iter().zip(cfg.pmf_s()).enumerate() {
                assert!(
                    (got - prior).abs() < 1e-12,
                    "s={}: {got} vs prior {prior}",
                    s0 + 1
                );
            }
        }
    }

    #[test]
    fn s_max_one_is_a_point_mass() {
        let cfg = MfmConfig::geometric(1, 1.0).unwrap();
        let xs = normal_data(5, 8);
        assert_eq!(mfm_posterior_s_assignments(&xs, &cfg).unwrap(), vec![1.0]);
        assert_eq!(mfm_posterior_s_partitions(&xs, &cfg).unwrap(), vec![1.0]);
    }

    #[test]
    fn two_zeros_uniform_prior_oracle() {
        // Hand computation at xs=(0,0), γ=1, uniform prior on s ∈ {1,2}:
        // L₁ ∝ h(2,0) = 1/√3 and L₂ ∝ (4/√3 + 1)/6, so
        // p(s=1|x) = 6/(10+√3).
        let cfg = MfmConfig::new(vec![1.0, 1.0], 1.0).unwrap();
        let xs = [0.0, 0.0];
        let expected_p1 = 6.0 / (10.0 + 3.0_f64.sqrt());
        let a = mfm_posterior_s_assignments(&xs, &cfg).unwrap();
        let p = mfm_posterior_s_partitions(&xs, &cfg).unwrap();
        assert!((a[0] - expected_p1).abs() < 1e-13, "assignments path: {}", a[0]);
        assert!((p[0] - expected_p1).abs() < 1e-13, "partitions path: {}", p[0]);
        assert!((a[0] - p[0]).abs() < 1e-13);
    }

    #[test]
    fn the_two_enumeration_paths_agree() {
        for seed in 0..12u64 {
            let n = 2 + (seed as usize) % 7;
            let s_max = 2 + (seed as usize) % 3;
            let gamma = [0.5, 1.0, 2.5][(seed as usize) % 3];
            let xs = normal_data(n, 4000 + seed);
            let cfg = MfmConfig::geometric(s_max, gamma).unwrap();
            let a = mfm_posterior_s_assignments(&xs, &cfg).unwrap();
            let p = mfm_posterior_s_partitions(&xs, &cfg).unwrap();
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for s in 0..s_max {
                assert!(
                    (a[s] - p[s]).abs() <= 1e-10,
                    "seed {seed}, s={}: {} vs {}",
                    s + 1,
                    a[s],
                    p[s]
                );
            }
        }
    }

    #[test]
    fn assignment_path_enforces_its_cap() {
        let cfg = MfmConfig::geometric(4, 1.0).unwrap();
        let xs = normal_data(14, 1); // 4^14 ≈ 2.7e8 > 1e7
        assert!(matches!(
            mfm_posterior_s_assignments(&xs, &cfg),
            Err(Error::ResourceLimit { .. })
        ));
        // The partition path has its own cap (n ≤ 13), also exceeded here.
        assert!(matches!(
            mfm_posterior_s_partitions(&xs, &cfg),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn empty_data_is_rejected() {
        let cfg = MfmConfig::geometric(2, 1.0).unwrap();
        assert!(mfm_posterior_s_assignments(&[], &cfg).is_err());
        assert!(mfm_posterior_s_partitions(&[], &cfg).is_err());
    }

    #[test]
    fn finite_mixture_keeps_more_single_cluster_mass_than_the_dpm() {
        // The behavioral contrast on standard normal data: at n=10 the
        // finite mixture's p(s=1|x) should usually exceed the DPM's
        // p(T=1|x). Majority over 50 replicates, not a per-dataset claim.
        use crate::exact::posterior_over_t;
        use crate::partition::Concentration;
        let cfg = MfmConfig::geometric(5, 1.0).unwrap();
        let alpha = Concentration::new(1.0).unwrap();
        let mut wins = 0usize;
        let reps = 50usize;
        for rep in 0..reps {
            let xs = normal_data(10, 9000 + rep as u64);
            let mfm_p1 = mfm_posterior_s_partitions(&xs, &cfg).unwrap()[0];
            let dpm_p1 = posterior_over_t(&xs, alpha).unwrap().prob(1);
            if mfm_p1 > dpm_p1 {
                wins += 1;
            }
        }
        assert!(
            2 * wins > reps,
            "finite mixture won only {wins}/{reps} replicates"
        );
    }
}
