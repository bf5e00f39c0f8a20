//! Exact joint p(x_{1:n}, T_n = t) and posterior p(T_n = t | x_{1:n}) by
//! exhaustive summation over set partitions, plus the rescaled statistics
//! R_t = n^{3/2} α^(n)/n! · p(x_{1:n}, T_n = t)/p₀(x_{1:n}).
//!
//! The sum over partitions runs as a depth-first walk over restricted-growth
//! prefixes: item j either joins an existing block or opens a new one. The
//! walk carries log(CRP mass numerator) and Σ log h by value, so sibling
//! branches can never contaminate each other with floating-point round-off,
//! and folds each completed partition into a per-t compensated log-sum-exp
//! accumulator.

use crate::error::{Error, Result};
use crate::marginal::{log_h, log_p0, ClusterStat};
use crate::math::{ln_factorial, LogSumAcc};
use crate::partition::{log_rising_factorial, Concentration, DEFAULT_ENUMERATION_CAP};
use crate::posterior::PosteriorOverT;

/// Exact log p(x_{1:n}, T_n = t) for every t, under the default enumeration
/// cap. The returned distribution also carries the normalized posterior.
pub fn exact_joint_over_t(xs: &[f64], alpha: Concentration) -> Result<PosteriorOverT> {
    exact_joint_over_t_with_cap(xs, alpha, DEFAULT_ENUMERATION_CAP)
}

/// Exact joint over t with an explicit enumeration cap.
pub fn exact_joint_over_t_with_cap(
    xs: &[f64],
    alpha: Concentration,
    cap: usize,
) -> Result<PosteriorOverT> {
    joint_over_t_generic(xs, alpha, cap, log_h)
}

/// Exact posterior p(T_n = t | x_{1:n}) under the default enumeration cap.
pub fn posterior_over_t(xs: &[f64], alpha: Concentration) -> Result<PosteriorOverT> {
    exact_joint_over_t(xs, alpha)
}

/// Shared enumeration core, generic over the per-cluster log marginal ratio.
/// Production code passes `log_h`; tests also pass a constant-zero stub,
/// which must recover the CRP prior on t exactly (the data terms cancel).
pub(crate) fn joint_over_t_generic(
    xs: &[f64],
    alpha: Concentration,
    cap: usize,
    log_h_fn: impl Fn(ClusterStat) -> f64 + Copy,
) -> Result<PosteriorOverT> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "exact posterior requires at least one observation".into(),
        ));
    }
    if n > cap {
        return Err(Error::ResourceLimit {
            what: "exact posterior by partition enumeration",
            requested: n,
            cap,
        });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "observations must be finite".into(),
        ));
    }

    let mut walk = PartitionWalk {
        xs,
        ln_alpha: alpha.alpha().ln(),
        sizes: Vec::with_capacity(n),
        sums: Vec::with_capacity(n),
        accs: (0..n).map(|_| LogSumAcc::new()).collect(),
        log_h_fn,
    };
    walk.descend(0, 0.0, 0.0);

    let log_rising = log_rising_factorial(alpha.alpha(), n);
    let lp0 = log_p0(xs);
    let log_joint: Vec<f64> = walk
        .accs
        .iter()
        .map(|acc| acc.total() + lp0 - log_rising)
        .collect();
    PosteriorOverT::from_log_weights(log_joint)
}

struct PartitionWalk<'a, F> {
    xs: &'a [f64],
    ln_alpha: f64,
    sizes: Vec<usize>,
    sums: Vec<f64>,
    // accs[t−1] accumulates log[CRP mass numerator × ∏ h] over all
    // partitions with t blocks.
    accs: Vec<LogSumAcc>,
    log_h_fn: F,
}

impl<F: Fn(ClusterStat) -> f64 + Copy> PartitionWalk<'_, F> {
    /// Place item `depth` into every admissible block. `log_mass` carries the
    /// accumulated log of α^t ∏(|A_i|−1)! and `log_hs` carries Σ log h; both
    /// travel by value down the recursion.
    fn descend(&mut self, depth: usize, log_mass: f64, log_hs: f64) {
        if depth == self.xs.len() {
            self.accs[self.sizes.len() - 1].add(log_mass + log_hs);
            return;
        }
        let x = self.xs[depth];

        for i in 0..self.sizes.len() {
            let k = self.sizes[i];
            let s = self.sums[i];
            // Joining a block of size k grows its (|A|−1)! factor by k and
            // swaps its h factor from h(k, s) to h(k+1, s+x).
            let d_mass = (k as f64).ln();
            let d_h = (self.log_h_fn)(ClusterStat::new(k + 1, s + x))
                - (self.log_h_fn)(ClusterStat::new(k, s));
            self.sizes[i] = k + 1;
            self.sums[i] = s + x;
            self.descend(depth + 1, log_mass + d_mass, log_hs + d_h);
            // Restore the saved values exactly (no -= undo drift).
            self.sizes[i] = k;
            self.sums[i] = s;
        }

        // Open a new block: one factor of α and a fresh h(1, x).
        let d_h = (self.log_h_fn)(ClusterStat::new(1, x));
        self.sizes.push(1);
        self.sums.push(x);
        self.descend(depth + 1, log_mass + self.ln_alpha, log_hs + d_h);
        self.sizes.pop();
        self.sums.pop();
    }
}

/// log R_t for t ∈ {1, 2}:
///
/// log R_t = (3/2) log n + log α^(n) − log n! + log p(x,T_n=t) − log p₀(x).
///
/// The α-dependent factor α^(n)/n! is 1 at α = 1, recovering the plain
/// n^{3/2} scaling. R_1 stays bounded in probability on standard normal data
/// while R_2 diverges, which is what drives p(T_n=1 | x) → 0.
pub fn r_statistic(t: usize, xs: &[f64], alpha: Concentration) -> Result<f64> {
    if t != 1 && t != 2 {
        return Err(Error::InvalidArgument(format!(
            "R_t is defined here for t ∈ {{1, 2}}, got t = {t}"
        )));
    }
    let n = xs.len();
    if t > n {
        return Err(Error::InvalidArgument(format!(
            "R_{t} undefined for n = {n} observations"
        )));
    }
    let joint = exact_joint_over_t(xs, alpha)?;
    let correction = log_rising_factorial(alpha.alpha(), n) - ln_factorial(n);
    Ok(1.5 * (n as f64).ln() + correction + joint.log_joint(t) - log_p0(xs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::LOG_2PI;
    use crate::partition::prior_num_clusters;

    fn alpha(a: f64) -> Concentration {
        Concentration::new(a).unwrap()
    }

    #[test]
    fn single_point_joint_is_its_marginal() {
        let joint = exact_joint_over_t(&[0.0], alpha(1.0)).unwrap();
        // p(A) = 1 for the unique partition, so joint = m((0)) = (4π)^{-1/2}.
        let expected = -0.5 * 2.0f64.ln() - 0.5 * LOG_2PI;
        assert!((joint.log_joint(1) - expected).abs() < 1e-14);
        assert!((joint.prob(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_zeros_joint_matches_symbolic_oracle() {
        // Hand evaluation for xs = (0,0), α = 1:
        //   t=1: mass 1/2, m = (1/√3)(2π)^{-1}  → joint = ½·3^{-1/2}·(2π)^{-1}
        //   t=2: mass 1/2, m(0)² = ½(2π)^{-1}   → joint = ¼·(2π)^{-1}
        let joint = exact_joint_over_t(&[0.0, 0.0], alpha(1.0)).unwrap();
        let j1 = (0.5 / 3.0f64.sqrt()).ln() - LOG_2PI;
        let j2 = 0.25f64.ln() - LOG_2PI;
        assert!((joint.log_joint(1) - j1).abs() < 1e-13);
        assert!((joint.log_joint(2) - j2).abs() < 1e-13);

        // Posterior: (1/(2√3)) / (1/(2√3) + 1/4) = 2√3/(2√3+3) ≈ 0.53590.
        let p1 = 2.0 * 3.0f64.sqrt() / (2.0 * 3.0f64.sqrt() + 3.0);
        assert!((joint.prob(1) - p1).abs() < 1e-13);
        assert!((joint.prob(1) - 0.53590).abs() < 1e-5);
    }

    #[test]
    fn joint_is_permutation_invariant() {
        let a = alpha(0.7);
        let xs = [0.3, -1.2, 0.9, 2.1, -0.4];
        let mut ys = xs;
        ys.reverse();
        ys.swap(1, 3);
        let jx = exact_joint_over_t(&xs, a).unwrap();
        let jy = exact_joint_over_t(&ys, a).unwrap();
        for t in 1..=xs.len() {
            assert!((jx.log_joint(t) - jy.log_joint(t)).abs() < 1e-11, "t={t}");
        }
    }

    #[test]
    fn cap_is_enforced() {
        let xs = vec![0.0; 14];
        assert!(matches!(
            exact_joint_over_t(&xs, alpha(1.0)),
            Err(Error::ResourceLimit { .. })
        ));
        assert!(exact_joint_over_t_with_cap(&[0.0; 3], alpha(1.0), 3).is_ok());
    }

    #[test]
    fn constant_h_stub_recovers_the_prior() {
        // With the data terms stubbed out (h ≡ 1) the joint over t must be
        // the CRP prior times p₀, i.e. the posterior over t equals the prior.
        let xs = [0.5, -0.3, 1.7, 0.2, -2.2, 0.9];
        for a in [0.5, 1.0, 2.0] {
            let stub = joint_over_t_generic(&xs, alpha(a), 13, |_| 0.0).unwrap();
            let prior = prior_num_clusters(xs.len(), alpha(a)).unwrap();
            for t in 1..=xs.len() {
                assert!(
                    (stub.prob(t) - prior.prob(t)).abs() < 1e-12,
                    "α={a}, t={t}"
                );
            }
        }
    }

    #[test]
    fn r1_matches_h_at_n1() {
        // R_1 at n=1 reduces to m(x)/p₀(x) = h(1, x); at x=0 that is 1/√2.
        let r1 = r_statistic(1, &[0.0], alpha(1.0)).unwrap();
        assert!((r1 - (-0.5 * 2.0f64.ln())).abs() < 1e-13);
    }

    #[test]
    fn r1_closed_form_all_zeros() {
        // Z_n = 0 ⇒ log R_1 = ½ log(n/(n+1)) < 0 at α = 1.
        for n in 1..=12 {
            let xs = vec![0.0; n];
            let r1 = r_statistic(1, &xs, alpha(1.0)).unwrap();
            let expected = 0.5 * ((n as f64) / (n as f64 + 1.0)).ln();
            assert!((r1 - expected).abs() < 1e-12, "n={n}");
            assert!(r1 < 0.0);
        }
    }

    #[test]
    fn r_statistic_rejects_bad_t() {
        assert!(r_statistic(3, &[0.0, 1.0], alpha(1.0)).is_err());
        assert!(r_statistic(0, &[0.0], alpha(1.0)).is_err());
        assert!(r_statistic(2, &[0.0], alpha(1.0)).is_err());
    }
}
