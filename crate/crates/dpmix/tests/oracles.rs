//! Cross-checks against oracles that share no code with the implementation:
//! deterministic quadrature for the marginal's normalization, Monte Carlo
//! importance sampling for the total data marginal, and an independent
//! partition-by-partition summation route for the exact joint.

use dpmix::marginal::{log_h, log_p0, log_single_cluster_marginal, ClusterStat, ModelParams};
use dpmix::math::{log_sum_exp, LogSumAcc};
use dpmix::partition::{crp_log_mass, enumerate_partitions, sample_crp, Concentration};
use dpmix::{exact_joint_over_t, Partition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn alpha(a: f64) -> Concentration {
    Concentration::new(a).unwrap()
}

fn normal_data(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Composite Simpson weights over a symmetric grid with `2m+1` nodes.
struct SimpsonGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SimpsonGrid {
    fn new(half_width: f64, half_steps: usize) -> Self {
        let m = 2 * half_steps; // even number of intervals
        let h = 2.0 * half_width / m as f64;
        let nodes: Vec<f64> = (0..=m).map(|i| -half_width + i as f64 * h).collect();
        let weights: Vec<f64> = (0..=m)
            .map(|i| {
                let w = if i == 0 || i == m {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * h / 3.0
            })
            .collect();
        SimpsonGrid { nodes, weights }
    }
}

/// ∫ m(x_S) dx_S over ℝᵏ by tensor-product Simpson quadrature. The marginal
/// decays like a Gaussian, so a ±12 window with modest step size leaves
/// truncation and discretization error far below 1e-8.
fn quadrature_mass(k: usize, params: ModelParams, grid: &SimpsonGrid) -> f64 {
    let mut total = 0.0;
    let mut xs = vec![0.0f64; k];
    let mut idx = vec![0usize; k];
    let m = grid.nodes.len();
    'outer: loop {
        let mut w = 1.0;
        for d in 0..k {
            xs[d] = grid.nodes[idx[d]];
            w *= grid.weights[idx[d]];
        }
        let stat = ClusterStat::from_xs(&xs);
        total += w * log_single_cluster_marginal(stat, params, &xs).unwrap().exp();
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == k {
                break 'outer;
            }
        }
    }
    total
}

#[test]
fn marginal_integrates_to_one_default_params() {
    let params = ModelParams::default();
    for (k, half_steps) in [(1usize, 1200usize), (2, 300), (3, 80)] {
        let grid = SimpsonGrid::new(12.0, half_steps);
        let mass = quadrature_mass(k, params, &grid);
        assert!(
            (mass - 1.0).abs() < 1e-8,
            "k={k}: quadrature mass {mass} deviates from 1"
        );
    }
}

#[test]
fn marginal_integrates_to_one_general_params() {
    // The general conjugate form, not just the default reduction.
    let params = ModelParams::new(0.7, 2.3, 0.6).unwrap();
    for (k, half_steps) in [(1usize, 1200usize), (2, 300)] {
        let grid = SimpsonGrid::new(14.0, half_steps);
        let mass = quadrature_mass(k, params, &grid);
        assert!(
            (mass - 1.0).abs() < 1e-8,
            "k={k}: quadrature mass {mass} deviates from 1"
        );
    }
}

#[test]
fn expected_h_is_one_under_the_baseline() {
    // E[h(X_S)] over X_S ~ p₀ collapses to a one-dimensional integral: h
    // depends on the sample only through its sum, which is N(0, k) under
    // p₀. (Only the mean exists — h has infinite variance under p₀ — so
    // quadrature, not Monte Carlo, is the oracle here.)
    for k in 1..=6usize {
        let grid = SimpsonGrid::new(16.0 * (k as f64).sqrt(), 4000);
        let kf = k as f64;
        let mut total = 0.0;
        for (s, w) in grid.nodes.iter().zip(&grid.weights) {
            let density = (-s * s / (2.0 * kf)).exp() / (2.0 * std::f64::consts::PI * kf).sqrt();
            total += w * log_h(ClusterStat::new(k, *s)).exp() * density;
        }
        assert!(
            (total - 1.0).abs() < 1e-8,
            "k={k}: E[h] quadrature gave {total}"
        );
    }
}

#[test]
fn total_marginal_matches_importance_sampling() {
    // p(x) = p₀(x) · E_{partition ~ prior}[∏_blocks h], so averaging
    // exp(Σ log h) over prior draws estimates exp(log Σ_t joint − log p₀)
    // without touching the enumeration code path.
    let n_draws = 1_000_000usize;
    let n_batches = 50;
    for (n, a, seed) in [(5usize, 1.0, 10u64), (8, 1.0, 11), (7, 0.5, 12), (6, 2.0, 13)] {
        let xs = normal_data(n, seed);
        let joint = exact_joint_over_t(&xs, alpha(a)).unwrap();
        let expected = (log_sum_exp(joint.log_joints()) - log_p0(&xs)).exp();

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD00D);
        let batch = n_draws / n_batches;
        let mut batch_means = Vec::with_capacity(n_batches);
        for _ in 0..n_batches {
            let mut sum = 0.0;
            for _ in 0..batch {
                let p = sample_crp(n, alpha(a), &mut rng);
                let log_prod: f64 = p
                    .blocks()
                    .iter()
                    .map(|b| {
                        let mut s = 0.0;
                        for &i in b {
                            s += xs[i];
                        }
                        log_h(ClusterStat::new(b.len(), s))
                    })
                    .sum();
                sum += log_prod.exp();
            }
            batch_means.push(sum / batch as f64);
        }
        let mean = batch_means.iter().sum::<f64>() / n_batches as f64;
        let var = batch_means
            .iter()
            .map(|m| (m - mean) * (m - mean))
            .sum::<f64>()
            / ((n_batches * (n_batches - 1)) as f64);
        let se = var.sqrt();
        assert!(
            (mean - expected).abs() <= 3.0 * se.max(1e-12),
            "n={n}, α={a}: IS mean {mean} vs exact {expected} (se {se})"
        );
    }
}

#[test]
fn exact_joint_agrees_with_partitionwise_summation() {
    // Second route to the same numbers: loop over every partition, price it
    // with the CRP mass and the *general-form* per-cluster marginals (not
    // the h shortcut), and reduce per cluster count.
    let params = ModelParams::default();
    for (n, a, seed) in [
        (2usize, 1.0f64, 50u64),
        (5, 1.0, 51),
        (7, 0.5, 52),
        (8, 2.0, 53),
        (9, 1.0, 54),
    ] {
        let xs = normal_data(n, seed);
        let fast = exact_joint_over_t(&xs, alpha(a)).unwrap();

        let mut accs: Vec<LogSumAcc> = (0..n).map(|_| LogSumAcc::new()).collect();
        for p in enumerate_partitions(n).unwrap() {
            let mut w = crp_log_mass(&p, alpha(a));
            for b in p.blocks() {
                let block_xs: Vec<f64> = b.iter().map(|&i| xs[i]).collect();
                w += log_single_cluster_marginal(
                    ClusterStat::from_xs(&block_xs),
                    params,
                    &block_xs,
                )
                .unwrap();
            }
            accs[p.num_blocks() - 1].add(w);
        }
        for t in 1..=n {
            let slow = accs[t - 1].total();
            let diff = (fast.log_joint(t) - slow).abs();
            assert!(
                diff <= 1e-12 * fast.log_joint(t).abs().max(1.0),
                "n={n}, α={a}, t={t}: {} vs {} (diff {diff})",
                fast.log_joint(t),
                slow
            );
        }
    }
}

#[test]
fn frozen_value_two_zero_marginal() {
    // m((0,0)) = (2π)⁻¹ / √3; the log is −½·ln 3 − ln 2π.
    let xs = [0.0, 0.0];
    let got = log_single_cluster_marginal(ClusterStat::from_xs(&xs), ModelParams::default(), &xs)
        .unwrap();
    assert!((got - (-2.3871832107434002)).abs() < 1e-12);
}

#[test]
fn frozen_values_posterior_two_zeros() {
    // Joint masses at xs=(0,0), α=1: t=1 → p₀/(2√3), t=2 → p₀/4, so
    // p(T=1|x) = 2√3/(2√3+3).
    let xs = [0.0, 0.0];
    let joint = exact_joint_over_t(&xs, alpha(1.0)).unwrap();
    let p0 = log_p0(&xs);
    assert!((joint.log_joint(1) - (p0 + (0.5 / 3.0_f64.sqrt()).ln())).abs() < 1e-13);
    assert!((joint.log_joint(2) - (p0 + 0.25_f64.ln())).abs() < 1e-13);
    let expect_p1 = 2.0 * 3.0_f64.sqrt() / (2.0 * 3.0_f64.sqrt() + 3.0);
    assert!((joint.prob(1) - expect_p1).abs() < 1e-13);
}

#[test]
fn gibbs_target_equals_partition_posterior_shape() {
    // The sampler's per-item conditional weights are ratios of the same
    // partition posterior the enumeration integrates; spot-check that the
    // posterior over t from a long chain and the enumerated posterior agree
    // on a fresh dataset not used elsewhere.
    use dpmix::{estimate_posterior_t, ChainConfig, InitMode};
    let xs = normal_data(7, 1234);
    let a = alpha(1.0);
    let exact = dpmix::posterior_over_t(&xs, a).unwrap();
    let est = estimate_posterior_t(
        &xs,
        a,
        &ChainConfig {
            n_sweeps: 60_000,
            burn_in: 10_000,
            thin: 5,
            seed: 7,
            init: InitMode::PriorDraw,
        },
    )
    .unwrap();
    for t in 1..=7 {
        let se = est.std_error(t).max(5e-4);
        assert!(
            (est.prob(t) - exact.prob(t)).abs() <= 4.0 * se,
            "t={t}: estimate {} vs exact {} (se {se})",
            est.prob(t),
            exact.prob(t)
        );
    }
}

#[test]
fn split_inequality_equality_cases_from_first_principles() {
    // For a two-block split with both block sums zero, the ratio bound is
    // tight up to the x̄ term; freeze two hand-computed cases.
    use dpmix::diagnostics::check_split_inequality;
    // xs = (1, -1, 0): split {0,1} | {2}: block sums 0, 0; x̄ = 0.
    let xs = [1.0, -1.0, 0.0];
    let split = Partition::new(vec![vec![0, 1], vec![2]], 3).unwrap();
    let report = check_split_inequality(&xs, &split).unwrap();
    // lhs: h(3,0)/(h(2,0)h(1,0)) = (√3·√2)/√4 = √6/2; rhs: √(3·2/4) = √6/2.
    let expect = (6.0_f64.sqrt() / 2.0).ln();
    assert!((report.lhs_log - expect).abs() < 1e-13);
    assert!((report.rhs_log - expect).abs() < 1e-13);
    assert!(report.slack.abs() < 1e-13);
}
