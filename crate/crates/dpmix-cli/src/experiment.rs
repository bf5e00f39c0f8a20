//! The trend experiment: for a grid of sample sizes and a number of
//! replicates per size, simulate data, compute or estimate the posterior
//! over the cluster count, and emit one CSV row per (n, replicate).
//!
//! Reproducibility contract: a row depends only on (master seed, n,
//! replicate) through a splitmix64-derived substream, never on execution
//! order — so results are byte-identical across runs and thread counts, and
//! adding grid points or replicates never perturbs existing rows.

use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use dpmix::{
    estimate_posterior_t, ChainConfig, Concentration, InitMode, DEFAULT_ENUMERATION_CAP,
};

use crate::data::{simulate_data, DataModel};

/// Inference engine selection for a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Exact,
    Gibbs,
    /// Exact exactly when n ≤ the enumeration cap, Gibbs otherwise.
    Auto,
}

impl FromStr for Engine {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(Engine::Exact),
            "gibbs" => Ok(Engine::Gibbs),
            "auto" => Ok(Engine::Auto),
            other => bail!("unknown engine `{other}`; expected exact, gibbs, or auto"),
        }
    }
}

/// Chain initializations cycle through these, so merged chains start from
/// maximally different corners of the state space.
const CHAIN_INITS: [InitMode; 3] = [
    InitMode::AllInOne,
    InitMode::AllSingletons,
    InitMode::PriorDraw,
];

/// Full description of one trend run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Sample sizes, strictly increasing.
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub engine: Engine,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Independent chains merged per Gibbs estimate.
    pub chains: usize,
    pub data_model: DataModel,
    /// Threshold for `Engine::Auto`'s exact-vs-Gibbs decision.
    pub enumeration_cap: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_grid: Vec::new(),
            replicates: 1,
            alpha: 1.0,
            seed: 0,
            engine: Engine::Auto,
            sweeps: 50_000,
            burn_in: 10_000,
            thin: 10,
            chains: 3,
            data_model: DataModel::StandardNormal,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            bail!("n_grid must list at least one sample size");
        }
        if self.n_grid.contains(&0) {
            bail!("sample sizes must be ≥ 1");
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            bail!("n_grid must be strictly increasing, got {:?}", self.n_grid);
        }
        if self.replicates == 0 {
            bail!("replicates must be ≥ 1");
        }
        Concentration::new(self.alpha).map_err(|e| anyhow!(e))?;
        if self.chains == 0 {
            bail!("chains must be ≥ 1");
        }
        // The chain settings only have to hold up if some grid point will
        // actually run Gibbs.
        let needs_gibbs = self.n_grid.iter().any(|&n| {
            matches!(self.engine, Engine::Gibbs)
                || (matches!(self.engine, Engine::Auto) && n > self.enumeration_cap)
        });
        if needs_gibbs {
            self.chain_config(0, InitMode::AllInOne)
                .validate()
                .context("gibbs chain configuration")?;
        }
        Ok(())
    }

    fn chain_config(&self, seed: u64, init: InitMode) -> ChainConfig {
        ChainConfig {
            n_sweeps: self.sweeps,
            burn_in: self.burn_in,
            thin: self.thin,
            seed,
            init,
        }
    }
}

/// One emitted experiment row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub n: usize,
    pub replicate: usize,
    /// The substream seed this row was computed from.
    pub seed: u64,
    pub engine: &'static str,
    pub p_t1: f64,
    pub p_t2: f64,
    pub t_mode: usize,
    pub xbar: f64,
    /// Monte Carlo standard error of p_t1; zero for the exact engine.
    pub mc_se: f64,
}

/// The exact CSV header rows are emitted under.
pub const CSV_HEADER: &str = "n,replicate,seed,engine,p_t1,p_t2,t_mode,xbar,mc_se";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Substream seed for one (n, replicate) task; rows depend on the master
/// seed only through this.
pub fn substream_seed(master: u64, n: usize, replicate: usize) -> u64 {
    let a = splitmix64(master ^ splitmix64(n as u64));
    splitmix64(a ^ splitmix64(replicate as u64).rotate_left(17))
}

/// Seeds for the consumers inside one task: the data draw and each chain.
fn task_seed(substream: u64, consumer: u64) -> u64 {
    splitmix64(substream.wrapping_add(splitmix64(consumer)))
}

/// Run the full grid × replicate experiment. Tasks run in parallel; rows
/// come back sorted by (n, replicate) and are deterministic for a given
/// config regardless of thread count.
pub fn trend_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrendRow>> {
    cfg.validate()?;
    let alpha = Concentration::new(cfg.alpha).map_err(|e| anyhow!(e))?;

    let tasks: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replicates).map(move |rep| (n, rep)))
        .collect();

    let mut rows: Vec<TrendRow> = tasks
        .par_iter()
        .map(|&(n, rep)| run_task(cfg, alpha, n, rep))
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| (r.n, r.replicate));
    Ok(rows)
}

fn run_task(cfg: &ExperimentConfig, alpha: Concentration, n: usize, rep: usize) -> Result<TrendRow> {
    let sub = substream_seed(cfg.seed, n, rep);
    let mut data_rng = ChaCha8Rng::seed_from_u64(task_seed(sub, 0));
    let xs = simulate_data(&cfg.data_model, n, &mut data_rng);
    let xbar = xs.iter().sum::<f64>() / n as f64;

    let use_exact = match cfg.engine {
        Engine::Exact => true,
        Engine::Gibbs => false,
        Engine::Auto => n <= cfg.enumeration_cap,
    };

    let (p_t1, p_t2, t_mode, mc_se, engine) = if use_exact {
        let post = dpmix::exact::exact_joint_over_t_with_cap(&xs, alpha, cfg.enumeration_cap)
            .with_context(|| format!("exact posterior at n={n}"))?;
        let p2 = if n >= 2 { post.prob(2) } else { 0.0 };
        (post.prob(1), p2, post.mode(), 0.0, "exact")
    } else {
        let mut merged = vec![0.0f64; n];
        let mut var_sum = vec![0.0f64; n];
        for c in 0..cfg.chains {
            let chain_cfg = cfg.chain_config(task_seed(sub, 1 + c as u64), CHAIN_INITS[c % 3]);
            let est = estimate_posterior_t(&xs, alpha, &chain_cfg)
                .map_err(|e| anyhow!(e))
                .with_context(|| format!("gibbs chain {c} at n={n}, replicate {rep}"))?;
            for t in 0..n {
                merged[t] += est.probs()[t];
                var_sum[t] += est.std_errors()[t] * est.std_errors()[t];
            }
        }
        let c = cfg.chains as f64;
        for m in merged.iter_mut() {
            *m /= c;
        }
        let mut mode = 0usize;
        for (i, &p) in merged.iter().enumerate() {
            if p > merged[mode] {
                mode = i;
            }
        }
        let p2 = if n >= 2 { merged[1] } else { 0.0 };
        (merged[0], p2, mode + 1, var_sum[0].sqrt() / c, "gibbs")
    };

    Ok(TrendRow {
        n,
        replicate: rep,
        seed: sub,
        engine,
        p_t1,
        p_t2,
        t_mode,
        xbar,
        mc_se,
    })
}

/// Render rows as CSV (header + one line per row). Floats print in Rust's
/// shortest-roundtrip form, so output is byte-stable.
pub fn render_csv(rows: &[TrendRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.n, r.replicate, r.seed, r.engine, r.p_t1, r.p_t2, r.t_mode, r.xbar, r.mc_se
        ));
    }
    out
}
