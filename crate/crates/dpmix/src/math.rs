//! Small numerical helpers shared across the crate. Everything that can
//! overflow in linear domain is kept in log domain.

/// ln(2π), the normalizing constant of the standard normal log-density.
pub const LOG_2PI: f64 = 1.837877066409345483560659472811;

/// log Γ(x); thin wrapper so the gamma dependency stays in one place.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// log n! via log-gamma.
#[inline]
pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// log C(n, k) via log-gamma; 0 ≤ k ≤ n required.
#[inline]
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// log(Σ exp(w_i)) over a slice, safe against overflow; empty input gives −∞.
pub fn log_sum_exp(ws: &[f64]) -> f64 {
    let mut acc = LogSumAcc::new();
    for &w in ws {
        acc.add(w);
    }
    acc.total()
}

/// Streaming log-sum-exp accumulator with a running maximum and Neumaier
/// compensation. Exact enumeration folds millions of log-weights into a
/// handful of totals that downstream identities check at 1e-12, so naive
/// accumulation error is not acceptable.
#[derive(Debug, Clone)]
pub struct LogSumAcc {
    max: f64,
    sum: f64,
    comp: f64,
    count: u64,
}

impl LogSumAcc {
    pub fn new() -> Self {
        LogSumAcc {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
            count: 0,
        }
    }

    /// Fold in one log-domain term.
    pub fn add(&mut self, w: f64) {
        if w == f64::NEG_INFINITY {
            return;
        }
        self.count += 1;
        if w > self.max {
            // Rescale the accumulated sum to the new reference point.
            if self.max > f64::NEG_INFINITY {
                let scale = (self.max - w).exp();
                self.sum = (self.sum + self.comp) * scale;
                self.comp = 0.0;
            }
            self.max = w;
        }
        let term = (w - self.max).exp();
        let t = self.sum + term;
        // Neumaier compensation: recover the low-order bits lost in `t`.
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
    }

    /// Number of finite terms folded in so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// log of the accumulated sum; −∞ if nothing was added.
    pub fn total(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + (self.sum + self.comp).ln()
        }
    }
}

impl Default for LogSumAcc {
    fn default() -> Self {
        Self::new()
    }
}

/// Neumaier-compensated linear-domain sum, for oracle-style checks that add
/// many small probabilities and compare against 1 at tight tolerance.
#[derive(Debug, Clone, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_small() {
        let ws: [f64; 4] = [-1.0, 0.5, 0.2, -3.0];
        let direct: f64 = ws.iter().map(|w| w.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&ws) - direct).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_handles_large_offsets() {
        // exp(1000) overflows; the shifted computation must not.
        let ws = [1000.0, 1000.0];
        let expected = 1000.0 + 2.0f64.ln();
        assert!((log_sum_exp(&ws) - expected).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_empty_is_neg_inf() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        let mut acc = LogSumAcc::new();
        acc.add(f64::NEG_INFINITY);
        assert_eq!(acc.total(), f64::NEG_INFINITY);
        assert_eq!(acc.count(), 0);
    }

    #[test]
    fn ln_factorial_small_values() {
        assert!((ln_factorial(0) - 0.0).abs() < 1e-15);
        assert!((ln_factorial(3) - 6.0f64.ln()).abs() < 1e-12);
        assert!((ln_factorial(10) - 3628800.0f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn ln_binomial_small_values() {
        assert!((ln_binomial(5, 2) - 10.0f64.ln()).abs() < 1e-12);
        assert!((ln_binomial(4, 0) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        // 1 followed by many tiny terms: naive summation loses them entirely.
        let tiny = 1e-17;
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..1_000_000 {
            acc.add(tiny);
        }
        let expected = 1.0 + 1e-11;
        assert!((acc.total() - expected).abs() < 1e-13);
    }
}
