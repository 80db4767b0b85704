//! Special functions used by the kernel diagonals and the statistics.
//!
//! Regularized incomplete gamma/beta and `erf` come from `statrs`; the
//! log-factorial table and the Poisson/binomial cumulative sums used as
//! oracles are computed here.

use statrs::function::{beta, erf, gamma};

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma::gamma_ur(a, x)
}

/// Regularized lower incomplete gamma `P(a, x) = 1 - Q(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma::gamma_lr(a, x)
}

/// `P(Poisson(lambda) <= n)`, equal to `Q(n + 1, lambda)`.
pub fn poisson_cdf(n: u64, lambda: f64) -> f64 {
    gamma_q(n as f64 + 1.0, lambda)
}

/// `P(Binomial(n, t) <= k)`.
pub fn binomial_cdf(n: u64, t: f64, k: u64) -> f64 {
    if k >= n || t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    // P(X <= k) = I_{1-t}(n - k, k + 1)
    beta::beta_reg((n - k) as f64, k as f64 + 1.0, 1.0 - t)
}

pub fn erf(x: f64) -> f64 {
    erf::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    erf::erfc(x)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Table of `ln k!` for `k = 0..=n`, accumulated exactly from logs.
#[derive(Debug, Clone)]
pub struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub fn new(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        table.push(0.0);
        // Summing logs drifts by ~n ulps; above a few hundred terms Stirling is sharper.
        for k in 1..=n {
            if k < 256 {
                let prev = table[k - 1];
                table.push(prev + (k as f64).ln());
            } else {
                table.push(ln_gamma(k as f64 + 1.0));
            }
        }
        Self { table }
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        match self.table.get(k) {
            Some(v) => *v,
            None => ln_gamma(k as f64 + 1.0),
        }
    }

    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        self.get(n) - self.get(k) - self.get(n - k)
    }
}

/// `∫_{-∞}^{x} e^{-c t²} dt` for `c > 0`.
pub fn gaussian_integral_below(c: f64, x: f64) -> f64 {
    let half_mass = 0.5 * (std::f64::consts::PI / c).sqrt();
    half_mass * erfc(-c.sqrt() * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_cdf_direct(n: u64, lambda: f64) -> f64 {
        // Terms summed in log space from k = 0 upward.
        let mut acc = 0.0;
        let mut ln_fact = 0.0;
        for k in 0..=n {
            if k > 0 {
                ln_fact += (k as f64).ln();
            }
            acc += (k as f64 * lambda.ln() - lambda - ln_fact).exp();
        }
        acc
    }

    fn binomial_cdf_direct(n: u64, t: f64, k: u64) -> f64 {
        let lf = LnFactorials::new(n as usize);
        (0..=k)
            .map(|j| {
                (lf.ln_binomial(n as usize, j as usize)
                    + j as f64 * t.ln()
                    + (n - j) as f64 * (1.0 - t).ln())
                .exp()
            })
            .sum()
    }

    #[test]
    fn poisson_cdf_matches_direct_summation() {
        for &(n, lambda) in &[(100u64, 100.0), (50, 30.0), (400, 380.0), (10, 0.5)] {
            let a = poisson_cdf(n, lambda);
            let b = poisson_cdf_direct(n, lambda);
            assert!((a - b).abs() <= 5e-12 * b, "n={n} λ={lambda}: {a} vs {b}");
        }
        // P(Poisson(100) <= 100) ≈ 0.5266
        assert!((poisson_cdf(100, 100.0) - 0.526_562_198_53).abs() < 1e-10);
    }

    #[test]
    fn binomial_cdf_matches_direct_summation() {
        for &(n, t, k) in &[(10u64, 0.5, 5u64), (40, 0.3, 20), (40, 0.7, 20), (200, 0.5, 100)] {
            let a = binomial_cdf(n, t, k);
            let b = binomial_cdf_direct(n, t, k);
            assert!((a - b).abs() <= 1e-11 * b, "n={n} t={t} k={k}: {a} vs {b}");
        }
        assert_eq!(binomial_cdf(10, 0.0, 5), 1.0);
        assert_eq!(binomial_cdf(10, 0.3, 10), 1.0);
    }

    #[test]
    fn ln_factorial_table() {
        let lf = LnFactorials::new(1000);
        assert_eq!(lf.get(0), 0.0);
        assert!((lf.get(5) - 120f64.ln()).abs() < 1e-14);
        assert!((lf.get(600) - ln_gamma(601.0)).abs() < 1e-10);
        assert!((lf.ln_binomial(4, 2) - 6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn gaussian_half_integral() {
        let c = 2.0 * std::f64::consts::PI;
        assert!((gaussian_integral_below(c, 0.0) - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!((gaussian_integral_below(c, 6.0) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }
}
