//! Euler–Maclaurin summation over `N` and the shifted-Gaussian lattice sums
//! that connect equivariant kernels to the partial kernel.
//!
//! Brute-force lattice sums are the ground truth here; the Euler–Maclaurin
//! predictions are what gets tested against them.

use std::f64::consts::PI;

use thiserror::Error;

use crate::special;

/// Highest tabulated order `r` (coefficients `a_0 .. a_{r-1}`).
pub const MAX_ORDER: usize = 8;

/// Default tail cutoff of the brute sums, in standard deviations of `e^{-2πt²}`.
pub const DEFAULT_CUTOFF_SIGMAS: f64 = 16.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmError {
    #[error("Euler-Maclaurin order {0} exceeds the tabulated maximum {MAX_ORDER}")]
    OrderTooLarge(usize),
}

/// Bernoulli numbers `B_0 ..= B_n` with the `B_1 = -1/2` convention.
pub fn bernoulli_numbers(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    for m in 1..=n {
        // Σ_{k=0}^{m} C(m+1, k) B_k = 0
        let mut binom = 1.0;
        let mut acc = 0.0;
        for (k, bk) in b.iter().enumerate().take(m) {
            acc += binom * bk;
            binom = binom * (m + 1 - k) as f64 / (k + 1) as f64;
        }
        b[m] = -acc / (m + 1) as f64;
    }
    b
}

/// Coefficients `a_j` of `Σ_{m≥0} f(m) = ∫₀^∞ f + Σ_j a_j f^{(j)}(0) + R_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmCoefficients {
    order: usize,
    a: Vec<f64>,
}

impl EmCoefficients {
    pub fn new(order: usize) -> Result<Self, EmError> {
        if order > MAX_ORDER {
            return Err(EmError::OrderTooLarge(order));
        }
        let b = bernoulli_numbers(order + 1);
        let mut fact = 1.0;
        let a = (0..order)
            .map(|j| {
                fact *= (j + 1) as f64;
                -b[j + 1] / fact
            })
            .collect();
        Ok(Self { order, a })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.a
    }
}

/// A summand with known half-line integral and derivatives at the origin.
pub trait EmSummand {
    fn value(&self, t: f64) -> f64;
    /// `∫₀^∞ f(t) dt`.
    fn half_line_integral(&self) -> f64;
    fn derivative_at_zero(&self, order: usize) -> f64;
}

/// `∫₀^∞ f + Σ_{j<r} a_j f^{(j)}(0)`; the remainder is the caller's to bound.
pub fn em_sum<F: EmSummand + ?Sized>(f: &F, order: usize) -> Result<f64, EmError> {
    let coeffs = EmCoefficients::new(order)?;
    Ok(f.half_line_integral()
        + coeffs
            .values()
            .iter()
            .enumerate()
            .map(|(j, a)| a * f.derivative_at_zero(j))
            .sum::<f64>())
}

/// `e^{-c t}`.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialDecay {
    pub rate: f64,
}

impl EmSummand for ExponentialDecay {
    fn value(&self, t: f64) -> f64 {
        (-self.rate * t).exp()
    }

    fn half_line_integral(&self) -> f64 {
        1.0 / self.rate
    }

    fn derivative_at_zero(&self, order: usize) -> f64 {
        (-self.rate).powi(order as i32)
    }
}

/// `t ↦ e^{-2π(v - t/(a√p))²}`, the summand of the half-line Gaussian sums.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedGaussian {
    pub v: f64,
    /// Lattice density `a√p`.
    pub density: f64,
}

impl ShiftedGaussian {
    pub fn new(v: f64, a: f64, p: f64) -> Self {
        Self { v, density: a * p.sqrt() }
    }
}

impl EmSummand for ShiftedGaussian {
    fn value(&self, t: f64) -> f64 {
        (-2.0 * PI * (self.v - t / self.density).powi(2)).exp()
    }

    fn half_line_integral(&self) -> f64 {
        self.density * special::gaussian_integral_below(2.0 * PI, self.v)
    }

    fn derivative_at_zero(&self, order: usize) -> f64 {
        // d^j/ds^j e^{-cs²} = (-√c)^j H_j(√c s) e^{-cs²}, and d/dt = -(1/density) d/ds.
        let c = 2.0 * PI;
        let x = c.sqrt() * self.v;
        let (mut h_prev, mut h) = (0.0, 1.0);
        for n in 0..order {
            let next = 2.0 * x * h - 2.0 * n as f64 * h_prev;
            h_prev = h;
            h = next;
        }
        let scale = (c.sqrt() / self.density).powi(order as i32);
        scale * h * (-c * self.v * self.v).exp()
    }
}

/// Standard deviation of `e^{-2πt²}`.
const SIGMA: f64 = 0.282_094_791_773_878_14; // 1/(2√π)

fn lattice_range(lo: f64, hi: f64) -> Option<(u64, u64)> {
    if hi < 0.0 {
        return None;
    }
    let start = lo.ceil().max(0.0) as u64;
    let end = hi.floor() as u64;
    (start <= end).then_some((start, end))
}

/// Brute `Σ_{m∈N} e^{-2π(v - m/(a√p))²}` with the default tail cutoff.
pub fn gaussian_halfline_sum(v: f64, a: f64, p: f64) -> f64 {
    gaussian_moment_sum_with_cutoff(v, a, p, 0, DEFAULT_CUTOFF_SIGMAS)
}

pub fn gaussian_halfline_sum_with_cutoff(v: f64, a: f64, p: f64, sigmas: f64) -> f64 {
    gaussian_moment_sum_with_cutoff(v, a, p, 0, sigmas)
}

/// Leading term `a√p ∫_{-∞}^v e^{-2πt²} dt` of the half-line sum.
pub fn halfline_leading(v: f64, a: f64, p: f64) -> f64 {
    a * p.sqrt() * special::gaussian_integral_below(2.0 * PI, v)
}

/// Boundary correction `a_0 f(0) = ½ e^{-2πv²}`.
pub fn halfline_boundary_correction(v: f64) -> f64 {
    0.5 * (-2.0 * PI * v * v).exp()
}

/// Brute `Σ_{m∈N} (m/√p)^k e^{-2π(v - m/(a√p))²}`.
pub fn gaussian_moment_sum(v: f64, a: f64, p: f64, k: u32) -> f64 {
    gaussian_moment_sum_with_cutoff(v, a, p, k, DEFAULT_CUTOFF_SIGMAS)
}

pub fn gaussian_moment_sum_with_cutoff(v: f64, a: f64, p: f64, k: u32, sigmas: f64) -> f64 {
    let density = a * p.sqrt();
    let Some((start, end)) = lattice_range(density * (v - sigmas * SIGMA), density * (v + sigmas * SIGMA))
    else {
        return 0.0;
    };
    let sqrt_p = p.sqrt();
    (start..=end)
        .map(|m| {
            let mf = m as f64;
            let g = (-2.0 * PI * (v - mf / density).powi(2)).exp();
            if k == 0 {
                g
            } else {
                (mf / sqrt_p).powi(k as i32) * g
            }
        })
        .sum()
}

/// `∫_{-∞}^{v} t^j e^{-ct²} dt` for `j = 0..=k`.
fn truncated_gaussian_moments(c: f64, v: f64, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let e = (-c * v * v).exp();
    out.push(special::gaussian_integral_below(c, v));
    if k >= 1 {
        out.push(-e / (2.0 * c));
    }
    for j in 2..=k {
        let prev = out[j - 2];
        out.push((j - 1) as f64 / (2.0 * c) * prev - v.powi(j as i32 - 1) * e / (2.0 * c));
    }
    out
}

/// Leading term `a^{k+1}√p ∫_{-∞}^v (v - t)^k e^{-2πt²} dt` of the moment sum.
pub fn moment_leading(v: f64, a: f64, p: f64, k: u32) -> f64 {
    let k = k as usize;
    let moments = truncated_gaussian_moments(2.0 * PI, v, k);
    let mut binom = 1.0;
    let mut integral = 0.0;
    for (j, mj) in moments.iter().enumerate() {
        integral += binom * v.powi((k - j) as i32) * if j % 2 == 0 { *mj } else { -*mj };
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    a.powi(k as i32 + 1) * p.sqrt() * integral
}

/// Brute left side of the paired-Gaussian identity:
/// `Σ_m e^{-2π[(v - m/A)² + (v - (m-k)/A)²]} - Σ_m e^{-4π(v - m/A)²}`, `A = a√p`.
pub fn paired_gaussian_difference(v: f64, a: f64, p: f64, k: i64) -> f64 {
    paired_gaussian_difference_with_cutoff(v, a, p, k, DEFAULT_CUTOFF_SIGMAS)
}

pub fn paired_gaussian_difference_with_cutoff(v: f64, a: f64, p: f64, k: i64, sigmas: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let density = a * p.sqrt();
    let kf = k as f64;
    let lo = density * (v - sigmas * SIGMA) + kf.min(0.0);
    let hi = density * (v + sigmas * SIGMA) + kf.max(0.0);
    let Some((start, end)) = lattice_range(lo, hi) else {
        return 0.0;
    };
    (start..=end)
        .map(|m| {
            let mf = m as f64;
            let d0 = v - mf / density;
            let d1 = v - (mf - kf) / density;
            (-2.0 * PI * (d0 * d0 + d1 * d1)).exp() - (-4.0 * PI * d0 * d0).exp()
        })
        .sum()
}

/// Predicted value `(k/2) e^{-4πv²}`.
pub fn paired_gaussian_prediction(v: f64, k: i64) -> f64 {
    0.5 * k as f64 * (-4.0 * PI * v * v).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_follow_bernoulli_numbers() {
        let c = EmCoefficients::new(8).unwrap();
        let a = c.values();
        assert_eq!(a.len(), 8);
        assert!((a[0] - 0.5).abs() < 1e-16);
        assert!((a[1] + 1.0 / 12.0).abs() < 1e-16);
        assert!(a[2].abs() < 1e-16);
        assert!((a[3] - 1.0 / 720.0).abs() < 1e-17);
        assert!((a[5] + 1.0 / 30240.0).abs() < 1e-18);
        assert!((a[7] - 1.0 / 1_209_600.0).abs() < 1e-19);
        assert_eq!(EmCoefficients::new(9), Err(EmError::OrderTooLarge(9)));
    }

    #[test]
    fn exponential_sum_at_order_two() {
        let f = ExponentialDecay { rate: 1.0 };
        let em = em_sum(&f, 2).unwrap();
        assert!((em - (1.0 + 0.5 + 1.0 / 12.0)).abs() < 1e-15);
        let brute = 1.0 / (1.0 - (-1.0f64).exp());
        // Next nonzero term is a_3 f'''(0) = -1/720.
        assert!((em - brute).abs() < 2.0 / 720.0);
        let em8 = em_sum(&f, 8).unwrap();
        assert!((em8 - brute).abs() < 1e-6);
    }

    #[test]
    fn zero_function_sums_to_zero() {
        struct Zero;
        impl EmSummand for Zero {
            fn value(&self, _: f64) -> f64 {
                0.0
            }
            fn half_line_integral(&self) -> f64 {
                0.0
            }
            fn derivative_at_zero(&self, _: usize) -> f64 {
                0.0
            }
        }
        assert_eq!(em_sum(&Zero, 5).unwrap(), 0.0);
    }

    #[test]
    fn shifted_gaussian_derivatives_match_finite_differences() {
        let g = ShiftedGaussian::new(0.3, 1.2, 4.0);
        let h = 1e-3;
        let d1 = (g.value(h) - g.value(-h)) / (2.0 * h);
        let d2 = (g.value(h) - 2.0 * g.value(0.0) + g.value(-h)) / (h * h);
        assert!((g.derivative_at_zero(0) - g.value(0.0)).abs() < 1e-15);
        assert!((g.derivative_at_zero(1) - d1).abs() < 1e-6);
        assert!((g.derivative_at_zero(2) - d2).abs() < 1e-4);
    }

    #[test]
    fn em_reproduces_halfline_gaussian_sum() {
        for &(v, p) in &[(0.5, 100.0), (0.0, 400.0), (-0.4, 400.0)] {
            let g = ShiftedGaussian::new(v, 1.0, p);
            let brute = gaussian_halfline_sum(v, 1.0, p);
            let em = em_sum(&g, 8).unwrap();
            assert!((em - brute).abs() < 1e-9 * brute.max(1.0), "v={v} p={p}: {em} vs {brute}");
        }
    }

    #[test]
    fn halfline_sum_examples() {
        assert!(gaussian_halfline_sum(-5.0, 1.0, 100.0) < 1e-15);
        let p = 1e4;
        let brute = gaussian_halfline_sum(1.0, 1.0, p);
        let lead = halfline_leading(1.0, 1.0, p);
        assert!((brute - lead).abs() / lead < 1e-2);
        for p in [100.0, 1e3, 1e4] {
            let dev = gaussian_halfline_sum(0.0, 1.0, p) - p.sqrt() / (2.0 * 2f64.sqrt());
            assert!(dev.abs() <= 0.6);
        }
    }

    #[test]
    fn moment_sums() {
        for v in [-0.5, 0.0, 0.7] {
            let a = gaussian_moment_sum(v, 1.3, 300.0, 0);
            let b = gaussian_halfline_sum(v, 1.3, 300.0);
            assert_eq!(a, b);
        }
        let brute = gaussian_moment_sum(2.0, 1.0, 1e4, 1);
        let lead = moment_leading(2.0, 1.0, 1e4, 1);
        assert!((brute / lead - 1.0).abs() < 0.02);

        let ratios: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&p| gaussian_moment_sum(0.5, 1.0, p, 2) / moment_leading(0.5, 1.0, p, 2))
            .collect();
        let gaps: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{ratios:?}");
    }

    #[test]
    fn moment_leading_matches_quadrature() {
        // Composite midpoint rule on (v - 8, v); independent of the moment recurrence.
        for &(v, k) in &[(0.3f64, 1u32), (-0.2, 2), (1.0, 3)] {
            let n = 200_000;
            let lo = v - 8.0;
            let h = (v - lo) / n as f64;
            let q: f64 = (0..n)
                .map(|i| {
                    let t = lo + (i as f64 + 0.5) * h;
                    (v - t).powi(k as i32) * (-2.0 * PI * t * t).exp() * h
                })
                .sum();
            let lead = moment_leading(v, 1.0, 1.0, k);
            assert!((q - lead).abs() < 1e-9, "v={v} k={k}: {q} vs {lead}");
        }
    }

    #[test]
    fn paired_difference_examples() {
        assert_eq!(paired_gaussian_difference(0.3, 1.0, 1e4, 0), 0.0);
        let lhs = paired_gaussian_difference(0.0, 1.0, 1e4, 3);
        assert!((lhs - 1.5).abs() <= 3.0 * 9.0 / 100.0);
        for p in [1e3, 1e4] {
            for k in -5i64..=5 {
                let lhs = paired_gaussian_difference(0.0, 1.0, p, k);
                assert_eq!(lhs.signum(), (k as f64).signum(), "p={p} k={k}");
            }
        }
    }

    #[test]
    fn tail_cutoffs_agree() {
        for &(v, a, p) in &[(0.0, 1.0, 100.0), (0.8, 0.7, 1e4), (-0.3, 1.5, 1e3)] {
            let s12 = gaussian_halfline_sum_with_cutoff(v, a, p, 12.0);
            let s16 = gaussian_halfline_sum_with_cutoff(v, a, p, 16.0);
            assert!((s12 - s16).abs() <= 1e-13 * s16.abs());
            for k in [1u32, 3] {
                let m12 = gaussian_moment_sum_with_cutoff(v, a, p, k, 12.0);
                let m16 = gaussian_moment_sum_with_cutoff(v, a, p, k, 16.0);
                assert!((m12 - m16).abs() <= 1e-13 * m16.abs());
            }
            let d12 = paired_gaussian_difference_with_cutoff(v, a, p, 2, 12.0);
            let d16 = paired_gaussian_difference_with_cutoff(v, a, p, 2, 16.0);
            assert!((d12 - d16).abs() <= 1e-13 * d16.abs().max(1e-300));
        }
    }
}
