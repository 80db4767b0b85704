//! Closed-form full, equivariant and partial Bergman kernels.
//!
//! All kernels are returned in the unit-frame trivialization: both fiber
//! weights are folded in, so `|K(x, y)|` is the pointwise norm and the
//! values are plain complex numbers.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::{GeometryError, ModelGeometry, ModelKind, Point, SectionBasis};
use crate::special;

pub type KernelValue = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("circle quadrature needs at least {required} nodes, got {given}")]
    InsufficientNodes { required: usize, given: usize },
    #[error("decay fit needs at least 4 powers, got {0}")]
    TooFewPowers(usize),
    #[error("decay fit is degenerate: {0}")]
    DegenerateFit(&'static str),
}

/// Relative size below which series terms are dropped.
const SERIES_CUTOFF: f64 = 1e-18;

/// Kernel evaluator for one model at one power `p`.
#[derive(Debug, Clone)]
pub struct Kernels {
    model: ModelGeometry,
    p: u32,
    basis: SectionBasis,
}

impl Kernels {
    pub fn new(model: &ModelGeometry, p: u32) -> Result<Self, KernelError> {
        let basis = model.section_basis(p)?;
        Ok(Self { model: model.clone(), p, basis })
    }

    pub fn model(&self) -> &ModelGeometry {
        &self.model
    }

    pub fn power(&self) -> u32 {
        self.p
    }

    pub fn basis(&self) -> &SectionBasis {
        &self.basis
    }

    /// `N_p`.
    pub fn rank(&self) -> usize {
        self.basis.dimension()
    }

    #[inline]
    fn log_weights(&self, x: Point, y: Point) -> f64 {
        self.model.log_fiber_weight(self.p, x) + self.model.log_fiber_weight(self.p, y)
    }

    /// Bergman kernel of the whole space of `L²` holomorphic sections.
    pub fn full(&self, x: Point, y: Point) -> KernelValue {
        let p = self.p as f64;
        let zeta = x.z() * y.z().conj();
        let lw = self.log_weights(x, y);
        match self.model.kind() {
            ModelKind::Plane => (Complex64::new(p.ln() + lw, 0.0) + zeta * (p * PI)).exp(),
            ModelKind::ProjectiveLine => {
                let base = Complex64::new(1.0, 0.0) + zeta;
                if base.norm_sqr() == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                // (1 + ζ)^p with integer p, so the branch of ln is irrelevant.
                (Complex64::new((p + 1.0).ln() + lw, 0.0) + base.ln() * p).exp()
            }
        }
    }

    /// Diagonal of the full kernel, constant on both models.
    pub fn full_diag(&self) -> f64 {
        match self.model.kind() {
            ModelKind::Plane => self.p as f64,
            ModelKind::ProjectiveLine => self.p as f64 + 1.0,
        }
    }

    /// Kernel of the projection onto the weight-`m` space, a single monomial term.
    pub fn equivariant(&self, m: i64, x: Point, y: Point) -> KernelValue {
        let Some(k) = self.basis.degree_of_weight(m) else {
            return Complex64::new(0.0, 0.0);
        };
        self.monomial_term(k, x, y)
    }

    fn monomial_term(&self, k: usize, x: Point, y: Point) -> Complex64 {
        let zeta = x.z() * y.z().conj();
        let lw = self.log_weights(x, y);
        let lc = self.basis.log_norm_sq(k);
        if zeta.norm_sqr() == 0.0 {
            return if k == 0 {
                Complex64::new((lc + lw).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let log_mag = lc + k as f64 * zeta.norm().ln() + lw;
        Complex64::from_polar(log_mag.exp(), k as f64 * zeta.arg())
    }

    /// Direct trapezoid quadrature of the circle average defining the
    /// equivariant kernel; an independent check of [`Kernels::equivariant`].
    pub fn averaged_equivariant_oracle(
        &self,
        m: i64,
        x: Point,
        y: Point,
        n_nodes: usize,
    ) -> Result<KernelValue, KernelError> {
        let required = 4 * (self.p as usize + m.unsigned_abs() as usize);
        if n_nodes < required {
            return Err(KernelError::InsufficientNodes { required, given: n_nodes });
        }
        // The lift acts on the unit frame by e^{-2πi t shift}.
        let freq = (m + self.basis.shift() as i64) as f64;
        let sum: Complex64 = (0..n_nodes)
            .map(|j| {
                let t = j as f64 / n_nodes as f64;
                let phase = Complex64::from_polar(1.0, -2.0 * PI * t * freq);
                phase * self.full(self.model.rotate(x, t), y)
            })
            .sum();
        Ok(sum / n_nodes as f64)
    }

    /// `Σ_m P^{(m)}` over all weights, truncated on the plane where the
    /// Poisson tail of the remaining degrees is below `1e-14` relative.
    pub fn weight_sum(&self, x: Point, y: Point) -> KernelValue {
        let shift = self.basis.shift() as i64;
        let max_degree = match self.basis.max_degree() {
            Some(d) => d,
            None => {
                let a = self.p as f64 * PI * x.norm() * y.norm();
                (a + 12.0 * (a + 1.0).sqrt() + 40.0).floor() as usize
            }
        };
        (0..=max_degree as i64).map(|k| self.equivariant(k - shift, x, y)).sum()
    }

    /// Partial Bergman kernel: projection onto the nonpositive weights.
    pub fn partial(&self, x: Point, y: Point) -> KernelValue {
        let kmax = self.basis.shift() as usize;
        let rho = (x.z() * y.z().conj()).norm();
        if rho > 0.0 {
            // Deep inside the droplet the omitted degrees sit more than ten
            // standard deviations above the peak term.
            let peak = self.basis.peak_degree(rho) as f64;
            if peak + 10.0 * (peak + 1.0).sqrt() + 10.0 < kmax as f64 {
                return self.full(x, y);
            }
        }
        self.truncated_series(x, y, kmax)
    }

    /// `Σ_{k ≤ kmax} c_k² ζ^k w(x) w(y)`, summed from the largest term outward.
    fn truncated_series(&self, x: Point, y: Point, kmax: usize) -> Complex64 {
        let zeta = x.z() * y.z().conj();
        let rho = zeta.norm();
        if rho == 0.0 {
            return self.monomial_term(0, x, y);
        }
        let peak = self.basis.peak_degree(rho).min(kmax);
        let top = self.monomial_term(peak, x, y);
        let top_norm = top.norm();
        if top_norm == 0.0 {
            return top;
        }
        let floor = top_norm * SERIES_CUTOFF;
        let mut sum = top;
        let mut cur = top;
        for k in peak..kmax {
            cur *= zeta * self.basis.norm_sq_ratio(k);
            sum += cur;
            if cur.norm() < floor {
                break;
            }
        }
        let mut cur = top;
        for k in (0..peak).rev() {
            cur /= zeta * self.basis.norm_sq_ratio(k);
            sum += cur;
            if cur.norm() < floor {
                break;
            }
        }
        sum
    }

    /// Partial kernel on the diagonal through the incomplete gamma / binomial CDF.
    pub fn partial_diag(&self, x: Point) -> f64 {
        partial_diag_at_r2(&self.model, self.p, self.basis.shift(), x.norm_sqr())
    }
}

/// Partial kernel diagonal as a function of `|z|²` only.
pub(crate) fn partial_diag_at_r2(model: &ModelGeometry, p: u32, shift: u32, r2: f64) -> f64 {
    let pf = p as f64;
    match model.kind() {
        ModelKind::Plane => pf * special::gamma_q(pf + 1.0, pf * PI * r2),
        ModelKind::ProjectiveLine => {
            let t = r2 / (1.0 + r2);
            (pf + 1.0) * special::binomial_cdf(p as u64, t, shift as u64)
        }
    }
}

/// Riemannian distance between two points of the model.
pub fn geodesic_distance(model: &ModelGeometry, x: Point, y: Point) -> f64 {
    match model.kind() {
        ModelKind::Plane => (x.z() - y.z()).norm(),
        ModelKind::ProjectiveLine => {
            let num = (x.z() - y.z()).norm();
            let den = (Complex64::new(1.0, 0.0) + x.z() * y.z().conj()).norm();
            num.atan2(den) / PI.sqrt()
        }
    }
}

/// Least-squares slope of `ln|P_p(x, y)| - n ln p` against `√p d(x, y)`
/// over the given powers. The off-diagonal decay bound says this is negative.
pub fn decay_rate_fit(
    model: &ModelGeometry,
    x: Point,
    y: Point,
    p_list: &[u32],
) -> Result<f64, KernelError> {
    if p_list.len() < 4 {
        return Err(KernelError::TooFewPowers(p_list.len()));
    }
    let d = geodesic_distance(model, x, y);
    if d == 0.0 {
        return Err(KernelError::DegenerateFit("x and y coincide"));
    }
    let mut pts = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let k = Kernels::new(model, p)?;
        let value = k.full(x, y).norm();
        if value == 0.0 {
            return Err(KernelError::DegenerateFit("kernel underflowed"));
        }
        pts.push(((p as f64).sqrt() * d, value.ln() - (p as f64).ln()));
    }
    least_squares_slope(&pts).ok_or(KernelError::DegenerateFit("all abscissae equal"))
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
