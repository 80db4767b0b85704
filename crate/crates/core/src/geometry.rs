//! The two model geometries: the Bargmann–Fock plane and the Fubini–Study
//! projective line, each with its circle action, Kostant moment map, volume
//! form and orthonormal monomial basis of holomorphic sections.
//!
//! Everything is expressed in the affine chart containing `z = 0`. Sections
//! are handled in the unit-frame trivialization, so a section of `L^p` is the
//! complex function `f(z) · w_p(z)` where `w_p` is [`ModelGeometry::fiber_weight`].

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::special::LnFactorials;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("power p must be at least 1")]
    ZeroPower,
    #[error("weight shift s = {shift} is invalid at power p = {p} (need s <= p)")]
    InvalidShift { shift: u32, p: u32 },
}

/// A point of the model, given by its affine chart coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point(pub Complex64);

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point(Complex64::new(x, y))
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Point(Complex64::from_polar(r, theta))
    }

    #[inline]
    pub fn z(self) -> Complex64 {
        self.0
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.0.norm_sqr()
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.0.norm()
    }
}

impl From<Complex64> for Point {
    fn from(z: Complex64) -> Self {
        Point(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// `C` with the flat metric and weight `e^{-π|z|²}`.
    Plane,
    /// `CP¹` with the Fubini–Study form of total volume 1.
    ProjectiveLine,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Plane => f.write_str("plane"),
            ModelKind::ProjectiveLine => f.write_str("projective_line"),
        }
    }
}

/// A prequantized Kähler model with a Hamiltonian circle action.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGeometry {
    kind: ModelKind,
    weight_shift: Option<u32>,
    description: String,
}

impl ModelGeometry {
    /// Bargmann–Fock plane; the nonpositive-weight sections span the Ginibre ensemble.
    pub fn plane() -> Self {
        Self {
            kind: ModelKind::Plane,
            weight_shift: None,
            description: "Bargmann-Fock plane, mu = pi|z|^2 - 1".to_string(),
        }
    }

    /// Projective line with the default shift `s = ⌊p/2⌋`.
    pub fn projective_line() -> Self {
        Self {
            kind: ModelKind::ProjectiveLine,
            weight_shift: None,
            description: "Fubini-Study projective line, shift floor(p/2)".to_string(),
        }
    }

    /// Projective line whose weight vanishes at monomial degree `shift`.
    pub fn projective_line_with_shift(shift: u32) -> Self {
        Self {
            kind: ModelKind::ProjectiveLine,
            weight_shift: Some(shift),
            description: format!("Fubini-Study projective line, shift {shift}"),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn weight_shift(&self) -> Option<u32> {
        self.weight_shift
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Monomial degree at which the circle weight is zero, at power `p`.
    pub fn shift(&self, p: u32) -> Result<u32, GeometryError> {
        if p == 0 {
            return Err(GeometryError::ZeroPower);
        }
        match self.kind {
            ModelKind::Plane => Ok(p),
            ModelKind::ProjectiveLine => {
                let s = self.weight_shift.unwrap_or(p / 2);
                if s > p {
                    Err(GeometryError::InvalidShift { shift: s, p })
                } else {
                    Ok(s)
                }
            }
        }
    }

    /// `N_p`, the number of nonpositive weights, i.e. the rank of the partial projection.
    pub fn dimension(&self, p: u32) -> Result<usize, GeometryError> {
        Ok(self.shift(p)? as usize + 1)
    }

    fn shift_ratio(&self, p: u32) -> f64 {
        let s = self.weight_shift.unwrap_or(p / 2);
        s as f64 / p.max(1) as f64
    }

    /// Kostant moment map; its sublevel set `{μ < 0}` is the droplet.
    ///
    /// The plane ignores `p`. On the projective line the latitude
    /// `|z|²/(1+|z|²)` is shifted by `s/p`.
    pub fn moment_map(&self, p: u32, x: Point) -> f64 {
        let r2 = x.norm_sqr();
        match self.kind {
            ModelKind::Plane => PI * r2 - 1.0,
            ModelKind::ProjectiveLine => r2 / (1.0 + r2) - self.shift_ratio(p),
        }
    }

    /// Riemannian norm of the fundamental vector field of the rotation.
    pub fn fundamental_field_norm(&self, x: Point) -> f64 {
        let r = x.norm();
        match self.kind {
            ModelKind::Plane => 2.0 * PI * r,
            ModelKind::ProjectiveLine => 2.0 * PI.sqrt() * r / (1.0 + r * r),
        }
    }

    /// The circle flow `z ↦ e^{2πit} z`.
    pub fn rotate(&self, x: Point, t: f64) -> Point {
        let (s, c) = (2.0 * PI * t).sin_cos();
        Point(x.0 * Complex64::new(c, s))
    }

    /// Density of the Riemannian volume against Lebesgue measure in the chart.
    ///
    /// Both metrics are conformal to the chart metric with this factor.
    pub fn volume_density(&self, x: Point) -> f64 {
        match self.kind {
            ModelKind::Plane => 1.0,
            ModelKind::ProjectiveLine => {
                let q = 1.0 + x.norm_sqr();
                1.0 / (PI * q * q)
            }
        }
    }

    /// `ln` of the pointwise norm of the unit frame of `L^p`.
    #[inline]
    pub fn log_fiber_weight(&self, p: u32, x: Point) -> f64 {
        let r2 = x.norm_sqr();
        match self.kind {
            ModelKind::Plane => -0.5 * p as f64 * PI * r2,
            ModelKind::ProjectiveLine => -0.5 * p as f64 * r2.ln_1p(),
        }
    }

    pub fn fiber_weight(&self, p: u32, x: Point) -> f64 {
        self.log_fiber_weight(p, x).exp()
    }

    /// Chart radius of the boundary orbit `μ⁻¹(0)`.
    pub fn boundary_radius(&self, p: u32) -> f64 {
        match self.kind {
            ModelKind::Plane => 1.0 / PI.sqrt(),
            ModelKind::ProjectiveLine => {
                let c = self.shift_ratio(p);
                (c / (1.0 - c)).sqrt()
            }
        }
    }

    /// Chart radius where `μ` takes the value `level`, if any.
    pub fn radius_at_level(&self, p: u32, level: f64) -> Option<f64> {
        match self.kind {
            ModelKind::Plane => {
                let r2 = (level + 1.0) / PI;
                (r2 >= 0.0).then(|| r2.sqrt())
            }
            ModelKind::ProjectiveLine => {
                let t = level + self.shift_ratio(p);
                (0.0..1.0).contains(&t).then(|| (t / (1.0 - t)).sqrt())
            }
        }
    }

    /// Volume of the droplet `{μ < 0}`.
    pub fn droplet_volume(&self, p: u32) -> f64 {
        match self.kind {
            ModelKind::Plane => 1.0,
            ModelKind::ProjectiveLine => self.shift_ratio(p),
        }
    }

    pub fn section_basis(&self, p: u32) -> Result<SectionBasis, GeometryError> {
        SectionBasis::new(self, p)
    }
}

/// Orthonormal monomial basis `c_k z^k` of `L²` holomorphic sections of `L^p`.
///
/// Degrees run over `0..` on the plane and `0..=p` on the projective line;
/// degree `k` has circle weight `k - shift`.
#[derive(Debug, Clone)]
pub struct SectionBasis {
    kind: ModelKind,
    p: u32,
    shift: u32,
    /// `ln c_k²` for every degree that is ever needed in closed form.
    log_norm_sq: Vec<f64>,
    ln_fact: LnFactorials,
}

impl SectionBasis {
    fn new(model: &ModelGeometry, p: u32) -> Result<Self, GeometryError> {
        let shift = model.shift(p)?;
        // Plane degrees are unbounded; tabulate generously and fall back to lnΓ.
        let table_len = match model.kind {
            ModelKind::Plane => 4 * p as usize + 64,
            ModelKind::ProjectiveLine => p as usize,
        };
        let ln_fact = LnFactorials::new(table_len);
        let mut basis = Self {
            kind: model.kind,
            p,
            shift,
            log_norm_sq: Vec::with_capacity(table_len + 1),
            ln_fact,
        };
        for k in 0..=table_len {
            let v = basis.compute_log_norm_sq(k);
            basis.log_norm_sq.push(v);
        }
        Ok(basis)
    }

    fn compute_log_norm_sq(&self, k: usize) -> f64 {
        let p = self.p as f64;
        match self.kind {
            ModelKind::Plane => p.ln() + k as f64 * (p * PI).ln() - self.ln_fact.get(k),
            ModelKind::ProjectiveLine => {
                if k > self.p as usize {
                    f64::NEG_INFINITY
                } else {
                    (p + 1.0).ln() + self.ln_fact.ln_binomial(self.p as usize, k)
                }
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn power(&self) -> u32 {
        self.p
    }

    pub fn shift(&self) -> u32 {
        self.shift
    }

    /// Dimension `N_p` of the nonpositive-weight span.
    pub fn dimension(&self) -> usize {
        self.shift as usize + 1
    }

    /// Largest monomial degree that is a section (`None` on the plane).
    pub fn max_degree(&self) -> Option<usize> {
        match self.kind {
            ModelKind::Plane => None,
            ModelKind::ProjectiveLine => Some(self.p as usize),
        }
    }

    pub fn weight_of_degree(&self, k: usize) -> i64 {
        k as i64 - self.shift as i64
    }

    /// Degree carrying weight `m`, if it is a section.
    pub fn degree_of_weight(&self, m: i64) -> Option<usize> {
        let k = m + self.shift as i64;
        if k < 0 {
            return None;
        }
        let k = k as usize;
        match self.max_degree() {
            Some(max) if k > max => None,
            _ => Some(k),
        }
    }

    /// `ln c_k²`; `-∞` for degrees that are not sections.
    #[inline]
    pub fn log_norm_sq(&self, k: usize) -> f64 {
        match self.log_norm_sq.get(k) {
            Some(v) => *v,
            None => self.compute_log_norm_sq(k),
        }
    }

    pub fn norm_sq(&self, k: usize) -> f64 {
        self.log_norm_sq(k).exp()
    }

    /// `c_{k+1}² / c_k²`.
    #[inline]
    pub fn norm_sq_ratio(&self, k: usize) -> f64 {
        let p = self.p as f64;
        match self.kind {
            ModelKind::Plane => p * PI / (k as f64 + 1.0),
            ModelKind::ProjectiveLine => (p - k as f64) / (k as f64 + 1.0),
        }
    }

    #[inline]
    fn log_fiber_weight(&self, x: Point) -> f64 {
        let r2 = x.norm_sqr();
        match self.kind {
            ModelKind::Plane => -0.5 * self.p as f64 * PI * r2,
            ModelKind::ProjectiveLine => -0.5 * self.p as f64 * r2.ln_1p(),
        }
    }

    /// Value of the basis section of degree `k` at `x`, fiber weight included.
    pub fn section_value(&self, k: usize, x: Point) -> Complex64 {
        let lc = self.log_norm_sq(k);
        if lc == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        let z = x.z();
        if z.norm_sqr() == 0.0 {
            return if k == 0 {
                Complex64::new((0.5 * lc).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let log_mag = 0.5 * lc + k as f64 * z.norm().ln() + self.log_fiber_weight(x);
        Complex64::from_polar(log_mag.exp(), k as f64 * z.arg())
    }

    /// Evaluates the nonpositive-weight sections of degrees `0..=shift` at `x`
    /// into `out`, starting from the largest one and recursing outward.
    pub fn features(&self, x: Point, out: &mut [Complex64]) {
        self.features_trimmed(x, out, 1e-20);
    }

    /// As [`SectionBasis::features`], stopping the outward recursion once
    /// terms fall below `rel_floor` times the largest one. Returns the
    /// index range outside which `out` is zero.
    pub fn features_trimmed(&self, x: Point, out: &mut [Complex64], rel_floor: f64) -> std::ops::Range<usize> {
        let n = self.dimension();
        assert_eq!(out.len(), n, "feature buffer must have length N_p");
        let z = x.z();
        let r2 = z.norm_sqr();
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        if r2 == 0.0 {
            out[0] = self.section_value(0, x);
            return 0..1;
        }
        // |φ_{k+1}/φ_k|² = ratio(k) |z|², unimodal in k.
        let peak = self.peak_degree(r2).min(n - 1);
        out[peak] = self.section_value(peak, x);
        let floor = out[peak].norm() * rel_floor;
        let mut cur = out[peak];
        let mut hi = peak + 1;
        for k in peak..n - 1 {
            cur *= z * self.norm_sq_ratio(k).sqrt();
            if cur.norm() < floor {
                break;
            }
            out[k + 1] = cur;
            hi = k + 2;
        }
        let mut cur = out[peak];
        let mut lo = peak;
        for k in (0..peak).rev() {
            cur /= z * self.norm_sq_ratio(k).sqrt();
            if cur.norm() < floor {
                break;
            }
            out[k] = cur;
            lo = k;
        }
        lo..hi
    }

    /// Degree of the largest term of `Σ c_k² ρ^k` for `ρ > 0`.
    pub(crate) fn peak_degree(&self, rho: f64) -> usize {
        let p = self.p as f64;
        let k = match self.kind {
            ModelKind::Plane => (p * PI * rho).floor(),
            // (p - k) ρ >= k + 1  <=>  k <= (pρ - 1) / (1 + ρ)
            ModelKind::ProjectiveLine => ((p * rho - 1.0) / (1.0 + rho)).floor() + 1.0,
        };
        let k = k.max(0.0);
        let k = match self.max_degree() {
            Some(max) => k.min(max as f64),
            None => k,
        };
        k as usize
    }
}
