//! The determinantal point process of the partial Bergman kernel.
//!
//! Its density against `dv^{N}` is `|det φ_j(x_i)|² / N!` for the orthonormal
//! nonpositive-weight sections `φ_j`. Sampling uses the sequential chain-rule
//! scheme: at each step a point is drawn from the residual kernel diagonal by
//! rejection against `ρ₁/N`, then the feature vector of the accepted point is
//! orthonormalized into the state.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use thiserror::Error;

use crate::geometry::{GeometryError, ModelGeometry, ModelKind, Point, SectionBasis};
use crate::kernels::Kernels;
use crate::rng::RngStamp;
use crate::special;

/// Consecutive rejections after which a step is reported as stalled.
pub const MAX_CONSECUTIVE_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DppError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("expected {expected} points, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("rejection sampler stalled at step {step} after {rejections} consecutive rejections")]
    RejectionStall { step: usize, rejections: u64 },
    #[error("{0} is only available on the plane model")]
    PlaneOnly(&'static str),
}

/// One sample of the process.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub points: Vec<Point>,
    /// Natural log of the density against `dv^{N}` at these points.
    pub log_density: f64,
    pub rng_stamp: RngStamp,
}

impl Configuration {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `ln((1/N!) |det φ_j(x_i)|²)` with fiber weights included.
///
/// Coincident points give `-∞`.
pub fn slater_log_density(model: &ModelGeometry, p: u32, points: &[Point]) -> Result<f64, DppError> {
    let basis = model.section_basis(p)?;
    slater_log_density_with(&basis, points)
}

pub(crate) fn slater_log_density_with(basis: &SectionBasis, points: &[Point]) -> Result<f64, DppError> {
    let n = basis.dimension();
    if points.len() != n {
        return Err(DppError::WrongCount { expected: n, got: points.len() });
    }
    for (i, a) in points.iter().enumerate() {
        if points[..i].iter().any(|b| b == a) {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut log_scale = 0.0;
    for (i, &x) in points.iter().enumerate() {
        basis.features(x, &mut row);
        let scale = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        log_scale += scale.ln();
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = v / scale;
        }
    }
    let u = m.lu().u();
    let mut log_det = log_scale;
    for i in 0..n {
        let d = u[(i, i)].norm();
        if d == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        log_det += d.ln();
    }
    Ok(2.0 * log_det - special::ln_gamma(n as f64 + 1.0))
}

/// One-point correlation function, the partial kernel diagonal.
pub fn rho1(kernels: &Kernels, x: Point) -> f64 {
    kernels.partial_diag(x)
}

/// Two-point correlation `K(x,x)K(y,y) - |K(x,y)|²`.
pub fn rho2(kernels: &Kernels, x: Point, y: Point) -> f64 {
    let kxx = kernels.partial(x, x).re;
    let kyy = kernels.partial(y, y).re;
    kxx * kyy - kernels.partial(x, y).norm_sqr()
}

/// Fraction of the expected points with chart radius at most `r`,
/// `(1/N) ∫_{|z| ≤ r} ρ₁ dv`.
///
/// The section of degree `k` has `pπ|z|² ~ Gamma(k+1)` on the plane and
/// latitude `|z|²/(1+|z|²) ~ Beta(k+1, p-k+1)` on the projective line.
pub fn radial_cdf(model: &ModelGeometry, p: u32, r: f64) -> Result<f64, DppError> {
    let n = model.dimension(p)?;
    let r2 = r * r;
    let pf = p as f64;
    let total: f64 = match model.kind() {
        ModelKind::Plane => (0..n).map(|k| special::gamma_p(k as f64 + 1.0, pf * PI * r2)).sum(),
        ModelKind::ProjectiveLine => {
            let t = r2 / (1.0 + r2);
            (0..n as u64).map(|k| 1.0 - special::binomial_cdf(p as u64 + 1, t, k)).sum()
        }
    };
    Ok(total / n as f64)
}

/// Radii of a Ginibre sample: `pπ r_k²` are independent `Gamma(k, 1)`, `k = 1..=p+1`.
///
/// Only the multiset of moduli is reproduced, so this is a sampler for
/// rotation-invariant statistics `Σ f(|z_i|)`. At `p = 0` a single radius
/// with `π r² ~ Gamma(1, 1)` is returned.
pub fn kostlan_radii_sample<R: Rng + ?Sized>(model: &ModelGeometry, p: u32, rng: &mut R) -> Result<Vec<f64>, DppError> {
    if model.kind() != ModelKind::Plane {
        return Err(DppError::PlaneOnly("kostlan_radii_sample"));
    }
    let scale = PI * p.max(1) as f64;
    Ok((1..=p as u64 + 1)
        .map(|k| {
            let g = Gamma::new(k as f64, 1.0).expect("shape is positive");
            (g.sample(rng) / scale).sqrt()
        })
        .collect())
}

/// Sequential sampler for one `(model, p)`.
#[derive(Debug, Clone)]
pub struct Sampler {
    model: ModelGeometry,
    p: u32,
    basis: SectionBasis,
    proposals: Vec<Proposal>,
}

#[derive(Debug, Clone)]
enum Proposal {
    /// `pπ|z|²` for the plane.
    Gamma(Gamma<f64>),
    /// Latitude `|z|²/(1+|z|²)` for the projective line.
    Beta(Beta<f64>),
}

/// Gram–Schmidt data for the points accepted so far.
struct SamplerState {
    points: Vec<Point>,
    /// Orthonormal vectors spanning the feature vectors of accepted points,
    /// split into real and imaginary parts.
    frame_re: Vec<Vec<f64>>,
    frame_im: Vec<Vec<f64>>,
    remaining: usize,
}

impl Sampler {
    pub fn new(model: &ModelGeometry, p: u32) -> Result<Self, DppError> {
        let basis = model.section_basis(p)?;
        let n = basis.dimension();
        let proposals = (0..n)
            .map(|k| match model.kind() {
                ModelKind::Plane => Proposal::Gamma(Gamma::new(k as f64 + 1.0, 1.0).expect("positive shape")),
                ModelKind::ProjectiveLine => Proposal::Beta(
                    Beta::new(k as f64 + 1.0, (p as usize - k) as f64 + 1.0).expect("positive shapes"),
                ),
            })
            .collect();
        Ok(Self { model: model.clone(), p, basis, proposals })
    }

    pub fn model(&self) -> &ModelGeometry {
        &self.model
    }

    pub fn power(&self) -> u32 {
        self.p
    }

    /// `N_p`, the number of points in every sample.
    pub fn rank(&self) -> usize {
        self.basis.dimension()
    }

    /// Draws a configuration from the stream identified by `stamp`.
    pub fn sample(&self, stamp: RngStamp) -> Result<Configuration, DppError> {
        let mut rng = stamp.rng();
        let points = self.sample_points(&mut rng)?;
        let log_density = slater_log_density_with(&self.basis, &points)?;
        Ok(Configuration { points, log_density, rng_stamp: stamp })
    }

    /// Draws a point from `ρ₁/N`: a uniformly chosen `|φ_k|² dv`.
    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let k = rng.random_range(0..self.proposals.len());
        let r2 = match &self.proposals[k] {
            Proposal::Gamma(g) => g.sample(rng) / (self.p as f64 * PI),
            Proposal::Beta(b) => loop {
                let t = b.sample(rng);
                if t < 1.0 {
                    break t / (1.0 - t);
                }
            },
        };
        let theta = 2.0 * PI * rng.random::<f64>();
        Point::from_polar(r2.sqrt(), theta)
    }

    /// The `N_p` points of one sample, in acceptance order.
    pub fn sample_points<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<Point>, DppError> {
        let n = self.rank();
        let mut state = SamplerState::new(n);
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        let (mut vr, mut vi) = (vec![0.0; n], vec![0.0; n]);
        let mut coef = Vec::with_capacity(n);
        while state.remaining > 0 {
            let step = state.points.len();
            let mut rejections = 0u64;
            loop {
                let x = self.propose(rng);
                let range = self.basis.features_trimmed(x, &mut v, FEATURE_FLOOR);
                for k in range.clone() {
                    vr[k] = v[k].re;
                    vi[k] = v[k].im;
                }
                let norm2: f64 = v[range.clone()].iter().map(|c| c.norm_sqr()).sum();
                // The captured mass only grows along the frame, so a proposal
                // can be rejected as soon as it exceeds the drawn threshold.
                let threshold = (1.0 - rng.random::<f64>()) * norm2;
                coef.clear();
                let mut captured = 0.0;
                let mut rejected = !(norm2 > 0.0);
                for (er, ei) in state.frame_re.iter().zip(&state.frame_im) {
                    let c = dot_split(&er[range.clone()], &ei[range.clone()], &vr[range.clone()], &vi[range.clone()]);
                    captured += c.norm_sqr();
                    coef.push(c);
                    if captured >= threshold {
                        rejected = true;
                        break;
                    }
                }
                if !rejected {
                    state.accept(x, &v, &coef);
                    break;
                }
                rejections += 1;
                if rejections > MAX_CONSECUTIVE_REJECTIONS {
                    return Err(DppError::RejectionStall { step, rejections });
                }
            }
        }
        Ok(state.points)
    }
}

/// Relative size below which section values are dropped when sampling;
/// it perturbs acceptance probabilities by far less than rounding of the
/// Gram–Schmidt state.
const FEATURE_FLOOR: f64 = 1e-13;

impl SamplerState {
    fn new(n: usize) -> Self {
        Self {
            points: Vec::with_capacity(n),
            frame_re: Vec::with_capacity(n),
            frame_im: Vec::with_capacity(n),
            remaining: n,
        }
    }

    fn accept(&mut self, x: Point, v: &[Complex64], coef: &[Complex64]) {
        // Classical Gram–Schmidt with one reorthogonalization pass.
        let mut u: Vec<Complex64> = v.to_vec();
        for ((er, ei), c) in self.frame_re.iter().zip(&self.frame_im).zip(coef) {
            for (k, uk) in u.iter_mut().enumerate() {
                *uk -= c * Complex64::new(er[k], ei[k]);
            }
        }
        for (er, ei) in self.frame_re.iter().zip(&self.frame_im) {
            let c: Complex64 = u.iter().enumerate().map(|(k, uk)| Complex64::new(er[k], -ei[k]) * uk).sum();
            for (k, uk) in u.iter_mut().enumerate() {
                *uk -= c * Complex64::new(er[k], ei[k]);
            }
        }
        let norm = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        self.frame_re.push(u.iter().map(|c| c.re / norm).collect());
        self.frame_im.push(u.iter().map(|c| c.im / norm).collect());
        self.points.push(x);
        self.remaining -= 1;
    }
}

/// `Σ conj(e_k) v_k` with real and imaginary parts stored separately.
#[inline]
fn dot_split(er: &[f64], ei: &[f64], vr: &[f64], vi: &[f64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for k in 0..er.len() {
        re += er[k] * vr[k] + ei[k] * vi[k];
        im += er[k] * vi[k] - ei[k] * vr[k];
    }
    Complex64::new(re, im)
}
