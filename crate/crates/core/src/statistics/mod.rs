//! Linear statistics `N_p[f] = Σ f(x_j)` of the process: exact moments by
//! quadrature, their large-`p` limits, and Monte-Carlo estimates.

mod functions;
pub mod hypothesis;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dpp::{Configuration, DppError, Sampler};
use crate::geometry::{ModelGeometry, ModelKind, Point};
use crate::kernels::{self, Kernels};
use crate::quadrature::{self, double_integrate, DoubleGrid, PlanarGrid};
use crate::rng::RngStamp;

pub use functions::{constant, registry, SpecError, TestFunction, TestFunctionSpec};

/// `Σ_j f(x_j)`.
pub fn linear_statistic(f: &TestFunction, cfg: &Configuration) -> f64 {
    cfg.points.iter().map(|&x| f.value(x)).sum()
}

/// `f̂_k = ∫₀¹ e^{2πitk} f(φ_t(x₀))dt` at the real base point `x₀` of the boundary orbit.
pub fn fourier_coefficient(model: &ModelGeometry, p: u32, f: &TestFunction, k: i64) -> Complex64 {
    let x0 = Point::new(model.boundary_radius(p), 0.0);
    let n = (8 * (k.unsigned_abs() as usize + 1)).max(64);
    quadrature::circle_integrate(
        |t| Complex64::from_polar(f.value(model.rotate(x0, t)), 2.0 * PI * t * k as f64),
        n,
    )
}

/// Breakpoints in `r` (plane) or latitude (sphere) from 0 to `end_r`,
/// with an extra break at the boundary orbit.
fn chart_breaks(model: &ModelGeometry, p: u32, end_r: f64, panels: usize) -> Vec<f64> {
    let to_coord = |r: f64| match model.kind() {
        ModelKind::Plane => r,
        ModelKind::ProjectiveLine => {
            if r.is_infinite() {
                1.0
            } else {
                r * r / (1.0 + r * r)
            }
        }
    };
    let end = to_coord(end_r);
    let mut b: Vec<f64> = (0..=panels).map(|i| end * i as f64 / panels as f64).collect();
    let rb = to_coord(model.boundary_radius(p));
    if rb > 0.0 && rb < end {
        b.push(rb);
    }
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    b
}

fn chart_grid(model: &ModelGeometry, breaks: &[f64], nodes: usize, n_angular: usize) -> PlanarGrid {
    match model.kind() {
        ModelKind::Plane => PlanarGrid::composite(breaks, nodes, n_angular),
        ModelKind::ProjectiveLine => PlanarGrid::latitude(breaks, nodes, n_angular),
    }
    .expect("grid parameters are valid")
}

/// `E[N_p[f]] = ∫ P⁻(x,x) f(x) dv(x)`.
pub fn expectation_exact(model: &ModelGeometry, p: u32, f: &TestFunction) -> f64 {
    let end = f.support_radius.min(quadrature::truncation_radius(model, p));
    let n_angular = if p <= 400 { 256 } else { (256.0 * (p as f64 / 400.0).sqrt()).ceil() as usize / 2 * 2 };
    let grid = chart_grid(model, &chart_breaks(model, p, end, 50), 8, n_angular);
    let shift = model.shift(p).expect("valid power and shift");
    let dtheta = 2.0 * PI / grid.n_angular() as f64;
    let rings: Vec<f64> = grid
        .radial_nodes()
        .par_iter()
        .zip(grid.radial_weights())
        .map(|(&r, &w)| {
            let x = Point::new(r, 0.0);
            let radial = kernels::partial_diag_at_r2(model, p, shift, r * r) * model.volume_density(x);
            if radial == 0.0 {
                return 0.0;
            }
            let ring: f64 = (0..grid.n_angular())
                .map(|j| f.value(Point::from_polar(r, j as f64 * dtheta)))
                .sum();
            radial * ring * w * dtheta
        })
        .collect();
    rings.iter().sum()
}

/// Options for [`variance_exact_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceOptions {
    /// Angular nodes per ring used to resolve the circle Fourier modes of `f`.
    pub n_angular: usize,
    /// Radial panels per unit of `1/√p` (in `r`, or latitude on the sphere).
    pub panels_per_scale: f64,
    /// Extra radial breakpoints where `|μ| = level`.
    pub split_level: Option<f64>,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self { n_angular: 256, panels_per_scale: 4.0, split_level: None }
    }
}

/// `Var[N_p[f]] = ½ ∫∫ |P⁻(x,y)|² (f(x) - f(y))² dv(x) dv(y)`.
///
/// Evaluated as `tr(P f² P) - ‖P f P‖²` in the monomial basis. With
/// `f = Σ_n F_n(r) e^{inθ}` the matrix of `f` couples degrees `j` and `j+n`
/// through one radial integral, so the boundary layer, where the kernel
/// decays only slowly along the circle, needs no special treatment.
pub fn variance_exact(model: &ModelGeometry, p: u32, f: &TestFunction) -> f64 {
    variance_exact_with(model, p, f, &VarianceOptions::default())
}

pub fn variance_exact_with(model: &ModelGeometry, p: u32, f: &TestFunction, opts: &VarianceOptions) -> f64 {
    let basis = model.section_basis(p).expect("valid power and shift");
    let n_basis = basis.dimension();
    let end_r = f.support_radius.min(quadrature::truncation_radius(model, p));
    let span = match model.kind() {
        ModelKind::Plane => end_r,
        ModelKind::ProjectiveLine => {
            if end_r.is_infinite() {
                1.0
            } else {
                end_r * end_r / (1.0 + end_r * end_r)
            }
        }
    };
    let panels = (span * opts.panels_per_scale * (p as f64).sqrt()).ceil().max(16.0) as usize;
    let mut breaks = chart_breaks(model, p, end_r, panels);
    if let Some(level) = opts.split_level {
        for lvl in [-level, level] {
            if let Some(r) = model.radius_at_level(p, lvl) {
                let c = match model.kind() {
                    ModelKind::Plane => r,
                    ModelKind::ProjectiveLine => r * r / (1.0 + r * r),
                };
                if c > 0.0 && c < *breaks.last().unwrap() {
                    breaks.push(c);
                }
            }
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    }
    let grid = chart_grid(model, &breaks, 8, opts.n_angular);
    let n_ang = grid.n_angular();
    let n_modes = n_ang / 2;

    // Per ring: |φ_j| on the positive real axis, and the Fourier modes of f and f².
    struct Ring {
        weight: f64,
        amp: Vec<f64>,
        modes: Vec<Complex64>,
        mean_sq: f64,
    }
    let rings: Vec<Ring> = grid
        .radial_nodes()
        .par_iter()
        .zip(grid.radial_weights())
        .map(|(&r, &w)| {
            let x = Point::new(r, 0.0);
            let mut feat = vec![Complex64::new(0.0, 0.0); n_basis];
            basis.features(x, &mut feat);
            let amp = feat.iter().map(|c| c.re).collect();
            let values: Vec<f64> = (0..n_ang)
                .map(|j| f.value(Point::from_polar(r, 2.0 * PI * j as f64 / n_ang as f64)))
                .collect();
            let modes = (0..n_modes)
                .map(|n| {
                    values
                        .iter()
                        .enumerate()
                        .map(|(j, v)| Complex64::from_polar(*v, -2.0 * PI * (n * j) as f64 / n_ang as f64))
                        .sum::<Complex64>()
                        / n_ang as f64
                })
                .collect();
            let mean_sq = values.iter().map(|v| v * v).sum::<f64>() / n_ang as f64;
            Ring { weight: 2.0 * PI * w * model.volume_density(x), amp, modes, mean_sq }
        })
        .collect();

    let f_scale = rings.iter().flat_map(|r| r.modes.iter()).map(|c| c.norm()).fold(0.0, f64::max);
    let active: Vec<usize> = (0..n_modes)
        .filter(|&n| rings.iter().any(|r| r.modes[n].norm() > 1e-15 * f_scale))
        .collect();

    // tr(P f² P)
    let trace_sq: f64 = rings
        .iter()
        .map(|ring| ring.weight * ring.mean_sq * ring.amp.iter().map(|a| a * a).sum::<f64>())
        .sum();

    // ‖P f P‖² = Σ_j |M_jj|² + 2 Σ_{n>0} Σ_j |M_{j,j+n}|²
    let hs_terms: Vec<f64> = active
        .par_iter()
        .map(|&n| {
            let mut total = 0.0;
            for j in 0..n_basis.saturating_sub(n) {
                let m: Complex64 = rings
                    .iter()
                    .map(|ring| ring.modes[n] * (ring.weight * ring.amp[j] * ring.amp[j + n]))
                    .sum();
                total += m.norm_sqr();
            }
            if n == 0 {
                total
            } else {
                2.0 * total
            }
        })
        .collect();
    let hs: f64 = hs_terms.iter().sum();
    (trace_sq - hs).max(0.0)
}

/// The variance double integral evaluated directly by nested quadrature.
///
/// Reliable only when `f` is constant near the boundary orbit, where the
/// partial kernel has a slowly decaying tail along the circle; kept as an
/// independent check of [`variance_exact`] in that regime.
pub fn variance_double_integral(model: &ModelGeometry, p: u32, f: &TestFunction, near_sigmas: f64) -> f64 {
    let k = Kernels::new(model, p).expect("valid power and shift");
    let grid = DoubleGrid::for_model(model, p, 32).expect("grid parameters are valid");
    let pf = p as f64;
    let near_geodesic = near_sigmas / pf.sqrt();
    let negligible = 1e-30 * pf;
    let near_radius = |x: Point| -> Option<f64> {
        let chart = match model.kind() {
            ModelKind::Plane => near_geodesic,
            ModelKind::ProjectiveLine => near_geodesic * PI.sqrt() * (1.0 + x.norm_sqr()),
        };
        if x.norm() > f.support_radius + 1.5 * chart || k.partial_diag(x) < negligible {
            None
        } else {
            Some(chart)
        }
    };
    let integrand = |x: Point, y: Point| -> f64 {
        let d = f.value(x) - f.value(y);
        if d == 0.0 {
            return 0.0;
        }
        0.5 * d * d * k.partial(x, y).norm_sqr() * model.volume_density(x) * model.volume_density(y)
    };
    double_integrate(integrand, &grid, near_radius).max(0.0)
}

/// Large-`p` limits of the variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitVariance {
    /// `(1/4π) ∫_{μ<0} |df|² dv`.
    pub bulk: f64,
    /// `Σ_k |k| |f̂_k|²` on the boundary orbit.
    pub boundary_sum: f64,
    /// `boundary_factor · boundary_sum`.
    pub boundary: f64,
}

impl LimitVariance {
    pub fn total(&self) -> f64 {
        self.bulk + self.boundary
    }
}

/// Fourier truncation `K` with `K^{-(N-1)} < 1e-8`, capped at 512.
pub fn fourier_truncation(decay_order: u32) -> usize {
    if decay_order <= 1 {
        return 512;
    }
    let k = 1e8f64.powf(1.0 / (decay_order as f64 - 1.0)).ceil() as usize;
    k.clamp(1, 512)
}

/// `Σ_k |k||f̂_k|²` along the boundary orbit.
pub fn boundary_sobolev_sum(model: &ModelGeometry, p: u32, f: &TestFunction) -> f64 {
    let r0 = model.boundary_radius(p);
    if let Some(coeffs) = f.circle_fourier(r0) {
        return coeffs.iter().map(|(k, c)| k.unsigned_abs() as f64 * c.norm_sqr()).sum();
    }
    let kmax = fourier_truncation(f.fourier_decay_order) as i64;
    (1..=kmax)
        .map(|k| {
            let a = fourier_coefficient(model, p, f, k).norm_sqr();
            let b = fourier_coefficient(model, p, f, -k).norm_sqr();
            k as f64 * (a + b)
        })
        .sum()
}

/// The bulk Dirichlet term and the boundary half-Sobolev term.
///
/// In real dimension two `∫|df|² dv` is conformally invariant, so the bulk
/// term is the Euclidean Dirichlet integral over the droplet in the chart.
pub fn limit_variance(model: &ModelGeometry, p: u32, f: &TestFunction, boundary_factor: f64) -> LimitVariance {
    let rb = model.boundary_radius(p);
    let end = rb.min(f.support_radius);
    let grid = PlanarGrid::composite(&uniform_breaks(end, 40), 8, 128).expect("valid grid");
    let dirichlet = quadrature::plane_integrate(
        |x| {
            let g = f.gradient(x);
            Complex64::new(g[0] * g[0] + g[1] * g[1], 0.0)
        },
        &grid,
    )
    .re;
    let boundary_sum = boundary_sobolev_sum(model, p, f);
    LimitVariance { bulk: dirichlet / (4.0 * PI), boundary_sum, boundary: boundary_factor * boundary_sum }
}

/// `∫_{μ<0} f dv`; the expectation is `p` times this to leading order.
pub fn droplet_integral(model: &ModelGeometry, p: u32, f: &TestFunction) -> f64 {
    let end = model.boundary_radius(p).min(f.support_radius);
    let grid = PlanarGrid::composite(&uniform_breaks(end, 40), 8, 128).expect("valid grid");
    quadrature::plane_integrate(|x| Complex64::new(f.value(x) * model.volume_density(x), 0.0), &grid).re
}

fn uniform_breaks(end: f64, panels: usize) -> Vec<f64> {
    (0..=panels).map(|i| end * i as f64 / panels as f64).collect()
}

/// Extrapolates `V(p) ≈ a + b p^{-1/2} + c p^{-1}` to `p → ∞` by least squares.
///
/// With two points only the `p^{-1/2}` term is fitted.
pub fn richardson_limit(points: &[(u32, f64)]) -> Option<f64> {
    let n_terms = if points.len() >= 3 { 3 } else { 2 };
    if points.len() < 2 {
        return None;
    }
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|&(p, _)| {
            let h = 1.0 / (p as f64).sqrt();
            [1.0, h, h * h][..n_terms].to_vec()
        })
        .collect();
    let a = nalgebra::DMatrix::from_fn(points.len(), n_terms, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_iterator(points.len(), points.iter().map(|q| q.1));
    let sol = a.svd(true, true).solve(&b, 1e-14).ok()?;
    Some(sol[0])
}

/// The boundary factors compared when resolving the normalization of the boundary term.
pub const BOUNDARY_FACTORS: [f64; 2] = [1.0, 0.5];

/// The unique factor in [`BOUNDARY_FACTORS`] for which `bulk + factor·sum`
/// is within `rel_tol` of `limit`, if exactly one matches.
pub fn select_boundary_factor(limit: f64, bulk: f64, boundary_sum: f64, rel_tol: f64) -> Option<f64> {
    let matches: Vec<f64> = BOUNDARY_FACTORS
        .iter()
        .copied()
        .filter(|&c| {
            let pred = bulk + c * boundary_sum;
            (limit - pred).abs() <= rel_tol * pred.abs()
        })
        .collect();
    (matches.len() == 1).then(|| matches[0])
}

/// Exact, limiting and Monte-Carlo summaries of one linear statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticsReport {
    pub p: u32,
    pub n_samples: usize,
    pub exact_expectation: f64,
    pub exact_variance: f64,
    pub mc_mean: f64,
    pub mc_variance: f64,
    /// Standard error of `mc_mean`.
    pub mc_stderr: f64,
    /// Standard error of `mc_variance`.
    pub mc_variance_stderr: f64,
    /// Present when `n_samples ≥ 100`.
    pub ks_statistic: Option<f64>,
    pub ks_threshold: Option<f64>,
    /// `p ∫_{μ<0} f dv`.
    pub limit_expectation: f64,
    pub limit_variance_bulk: f64,
    pub limit_variance_boundary: f64,
    /// The sampled values `N_p[f]`, in stream order.
    pub values: Vec<f64>,
}

/// Draws `n_samples` configurations on sub-streams `0..n_samples` of
/// `stamp` and summarizes `N_p[f]`.
pub fn mc_run(
    model: &ModelGeometry,
    p: u32,
    f: &TestFunction,
    n_samples: usize,
    stamp: RngStamp,
    boundary_factor: f64,
) -> Result<StatisticsReport, DppError> {
    assert!(n_samples >= 2, "mc_run needs at least two samples");
    let values = sample_linear_statistics(model, p, f, n_samples, stamp)?;
    let (mc_mean, mc_variance) = hypothesis::mean_and_variance(&values);
    let ks_statistic = (n_samples >= 100).then(|| hypothesis::ks_normal_statistic(&values).unwrap_or(0.0));
    let limits = limit_variance(model, p, f, boundary_factor);
    Ok(StatisticsReport {
        p,
        n_samples,
        exact_expectation: expectation_exact(model, p, f),
        exact_variance: variance_exact(model, p, f),
        mc_mean,
        mc_variance,
        mc_stderr: (mc_variance / n_samples as f64).sqrt(),
        mc_variance_stderr: hypothesis::variance_standard_error(&values),
        ks_statistic,
        ks_threshold: (n_samples >= 100).then(|| hypothesis::ks_threshold_5pct(n_samples)),
        limit_expectation: p as f64 * droplet_integral(model, p, f),
        limit_variance_bulk: limits.bulk,
        limit_variance_boundary: limits.boundary,
        values,
    })
}

/// `N_p[f]` for `n` samples drawn on sub-streams `0..n` of `stamp`.
pub fn sample_linear_statistics(
    model: &ModelGeometry,
    p: u32,
    f: &TestFunction,
    n: usize,
    stamp: RngStamp,
) -> Result<Vec<f64>, DppError> {
    let sampler = Sampler::new(model, p)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = sampler.sample(stamp.substream(i))?;
            debug_assert_eq!(cfg.len(), sampler.rank());
            Ok(linear_statistic(f, &cfg))
        })
        .collect()
}
