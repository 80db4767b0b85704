//! Deterministic quadrature on the model charts.
//!
//! Radial rules are composite Gauss–Legendre; angular rules are uniform
//! trapezoid rules, exact for trigonometric polynomials below the node
//! count. Parallel reductions collect per-radial-node partial sums in index
//! order before summing, so results do not depend on the thread count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{ModelGeometry, ModelKind, Point};
use crate::special;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("angular node count must be even and at least 8, got {0}")]
    InvalidAngularCount(usize),
    #[error("radial breakpoints must be strictly increasing and start at 0")]
    InvalidBreakpoints,
    #[error("need at least one node per panel")]
    EmptyPanel,
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, dp) = legendre(n, 0.0);
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (dp * dp);
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on the panels between consecutive breakpoints.
pub fn composite_gauss_legendre(breaks: &[f64], nodes_per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(nodes_per_panel);
    let mut x = Vec::with_capacity(nodes_per_panel * breaks.len());
    let mut w = Vec::with_capacity(nodes_per_panel * breaks.len());
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        for (xi, wi) in gx.iter().zip(&gw) {
            x.push(a + half * (xi + 1.0));
            w.push(half * wi);
        }
    }
    (x, w)
}

/// Tensor polar rule on a disk (or the whole sphere chart).
///
/// `radial_weights` integrate against `r dr`, so
/// `∫ g dA ≈ Σ_i Σ_j radial_weights[i] · (2π/n) · g(r_i e^{iθ_j})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarGrid {
    radius: f64,
    radial_nodes: Vec<f64>,
    radial_weights: Vec<f64>,
    n_angular: usize,
}

fn check_angular(n: usize) -> Result<(), QuadratureError> {
    if n < 8 || n % 2 != 0 {
        Err(QuadratureError::InvalidAngularCount(n))
    } else {
        Ok(())
    }
}

fn check_breaks(breaks: &[f64]) -> Result<(), QuadratureError> {
    if breaks.len() < 2 || breaks[0] != 0.0 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        Err(QuadratureError::InvalidBreakpoints)
    } else {
        Ok(())
    }
}

impl PlanarGrid {
    /// Single Gauss–Legendre panel on `[0, radius]`.
    pub fn gauss_legendre(radius: f64, n_radial: usize, n_angular: usize) -> Result<Self, QuadratureError> {
        Self::composite(&[0.0, radius], n_radial, n_angular)
    }

    /// Composite Gauss–Legendre in `r` over the given breakpoints.
    pub fn composite(breaks: &[f64], nodes_per_panel: usize, n_angular: usize) -> Result<Self, QuadratureError> {
        check_angular(n_angular)?;
        check_breaks(breaks)?;
        if nodes_per_panel == 0 {
            return Err(QuadratureError::EmptyPanel);
        }
        let (r, w) = composite_gauss_legendre(breaks, nodes_per_panel);
        let radial_weights = r.iter().zip(&w).map(|(ri, wi)| ri * wi).collect();
        Ok(Self {
            radius: *breaks.last().unwrap(),
            radial_nodes: r,
            radial_weights,
            n_angular,
        })
    }

    /// Composite Gauss–Legendre in the latitude `t = |z|²/(1+|z|²)` over the
    /// given `t` breakpoints (the last may be 1, the point at infinity).
    ///
    /// Fubini–Study volume is uniform in `t`, and sections times fiber
    /// weights are polynomial in `t`, so sphere integrals of kernel products
    /// are exact for enough nodes.
    pub fn latitude(t_breaks: &[f64], nodes_per_panel: usize, n_angular: usize) -> Result<Self, QuadratureError> {
        check_angular(n_angular)?;
        check_breaks(t_breaks)?;
        if *t_breaks.last().unwrap() > 1.0 {
            return Err(QuadratureError::InvalidBreakpoints);
        }
        if nodes_per_panel == 0 {
            return Err(QuadratureError::EmptyPanel);
        }
        let (t, w) = composite_gauss_legendre(t_breaks, nodes_per_panel);
        // r² = t/(1-t), r dr = ½ d(r²) = ½ dt/(1-t)²
        let radial_nodes = t.iter().map(|ti| (ti / (1.0 - ti)).sqrt()).collect();
        let radial_weights = t.iter().zip(&w).map(|(ti, wi)| 0.5 * wi / (1.0 - ti).powi(2)).collect();
        let t_max = *t_breaks.last().unwrap();
        let radius = if t_max >= 1.0 { f64::INFINITY } else { (t_max / (1.0 - t_max)).sqrt() };
        Ok(Self { radius, radial_nodes, radial_weights, n_angular })
    }

    /// Default grid for single integrals at power `p`: 400 radial nodes and
    /// 256 angular nodes up to `p = 400`, angular count growing like `√p` above.
    pub fn for_model(model: &ModelGeometry, p: u32) -> Self {
        let n_angular = default_angular(p);
        Self::for_model_with(model, p, 50, 8, n_angular).expect("default grid parameters are valid")
    }

    /// `panels` uniform panels of `nodes_per_panel` nodes out to the truncation radius.
    pub fn for_model_with(
        model: &ModelGeometry,
        p: u32,
        panels: usize,
        nodes_per_panel: usize,
        n_angular: usize,
    ) -> Result<Self, QuadratureError> {
        let breaks = model_breaks(model, p, panels, &[]);
        match model.kind() {
            ModelKind::Plane => Self::composite(&breaks, nodes_per_panel, n_angular),
            ModelKind::ProjectiveLine => Self::latitude(&breaks, nodes_per_panel, n_angular),
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    pub fn n_radial(&self) -> usize {
        self.radial_nodes.len()
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial_nodes
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    /// Sum of all area weights.
    pub fn total_weight(&self) -> f64 {
        2.0 * PI * self.radial_weights.iter().sum::<f64>()
    }

    #[inline]
    fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_angular as f64
    }

    /// All nodes with their area weights, radial-major.
    pub fn nodes(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        let dtheta = 2.0 * PI / self.n_angular as f64;
        self.radial_nodes.iter().zip(&self.radial_weights).flat_map(move |(&r, &w)| {
            (0..self.n_angular).map(move |j| (Point::from_polar(r, self.angle(j)), w * dtheta))
        })
    }

    /// Angular nodes of ring `i` with their area weights.
    fn ring(&self, i: usize) -> impl Iterator<Item = (Point, f64)> + '_ {
        let r = self.radial_nodes[i];
        let w = self.radial_weights[i] * 2.0 * PI / self.n_angular as f64;
        (0..self.n_angular).map(move |j| (Point::from_polar(r, self.angle(j)), w))
    }
}

fn default_angular(p: u32) -> usize {
    if p <= 400 {
        256
    } else {
        let n = (256.0 * (p as f64 / 400.0).sqrt()).ceil() as usize;
        n + n % 2
    }
}

/// Uniform breakpoints (in `r` for the plane, in latitude for the sphere)
/// out to the truncation radius, merged with `extra` breakpoints given in
/// the same coordinate.
pub(crate) fn model_breaks(model: &ModelGeometry, p: u32, panels: usize, extra: &[f64]) -> Vec<f64> {
    let end = match model.kind() {
        ModelKind::Plane => truncation_radius(model, p),
        ModelKind::ProjectiveLine => {
            let r = truncation_radius(model, p);
            r * r / (1.0 + r * r)
        }
    };
    let panels = panels.max(1);
    let mut breaks: Vec<f64> = (0..=panels).map(|i| end * i as f64 / panels as f64).collect();
    for &e in extra {
        if e > 0.0 && e < end {
            breaks.push(e);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    breaks
}

/// Uniform trapezoid rule for `∫₀¹ g(t) dt` with `n` nodes.
pub fn circle_integrate<G: Fn(f64) -> Complex64>(g: G, n: usize) -> Complex64 {
    assert!(n >= 2, "circle_integrate needs at least 2 nodes");
    let sum: Complex64 = (0..n).map(|j| g(j as f64 / n as f64)).sum();
    sum / n as f64
}

/// `∫ g dA` over the grid disk.
pub fn plane_integrate<G>(g: G, grid: &PlanarGrid) -> Complex64
where
    G: Fn(Point) -> Complex64 + Sync,
{
    plane_integrate_monitored(g, grid).value
}

/// Integral together with the share contributed by the outer tenth of the radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitoredIntegral {
    pub value: Complex64,
    /// `|outer annulus contribution| / |total|`; large values mean the
    /// integrand has not decayed by the truncation radius.
    pub tail_fraction: f64,
}

impl MonitoredIntegral {
    pub fn tail_converged(&self, tol: f64) -> bool {
        self.tail_fraction <= tol
    }
}

pub fn plane_integrate_monitored<G>(g: G, grid: &PlanarGrid) -> MonitoredIntegral
where
    G: Fn(Point) -> Complex64 + Sync,
{
    let rings: Vec<Complex64> = (0..grid.n_radial())
        .into_par_iter()
        .map(|i| grid.ring(i).map(|(x, w)| g(x) * w).sum())
        .collect();
    let value: Complex64 = rings.iter().sum();
    let cut = 0.9 * grid.radius();
    let tail: Complex64 = grid
        .radial_nodes()
        .iter()
        .zip(&rings)
        .filter(|(r, _)| **r > cut)
        .map(|(_, v)| *v)
        .sum();
    let tail_fraction = if value.norm() > 0.0 { tail.norm() / value.norm() } else { tail.norm() };
    MonitoredIntegral { value, tail_fraction }
}

/// `∫ h(|z|) dA` for radial integrands, using only the radial rule.
pub fn radial_integrate<H>(h: H, grid: &PlanarGrid) -> f64
where
    H: Fn(f64) -> f64 + Sync,
{
    let terms: Vec<f64> = grid
        .radial_nodes()
        .par_iter()
        .zip(grid.radial_weights())
        .map(|(&r, &w)| h(r) * w)
        .collect();
    2.0 * PI * terms.iter().sum::<f64>()
}

/// Chart radius beyond which the partial-kernel diagonal carries less than
/// `1e-10 · N_p` of its mass.
///
/// Plane: `1/√π + 10/√p + 8√(ln p)/√p`. Projective line: the latitude where
/// `Σ_{k≤s} P(Bin(p+1, t) ≤ k)` (the exact mass beyond `t`) drops below the bound.
pub fn truncation_radius(model: &ModelGeometry, p: u32) -> f64 {
    let pf = p.max(1) as f64;
    match model.kind() {
        ModelKind::Plane => 1.0 / PI.sqrt() + 10.0 / pf.sqrt() + 8.0 * pf.ln().sqrt() / pf.sqrt(),
        ModelKind::ProjectiveLine => {
            let s = model.shift(p.max(1)).unwrap_or(p / 2);
            let rank = s as f64 + 1.0;
            let mass_beyond = |t: f64| -> f64 {
                (0..=s as u64).map(|k| special::binomial_cdf(p as u64 + 1, t, k)).sum()
            };
            let target = 1e-10 * rank;
            let (mut lo, mut hi) = (s as f64 / pf, 1.0 - 1e-15);
            if mass_beyond(hi) > target {
                return f64::INFINITY;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mass_beyond(mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-14 {
                    break;
                }
            }
            (hi / (1.0 - hi)).sqrt()
        }
    }
}

/// Nested rule for `∫∫ g(x, y) dA(x) dA(y)` when `g` decays off the diagonal.
///
/// For each outer node the inner integral runs over a polar disk around it
/// whose radius comes from the caller's decay hint. Pairs farther apart are
/// picked up by a coarse far-field pass over `far × far`.
#[derive(Debug, Clone)]
pub struct DoubleGrid {
    pub outer: PlanarGrid,
    /// Polar rule on the unit disk, scaled to the near-field radius.
    pub inner: PlanarGrid,
    pub far: PlanarGrid,
}

impl DoubleGrid {
    /// Default variance grid at power `p`: outer panels `0.5/√p` wide
    /// (in `r`, or latitude on the sphere) with 8 nodes each and
    /// `n_outer_angular` angles; far field at 1/16 of that density.
    pub fn for_model(model: &ModelGeometry, p: u32, n_outer_angular: usize) -> Result<Self, QuadratureError> {
        Self::for_model_split(model, p, n_outer_angular, &[])
    }

    /// As [`DoubleGrid::for_model`] with extra outer breakpoints at the given
    /// moment-map levels.
    pub fn for_model_split(
        model: &ModelGeometry,
        p: u32,
        n_outer_angular: usize,
        mu_levels: &[f64],
    ) -> Result<Self, QuadratureError> {
        let extra: Vec<f64> = mu_levels
            .iter()
            .filter_map(|&lvl| model.radius_at_level(p, lvl))
            .map(|r| match model.kind() {
                ModelKind::Plane => r,
                ModelKind::ProjectiveLine => r * r / (1.0 + r * r),
            })
            .collect();
        let end_r = truncation_radius(model, p);
        let span = match model.kind() {
            ModelKind::Plane => end_r,
            ModelKind::ProjectiveLine => end_r * end_r / (1.0 + end_r * end_r),
        };
        let panels = (span / (0.5 / (p as f64).sqrt())).ceil().max(8.0) as usize;
        let breaks = model_breaks(model, p, panels, &extra);
        let far_angular = (n_outer_angular / 4).max(8);
        let far_angular = far_angular + far_angular % 2;
        let (outer, far) = match model.kind() {
            ModelKind::Plane => (
                PlanarGrid::composite(&breaks, 8, n_outer_angular)?,
                PlanarGrid::composite(&breaks, 2, far_angular)?,
            ),
            ModelKind::ProjectiveLine => (
                PlanarGrid::latitude(&breaks, 8, n_outer_angular)?,
                PlanarGrid::latitude(&breaks, 2, far_angular)?,
            ),
        };
        let inner = PlanarGrid::composite(&[0.0, 0.25, 0.5, 1.0], 8, 24)?;
        Ok(Self { outer, inner, far })
    }
}

/// `∫∫ g(x, y) dA(x) dA(y)` over chart coordinates.
///
/// `near_radius(x)` returns the radius of the near-field disk around `x`,
/// or `None` when `g(x, ·)` vanishes identically (the row is skipped in
/// both passes). Both variables range over the outer grid's disk; a near
/// radius of at least its diameter makes the inner rule the outer grid itself.
pub fn double_integrate<G, R>(g: G, grid: &DoubleGrid, near_radius: R) -> f64
where
    G: Fn(Point, Point) -> f64 + Sync,
    R: Fn(Point) -> Option<f64> + Sync,
{
    let inner: Vec<(Point, f64)> = grid.inner.nodes().collect();
    let domain = grid.outer.radius();
    let near_rows: Vec<f64> = (0..grid.outer.n_radial())
        .into_par_iter()
        .map(|i| {
            grid.outer
                .ring(i)
                .map(|(x, wx)| {
                    let Some(rn) = near_radius(x) else {
                        return 0.0;
                    };
                    if rn <= 0.0 {
                        return 0.0;
                    }
                    if rn >= 2.0 * domain {
                        // The near disk covers the whole domain: plain tensor rule.
                        let row: f64 = grid.outer.nodes().map(|(y, wy)| g(x, y) * wy).sum();
                        return row * wx;
                    }
                    let scale = rn * rn;
                    let row: f64 = inner
                        .iter()
                        .map(|(h, wh)| (Point(x.z() + h.z() * rn), wh))
                        .filter(|(y, _)| y.norm() <= domain)
                        .map(|(y, wh)| g(x, y) * wh * scale)
                        .sum();
                    row * wx
                })
                .sum()
        })
        .collect();

    let far_nodes: Vec<(Point, f64, Option<f64>)> =
        grid.far.nodes().map(|(x, w)| (x, w, near_radius(x))).collect();
    let far_rows: Vec<f64> = far_nodes
        .par_iter()
        .map(|&(x, wx, rx)| {
            let Some(rx) = rx else {
                return 0.0;
            };
            if rx >= 2.0 * domain {
                return 0.0;
            }
            far_nodes
                .iter()
                .filter(|(y, _, _)| (x.z() - y.z()).norm() > rx)
                .map(|&(y, wy, _)| g(x, y) * wy)
                .sum::<f64>()
                * wx
        })
        .collect();
    near_rows.iter().sum::<f64>() + far_rows.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 16, 64, 400] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
            assert!((q - exact).abs() < 1e-13, "n={n}");
            let q2: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
            if n >= 2 {
                assert!((q2 - 2.0 / 3.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn circle_rule_examples() {
        let z = circle_integrate(|t| Complex64::from_polar(1.0, 2.0 * PI * t), 16);
        assert!(z.norm() < 1e-15);
        let c = circle_integrate(|_| Complex64::new(2.5, -1.0), 7);
        assert!((c - Complex64::new(2.5, -1.0)).norm() < 1e-15);
        for n in [8usize, 9, 32] {
            let v = circle_integrate(|t| Complex64::new((2.0 * PI * t).cos().powi(2), 0.0), n);
            assert!((v.re - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_weights_sum_to_disk_area() {
        let g = PlanarGrid::gauss_legendre(2.3, 40, 16).unwrap();
        let area = PI * 2.3 * 2.3;
        assert!((g.total_weight() - area).abs() < 1e-12 * area);
        let c = PlanarGrid::composite(&[0.0, 0.5, 0.6, 1.7], 6, 8).unwrap();
        assert!((c.total_weight() - PI * 1.7 * 1.7).abs() < 1e-12 * PI * 1.7 * 1.7);
        assert_eq!(PlanarGrid::gauss_legendre(1.0, 4, 6), Err(QuadratureError::InvalidAngularCount(6)));
        assert_eq!(PlanarGrid::gauss_legendre(1.0, 4, 9), Err(QuadratureError::InvalidAngularCount(9)));
        assert_eq!(PlanarGrid::composite(&[0.0, 0.5, 0.4], 4, 8), Err(QuadratureError::InvalidBreakpoints));
    }

    #[test]
    fn plane_integral_examples() {
        let g = PlanarGrid::gauss_legendre(1.3, 20, 8).unwrap();
        let one = plane_integrate(|_| Complex64::new(1.0, 0.0), &g);
        assert!((one.re - PI * 1.69).abs() < 1e-12 * PI * 1.69);
        let g = PlanarGrid::composite(&[0.0, 1.0, 2.0, 3.0, 4.5, 7.0], 16, 8).unwrap();
        let gauss = plane_integrate(|z| Complex64::new((-PI * z.norm_sqr()).exp(), 0.0), &g);
        assert!((gauss.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_monitor_flags_full_kernel_diagonal() {
        // P_p(z, z)/p ≡ 1 on the plane: the full space is infinite dimensional.
        let plane = ModelGeometry::plane();
        let k = crate::Kernels::new(&plane, 10).unwrap();
        let grid = PlanarGrid::for_model_with(&plane, 10, 20, 8, 8).unwrap();
        let full = plane_integrate_monitored(|z| k.full(z, z) / 10.0, &grid);
        assert!(!full.tail_converged(1e-6));
        assert!((full.value.re - grid.total_weight()).abs() < 1e-9 * grid.total_weight());
        let partial = plane_integrate_monitored(|z| Complex64::new(k.partial_diag(z), 0.0), &grid);
        assert!(partial.tail_converged(1e-10));
    }

    #[test]
    fn truncation_radius_values() {
        let plane = ModelGeometry::plane();
        let r = truncation_radius(&plane, 100);
        assert!((r - (1.0 / PI.sqrt() + 1.0 + 0.8 * 100f64.ln().sqrt())).abs() < 1e-14);
        let radii: Vec<f64> = [10u32, 100, 1000, 10_000, 100_000].iter().map(|&p| truncation_radius(&plane, p)).collect();
        assert!(radii.windows(2).all(|w| w[1] < w[0]));
        assert!(radii.iter().all(|&r| r > 1.0 / PI.sqrt()));

        // Omitted mass at p = 50: Σ_{k≤p} Q(k+1, pπR²).
        let p = 50u32;
        let r = truncation_radius(&plane, p);
        let x = p as f64 * PI * r * r;
        let omitted: f64 = (0..=p).map(|k| special::gamma_q(k as f64 + 1.0, x)).sum();
        assert!(omitted < 1e-10 * 51.0, "omitted {omitted}");

        let sphere = ModelGeometry::projective_line();
        let rs = truncation_radius(&sphere, 40);
        assert!(rs.is_finite() && rs > 1.0);
    }

    #[test]
    fn latitude_grid_integrates_sphere_volume() {
        let sphere = ModelGeometry::projective_line();
        let g = PlanarGrid::latitude(&[0.0, 0.5, 1.0], 10, 8).unwrap();
        let vol = plane_integrate(|z| Complex64::new(sphere.volume_density(z), 0.0), &g);
        assert!((vol.re - 1.0).abs() < 1e-13);
        assert!(g.radius().is_infinite());
    }

    #[test]
    fn double_integral_of_one() {
        let outer = PlanarGrid::gauss_legendre(1.0, 12, 8).unwrap();
        let grid = DoubleGrid { inner: outer.clone(), far: outer.clone(), outer };
        let v = double_integrate(|_, _| 1.0, &grid, |_| Some(f64::INFINITY));
        assert!((v - PI * PI).abs() < 1e-12 * PI * PI);
    }

    #[test]
    fn double_integral_far_pass_sums_off_diagonal_pairs() {
        let outer = PlanarGrid::gauss_legendre(1.0, 6, 8).unwrap();
        let grid = DoubleGrid { inner: outer.clone(), far: outer.clone(), outer };
        let w: Vec<f64> = grid.far.nodes().map(|n| n.1).collect();
        let total: f64 = w.iter().sum();
        let diag: f64 = w.iter().map(|x| x * x).sum();
        let v = double_integrate(|_, _| 1.0, &grid, |_| Some(0.0));
        assert!((v - (total * total - diag)).abs() < 1e-12 * total * total);
    }

    #[test]
    fn double_integral_of_a_gaussian_convolution() {
        // ∫∫ 4 e^{-π|x|²} e^{-4π|x-y|²} dA dA = 1
        let breaks: Vec<f64> = (0..=9).map(|i| 0.5 * i as f64).collect();
        let grid = DoubleGrid {
            outer: PlanarGrid::composite(&breaks, 8, 32).unwrap(),
            inner: PlanarGrid::composite(&[0.0, 0.25, 0.5, 1.0], 8, 24).unwrap(),
            far: PlanarGrid::composite(&breaks, 2, 8).unwrap(),
        };
        let g = |x: Point, y: Point| 4.0 * (-PI * x.norm_sqr()).exp() * (-4.0 * PI * (x.z() - y.z()).norm_sqr()).exp();
        let v = double_integrate(g, &grid, |_| Some(1.5));
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }
}
