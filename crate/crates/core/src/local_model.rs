//! Gaussian and erf-shaped local models for the rescaled kernels near a
//! point of the boundary orbit `μ⁻¹(0)`.
//!
//! Tangent vectors are real coordinate slices `(x₁, y₁, x₂, y₂, …)` with the
//! standard symplectic form. The equivariant and partial models split a
//! horizontal vector as `u e₁ + Z⊥`, where `e₁ = Jξ/|ξ|` points into the
//! droplet: moving along `e₁` decreases `μ` at rate `|ξ|`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::special;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalModelError {
    #[error("tangent vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("tangent vectors must have even real dimension, got {0}")]
    OddDimension(usize),
    #[error("|ξ| must be positive, got {0}")]
    NonPositiveFieldNorm(f64),
}

/// Standard symplectic form on `R^{2n}`.
pub fn symplectic_form(a: &[f64], b: &[f64]) -> Result<f64, LocalModelError> {
    check_pair(a, b)?;
    Ok(a.chunks_exact(2)
        .zip(b.chunks_exact(2))
        .map(|(u, v)| u[0] * v[1] - u[1] * v[0])
        .sum())
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<(), LocalModelError> {
    if a.len() != b.len() {
        return Err(LocalModelError::DimensionMismatch(a.len(), b.len()));
    }
    if a.len() % 2 != 0 {
        return Err(LocalModelError::OddDimension(a.len()));
    }
    Ok(())
}

/// Bargmann–Fock model kernel `exp(-(π/2)|Z-Z'|² - iπ ω(Z, Z'))`.
pub fn full(z: &[f64], z_prime: &[f64]) -> Result<Complex64, LocalModelError> {
    let omega = symplectic_form(z, z_prime)?;
    let dist2: f64 = z.iter().zip(z_prime).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(Complex64::from_polar((-0.5 * PI * dist2).exp(), -PI * omega))
}

/// Model for `p^{-n+1/2} P^{(m)}` with `m/√p` held fixed.
pub fn equivariant(
    m_over_sqrt_p: f64,
    xi_norm: f64,
    u: f64,
    u_prime: f64,
    perp: (&[f64], &[f64]),
) -> Result<Complex64, LocalModelError> {
    if !(xi_norm > 0.0) {
        return Err(LocalModelError::NonPositiveFieldNorm(xi_norm));
    }
    let transverse = full(perp.0, perp.1)?;
    let center = 0.5 * (u + u_prime) + m_over_sqrt_p / xi_norm;
    let along = (2f64).sqrt() / xi_norm
        * (-2.0 * PI * center * center).exp()
        * (-0.5 * PI * (u - u_prime).powi(2)).exp();
    Ok(transverse * along)
}

/// Model for `p^{-n} P^{(-)}`: an erf profile across the boundary.
pub fn partial(u: f64, u_prime: f64, perp: (&[f64], &[f64])) -> Result<Complex64, LocalModelError> {
    let transverse = full(perp.0, perp.1)?;
    let tail = special::gaussian_integral_below(2.0 * PI, 0.5 * (u + u_prime));
    let along = (2f64).sqrt() * tail * (-0.5 * PI * (u - u_prime).powi(2)).exp();
    Ok(transverse * along)
}

/// Diagonal value of [`partial`] at a point where `μ = v/√p`, in the
/// linearization `u = -v/|ξ|`: `½(1 + erf(-√(2π) v/|ξ|))`.
pub fn boundary_profile(v: f64, xi_norm: f64) -> f64 {
    0.5 * (1.0 + special::erf(-(2.0 * PI).sqrt() * v / xi_norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    const NONE: (&[f64], &[f64]) = (&[], &[]);

    #[test]
    fn full_model_diagonal_and_modulus() {
        let z = [0.3, -1.2];
        assert!((full(&z, &z).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let w = [1.0, 0.5];
        let d2: f64 = (0.3f64 - 1.0).powi(2) + (-1.2f64 - 0.5).powi(2);
        assert!((full(&z, &w).unwrap().norm() - (-0.5 * PI * d2).exp()).abs() < 1e-15);
    }

    #[test]
    fn full_model_rejects_bad_dimensions() {
        assert_eq!(full(&[1.0, 2.0], &[1.0]), Err(LocalModelError::DimensionMismatch(2, 1)));
        assert_eq!(full(&[1.0], &[1.0]), Err(LocalModelError::OddDimension(1)));
    }

    #[test]
    fn equivariant_model_center_value() {
        let v = equivariant(0.0, 2.0 * PI.sqrt(), 0.0, 0.0, NONE).unwrap();
        assert!((v.re - 2f64.sqrt() / (2.0 * PI.sqrt())).abs() < 1e-15);
        assert_eq!(
            equivariant(0.0, 0.0, 0.0, 0.0, NONE),
            Err(LocalModelError::NonPositiveFieldNorm(0.0))
        );
    }

    #[test]
    fn equivariant_model_is_even_in_the_gaussian_center() {
        let xi = 1.7;
        for &(m, u, up) in &[(0.4, 0.1, -0.3), (-1.0, 0.5, 0.2), (2.0, -0.7, 0.0)] {
            let a = equivariant(m, xi, u, up, NONE).unwrap();
            let b = equivariant(-m, xi, -u, -up, NONE).unwrap();
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn partial_model_half_and_full_mass() {
        assert!((partial(0.0, 0.0, NONE).unwrap().re - 0.5).abs() < 1e-15);
        assert!((partial(3.0, 3.0, NONE).unwrap().re - 1.0).abs() < 1e-9);
        assert!(partial(-3.0, -3.0, NONE).unwrap().re < 1e-9);
    }

    #[test]
    fn profile_matches_partial_model() {
        let xi = 2.0 * PI.sqrt();
        for v in [-2.0, -0.5, 0.0, 1.0, 2.5] {
            let u = -v / xi;
            let a = partial(u, u, NONE).unwrap().re;
            assert!((a - boundary_profile(v, xi)).abs() < 1e-15);
        }
        // On the plane this is Φ(-v).
        assert!((boundary_profile(1.0, xi) - special::normal_cdf(-1.0)).abs() < 1e-15);
    }
}
