//! Numerical laboratory for partial Bergman kernels and the determinantal
//! point processes they generate.
//!
//! Two explicit prequantized Kähler models with a circle action are
//! supported: the Bargmann–Fock plane (whose nonpositive-weight sections
//! give the Ginibre ensemble) and the Fubini–Study projective line. On top of
//! closed-form kernels the crate provides deterministic quadrature, an exact
//! sequential sampler for the projection DPP, and exact and Monte-Carlo
//! linear statistics.
//!
//! ```
//! use bergman_dpp::{Kernels, ModelGeometry, Point};
//!
//! let plane = ModelGeometry::plane();
//! let kernels = Kernels::new(&plane, 10).unwrap();
//! let z = Point::new(0.1, -0.2);
//! // The full Bergman kernel of the flat model is exactly p on the diagonal.
//! assert!((kernels.full(z, z).re - 10.0).abs() < 1e-12);
//! ```

pub mod dpp;
pub mod euler_maclaurin;
pub mod geometry;
pub mod kernels;
pub mod local_model;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod statistics;

pub use dpp::{Configuration, DppError, Sampler};
pub use geometry::{GeometryError, ModelGeometry, ModelKind, Point, SectionBasis};
pub use kernels::{KernelError, KernelValue, Kernels};
pub use quadrature::{DoubleGrid, PlanarGrid};
pub use rng::RngStamp;
pub use statistics::{StatisticsReport, TestFunction};

pub use num_complex::Complex64;
