//! Test functions for linear statistics.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::geometry::Point;

type ValueFn = dyn Fn(Point) -> f64 + Send + Sync;
type GradientFn = dyn Fn(Point) -> [f64; 2] + Send + Sync;
/// Nonzero Fourier coefficients on the circle of the given radius.
type FourierFn = dyn Fn(f64) -> Vec<(i64, Complex64)> + Send + Sync;

/// Real test function on the chart with an analytic chart gradient.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    value: Arc<ValueFn>,
    gradient: Arc<GradientFn>,
    /// `f` vanishes for `|z|` beyond this.
    pub support_radius: f64,
    circle_fourier: Option<Arc<FourierFn>>,
    /// `|f̂_k| ≤ |k|^{-N}` for this `N`.
    pub fourier_decay_order: u32,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("support_radius", &self.support_radius)
            .field("has_circle_fourier", &self.circle_fourier.is_some())
            .field("fourier_decay_order", &self.fourier_decay_order)
            .finish()
    }
}

impl TestFunction {
    pub fn new<V, G>(name: impl Into<String>, support_radius: f64, fourier_decay_order: u32, value: V, gradient: G) -> Self
    where
        V: Fn(Point) -> f64 + Send + Sync + 'static,
        G: Fn(Point) -> [f64; 2] + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            support_radius,
            circle_fourier: None,
            fourier_decay_order,
        }
    }

    /// Attaches closed-form Fourier coefficients along circles `|z| = r`.
    pub fn with_circle_fourier<F>(mut self, fourier: F) -> Self
    where
        F: Fn(f64) -> Vec<(i64, Complex64)> + Send + Sync + 'static,
    {
        self.circle_fourier = Some(Arc::new(fourier));
        self
    }

    #[inline]
    pub fn value(&self, x: Point) -> f64 {
        (self.value)(x)
    }

    #[inline]
    pub fn gradient(&self, x: Point) -> [f64; 2] {
        (self.gradient)(x)
    }

    /// Analytic nonzero coefficients on `|z| = radius`, if known.
    pub fn circle_fourier(&self, radius: f64) -> Option<Vec<(i64, Complex64)>> {
        self.circle_fourier.as_ref().map(|f| f(radius))
    }

    pub fn has_circle_fourier(&self) -> bool {
        self.circle_fourier.is_some()
    }
}

/// `e^{-1/x}` for `x > 0`, else 0.
fn psi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step from 1 at `s ≤ 0` to 0 at `s ≥ 1`, with its derivative.
pub(crate) fn smooth_step_down(s: f64) -> (f64, f64) {
    if s <= 0.0 {
        return (1.0, 0.0);
    }
    if s >= 1.0 {
        return (0.0, 0.0);
    }
    let a = psi(1.0 - s);
    let b = psi(s);
    let da = -a / ((1.0 - s) * (1.0 - s));
    let db = b / (s * s);
    let den = a + b;
    (a / den, (da * b - a * db) / (den * den))
}

/// Radial profile equal to 1 on `[0, a]`, 0 beyond `b`, smooth in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Plateau {
    pub a: f64,
    pub b: f64,
}

impl Plateau {
    pub(crate) fn eval(&self, r: f64) -> (f64, f64) {
        let w = self.b - self.a;
        let (h, dh) = smooth_step_down((r - self.a) / w);
        (h, dh / w)
    }
}

fn radial_gradient(z: Complex64, dfdr: f64) -> [f64; 2] {
    let r = z.norm();
    if r == 0.0 || dfdr == 0.0 {
        [0.0, 0.0]
    } else {
        [dfdr * z.re / r, dfdr * z.im / r]
    }
}

/// Parameters of the registered families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunctionSpec {
    /// Radial, 1 on `|z| ≤ a`, 0 on `|z| ≥ b`.
    RadialBump { a: f64, b: f64 },
    /// `Re((z√π)^k)` times a radial cutoff equal to 1 up to `cutoff` and 0 beyond `2·cutoff`.
    AngularMode { k: u32, cutoff: f64 },
    /// `exp(-|z - c|²/(2w²))`, smoothly cut off between `5w` and `6w` from the center.
    GaussianBump { cx: f64, cy: f64, width: f64 },
    /// 1 on `|z| ≤ r`, 0 beyond `2r`.
    ConstantCapped { r: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecError(pub String);

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SpecError {}

impl TestFunctionSpec {
    pub fn family(&self) -> &'static str {
        match self {
            Self::RadialBump { .. } => "radial_bump",
            Self::AngularMode { .. } => "angular_mode",
            Self::GaussianBump { .. } => "gaussian_bump",
            Self::ConstantCapped { .. } => "constant_capped",
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SpecError(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            Self::RadialBump { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
                if b <= a {
                    return Err(SpecError(format!("radial_bump needs a < b, got a={a}, b={b}")));
                }
                Ok(())
            }
            Self::AngularMode { k, cutoff } => {
                if k == 0 {
                    return Err(SpecError("angular_mode needs k ≥ 1".into()));
                }
                positive("cutoff", cutoff)
            }
            Self::GaussianBump { cx, cy, width } => {
                if !(cx.is_finite() && cy.is_finite()) {
                    return Err(SpecError("gaussian_bump center must be finite".into()));
                }
                positive("width", width)
            }
            Self::ConstantCapped { r } => positive("r", r),
        }
    }

    pub fn build(&self) -> Result<TestFunction, SpecError> {
        self.validate()?;
        let name = self.to_string();
        Ok(match *self {
            Self::RadialBump { a, b } => radial_bump(name, Plateau { a, b }),
            Self::ConstantCapped { r } => radial_bump(name, Plateau { a: r, b: 2.0 * r }),
            Self::AngularMode { k, cutoff } => angular_mode(name, k, cutoff),
            Self::GaussianBump { cx, cy, width } => gaussian_bump(name, Complex64::new(cx, cy), width),
        })
    }
}

impl fmt::Display for TestFunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RadialBump { a, b } => write!(f, "radial_bump({a},{b})"),
            Self::AngularMode { k, cutoff } => write!(f, "angular_mode({k},{cutoff})"),
            Self::GaussianBump { cx, cy, width } => write!(f, "gaussian_bump({cx},{cy},{width})"),
            Self::ConstantCapped { r } => write!(f, "constant_capped({r})"),
        }
    }
}

impl FromStr for TestFunctionSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let open = s.find('(').ok_or_else(|| SpecError(format!("expected name(args), got '{s}'")))?;
        if !s.ends_with(')') {
            return Err(SpecError(format!("missing ')' in '{s}'")));
        }
        let name = s[..open].trim();
        let inner = &s[open + 1..s.len() - 1];
        let args: Vec<&str> = if inner.trim().is_empty() { Vec::new() } else { inner.split(',').map(str::trim).collect() };
        let num = |i: usize| -> Result<f64, SpecError> {
            args[i].parse::<f64>().map_err(|_| SpecError(format!("argument {} of {name} is not a number: '{}'", i + 1, args[i])))
        };
        let arity = |n: usize| -> Result<(), SpecError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(SpecError(format!("{name} takes {n} arguments, got {}", args.len())))
            }
        };
        let spec = match name {
            "radial_bump" => {
                arity(2)?;
                Self::RadialBump { a: num(0)?, b: num(1)? }
            }
            "angular_mode" => {
                if args.len() == 1 {
                    let k = args[0].parse::<u32>().map_err(|_| SpecError(format!("angular_mode degree must be a nonnegative integer, got '{}'", args[0])))?;
                    Self::AngularMode { k, cutoff: 0.8 }
                } else {
                    arity(2)?;
                    let k = args[0].parse::<u32>().map_err(|_| SpecError(format!("angular_mode degree must be a nonnegative integer, got '{}'", args[0])))?;
                    Self::AngularMode { k, cutoff: num(1)? }
                }
            }
            "gaussian_bump" => {
                arity(3)?;
                Self::GaussianBump { cx: num(0)?, cy: num(1)?, width: num(2)? }
            }
            "constant_capped" => {
                arity(1)?;
                Self::ConstantCapped { r: num(0)? }
            }
            other => return Err(SpecError(format!("unknown test function '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn radial_bump(name: String, plateau: Plateau) -> TestFunction {
    TestFunction::new(
        name,
        plateau.b,
        u32::MAX,
        move |x| plateau.eval(x.norm()).0,
        move |x| radial_gradient(x.z(), plateau.eval(x.norm()).1),
    )
    .with_circle_fourier(move |r| vec![(0, Complex64::new(plateau.eval(r).0, 0.0))])
}

fn angular_mode(name: String, k: u32, cutoff: f64) -> TestFunction {
    let plateau = Plateau { a: cutoff, b: 2.0 * cutoff };
    let scale = PI.sqrt();
    let kf = k as i32;
    TestFunction::new(
        name,
        plateau.b,
        u32::MAX,
        move |x| {
            let (chi, _) = plateau.eval(x.norm());
            if chi == 0.0 {
                0.0
            } else {
                (x.z() * scale).powi(kf).re * chi
            }
        },
        move |x| {
            let z = x.z();
            let (chi, dchi) = plateau.eval(z.norm());
            let w = (z * scale).powi(kf);
            // d/dx Re(w) = Re(k s (zs)^{k-1}), d/dy Re(w) = Re(i k s (zs)^{k-1})
            let dw = if kf == 1 { Complex64::new(scale, 0.0) } else { (z * scale).powi(kf - 1) * (scale * k as f64) };
            let g = radial_gradient(z, dchi);
            [dw.re * chi + w.re * g[0], -dw.im * chi + w.re * g[1]]
        },
    )
    .with_circle_fourier(move |r| {
        let chi = plateau.eval(r).0;
        let c = 0.5 * (r * scale).powi(kf) * chi;
        vec![(-(k as i64), Complex64::new(c, 0.0)), (k as i64, Complex64::new(c, 0.0))]
    })
}

fn gaussian_bump(name: String, center: Complex64, width: f64) -> TestFunction {
    let cut = Plateau { a: 5.0 * width, b: 6.0 * width };
    let c2 = 1.0 / (2.0 * width * width);
    TestFunction::new(
        name,
        center.norm() + 6.0 * width,
        4,
        move |x| {
            let d = x.z() - center;
            let (chi, _) = cut.eval(d.norm());
            if chi == 0.0 {
                0.0
            } else {
                (-c2 * d.norm_sqr()).exp() * chi
            }
        },
        move |x| {
            let d = x.z() - center;
            let (chi, dchi) = cut.eval(d.norm());
            let g = (-c2 * d.norm_sqr()).exp();
            let gc = radial_gradient(d, dchi);
            [g * (-2.0 * c2 * d.re * chi + gc[0]), g * (-2.0 * c2 * d.im * chi + gc[1])]
        },
    )
}

/// Default instances of each registered family, as used by the CLI listing.
pub fn registry() -> Vec<(TestFunctionSpec, TestFunction)> {
    [
        TestFunctionSpec::RadialBump { a: 0.1, b: 0.45 },
        TestFunctionSpec::AngularMode { k: 1, cutoff: 0.8 },
        TestFunctionSpec::AngularMode { k: 2, cutoff: 0.8 },
        TestFunctionSpec::GaussianBump { cx: 0.1, cy: 0.0, width: 0.08 },
        TestFunctionSpec::ConstantCapped { r: 10.0 },
    ]
    .into_iter()
    .map(|s| {
        let f = s.build().expect("registry parameters are valid");
        (s, f)
    })
    .collect()
}

/// A function that is constant `c` everywhere, with infinite support.
pub fn constant(c: f64) -> TestFunction {
    TestFunction::new(format!("constant({c})"), f64::INFINITY, u32::MAX, move |_| c, |_| [0.0, 0.0])
        .with_circle_fourier(move |_| vec![(0, Complex64::new(c, 0.0))])
}
