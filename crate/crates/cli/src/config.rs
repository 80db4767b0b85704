//! Run configuration: a flat `key = value` text file.
//!
//! Blank lines and lines starting with `#` are ignored, as is anything after
//! a `#` on a value line. Keys may appear at most once.
//!
//! | key | type | default |
//! |---|---|---|
//! | `kind` | `kernel_profile`, `em_validation`, `lln`, `clt_variance`, `sampler_diagnostics` | required |
//! | `model` | `plane`, `sphere` | required |
//! | `p_list` | comma-separated ascending integers | required |
//! | `seed` | unsigned 64-bit decimal | required |
//! | `test_function` | `name(args)`, see `list-functions` | `radial_bump(0.1,0.45)` |
//! | `n_samples` | integer, at least 2 | `200` |
//! | `boundary_factor` | `1` or `0.5` | `1` |
//! | `n_angular` | even integer, at least 8 | `256` |
//! | `panels_per_scale` | positive number | `4` |
//! | `profile_points` | integer, at least 2 | `61` |
//! | `output_dir` | path without `#` | `out` |

use std::fmt;
use std::str::FromStr;

use bergman_dpp::statistics::{TestFunctionSpec, VarianceOptions};
use bergman_dpp::ModelGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    KernelProfile,
    EmValidation,
    Lln,
    CltVariance,
    SamplerDiagnostics,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] =
        [Self::KernelProfile, Self::EmValidation, Self::Lln, Self::CltVariance, Self::SamplerDiagnostics];

    pub fn name(self) -> &'static str {
        match self {
            Self::KernelProfile => "kernel_profile",
            Self::EmValidation => "em_validation",
            Self::Lln => "lln",
            Self::CltVariance => "clt_variance",
            Self::SamplerDiagnostics => "sampler_diagnostics",
        }
    }

    /// Whether the experiment draws random configurations.
    pub fn is_monte_carlo(self) -> bool {
        matches!(self, Self::Lln | Self::CltVariance | Self::SamplerDiagnostics)
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown kind '{s}', expected one of {}", names(Self::ALL.map(Self::name))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelChoice {
    Plane,
    Sphere,
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            Self::Plane => "plane",
            Self::Sphere => "sphere",
        }
    }

    /// The sphere uses the default shift `⌊p/2⌋`.
    pub fn geometry(self) -> ModelGeometry {
        match self {
            Self::Plane => ModelGeometry::plane(),
            Self::Sphere => ModelGeometry::projective_line(),
        }
    }
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "plane" => Ok(Self::Plane),
            "sphere" => Ok(Self::Sphere),
            _ => Err(format!("unknown model '{s}', expected plane or sphere")),
        }
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: ModelChoice,
    pub p_list: Vec<u32>,
    pub seed: u64,
    pub test_function: TestFunctionSpec,
    pub n_samples: usize,
    pub boundary_factor: f64,
    pub n_angular: usize,
    pub panels_per_scale: f64,
    pub profile_points: usize,
    pub output_dir: String,
}

impl ExperimentConfig {
    /// A config with every optional key at its default.
    pub fn new(kind: ExperimentKind, model: ModelChoice, p_list: Vec<u32>, seed: u64) -> Self {
        Self {
            kind,
            model,
            p_list,
            seed,
            test_function: TestFunctionSpec::RadialBump { a: 0.1, b: 0.45 },
            n_samples: 200,
            boundary_factor: 1.0,
            n_angular: 256,
            panels_per_scale: 4.0,
            profile_points: 61,
            output_dir: "out".into(),
        }
    }

    pub fn variance_options(&self) -> VarianceOptions {
        VarianceOptions { n_angular: self.n_angular, panels_per_scale: self.panels_per_scale, split_level: None }
    }

    /// Cross-field constraints, each reported against the line of the
    /// offending key (0 when the key was defaulted).
    fn check(&self, lines: &dyn Fn(&str) -> usize) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        let mut err = |key: &str, message: String| errs.push(ConfigError { line: lines(key), message });
        if self.p_list.windows(2).any(|w| w[0] >= w[1]) {
            err("p_list", "p_list must be ascending".into());
        }
        if self.p_list.contains(&0) {
            err("p_list", "p_list entries must be at least 1".into());
        }
        if self.model == ModelChoice::Sphere {
            let odd: Vec<String> = self.p_list.iter().filter(|&&p| p % 2 == 1).map(u32::to_string).collect();
            if !odd.is_empty() {
                err("p_list", format!("the sphere model needs even p, got {}", odd.join(",")));
            }
        }
        if self.kind.is_monte_carlo() && self.n_samples < 2 {
            err("n_samples", format!("n_samples must be at least 2 for {}", self.kind.name()));
        }
        if self.boundary_factor != 1.0 && self.boundary_factor != 0.5 {
            err("boundary_factor", format!("boundary_factor must be 1 or 0.5, got {}", self.boundary_factor));
        }
        if self.n_angular < 8 || self.n_angular % 2 == 1 {
            err("n_angular", format!("n_angular must be even and at least 8, got {}", self.n_angular));
        }
        if !(self.panels_per_scale.is_finite() && self.panels_per_scale > 0.0) {
            err("panels_per_scale", format!("panels_per_scale must be positive, got {}", self.panels_per_scale));
        }
        if self.profile_points < 2 {
            err("profile_points", format!("profile_points must be at least 2, got {}", self.profile_points));
        }
        if self.output_dir.is_empty() || self.output_dir.contains('#') || self.output_dir.trim() != self.output_dir {
            err("output_dir", "output_dir must be nonempty, contain no '#' and no surrounding spaces".into());
        }
        if let Err(e) = self.test_function.validate() {
            err("test_function", e.0);
        }
        errs
    }
}

/// One diagnostic. Line 0 refers to the file as a whole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

const KEYS: [&str; 11] = [
    "kind",
    "model",
    "p_list",
    "seed",
    "test_function",
    "n_samples",
    "boundary_factor",
    "n_angular",
    "panels_per_scale",
    "profile_points",
    "output_dir",
];

fn names<const N: usize>(xs: [&str; N]) -> String {
    xs.join(", ")
}

/// Parses and validates a config, collecting every error in line order.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    parse_unsorted(text).map_err(|mut errs| {
        errs.sort_by_key(|e| e.line);
        errs
    })
}

fn parse_unsorted(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let mut errs = Vec::new();
    let mut entries: Vec<(&'static str, usize, &str)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errs.push(ConfigError { line, message: format!("expected 'key = value', got '{content}'") });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
            errs.push(ConfigError { line, message: format!("unknown key '{key}'") });
            continue;
        };
        if let Some(&(_, first, _)) = entries.iter().find(|e| e.0 == known) {
            errs.push(ConfigError { line, message: format!("duplicate key '{key}' (first set on line {first})") });
            continue;
        }
        entries.push((known, line, value));
    }
    let line_of = |key: &str| entries.iter().find(|e| e.0 == key).map_or(0, |e| e.1);

    fn field<T>(
        entries: &[(&'static str, usize, &str)],
        errs: &mut Vec<ConfigError>,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Option<Option<T>> {
        let Some(&(_, line, value)) = entries.iter().find(|e| e.0 == key) else {
            return Some(None);
        };
        match parse(value) {
            Ok(v) => Some(Some(v)),
            Err(message) => {
                errs.push(ConfigError { line, message: format!("{key}: {message}") });
                None
            }
        }
    }
    let int = |what: &'static str| {
        move |s: &str| s.parse::<usize>().map_err(|_| format!("expected {what}, got '{s}'"))
    };
    let float = |s: &str| match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got '{s}'")),
    };

    let kind = field(&entries, &mut errs, "kind", |s| s.parse::<ExperimentKind>());
    let model = field(&entries, &mut errs, "model", |s| s.parse::<ModelChoice>());
    let p_list = field(&entries, &mut errs, "p_list", |s| {
        let items: Result<Vec<u32>, _> = s.split(',').map(|t| t.trim().parse::<u32>()).collect();
        items.map_err(|_| format!("expected comma-separated integers, got '{s}'"))
    });
    let seed = field(&entries, &mut errs, "seed", |s| {
        s.parse::<u64>().map_err(|_| format!("expected an unsigned 64-bit integer, got '{s}'"))
    });
    let test_function =
        field(&entries, &mut errs, "test_function", |s| s.parse::<TestFunctionSpec>().map_err(|e| e.0));
    let n_samples = field(&entries, &mut errs, "n_samples", int("an integer"));
    let boundary_factor = field(&entries, &mut errs, "boundary_factor", float);
    let n_angular = field(&entries, &mut errs, "n_angular", int("an integer"));
    let panels_per_scale = field(&entries, &mut errs, "panels_per_scale", float);
    let profile_points = field(&entries, &mut errs, "profile_points", int("an integer"));
    let output_dir = field(&entries, &mut errs, "output_dir", |s| Ok::<_, String>(s.to_string()));

    for (key, present) in [
        ("kind", matches!(kind, Some(None))),
        ("model", matches!(model, Some(None))),
        ("p_list", matches!(p_list, Some(None))),
        ("seed", matches!(seed, Some(None))),
    ] {
        if present {
            errs.push(ConfigError { line: 0, message: format!("missing required key '{key}'") });
        }
    }
    let (Some(Some(kind)), Some(Some(model)), Some(Some(p_list)), Some(Some(seed))) = (kind, model, p_list, seed)
    else {
        return Err(errs);
    };
    let mut cfg = ExperimentConfig::new(kind, model, p_list, seed);
    macro_rules! set {
        ($($name:ident),*) => {$(
            match $name {
                Some(Some(v)) => cfg.$name = v,
                Some(None) => {}
                None => return Err(errs),
            }
        )*};
    }
    set!(test_function, n_samples, boundary_factor, n_angular, panels_per_scale, profile_points, output_dir);
    errs.extend(cfg.check(&line_of));
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(errs)
    }
}

/// Writes every key, so `parse_config(&render(c)) == Ok(c)`.
pub fn render(cfg: &ExperimentConfig) -> String {
    let p_list: Vec<String> = cfg.p_list.iter().map(u32::to_string).collect();
    let values = [
        cfg.kind.name().to_string(),
        cfg.model.name().to_string(),
        p_list.join(","),
        cfg.seed.to_string(),
        cfg.test_function.to_string(),
        cfg.n_samples.to_string(),
        cfg.boundary_factor.to_string(),
        cfg.n_angular.to_string(),
        cfg.panels_per_scale.to_string(),
        cfg.profile_points.to_string(),
        cfg.output_dir.clone(),
    ];
    KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
}
