//! Executes a configuration and persists its results.
//!
//! A run is one task per `p` in `p_list`. Tasks run concurrently and each
//! produces one CSV held in memory; files are written afterwards in
//! `p_list` order, so output bytes do not depend on scheduling. Task `i`
//! draws from stream `i` of the master seed and its `j`-th configuration from
//! sub-stream `j` of that stream.
//!
//! CSV columns by kind:
//!
//! - `kernel_profile`: `v, model_value, exact_value, abs_error`, where
//!   `model_value = P⁻(x,x)/p` at `μ(x) = v/√p` and `exact_value` is the erf
//!   profile.
//! - `em_validation`: `quantity, v, k, brute, prediction, abs_error, scaled_error`
//!   for the half-line Gaussian sum and the paired differences, the error
//!   scaled by `√p` (half-line) or `√p/k²` (paired).
//! - `lln`: `p, n_samples, eps, droplet_integral, exact_normalized, mc_mean_normalized,
//!   mc_stderr, deviation_fraction`.
//! - `clt_variance`: `p, n_samples, exact_expectation, exact_variance, mc_mean,
//!   mc_variance, mc_stderr, limit_bulk, limit_boundary_f1, limit_boundary_fhalf,
//!   ks_stat, ks_threshold`.
//! - `sampler_diagnostics`: `bin, r_lo, r_hi, observed, expected`, the point
//!   counts in bins of equal expected mass under the one-point function.
//!
//! Numbers use the shortest decimal form that reads back to the same `f64`;
//! absent values are empty fields.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bergman_dpp::dpp::radial_cdf;
use bergman_dpp::euler_maclaurin::{
    gaussian_halfline_sum, halfline_boundary_correction, halfline_leading, paired_gaussian_difference,
    paired_gaussian_prediction,
};
use bergman_dpp::local_model::boundary_profile;
use bergman_dpp::rng::RNG_ALGORITHM;
use bergman_dpp::statistics::hypothesis::{chi_square, ks_normal_statistic, ks_threshold_5pct, mean_and_variance};
use bergman_dpp::statistics::{
    droplet_integral, expectation_exact, limit_variance, richardson_limit, sample_linear_statistics,
    select_boundary_factor, variance_exact_with,
};
use bergman_dpp::{Kernels, ModelGeometry, Point, RngStamp, Sampler};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{render, ExperimentConfig, ExperimentKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_NAME: &str = "manifest.txt";

/// Deviation thresholds reported by `lln`.
pub const LLN_EPSILONS: [f64; 4] = [0.01, 0.02, 0.05, 0.1];
/// Bins of equal expected mass used by `sampler_diagnostics`.
pub const DIAGNOSTIC_BINS: usize = 20;
/// Relative tolerance when matching the extrapolated variance to a boundary factor.
pub const FACTOR_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("task {task} failed: {message}")]
    Task { task: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// What one task produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutput {
    pub name: String,
    pub csv: String,
    pub wall_seconds: f64,
    /// Scalar results echoed into the manifest as `task.<name>.<key>`.
    pub extras: Vec<(String, String)>,
    /// Exact variance, kept for the boundary-factor fit.
    pub exact_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub manifest: PathBuf,
    pub files: Vec<PathBuf>,
    /// Boundary factor selected from the `clt_variance` exact variances, if
    /// there were enough `p` values and exactly one factor matched.
    pub measured_boundary_factor: Option<f64>,
}

pub fn task_name(kind: ExperimentKind, p: u32) -> String {
    format!("{}_p{p}", kind.name())
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Runs every task and writes the CSVs and the manifest.
///
/// On failure the files written so far and the manifest get a `.failed`
/// suffix and the first error is returned.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let dir = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let results: Vec<Result<TaskOutput, RunError>> = cfg
        .p_list
        .par_iter()
        .enumerate()
        .map(|(i, &p)| run_task(cfg, i as u64, p))
        .collect();

    let mut written = Vec::new();
    let mut outputs = Vec::new();
    let mut failure = None;
    for result in results {
        let out = match result {
            Ok(out) => out,
            Err(e) => {
                failure.get_or_insert(e);
                continue;
            }
        };
        let path = dir.join(format!("{}.csv", out.name));
        match fs::write(&path, &out.csv) {
            Ok(()) => written.push(path),
            Err(source) => {
                failure.get_or_insert(RunError::Io { path, source });
            }
        }
        outputs.push(out);
    }

    let measured = if failure.is_none() { measure_boundary_factor(cfg, &outputs) } else { None };
    let manifest_text = manifest(cfg, &outputs, measured, failure.as_ref());
    let manifest_path = dir.join(MANIFEST_NAME);

    if let Some(err) = failure {
        for path in &written {
            let _ = fs::rename(path, failed_name(path));
        }
        let _ = fs::remove_file(&manifest_path);
        let _ = fs::write(failed_name(&manifest_path), manifest_text);
        return Err(err);
    }
    fs::write(&manifest_path, manifest_text).map_err(io_err(&manifest_path))?;
    for path in written.iter().chain([&manifest_path]) {
        let _ = fs::remove_file(failed_name(path));
    }
    Ok(RunSummary { manifest: manifest_path, files: written, measured_boundary_factor: measured.and_then(|m| m.1) })
}

fn failed_name(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".failed");
    PathBuf::from(s)
}

/// `(extrapolated limit, factor)` from the exact variances over `p_list`.
fn measure_boundary_factor(cfg: &ExperimentConfig, outputs: &[TaskOutput]) -> Option<(f64, Option<f64>)> {
    if cfg.kind != ExperimentKind::CltVariance || outputs.len() < 2 {
        return None;
    }
    let points: Vec<(u32, f64)> = cfg.p_list.iter().zip(outputs).map(|(&p, o)| (p, o.exact_variance.unwrap())).collect();
    let limit = richardson_limit(&points)?;
    let model = cfg.model.geometry();
    let f = cfg.test_function.build().expect("validated spec");
    let p_max = *cfg.p_list.last().unwrap();
    let lv = limit_variance(&model, p_max, &f, 1.0);
    Some((limit, select_boundary_factor(limit, lv.bulk, lv.boundary_sum, FACTOR_TOLERANCE)))
}

fn manifest(
    cfg: &ExperimentConfig,
    outputs: &[TaskOutput],
    measured: Option<(f64, Option<f64>)>,
    failure: Option<&RunError>,
) -> String {
    let mut m = String::new();
    let mut kv = |k: &str, v: &str| {
        let _ = writeln!(m, "{k} = {v}");
    };
    kv("artifact", "bergman-dpp");
    kv("version", VERSION);
    kv("status", if failure.is_some() { "failed" } else { "ok" });
    if let Some(e) = failure {
        kv("error", &e.to_string().replace('\n', " "));
    }
    kv("rng_algorithm", RNG_ALGORITHM);
    kv("rng_streams", "task i uses stream i of the master seed; sample j uses substream j of that stream");
    for line in render(cfg).lines() {
        let (k, v) = line.split_once(" = ").expect("rendered line");
        kv(&format!("config.{k}"), v);
    }
    for out in outputs {
        let prefix = format!("task.{}", out.name);
        kv(&format!("{prefix}.file"), &format!("{}.csv", out.name));
        kv(&format!("{prefix}.sha256"), &hex::encode(Sha256::digest(out.csv.as_bytes())));
        kv(&format!("{prefix}.wall_seconds"), &format!("{:.6}", out.wall_seconds));
        for (k, v) in &out.extras {
            kv(&format!("{prefix}.{k}"), v);
        }
    }
    if let Some((limit, factor)) = measured {
        kv("result.variance_limit_extrapolated", &num(limit));
        kv("result.measured_boundary_factor", &factor.map_or("undetermined".into(), num));
    }
    m
}

fn run_task(cfg: &ExperimentConfig, index: u64, p: u32) -> Result<TaskOutput, RunError> {
    let name = task_name(cfg.kind, p);
    let start = Instant::now();
    let stamp = RngStamp::new(cfg.seed, index);
    let fail = |message: String| RunError::Task { task: name.clone(), message };
    let (csv, extras, exact_variance) = match cfg.kind {
        ExperimentKind::KernelProfile => (kernel_profile(cfg, p).map_err(fail)?, Vec::new(), None),
        ExperimentKind::EmValidation => (em_validation(p), Vec::new(), None),
        ExperimentKind::Lln => (lln(cfg, p, stamp).map_err(fail)?, Vec::new(), None),
        ExperimentKind::CltVariance => {
            let (csv, extras, v) = clt_variance(cfg, p, stamp).map_err(fail)?;
            (csv, extras, Some(v))
        }
        ExperimentKind::SamplerDiagnostics => {
            let (csv, extras) = sampler_diagnostics(cfg, p, stamp).map_err(fail)?;
            (csv, extras, None)
        }
    };
    Ok(TaskOutput { name, csv, wall_seconds: start.elapsed().as_secs_f64(), extras, exact_variance })
}

fn kernel_profile(cfg: &ExperimentConfig, p: u32) -> Result<String, String> {
    let model = cfg.model.geometry();
    let k = Kernels::new(&model, p).map_err(|e| e.to_string())?;
    let s = (p as f64).sqrt();
    let mut csv = String::from("v,model_value,exact_value,abs_error\n");
    let n = cfg.profile_points;
    for i in 0..n {
        let v = -3.0 + 6.0 * i as f64 / (n - 1) as f64;
        // Levels outside the image of μ have no point to evaluate at.
        let Some(r) = model.radius_at_level(p, v / s) else { continue };
        let x = Point::new(r, 0.0);
        let model_value = k.partial_diag(x) / p as f64;
        let exact = boundary_profile(v, model.fundamental_field_norm(Point::new(model.boundary_radius(p), 0.0)));
        let _ = writeln!(csv, "{},{},{},{}", num(v), num(model_value), num(exact), num((model_value - exact).abs()));
    }
    Ok(csv)
}

fn em_validation(p: u32) -> String {
    let pf = p as f64;
    let s = pf.sqrt();
    let mut csv = String::from("quantity,v,k,brute,prediction,abs_error,scaled_error\n");
    for v in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let brute = gaussian_halfline_sum(v, 1.0, pf);
        let pred = halfline_leading(v, 1.0, pf) + halfline_boundary_correction(v);
        let err = (brute - pred).abs();
        let _ = writeln!(csv, "halfline,{},0,{},{},{},{}", num(v), num(brute), num(pred), num(err), num(err * s));
    }
    for v in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        for k in 1..=5i64 {
            let brute = paired_gaussian_difference(v, 1.0, pf, k);
            let pred = paired_gaussian_prediction(v, k);
            let err = (brute - pred).abs();
            let scaled = err * s / (k * k) as f64;
            let _ = writeln!(csv, "paired,{},{k},{},{},{},{}", num(v), num(brute), num(pred), num(err), num(scaled));
        }
    }
    csv
}

fn lln(cfg: &ExperimentConfig, p: u32, stamp: RngStamp) -> Result<String, String> {
    let model = cfg.model.geometry();
    let f = cfg.test_function.build().map_err(|e| e.0)?;
    let pf = p as f64;
    let target = droplet_integral(&model, p, &f);
    let exact = expectation_exact(&model, p, &f) / pf;
    let values: Vec<f64> = sample_linear_statistics(&model, p, &f, cfg.n_samples, stamp)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|v| v / pf)
        .collect();
    let (mean, var) = mean_and_variance(&values);
    let se = (var / values.len() as f64).sqrt();
    let mut csv =
        String::from("p,n_samples,eps,droplet_integral,exact_normalized,mc_mean_normalized,mc_stderr,deviation_fraction\n");
    for eps in LLN_EPSILONS {
        let frac = values.iter().filter(|&&v| (v - target).abs() > eps).count() as f64 / values.len() as f64;
        let _ = writeln!(
            csv,
            "{p},{},{},{},{},{},{},{}",
            values.len(),
            num(eps),
            num(target),
            num(exact),
            num(mean),
            num(se),
            num(frac)
        );
    }
    Ok(csv)
}

type CltOutput = (String, Vec<(String, String)>, f64);

fn clt_variance(cfg: &ExperimentConfig, p: u32, stamp: RngStamp) -> Result<CltOutput, String> {
    let model = cfg.model.geometry();
    let f = cfg.test_function.build().map_err(|e| e.0)?;
    let values = sample_linear_statistics(&model, p, &f, cfg.n_samples, stamp).map_err(|e| e.to_string())?;
    let n = values.len();
    let (mc_mean, mc_var) = mean_and_variance(&values);
    let exact_e = expectation_exact(&model, p, &f);
    let exact_v = variance_exact_with(&model, p, &f, &cfg.variance_options());
    let lv = limit_variance(&model, p, &f, cfg.boundary_factor);
    let (ks, ks_thr) = if n >= 100 {
        (Some(ks_normal_statistic(&values).unwrap_or(0.0)), Some(ks_threshold_5pct(n)))
    } else {
        (None, None)
    };
    let mut csv = String::from(
        "p,n_samples,exact_expectation,exact_variance,mc_mean,mc_variance,mc_stderr,limit_bulk,limit_boundary_f1,limit_boundary_fhalf,ks_stat,ks_threshold\n",
    );
    let _ = writeln!(
        csv,
        "{p},{n},{},{},{},{},{},{},{},{},{},{}",
        num(exact_e),
        num(exact_v),
        num(mc_mean),
        num(mc_var),
        num((mc_var / n as f64).sqrt()),
        num(lv.bulk),
        num(lv.boundary_sum),
        num(0.5 * lv.boundary_sum),
        opt(ks),
        opt(ks_thr)
    );
    let extras = vec![
        ("limit_expectation".into(), num(p as f64 * droplet_integral(&model, p, &f))),
        ("limit_variance".into(), num(lv.total())),
        ("ks_pass".into(), ks.zip(ks_thr).map_or("n/a".into(), |(s, t)| (s < t).to_string())),
    ];
    Ok((csv, extras, exact_v))
}

/// Radius at which the one-point mass fraction reaches `q`.
fn radial_quantile(model: &ModelGeometry, p: u32, q: f64) -> Result<f64, String> {
    // Bisect in u = r²/(1+r²) so the search interval is bounded on both models.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let r = (mid / (1.0 - mid)).sqrt();
        if radial_cdf(model, p, r).map_err(|e| e.to_string())? < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    Ok((u / (1.0 - u)).sqrt())
}

fn sampler_diagnostics(cfg: &ExperimentConfig, p: u32, stamp: RngStamp) -> Result<(String, Vec<(String, String)>), String> {
    let model = cfg.model.geometry();
    let sampler = Sampler::new(&model, p).map_err(|e| e.to_string())?;
    let configs: Vec<_> = (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|j| sampler.sample(stamp.substream(j)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut edges = vec![0.0];
    for b in 1..DIAGNOSTIC_BINS {
        edges.push(radial_quantile(&model, p, b as f64 / DIAGNOSTIC_BINS as f64)?);
    }
    edges.push(f64::INFINITY);
    let mut observed = vec![0u64; DIAGNOSTIC_BINS];
    for c in &configs {
        for x in &c.points {
            let r = x.norm();
            let bin = edges[1..].iter().position(|&e| r < e).unwrap_or(DIAGNOSTIC_BINS - 1);
            observed[bin] += 1;
        }
    }
    let total: u64 = observed.iter().sum();
    let expected = vec![total as f64 / DIAGNOSTIC_BINS as f64; DIAGNOSTIC_BINS];
    let mut csv = String::from("bin,r_lo,r_hi,observed,expected\n");
    for b in 0..DIAGNOSTIC_BINS {
        let _ = writeln!(csv, "{b},{},{},{},{}", num(edges[b]), num(edges[b + 1]), observed[b], num(expected[b]));
    }
    // Points of one configuration repel, so bin counts vary less than
    // independent draws would and the test is conservative.
    let chi = chi_square(&observed, &expected, 0);
    let counts = configs.iter().map(|c| c.len());
    let mean_log_density = configs.iter().map(|c| c.log_density).sum::<f64>() / configs.len() as f64;
    let extras = vec![
        ("rank".into(), sampler.rank().to_string()),
        ("min_points".into(), counts.clone().min().unwrap_or(0).to_string()),
        ("max_points".into(), counts.max().unwrap_or(0).to_string()),
        ("mean_log_density".into(), num(mean_log_density)),
        ("chi_square".into(), num(chi.statistic)),
        ("chi_square_dof".into(), chi.dof.to_string()),
        ("chi_square_p_value".into(), num(chi.p_value)),
    ];
    Ok((csv, extras))
}
