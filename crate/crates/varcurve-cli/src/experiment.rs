//! End-to-end experiment driver: calibrate the noise mixture once, then
//! estimate curvature at the pole of freshly sampled clouds, and persist
//! everything needed to reproduce the run.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use varcurve::curvature::naive_curvature;
use varcurve::decode::{
    calibrate, decoded_curvature, CalibrationConfig, CalibrationReport, SEED_TAG_REPEATS,
};
use varcurve::randgeom::{add_gaussian_noise, derive_seed, north_pole, sample_sphere_uniform, stream_rng};
use varcurve::{Error, Result};

use crate::config::{ExperimentConfig, ResolvedExperiment};

/// Mean, spread, and distance of the mean from the true value, for one
/// estimator's repeat values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub abs_bias: f64,
}

impl EstimatorSummary {
    /// Sample statistics (n - 1 denominator) against a known target.
    pub fn from_values(values: &[f64], truth: f64) -> Self {
        let n = values.len() as f64;
        let mean = varcurve::numeric::neumaier_sum(values.iter().copied()) / n;
        let ss = varcurve::numeric::neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean)));
        let std_dev = if values.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        EstimatorSummary { mean, std_dev, abs_bias: (mean - truth).abs() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResultSummary {
    pub naive: EstimatorSummary,
    pub decoded: EstimatorSummary,
}

/// Inputs that pin down the run: a short hash of the configuration, the
/// seed, and the code version that produced the numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
}

/// Everything a finished experiment produced. `summary` is recomputable
/// from the value lists; `runtime_seconds` is the only field that varies
/// between identically seeded runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub resolved: ResolvedExperiment,
    pub true_curvature: f64,
    pub naive_values: Vec<f64>,
    pub decoded_values: Vec<f64>,
    pub summary: ResultSummary,
    pub provenance: Provenance,
    pub runtime_seconds: f64,
}

/// Short stable identifier for a configuration: SHA-256 of its canonical
/// JSON form, truncated to 12 hex digits.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serialization cannot fail");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

fn attach_context(err: Error, repeat: usize, seed: u64) -> Error {
    let wrap = format!("repeat {repeat} (seed {seed}, stream {repeat}): {err}");
    match err {
        Error::Io(_) => err,
        Error::Domain(_) | Error::Parse(_) => Error::Domain(wrap),
        _ => Error::ConvergenceFailure(wrap),
    }
}

/// Runs one experiment: calibrate on simulated spheres, then sample
/// `estimate_repeats` independent clouds and estimate the curvature at the
/// pole with both estimators. Any failing repeat aborts the run with an
/// error naming the repeat and seed.
pub fn run_experiment(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(ExperimentResult, CalibrationReport)> {
    let resolved = config.resolve()?;
    let start = Instant::now();

    let calib_config = CalibrationConfig {
        m: resolved.m,
        radius: resolved.r,
        epsilon: resolved.epsilon,
        sigma: resolved.sigma,
        density: resolved.n_points as f64, // unused: n_points is set
        n_points: Some(resolved.n_points),
        weight_scale: resolved.weight_scale,
    };
    let report = calibrate(&calib_config, resolved.calibration_trials, seed)?;

    let pole = north_pole(resolved.m, resolved.r);
    let repeat_seed = derive_seed(seed, SEED_TAG_REPEATS);
    let mut naive_values = Vec::with_capacity(resolved.estimate_repeats);
    let mut decoded_values = Vec::with_capacity(resolved.estimate_repeats);
    for rep in 0..resolved.estimate_repeats {
        let mut rng = stream_rng(repeat_seed, rep as u64);
        let mut cloud = sample_sphere_uniform(resolved.m, resolved.r, resolved.n_points, &mut rng);
        if resolved.sigma > 0.0 {
            add_gaussian_noise(&mut cloud, resolved.sigma, &mut rng);
        }
        let naive = naive_curvature(
            &cloud,
            &pole,
            resolved.m,
            resolved.epsilon,
            resolved.epsilon,
            resolved.epsilon_prime,
            resolved.weight_scale,
        )
        .map_err(|e| attach_context(e, rep, seed))?;
        let decoded = decoded_curvature(
            &cloud,
            &pole,
            resolved.m,
            resolved.epsilon,
            resolved.epsilon,
            resolved.epsilon_prime,
            resolved.weight_scale,
            &report.fit,
        )
        .map_err(|e| attach_context(e, rep, seed))?;
        naive_values.push(naive.omega_bar);
        decoded_values.push(decoded.omega_tilde);
    }

    let true_curvature = 1.0 / resolved.r;
    let summary = ResultSummary {
        naive: EstimatorSummary::from_values(&naive_values, true_curvature),
        decoded: EstimatorSummary::from_values(&decoded_values, true_curvature),
    };
    let result = ExperimentResult {
        config: config.clone(),
        resolved,
        true_curvature,
        naive_values,
        decoded_values,
        summary,
        provenance: Provenance {
            config_hash: config_hash(config),
            seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((result, report))
}

fn write_values_csv(path: &Path, name: &str, values: &[f64]) -> Result<()> {
    let mut text = String::from(name);
    text.push('\n');
    for v in values {
        text.push_str(&format!("{v:.17e}\n"));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Writes the run directory `<hash>-seed<seed>/` under `out_dir` with the
/// config echo, the full result, the calibration report, and one CSV per
/// estimator. Returns the directory path.
pub fn write_run_dir(
    out_dir: &Path,
    result: &ExperimentResult,
    calibration: &CalibrationReport,
) -> Result<PathBuf> {
    let dir = out_dir.join(format!(
        "{}-seed{}",
        result.provenance.config_hash, result.provenance.seed
    ));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.json"), result.config.to_json())?;
    let json = serde_json::to_string_pretty(result)
        .map_err(|e| Error::Parse(format!("result: {e}")))?;
    fs::write(dir.join("result.json"), json)?;
    calibration.save(&dir.join("calibration.json"))?;
    write_values_csv(&dir.join("naive_values.csv"), "naive", &result.naive_values)?;
    write_values_csv(&dir.join("decoded_values.csv"), "decoded", &result.decoded_values)?;
    Ok(dir)
}
