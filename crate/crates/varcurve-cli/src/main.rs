//! Command-line harness: sampling, calibration, estimation, full
//! experiments, density tables, and histogram plots.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 numerical
//! failure, 4 I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use varcurve::curvature::naive_curvature;
use varcurve::decode::{calibrate, decoded_curvature, CalibrationConfig, CalibrationReport};
use varcurve::pushforward::{MixtureAngleParams, MixtureCurvatureParams};
use varcurve::randgeom::{add_gaussian_noise, sample_sphere_uniform, stream_rng, PointCloud};
use varcurve::Error;

use varcurve_cli::config::{profile, ExperimentConfig, Sampling, PROFILE_NAMES};
use varcurve_cli::density::{tabulate_density, write_density_csv, DensitySpec};
use varcurve_cli::experiment::{run_experiment, write_run_dir};
use varcurve_cli::histogram::emit_histogram;

#[derive(Parser)]
#[command(name = "varcurve", version, about = "Curvature estimation for noisy point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a (possibly noisy) sphere cloud to CSV or binary.
    Sample(SampleArgs),
    /// Fit the angular noise mixture for a sphere configuration.
    Calibrate(CalibrateArgs),
    /// Estimate curvature at a point of an existing cloud.
    Estimate(EstimateArgs),
    /// Run a full experiment from a config file or a named profile.
    Experiment(ExperimentArgs),
    /// Tabulate an analytic angle or curvature density to CSV.
    Density(DensityArgs),
    /// Render a normalized histogram (SVG plus CSV) from a value column.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Manifold dimension.
    #[arg(long)]
    m: usize,
    /// Sphere radius.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Number of points (overrides --density).
    #[arg(long)]
    n: Option<usize>,
    /// Points per unit surface area.
    #[arg(long)]
    density: Option<f64>,
    /// Ambient Gaussian noise level.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long)]
    seed: u64,
    /// Output path; `.csv` writes text, anything else the binary format.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Tangent-fit ball radius.
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    weight_scale: f64,
    /// Simulated tangent fits to draw.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Report path (JSON).
    #[arg(long, default_value = "calibration.json")]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Cloud file (`.csv` or the binary format).
    #[arg(long)]
    cloud: PathBuf,
    /// Calibration report for the decoded estimator.
    #[arg(long)]
    calibration: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    epsilon: f64,
    /// Annulus outer radius.
    #[arg(long)]
    epsilon_prime: f64,
    #[arg(long, default_value_t = 5.0)]
    weight_scale: f64,
    /// Query point as comma-separated coordinates.
    #[arg(long, conflicts_with = "at_index")]
    at: Option<String>,
    /// Query point as an index into the cloud.
    #[arg(long)]
    at_index: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config file (JSON).
    #[arg(long, conflicts_with = "profile")]
    config: Option<PathBuf>,
    /// Named reference configuration.
    #[arg(long)]
    profile: Option<String>,
    /// RNG seed; required here or in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of estimation repeats.
    #[arg(long)]
    repeats: Option<usize>,
    /// Override the number of calibration trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the cloud size.
    #[arg(long)]
    n_points: Option<usize>,
    /// Replace the sampling mode with noisy sampling at this sigma.
    #[arg(long, conflicts_with = "perfect")]
    sigma: Option<f64>,
    /// Replace the sampling mode with perfect sampling.
    #[arg(long)]
    perfect: bool,
    /// Directory that receives the run directory.
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DensityKind {
    Theta,
    Omega,
}

#[derive(Args)]
struct DensityArgs {
    /// Which density: the folded angle or the curvature value.
    #[arg(long, value_enum)]
    kind: DensityKind,
    #[arg(long)]
    m: usize,
    /// True angle parameter.
    #[arg(long)]
    alpha: f64,
    /// Concentrations, comma separated.
    #[arg(long, value_delimiter = ',')]
    kappas: Vec<f64>,
    /// Mixture weights, comma separated; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Sphere radius (curvature density only).
    #[arg(long)]
    r: Option<f64>,
    /// Grid range; defaults to the support.
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    /// Grid size.
    #[arg(long, default_value_t = 1_000)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// File with one value per line (a header line is skipped).
    #[arg(long)]
    values: PathBuf,
    #[arg(long, default_value_t = 32)]
    bins: usize,
    /// Position of the vertical reference line.
    #[arg(long)]
    reference: f64,
    /// SVG output path; a CSV with the bin densities lands next to it.
    #[arg(long)]
    out: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::Parse(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code_for(&err))
}

fn read_cloud(path: &Path) -> varcurve::Result<PointCloud> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        PointCloud::read_csv(path)
    } else {
        PointCloud::read_binary(path)
    }
}

fn cmd_sample(args: SampleArgs) -> varcurve::Result<()> {
    let n = match (args.n, args.density) {
        (Some(n), _) => n,
        (None, Some(d)) => {
            let area = varcurve::specfun::sphere_surface_area(args.m, args.r)?;
            (d * area).ceil() as usize
        }
        (None, None) => {
            return Err(Error::Domain("one of --n or --density is required".into()))
        }
    };
    if !(args.sigma.is_finite() && args.sigma >= 0.0) {
        return Err(Error::Domain(format!("sigma must be nonnegative, got {}", args.sigma)));
    }
    let mut rng = stream_rng(args.seed, 0);
    let mut cloud = sample_sphere_uniform(args.m, args.r, n, &mut rng);
    if args.sigma > 0.0 {
        add_gaussian_noise(&mut cloud, args.sigma, &mut rng);
    }
    if args.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        cloud.write_csv(&args.out, true)?;
    } else {
        cloud.write_binary(&args.out)?;
    }
    println!("wrote {} points in dimension {} to {}", n, args.m + 1, args.out.display());
    Ok(())
}

fn cmd_calibrate(args: CalibrateArgs) -> varcurve::Result<()> {
    let config = CalibrationConfig {
        m: args.m,
        radius: args.r,
        epsilon: args.epsilon,
        sigma: args.sigma,
        density: args.density.unwrap_or(0.0),
        n_points: args.n_points,
        weight_scale: args.weight_scale,
    };
    if args.n_points.is_none() && args.density.is_none() {
        return Err(Error::Domain("one of --n-points or --density is required".into()));
    }
    let report = calibrate(&config, args.trials, args.seed)?;
    report.save(&args.out)?;
    println!(
        "calibrated {} components from {} trials ({} skipped): {}",
        report.fit.n_components(),
        report.trials,
        report.skipped,
        args.out.display()
    );
    for (w, k) in report.fit.weights.iter().zip(&report.fit.kappas) {
        println!("  weight {w:.4}  kappa {k:.6e}");
    }
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> varcurve::Result<()> {
    let cloud = read_cloud(&args.cloud)?;
    let report = CalibrationReport::load(&args.calibration)?;
    let x: Vec<f64> = match (&args.at, args.at_index) {
        (Some(text), None) => text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad coordinate {t:?}")))
            })
            .collect::<varcurve::Result<_>>()?,
        (None, Some(i)) => {
            if i >= cloud.len() {
                return Err(Error::Domain(format!(
                    "--at-index {i} is out of range for {} points",
                    cloud.len()
                )));
            }
            cloud.point(i).to_vec()
        }
        _ => return Err(Error::Domain("exactly one of --at or --at-index is required".into())),
    };
    if x.len() != cloud.ambient_dim() {
        return Err(Error::Domain(format!(
            "query point has dimension {}, cloud has {}",
            x.len(),
            cloud.ambient_dim()
        )));
    }
    let naive = naive_curvature(
        &cloud,
        &x,
        args.m,
        args.epsilon,
        args.epsilon,
        args.epsilon_prime,
        args.weight_scale,
    )?;
    let decoded = decoded_curvature(
        &cloud,
        &x,
        args.m,
        args.epsilon,
        args.epsilon,
        args.epsilon_prime,
        args.weight_scale,
        &report.fit,
    )?;
    let out = serde_json::json!({
        "naive": { "omega_bar": naive.omega_bar, "n_samples": naive.samples.len() },
        "decoded": decoded,
    });
    let text = serde_json::to_string_pretty(&out).expect("estimate output serializes");
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> varcurve::Result<()> {
    let mut config = match (&args.config, &args.profile) {
        (Some(path), None) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        (None, Some(name)) => profile(name).ok_or_else(|| {
            Error::Domain(format!(
                "unknown profile {name:?}; available: {}",
                PROFILE_NAMES.join(", ")
            ))
        })?,
        _ => {
            return Err(Error::Domain(
                "exactly one of --config or --profile is required".into(),
            ))
        }
    };
    if let Some(sigma) = args.sigma {
        config.sampling = Sampling::Noisy { sigma };
    }
    if args.perfect {
        config.sampling = Sampling::Perfect;
    }
    if args.repeats.is_some() {
        config.estimate_repeats = args.repeats;
    }
    if args.trials.is_some() {
        config.calibration_trials = args.trials;
    }
    if args.n_points.is_some() {
        config.n_points = args.n_points;
    }
    let seed = args
        .seed
        .or(config.seed)
        .ok_or_else(|| Error::Domain("a seed is required: pass --seed or set it in the config".into()))?;
    config.seed = Some(seed);

    let resolved = config.resolve()?;
    for warning in &resolved.warnings {
        eprintln!("warning: {warning}");
    }

    let (result, calibration) = run_experiment(&config, seed)?;
    let dir = write_run_dir(&args.out_dir, &result, &calibration)?;
    let bins = (result.naive_values.len() as f64).sqrt().ceil().clamp(4.0, 64.0) as usize;
    emit_histogram(
        &result.naive_values,
        bins,
        result.true_curvature,
        &dir.join("naive_hist.svg"),
    )?;
    emit_histogram(
        &result.decoded_values,
        bins,
        result.true_curvature,
        &dir.join("decoded_hist.svg"),
    )?;

    println!("run directory: {}", dir.display());
    println!("true curvature: {}", result.true_curvature);
    let s = &result.summary;
    println!(
        "naive:   mean {:.6}  std {:.6}  abs bias {:.6}",
        s.naive.mean, s.naive.std_dev, s.naive.abs_bias
    );
    println!(
        "decoded: mean {:.6}  std {:.6}  abs bias {:.6}",
        s.decoded.mean, s.decoded.std_dev, s.decoded.abs_bias
    );
    println!("runtime: {:.2}s", result.runtime_seconds);
    Ok(())
}

fn cmd_density(args: DensityArgs) -> varcurve::Result<()> {
    if args.kappas.is_empty() {
        return Err(Error::Domain("--kappas needs at least one value".into()));
    }
    let weights = match args.weights {
        Some(w) => w,
        None => vec![1.0 / args.kappas.len() as f64; args.kappas.len()],
    };
    let (spec, lo, hi) = match args.kind {
        DensityKind::Theta => {
            let p = MixtureAngleParams::new(args.m, args.alpha, weights, args.kappas)?;
            let lo = args.lo.unwrap_or(0.0);
            let hi = args.hi.unwrap_or(std::f64::consts::FRAC_PI_2);
            (DensitySpec::Theta(p), lo, hi)
        }
        DensityKind::Omega => {
            let r = args
                .r
                .ok_or_else(|| Error::Domain("--r is required for the curvature density".into()))?;
            let p = MixtureCurvatureParams::from_radius(args.m, args.alpha, r, weights, args.kappas)?;
            let top = p.scale / 2.0f64.sqrt();
            let lo = args.lo.unwrap_or(top * 1e-6);
            let hi = args.hi.unwrap_or(top);
            (DensitySpec::Omega(p), lo, hi)
        }
    };
    let rows = tabulate_density(&spec, lo, hi, args.n)?;
    write_density_csv(&rows, &args.out)?;
    println!("wrote {} grid points to {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> varcurve::Result<()> {
    let text = std::fs::read_to_string(&args.values)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => continue, // header
            Err(_) => return Err(Error::Parse(format!("line {}: bad value {line:?}", i + 1))),
        }
    }
    let hist = emit_histogram(&values, args.bins, args.reference, &args.out)?;
    println!(
        "histogram with {} bins over [{:.6}, {:.6}]: {}",
        hist.densities.len(),
        hist.lo,
        hist.hi,
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Density(args) => cmd_density(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
