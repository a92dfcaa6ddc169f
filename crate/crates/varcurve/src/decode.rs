//! The decoding pipeline: calibrate the angular error of the tangent
//! estimator on a reference sphere, fit a concentration mixture to the
//! calibration angles by EM, and invert the observed angle
//! distribution at estimation time by maximum likelihood to recover a
//! bias-corrected curvature value.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curvature::curvature_samples;
use crate::exec;
use crate::numeric::{golden_max, neumaier_sum};
use crate::pushforward::ThetaTerms;
use crate::randgeom::{
    add_gaussian_noise, derive_seed, north_pole, sample_sphere_uniform, stream_rng,
    PointCloud, UnitVector,
};
use crate::specfun::sphere_surface_area;
use crate::tangent::{estimate_tangent, tangent_angle};
use crate::{Error, Result};

/// Seed-derivation tag for calibration trials.
pub const SEED_TAG_CALIBRATION: u64 = 1;
/// Seed-derivation tag for repeated estimation runs.
pub const SEED_TAG_REPEATS: u64 = 2;

/// Concentration search range of the mixture fit and the angle MLE.
const KAPPA_MIN: f64 = 1e-2;
const KAPPA_MAX: f64 = 1e8;

/// Hard cap on mixture size; the model selection never goes this far.
const MAX_COMPONENTS: usize = 8;

/// Fraction of calibration trials allowed to fail before calibration
/// as a whole is considered broken.
const MAX_SKIP_FRACTION: f64 = 0.01;

/// Reference-surface description used to calibrate the tangent
/// estimator: a sphere of intrinsic dimension `m` and radius `radius`,
/// sampled at `density` points per unit `m`-volume (or exactly
/// `n_points` when set), with ambient Gaussian noise `sigma`, fitted
/// with PCA radius `epsilon` and the given weight scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub m: usize,
    pub radius: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub density: f64,
    pub n_points: Option<usize>,
    pub weight_scale: f64,
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Domain(format!("need m >= 2, got {}", self.m)));
        }
        if !(self.radius > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Domain(format!(
                "radius and epsilon must be positive, got {} and {}",
                self.radius, self.epsilon
            )));
        }
        if !(self.sigma >= 0.0) || !(self.weight_scale >= 0.0) {
            return Err(Error::Domain(format!(
                "sigma and weight_scale must be nonnegative, got {} and {}",
                self.sigma, self.weight_scale
            )));
        }
        if self.n_points.is_none() && !(self.density > 0.0) {
            return Err(Error::Domain(
                "either density > 0 or an explicit n_points is required".into(),
            ));
        }
        if self.effective_points()? < self.m + 2 {
            return Err(Error::Domain("too few sample points for a tangent fit".into()));
        }
        Ok(())
    }

    /// Number of points per sampled cloud: the explicit override, or
    /// `ceil(density * surface area)`.
    pub fn effective_points(&self) -> Result<usize> {
        if let Some(n) = self.n_points {
            return Ok(n);
        }
        let area = sphere_surface_area(self.m, self.radius)?;
        let n = (self.density * area).ceil();
        if !(n >= 1.0) || n > 1e12 {
            return Err(Error::Domain(format!("implied point count {n} is unusable")));
        }
        Ok(n as usize)
    }
}

/// A fitted mixture of angular-error components: `weights[j]` of the
/// mass has concentration `kappas[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub weights: Vec<f64>,
    pub kappas: Vec<f64>,
    pub log_likelihood: f64,
    pub bic: f64,
    pub iterations: usize,
}

impl MixtureFit {
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    fn validate(&self) -> Result<()> {
        crate::pushforward::validate_mixture(&self.weights, &self.kappas)
    }
}

/// Calibration output: the configuration, trial accounting, and the
/// fitted angular-error mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub config: CalibrationConfig,
    pub trials: usize,
    pub skipped: usize,
    pub n_points: usize,
    pub fit: MixtureFit,
}

impl CalibrationReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(w, self)
            .map_err(|e| Error::Parse(format!("serializing calibration report: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let r = BufReader::new(File::open(path)?);
        let report: CalibrationReport = serde_json::from_reader(r)
            .map_err(|e| Error::Parse(format!("reading calibration report: {e}")))?;
        report.fit.validate()?;
        Ok(report)
    }
}

/// Runs `trials` independent calibration trials. Each trial samples a
/// fresh noisy cloud on the reference sphere, fits the tangent space
/// at the north pole, and records the folded angle between the fitted
/// normal and the exact one. Trials whose tangent fit fails are
/// skipped; more than 1% of skips aborts the calibration. The angles
/// are then summarized by `fit_vmf_mixture`.
///
/// Trial `t` draws from the stream `t` of a seed derived for
/// calibration, so results are independent of evaluation order.
pub fn calibrate(config: &CalibrationConfig, trials: usize, seed: u64) -> Result<CalibrationReport> {
    config.validate()?;
    if trials == 0 {
        return Err(Error::Domain("need at least one calibration trial".into()));
    }
    let n_points = config.effective_points()?;
    let pole = north_pole(config.m, config.radius);
    let exact_normal = {
        let mut v = vec![0.0; config.m + 1];
        v[config.m] = 1.0;
        UnitVector::new(v)?
    };
    let cal_seed = derive_seed(seed, SEED_TAG_CALIBRATION);

    let outcomes = exec::map_indexed(trials, |t| {
        let mut rng = stream_rng(cal_seed, t as u64);
        let mut cloud = sample_sphere_uniform(config.m, config.radius, n_points, &mut rng);
        add_gaussian_noise(&mut cloud, config.sigma, &mut rng);
        match estimate_tangent(&cloud, &pole, config.m, config.epsilon, config.weight_scale) {
            Ok(est) => Some(tangent_angle(&exact_normal, &est.normal)),
            Err(_) => None,
        }
    });

    let angles: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let skipped = trials - angles.len();
    if (skipped as f64) > MAX_SKIP_FRACTION * trials as f64 {
        return Err(Error::TrialFailures { skipped, trials });
    }

    let fit = fit_vmf_mixture(&angles, config.m, 4)?;
    Ok(CalibrationReport { config: config.clone(), trials, skipped, n_points, fit })
}

/// Per-angle precomputation shared by the EM fit and the angle MLE:
/// `(ln sin, sin, cos)` per angle, with the sine clamped away from
/// zero so exact-zero angles keep finite log-likelihoods.
fn precompute_angles(angles: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    if angles.is_empty() {
        return Err(Error::Domain("empty angle sample".into()));
    }
    let mut out = Vec::with_capacity(angles.len());
    for &t in angles {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&t) {
            return Err(Error::Domain(format!("angle {t} outside [0, pi/2]")));
        }
        let (s, c) = t.sin_cos();
        out.push((s.max(1e-12).ln(), s, c));
    }
    Ok(out)
}

/// Expectation-maximization fit of a `K`-component concentration
/// mixture to folded angles, for `K = 1..=max_components`; the
/// reported fit minimizes BIC (ties go to fewer components).
pub fn fit_vmf_mixture(angles: &[f64], m: usize, max_components: usize) -> Result<MixtureFit> {
    if m < 2 {
        return Err(Error::Domain(format!("need m >= 2, got {m}")));
    }
    if max_components == 0 || max_components > MAX_COMPONENTS {
        return Err(Error::Domain(format!(
            "max_components must lie in 1..={MAX_COMPONENTS}, got {max_components}"
        )));
    }
    let pre = precompute_angles(angles)?;
    let k_cap = max_components.min(pre.len());

    let mut best: Option<MixtureFit> = None;
    let mut first_err: Option<Error> = None;
    for k in 1..=k_cap {
        match em_fit(&pre, m, k) {
            Ok(fit) => {
                if best.as_ref().map_or(true, |b| fit.bic < b.bic) {
                    best = Some(fit);
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    best.ok_or_else(|| {
        first_err.unwrap_or_else(|| Error::ConvergenceFailure("no mixture size converged".into()))
    })
}

/// Sorted-quantile initialization: block `j` of the sorted angles
/// seeds component `j` with the small-angle moment estimate
/// `kappa ~ m / mean(theta^2)`.
fn em_init(pre: &[(f64, f64, f64)], m: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let n = pre.len();
    let mut sines: Vec<f64> = pre.iter().map(|p| p.1).collect();
    sines.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut kappas = Vec::with_capacity(k);
    for j in 0..k {
        let lo = j * n / k;
        let hi = ((j + 1) * n / k).max(lo + 1).min(n);
        let mean_sq = sines[lo..hi].iter().map(|s| s * s).sum::<f64>() / (hi - lo) as f64;
        let kappa = (m as f64 / mean_sq.max(1e-16)).clamp(KAPPA_MIN, KAPPA_MAX);
        kappas.push(kappa);
    }
    // keep initial components distinct even for concentrated data
    for j in 1..k {
        if kappas[j] >= kappas[j - 1] {
            kappas[j] = (kappas[j - 1] / 4.0).max(KAPPA_MIN);
        }
    }
    (vec![1.0 / k as f64; k], kappas)
}

fn em_fit(pre: &[(f64, f64, f64)], m: usize, k: usize) -> Result<MixtureFit> {
    const MAX_ITER: usize = 500;
    let n = pre.len();
    let nf = n as f64;
    let ll_tol = 1e-9 * nf.max(1.0);

    let (mut weights, mut kappas) = em_init(pre, m, k);
    let mut resp = vec![0.0f64; n * k];
    let mut prev_ll = f64::NEG_INFINITY;
    let mut iterations = 0;

    loop {
        iterations += 1;
        // E-step: responsibilities and the current log-likelihood
        let terms: Vec<ThetaTerms> =
            kappas.iter().map(|&kp| ThetaTerms::new(m, kp, 0.0)).collect();
        let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        let rows = exec::map_indexed(n, |i| {
            let (ln_sin, sin_t, cos_t) = pre[i];
            let mut buf = [f64::NEG_INFINITY; MAX_COMPONENTS];
            let mut hi = f64::NEG_INFINITY;
            for j in 0..k {
                let l = log_w[j] + terms[j].eval(ln_sin, sin_t, cos_t);
                buf[j] = l;
                hi = hi.max(l);
            }
            let mut row = [0.0f64; MAX_COMPONENTS];
            let lse = if hi.is_finite() {
                let mut acc = 0.0;
                for j in 0..k {
                    row[j] = (buf[j] - hi).exp();
                    acc += row[j];
                }
                for r in row.iter_mut().take(k) {
                    *r /= acc;
                }
                hi + acc.ln()
            } else {
                // all components vanish here; spread responsibility evenly
                for r in row.iter_mut().take(k) {
                    *r = 1.0 / k as f64;
                }
                f64::NEG_INFINITY
            };
            (row, lse)
        });
        let ll = neumaier_sum(rows.iter().map(|r| r.1));
        for (i, r) in rows.iter().enumerate() {
            resp[i * k..(i + 1) * k].copy_from_slice(&r.0[..k]);
        }

        if ll < prev_ll - 1e-8 * nf.max(1.0) {
            return Err(Error::ConvergenceFailure(format!(
                "log-likelihood decreased from {prev_ll} to {ll} at iteration {iterations}"
            )));
        }
        let converged = (ll - prev_ll).abs() < ll_tol && iterations > 1;
        prev_ll = ll;
        if converged {
            break;
        }
        if iterations >= MAX_ITER {
            return Err(Error::ConvergenceFailure(format!(
                "EM did not converge within {MAX_ITER} iterations (ll = {ll})"
            )));
        }

        // M-step: weights in closed form, concentrations by a golden
        // search in ln kappa, never accepting a worse objective
        for j in 0..k {
            let mass = neumaier_sum((0..n).map(|i| resp[i * k + j]));
            weights[j] = mass / nf;
            if mass <= 0.0 {
                continue;
            }
            let objective = |ln_kappa: f64| {
                let t = ThetaTerms::new(m, ln_kappa.exp(), 0.0);
                exec::sum_indexed(n, |i| {
                    let r = resp[i * k + j];
                    if r == 0.0 {
                        0.0
                    } else {
                        let (ln_sin, sin_t, cos_t) = pre[i];
                        r * t.eval(ln_sin, sin_t, cos_t)
                    }
                })
            };
            let old_q = objective(kappas[j].ln());
            let res = golden_max(objective, KAPPA_MIN.ln(), KAPPA_MAX.ln(), 1e-6, 120);
            if res.value > old_q {
                kappas[j] = res.x.exp();
            }
        }
    }

    // order components by concentration for a canonical presentation
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| kappas[a].partial_cmp(&kappas[b]).unwrap());
    let weights: Vec<f64> = order.iter().map(|&j| weights[j]).collect();
    let kappas: Vec<f64> = order.iter().map(|&j| kappas[j]).collect();
    // renormalize away summation dust so downstream validation holds
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let bic = -2.0 * prev_ll + (2.0 * k as f64 - 1.0) * nf.ln();
    Ok(MixtureFit { weights, kappas, log_likelihood: prev_ll, bic, iterations })
}

/// Diagnostics of the angle maximum-likelihood step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

/// Grid size of the coarse scan that brackets the likelihood maximum.
const MLE_GRID: usize = 64;
const ALPHA_MARGIN: f64 = 1e-4;

/// Maximum-likelihood estimate of the underlying noise-free angle
/// `alpha`, given observed folded angles and the calibrated
/// concentration mixture of the normal estimator. A coarse grid scan
/// over `(0, pi/2)` brackets the maximum, which a golden search then
/// refines; an estimate pinned to the search boundary is an error.
pub fn mle_alpha(angles: &[f64], m: usize, noise: &MixtureFit) -> Result<(f64, MleDiagnostics)> {
    if m < 2 {
        return Err(Error::Domain(format!("need m >= 2, got {m}")));
    }
    noise.validate()?;
    let k = noise.n_components();
    if k > MAX_COMPONENTS {
        return Err(Error::Domain(format!("mixture too large: {k} components")));
    }
    let pre = precompute_angles(angles)?;
    let n = pre.len();
    let log_w: Vec<f64> = noise.weights.iter().map(|w| w.ln()).collect();

    let ll_at = |alpha: f64| -> f64 {
        let terms: Vec<ThetaTerms> =
            noise.kappas.iter().map(|&kp| ThetaTerms::new(m, kp, alpha)).collect();
        exec::sum_indexed(n, |i| {
            let (ln_sin, sin_t, cos_t) = pre[i];
            let mut buf = [f64::NEG_INFINITY; MAX_COMPONENTS];
            let mut hi = f64::NEG_INFINITY;
            for j in 0..k {
                let l = log_w[j] + terms[j].eval(ln_sin, sin_t, cos_t);
                buf[j] = l;
                hi = hi.max(l);
            }
            if !hi.is_finite() {
                return -1e300; // impossible angle under every component
            }
            let mut acc = 0.0;
            for v in buf.iter().take(k) {
                acc += (v - hi).exp();
            }
            hi + acc.ln()
        })
    };

    let lo = ALPHA_MARGIN;
    let hi = std::f64::consts::FRAC_PI_2 - ALPHA_MARGIN;
    let span = hi - lo;
    let mut best_idx = 0;
    let mut best_val = f64::NEG_INFINITY;
    let grid: Vec<f64> = (0..MLE_GRID)
        .map(|i| lo + span * i as f64 / (MLE_GRID - 1) as f64)
        .collect();
    for (i, &a) in grid.iter().enumerate() {
        let v = ll_at(a);
        if v > best_val {
            best_val = v;
            best_idx = i;
        }
    }
    let bracket_lo = grid[best_idx.saturating_sub(1)];
    let bracket_hi = grid[(best_idx + 1).min(MLE_GRID - 1)];
    let refined = golden_max(&ll_at, bracket_lo, bracket_hi, 1e-9, 200);

    let alpha_hat = refined.x;
    let pinned = (best_idx == 0 && (alpha_hat - lo).abs() < 1e-6 * span)
        || (best_idx == MLE_GRID - 1 && (hi - alpha_hat).abs() < 1e-6 * span);
    if pinned {
        return Err(Error::OptimizationFailure(format!(
            "likelihood maximum pinned at the search boundary (alpha = {alpha_hat})"
        )));
    }
    Ok((
        alpha_hat,
        MleDiagnostics {
            iterations: refined.iterations,
            converged: refined.converged,
            log_likelihood: refined.value,
        },
    ))
}

/// A decoded (bias-corrected) curvature estimate at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodedCurvature {
    pub alpha_hat: f64,
    pub d_bar: f64,
    pub omega_tilde: f64,
    pub n_samples: usize,
    pub diagnostics: MleDiagnostics,
}

/// The decoded estimator at `x`: collect annulus curvature samples as
/// in the naive estimator, recover the underlying noise-free angle by
/// maximum likelihood under the calibrated noise mixture, and convert
/// it back to a curvature with the mean chord length,
/// `2 sin(alpha_hat / 2) / d_bar`.
#[allow(clippy::too_many_arguments)]
pub fn decoded_curvature(
    cloud: &PointCloud,
    x: &[f64],
    m: usize,
    epsilon: f64,
    inner: f64,
    outer: f64,
    weight_scale: f64,
    noise: &MixtureFit,
) -> Result<DecodedCurvature> {
    let samples = curvature_samples(cloud, x, m, epsilon, inner, outer, weight_scale)?;
    let thetas: Vec<f64> = samples.iter().map(|s| s.theta).collect();
    let d_bar = neumaier_sum(samples.iter().map(|s| s.chord)) / samples.len() as f64;
    let (alpha_hat, diagnostics) = mle_alpha(&thetas, m, noise)?;
    Ok(DecodedCurvature {
        alpha_hat,
        d_bar,
        omega_tilde: 2.0 * (0.5 * alpha_hat).sin() / d_bar,
        n_samples: samples.len(),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randgeom::sample_vmf;
    use rand::Rng;

    /// Folded polar angle of one vMF draw against the pole.
    fn vmf_angle<R: Rng + ?Sized>(m: usize, kappa: f64, rng: &mut R) -> f64 {
        let mut pole = vec![0.0; m + 1];
        pole[m] = 1.0;
        let mean = UnitVector::new(pole).unwrap();
        let v = sample_vmf(&mean, kappa, rng);
        v[m].abs().min(1.0).acos()
    }

    #[test]
    fn em_recovers_a_two_component_mixture() {
        let m = 5;
        let (w_true, k1, k2) = (0.6, 500.0, 3000.0);
        let mut rng = stream_rng(314, 0);
        let n = 20_000;
        let angles: Vec<f64> = (0..n)
            .map(|_| {
                let kappa = if rng.random::<f64>() < w_true { k1 } else { k2 };
                vmf_angle(m, kappa, &mut rng)
            })
            .collect();
        let fit = fit_vmf_mixture(&angles, m, 4).unwrap();
        assert_eq!(
            fit.n_components(),
            2,
            "BIC should select two components, got {:?}",
            fit.kappas
        );
        // components come out sorted by concentration
        assert!((fit.kappas[0] - k1).abs() < 0.05 * k1, "kappa1 = {}", fit.kappas[0]);
        assert!((fit.kappas[1] - k2).abs() < 0.08 * k2, "kappa2 = {}", fit.kappas[1]);
        assert!((fit.weights[0] - w_true).abs() < 0.05, "w = {}", fit.weights[0]);
    }

    #[test]
    fn em_caps_concentration_for_degenerate_angles() {
        let angles = vec![1e-7; 400];
        let fit = fit_vmf_mixture(&angles, 3, 2).unwrap();
        assert_eq!(fit.n_components(), 1, "constant data should not split");
        assert!(fit.kappas[0] > 1e7, "kappa = {}", fit.kappas[0]);
    }

    #[test]
    fn em_single_component_recovery() {
        let m = 3;
        let mut rng = stream_rng(99, 0);
        let angles: Vec<f64> = (0..8_000).map(|_| vmf_angle(m, 200.0, &mut rng)).collect();
        let fit = fit_vmf_mixture(&angles, m, 3).unwrap();
        assert_eq!(fit.n_components(), 1, "kappas = {:?}", fit.kappas);
        assert!((fit.kappas[0] - 200.0).abs() < 10.0, "kappa = {}", fit.kappas[0]);
        let total: f64 = fit.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mle_locates_a_sharp_spike() {
        // essentially noiseless estimator: observed angles sit at the
        // true alpha, and the likelihood must spike there
        let noise = MixtureFit {
            weights: vec![1.0],
            kappas: vec![1e8],
            log_likelihood: 0.0,
            bic: 0.0,
            iterations: 0,
        };
        let angles = vec![0.25; 50];
        let (alpha, diag) = mle_alpha(&angles, 4, &noise).unwrap();
        assert!((alpha - 0.25).abs() < 1e-3, "alpha = {alpha}");
        assert!(diag.converged);
    }

    #[test]
    fn mle_is_consistent_as_samples_grow() {
        let m = 5;
        let alpha_true: f64 = 0.3;
        let kappa = 500.0;
        let noise = MixtureFit {
            weights: vec![1.0],
            kappas: vec![kappa],
            log_likelihood: 0.0,
            bic: 0.0,
            iterations: 0,
        };
        // simulate observed angles: perturb a direction at angle
        // alpha_true from the pole with vMF(kappa) and fold
        let mut reference = vec![0.0; m + 1];
        reference[0] = alpha_true.sin();
        reference[m] = alpha_true.cos();
        let mut pole = vec![0.0; m + 1];
        pole[m] = 1.0;
        let mean = UnitVector::new(pole).unwrap();

        let rmse = |n: usize, reps: usize, seed: u64| -> f64 {
            let mut sq = 0.0;
            for rep in 0..reps {
                let mut rng = stream_rng(seed, rep as u64);
                let angles: Vec<f64> = (0..n)
                    .map(|_| {
                        let v = sample_vmf(&mean, kappa, &mut rng);
                        let dot: f64 =
                            v.iter().zip(&reference).map(|(a, b)| a * b).sum();
                        dot.abs().min(1.0).acos()
                    })
                    .collect();
                let (a, _) = mle_alpha(&angles, m, &noise).unwrap();
                sq += (a - alpha_true) * (a - alpha_true);
            }
            (sq / reps as f64).sqrt()
        };
        let coarse = rmse(500, 40, 1111);
        let fine = rmse(5000, 40, 2222);
        assert!(
            fine < coarse / 2.0,
            "RMSE should shrink like 1/sqrt(n): {coarse} -> {fine}"
        );
        assert!(coarse < 0.05, "coarse RMSE unexpectedly large: {coarse}");
    }

    #[test]
    fn mle_rejects_boundary_solutions() {
        let noise = MixtureFit {
            weights: vec![1.0],
            kappas: vec![1e8],
            log_likelihood: 0.0,
            bic: 0.0,
            iterations: 0,
        };
        // angles pinned at the top of the range push alpha to the
        // boundary, which must surface as an optimization failure
        let angles = vec![std::f64::consts::FRAC_PI_2 - 1e-9; 40];
        let err = mle_alpha(&angles, 3, &noise).unwrap_err();
        assert!(matches!(err, Error::OptimizationFailure(_)), "{err:?}");
    }

    #[test]
    fn calibration_smoke_and_determinism() {
        let config = CalibrationConfig {
            m: 2,
            radius: 1.0,
            epsilon: 0.25,
            sigma: 0.02,
            density: 0.0,
            n_points: Some(3_000),
            weight_scale: 5.0,
        };
        let a = calibrate(&config, 200, 77).unwrap();
        let b = calibrate(&config, 200, 77).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap(),
            "calibration must be byte-deterministic in the seed"
        );
        assert_eq!(a.skipped, 0);
        assert_eq!(a.n_points, 3_000);
        assert!(a.fit.kappas.iter().all(|&kp| kp > 10.0),
            "tangent fits on 3000 points should be concentrated: {:?}", a.fit.kappas);

        let c = calibrate(&config, 200, 78).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap(),
            "different seeds must differ"
        );
    }

    #[test]
    fn calibration_reports_mass_failures() {
        // six points cannot support a tangent fit with this epsilon
        let config = CalibrationConfig {
            m: 3,
            radius: 1.0,
            epsilon: 0.05,
            sigma: 0.0,
            density: 0.0,
            n_points: Some(6),
            weight_scale: 5.0,
        };
        let err = calibrate(&config, 50, 1).unwrap_err();
        assert!(matches!(err, Error::TrialFailures { .. }), "{err:?}");
    }

    #[test]
    fn calibration_report_round_trips() {
        let config = CalibrationConfig {
            m: 2,
            radius: 1.0,
            epsilon: 0.3,
            sigma: 0.01,
            density: 0.0,
            n_points: Some(2_000),
            weight_scale: 5.0,
        };
        let report = calibrate(&config, 60, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("calibration.json");
        report.save(&path).unwrap();
        let back = CalibrationReport::load(&path).unwrap();
        assert_eq!(report, back);

        std::fs::write(&path, "{\"not\": \"a report\"}").unwrap();
        assert!(CalibrationReport::load(&path).is_err());
    }

    #[test]
    fn decoded_estimate_on_a_noisy_sphere() {
        let m = 2;
        let sigma = 0.01;
        let config = CalibrationConfig {
            m,
            radius: 1.0,
            epsilon: 0.2,
            sigma,
            density: 0.0,
            n_points: Some(20_000),
            weight_scale: 5.0,
        };
        let report = calibrate(&config, 300, 404).unwrap();

        let mut rng = stream_rng(derive_seed(404, SEED_TAG_REPEATS), 0);
        let mut cloud = sample_sphere_uniform(m, 1.0, 20_000, &mut rng);
        add_gaussian_noise(&mut cloud, sigma, &mut rng);
        let pole = north_pole(m, 1.0);
        let decoded =
            decoded_curvature(&cloud, &pole, m, 0.2, 0.3, 0.5, 5.0, &report.fit).unwrap();
        assert!(
            (decoded.omega_tilde - 1.0).abs() < 0.1,
            "decoded curvature {} should be near 1",
            decoded.omega_tilde
        );
        assert!(decoded.n_samples > 200);
        assert!(decoded.d_bar > 0.3 && decoded.d_bar < 0.5);
        assert!(decoded.alpha_hat > 0.0);
    }

    #[test]
    fn config_validation() {
        let mut config = CalibrationConfig {
            m: 3,
            radius: 1.0,
            epsilon: 0.5,
            sigma: 0.01,
            density: 50.0,
            n_points: None,
            weight_scale: 5.0,
        };
        assert!(config.validate().is_ok());
        // ceil(50 * 2 pi^2) = ceil(986.96) = 987
        assert_eq!(config.effective_points().unwrap(), 987);
        config.n_points = Some(1234);
        assert_eq!(config.effective_points().unwrap(), 1234);
        config.m = 1;
        assert!(config.validate().is_err());
        config.m = 3;
        config.density = -1.0;
        config.n_points = None;
        assert!(config.validate().is_err());
    }
}
