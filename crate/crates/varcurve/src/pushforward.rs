//! Analytic densities of the folded normal angle and of the discrete
//! curvature value under von Mises-Fisher perturbation of the
//! normals, including finite mixtures over the concentration.
//!
//! Everything is computed in log space. The angle density lives on
//! `[0, pi/2]` (angles are folded through the absolute dot product);
//! the induced curvature density lives on `(0, scale / sqrt(2)]`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::numeric::log_sum_exp;
use crate::specfun::{
    log_bessel_i_unchecked, log_bessel_ratio_limit_unchecked, log_cosh,
};
use crate::{Error, Result};

/// Parameters of the folded-angle density: intrinsic dimension `m` of
/// the hypersurface, concentration `kappa` of the normal perturbation,
/// and the noise-free angle `alpha` between the two normals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePushforwardParams {
    pub m: usize,
    pub kappa: f64,
    pub alpha: f64,
}

impl AnglePushforwardParams {
    pub fn new(m: usize, kappa: f64, alpha: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("need m >= 2, got {m}")));
        }
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Domain(format!("kappa must be positive and finite, got {kappa}")));
        }
        if !(0.0..=PI).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0, pi], got {alpha}")));
        }
        Ok(AnglePushforwardParams { m, kappa, alpha })
    }
}

/// Precomputed per-parameter constants of the angle density, so that
/// evaluating many angles against one parameter set does no repeated
/// Bessel work on the concentration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ThetaTerms {
    kappa_cos_alpha: f64,
    kappa_sin_alpha: f64,
    order: f64,
    m_minus_1: f64,
    constant: f64,
    ratio_zero: f64,
}

impl ThetaTerms {
    pub(crate) fn new(m: usize, kappa: f64, alpha: f64) -> Self {
        let mf = m as f64;
        let constant = LN_2 + 0.5 * (mf - 1.0) * kappa.ln()
            - 0.5 * (2.0 * PI).ln()
            - log_bessel_i_unchecked(0.5 * (mf - 1.0), kappa);
        let order = 0.5 * (mf - 2.0);
        ThetaTerms {
            kappa_cos_alpha: kappa * alpha.cos(),
            kappa_sin_alpha: kappa * alpha.sin(),
            order,
            m_minus_1: mf - 1.0,
            constant,
            ratio_zero: log_bessel_ratio_limit_unchecked(order, 0.0),
        }
    }

    /// Log-density at an angle given as `(ln sin, sin, cos)`. The
    /// caller guarantees the angle lies in `[0, pi/2]`.
    pub(crate) fn eval(&self, ln_sin: f64, sin_theta: f64, cos_theta: f64) -> f64 {
        // alpha = 0 keeps the Bessel argument identically zero, so the
        // precomputed limit avoids all per-angle Bessel work there
        let ratio = if self.kappa_sin_alpha == 0.0 {
            self.ratio_zero
        } else {
            log_bessel_ratio_limit_unchecked(self.order, self.kappa_sin_alpha * sin_theta)
        };
        self.constant + self.m_minus_1 * ln_sin + log_cosh(self.kappa_cos_alpha * cos_theta) + ratio
    }
}

/// Log-density of the folded angle at `theta` in `[0, pi/2]`; returns
/// `-inf` at `theta = 0` and a domain error outside the interval.
pub fn log_f_theta(params: &AnglePushforwardParams, theta: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain(format!(
            "theta must lie in [0, pi/2], got {theta}"
        )));
    }
    if theta == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let terms = ThetaTerms::new(params.m, params.kappa, params.alpha);
    let (s, c) = theta.sin_cos();
    Ok(terms.eval(s.ln(), s, c))
}

/// Parameters of the induced curvature density. `scale` is the upper
/// limit of the raw (unfolded) curvature range: a pair at noise-free
/// angle `alpha` and chord `d` has curvature `2 sin(alpha/2) / d`, so
/// on a radius-`r` sphere with chords concentrated at
/// `d = 2 r sin(alpha/2)`, curvature values sweep `(0, scale)` with
/// `scale = 1 / (r sin(alpha/2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvaturePushforwardParams {
    pub m: usize,
    pub kappa: f64,
    pub alpha: f64,
    pub scale: f64,
}

impl CurvaturePushforwardParams {
    /// Builds the parameter set for a sphere of radius `r`; `alpha`
    /// must be strictly positive so the chord scale is finite.
    pub fn from_radius(m: usize, kappa: f64, alpha: f64, r: f64) -> Result<Self> {
        AnglePushforwardParams::new(m, kappa, alpha)?;
        if alpha == 0.0 || !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!(
                "need alpha > 0 and finite r > 0, got alpha = {alpha}, r = {r}"
            )));
        }
        Ok(CurvaturePushforwardParams {
            m,
            kappa,
            alpha,
            scale: 1.0 / (r * (0.5 * alpha).sin()),
        })
    }

    fn angle_params(&self) -> AnglePushforwardParams {
        AnglePushforwardParams { m: self.m, kappa: self.kappa, alpha: self.alpha }
    }
}

/// Log-density of the discrete curvature value at `omega`.
///
/// The density is supported on `(0, scale / sqrt(2)]`; the folded
/// angle cannot exceed `pi/2`, so values in `(scale / sqrt(2), scale)`
/// have zero density (`-inf`). Values outside `[0, scale)` are domain
/// errors.
pub fn log_f_omega(params: &CurvaturePushforwardParams, omega: f64) -> Result<f64> {
    if !(omega >= 0.0) || omega >= params.scale {
        return Err(Error::Domain(format!(
            "omega must lie in [0, scale), got {omega} with scale {}",
            params.scale
        )));
    }
    if omega == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let s = omega / params.scale;
    if s > FRAC_1_SQRT_2 {
        return Ok(f64::NEG_INFINITY);
    }
    let theta = (2.0 * s.asin()).min(FRAC_PI_2);
    let angle = log_f_theta(&params.angle_params(), theta)?;
    // d theta / d omega = 2 / (scale * sqrt(1 - s^2))
    Ok(angle + LN_2 - params.scale.ln() - 0.5 * (1.0 - s * s).ln())
}

pub(crate) fn validate_mixture(weights: &[f64], kappas: &[f64]) -> Result<()> {
    if weights.is_empty() || weights.len() != kappas.len() {
        return Err(Error::Domain(format!(
            "mixture needs matching nonempty weights and kappas, got {} and {}",
            weights.len(),
            kappas.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Domain("mixture weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("mixture weights sum to {total}, expected 1")));
    }
    if kappas.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
        return Err(Error::Domain("mixture kappas must be positive and finite".into()));
    }
    Ok(())
}

/// A finite mixture of folded-angle densities sharing `m` and `alpha`
/// but with component-specific concentrations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureAngleParams {
    pub m: usize,
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub kappas: Vec<f64>,
}

impl MixtureAngleParams {
    pub fn new(m: usize, alpha: f64, weights: Vec<f64>, kappas: Vec<f64>) -> Result<Self> {
        validate_mixture(&weights, &kappas)?;
        AnglePushforwardParams::new(m, kappas[0], alpha)?;
        Ok(MixtureAngleParams { m, alpha, weights, kappas })
    }
}

pub fn log_f_theta_mixture(params: &MixtureAngleParams, theta: f64) -> Result<f64> {
    let mut terms = Vec::with_capacity(params.weights.len());
    for (w, k) in params.weights.iter().zip(&params.kappas) {
        let comp = AnglePushforwardParams { m: params.m, kappa: *k, alpha: params.alpha };
        let l = log_f_theta(&comp, theta)?;
        terms.push(w.ln() + l);
    }
    Ok(log_sum_exp(&terms))
}

/// The curvature-side analogue of `MixtureAngleParams`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureCurvatureParams {
    pub m: usize,
    pub alpha: f64,
    pub scale: f64,
    pub weights: Vec<f64>,
    pub kappas: Vec<f64>,
}

impl MixtureCurvatureParams {
    pub fn from_radius(
        m: usize,
        alpha: f64,
        r: f64,
        weights: Vec<f64>,
        kappas: Vec<f64>,
    ) -> Result<Self> {
        validate_mixture(&weights, &kappas)?;
        let first = CurvaturePushforwardParams::from_radius(m, kappas[0], alpha, r)?;
        Ok(MixtureCurvatureParams { m, alpha, scale: first.scale, weights, kappas })
    }
}

pub fn log_f_omega_mixture(params: &MixtureCurvatureParams, omega: f64) -> Result<f64> {
    let mut terms = Vec::with_capacity(params.weights.len());
    for (w, k) in params.weights.iter().zip(&params.kappas) {
        let comp = CurvaturePushforwardParams {
            m: params.m,
            kappa: *k,
            alpha: params.alpha,
            scale: params.scale,
        };
        let l = log_f_omega(&comp, omega)?;
        terms.push(w.ln() + l);
    }
    Ok(log_sum_exp(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{integrate, ks_statistic, CdfTable};
    use crate::randgeom::{sample_vmf, stream_rng, UnitVector};
    use crate::specfun::ln_gamma;
    use rand::Rng;

    fn angle_mass(p: &AnglePushforwardParams) -> f64 {
        integrate(|t| log_f_theta(p, t).unwrap().exp(), 0.0, FRAC_PI_2, 1e-11)
    }

    #[test]
    fn angle_density_normalizes() {
        for &m in &[2usize, 3, 5] {
            for &kappa in &[0.5, 50.0, 5000.0] {
                for &alpha in &[0.0, 0.3, 1.4] {
                    let p = AnglePushforwardParams::new(m, kappa, alpha).unwrap();
                    let mass = angle_mass(&p);
                    assert!(
                        (mass - 1.0).abs() < 1e-7,
                        "mass {mass} at m = {m}, kappa = {kappa}, alpha = {alpha}"
                    );
                }
            }
        }
    }

    #[test]
    fn angle_density_weak_noise_limit_is_sine() {
        // m = 2, kappa -> 0: the angle density tends to sin(theta)
        let p = AnglePushforwardParams::new(2, 1e-8, 0.9).unwrap();
        for &t in &[0.2, 0.7, 1.2, 1.5] {
            let got = log_f_theta(&p, t).unwrap();
            assert!(
                (got - t.sin().ln()).abs() < 1e-6,
                "theta = {t}: {got} vs {}",
                t.sin().ln()
            );
        }
    }

    #[test]
    fn angle_density_boundaries() {
        let p = AnglePushforwardParams::new(3, 10.0, 0.5).unwrap();
        assert_eq!(log_f_theta(&p, 0.0).unwrap(), f64::NEG_INFINITY);
        assert!(log_f_theta(&p, FRAC_PI_2).unwrap().is_finite());
        assert!(log_f_theta(&p, -0.1).is_err());
        assert!(log_f_theta(&p, FRAC_PI_2 + 0.1).is_err());
        assert!(AnglePushforwardParams::new(1, 10.0, 0.5).is_err());
        assert!(AnglePushforwardParams::new(3, 0.0, 0.5).is_err());
        assert!(AnglePushforwardParams::new(3, 10.0, 3.5).is_err());
    }

    #[test]
    fn curvature_density_normalizes_on_its_support() {
        for &(m, kappa, alpha, r) in &[
            (3usize, 20.0, 0.4, 1.0),
            (5, 300.0, 0.25, 2.0),
            (10, 40.0, 1.0, 0.5),
        ] {
            let p = CurvaturePushforwardParams::from_radius(m, kappa, alpha, r).unwrap();
            let hi = p.scale * FRAC_1_SQRT_2;
            let mass = integrate(|w| log_f_omega(&p, w).unwrap().exp(), 0.0, hi, 1e-11);
            assert!(
                (mass - 1.0).abs() < 1e-7,
                "mass {mass} at m = {m}, kappa = {kappa}, alpha = {alpha}, r = {r}"
            );
        }
    }

    #[test]
    fn curvature_density_support_and_domain() {
        let p = CurvaturePushforwardParams::from_radius(3, 100.0, 0.5, 1.0).unwrap();
        let c = p.scale;
        assert_eq!(log_f_omega(&p, 0.0).unwrap(), f64::NEG_INFINITY);
        assert!(log_f_omega(&p, 0.3 * c).unwrap().is_finite());
        assert!(log_f_omega(&p, c * FRAC_1_SQRT_2).unwrap().is_finite());
        assert_eq!(log_f_omega(&p, 0.8 * c).unwrap(), f64::NEG_INFINITY);
        assert!(log_f_omega(&p, -0.1).is_err());
        assert!(log_f_omega(&p, c).is_err());
        assert!(log_f_omega(&p, c * 1.5).is_err());
        assert!(CurvaturePushforwardParams::from_radius(3, 100.0, 0.0, 1.0).is_err());
    }

    /// The curvature log-density written out directly in terms of
    /// omega, substituting sin(theta) = 2 s sqrt(1 - s^2) and
    /// cos(theta) = 1 - 2 s^2 with s = omega / scale. Exercises a
    /// different floating-point route than the composed implementation.
    fn direct_omega_form(p: &CurvaturePushforwardParams, omega: f64) -> f64 {
        let mf = p.m as f64;
        let s = omega / p.scale;
        let root = (1.0 - s * s).sqrt();
        let sin_theta = 2.0 * s * root;
        let cos_theta = 1.0 - 2.0 * s * s;
        let order = 0.5 * (mf - 2.0);
        (mf - 1.0) * sin_theta.ln()
            + log_cosh(p.kappa * p.alpha.cos() * cos_theta)
            + log_bessel_ratio_limit_unchecked(order, p.kappa * p.alpha.sin() * sin_theta)
            + 0.5 * (mf - 1.0) * p.kappa.ln()
            - 0.5 * (2.0 * PI).ln()
            - log_bessel_i_unchecked(0.5 * (mf - 1.0), p.kappa)
            + LN_2
            - p.scale.ln()
            - 0.5 * (1.0 - s * s).ln()
    }

    #[test]
    fn composed_and_direct_forms_agree_up_to_the_fold_factor() {
        let mut rng = stream_rng(2024, 0);
        for _ in 0..200 {
            let m = 2 + (rng.random::<u64>() % 11) as usize;
            let kappa = 10f64.powf(rng.random_range(-1.0..5.0));
            let alpha = rng.random_range(0.05..3.0);
            let r = 10f64.powf(rng.random_range(-0.7..0.7));
            let p = CurvaturePushforwardParams::from_radius(m, kappa, alpha, r).unwrap();
            let omega = rng.random_range(0.01..FRAC_1_SQRT_2 * 0.999) * p.scale;
            let composed = log_f_omega(&p, omega).unwrap();
            let direct = direct_omega_form(&p, omega) + LN_2;
            let tol = 1e-9 * composed.abs().max(1.0);
            assert!(
                (composed - direct).abs() < tol,
                "m = {m}, kappa = {kappa}, alpha = {alpha}, r = {r}, omega = {omega}: \
                 composed {composed} vs direct {direct}"
            );
        }
    }

    #[test]
    fn strong_concentration_puts_the_mode_at_true_curvature() {
        // r = 1, alpha small: the noise-free curvature is exactly 1
        let p = CurvaturePushforwardParams::from_radius(3, 1e4, 0.05, 1.0).unwrap();
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut w = 0.5;
        while w < 1.5 {
            let l = log_f_omega(&p, w).unwrap();
            if l > best.0 {
                best = (l, w);
            }
            w += 1e-3;
        }
        assert!(
            (best.1 - 1.0).abs() < 0.05,
            "mode at {} should be near 1",
            best.1
        );
    }

    #[test]
    fn mixture_matches_hand_rolled_log_sum() {
        let mix =
            MixtureAngleParams::new(4, 0.4, vec![0.3, 0.7], vec![30.0, 800.0]).unwrap();
        let a = AnglePushforwardParams::new(4, 30.0, 0.4).unwrap();
        let b = AnglePushforwardParams::new(4, 800.0, 0.4).unwrap();
        for &t in &[0.1, 0.39, 0.41, 1.0, 1.5] {
            let la = log_f_theta(&a, t).unwrap();
            let lb = log_f_theta(&b, t).unwrap();
            let hand = (0.3 * la.exp() + 0.7 * lb.exp()).ln();
            let got = log_f_theta_mixture(&mix, t).unwrap();
            assert!((got - hand).abs() < 1e-12, "theta = {t}: {got} vs {hand}");
        }

        let cmix = MixtureCurvatureParams::from_radius(
            4,
            0.4,
            1.0,
            vec![0.3, 0.7],
            vec![30.0, 800.0],
        )
        .unwrap();
        let ca = CurvaturePushforwardParams::from_radius(4, 30.0, 0.4, 1.0).unwrap();
        let cb = CurvaturePushforwardParams::from_radius(4, 800.0, 0.4, 1.0).unwrap();
        let w = 0.4 * cmix.scale;
        let hand = (0.3 * log_f_omega(&ca, w).unwrap().exp()
            + 0.7 * log_f_omega(&cb, w).unwrap().exp())
        .ln();
        let got = log_f_omega_mixture(&cmix, w).unwrap();
        assert!((got - hand).abs() < 1e-12);
    }

    #[test]
    fn mixture_validation() {
        assert!(MixtureAngleParams::new(3, 0.4, vec![0.5, 0.4], vec![1.0, 2.0]).is_err());
        assert!(MixtureAngleParams::new(3, 0.4, vec![0.5, 0.5], vec![1.0]).is_err());
        assert!(MixtureAngleParams::new(3, 0.4, vec![], vec![]).is_err());
        assert!(MixtureAngleParams::new(3, 0.4, vec![1.0], vec![-2.0]).is_err());
    }

    #[test]
    fn angle_density_matches_simulated_angles() {
        // Draw vMF perturbed normals and compare the folded angle
        // against the analytic law via a KS statistic.
        for &(m, kappa, alpha, n, bound) in
            &[(3usize, 50.0, 0.7, 20_000usize, 0.015), (10, 500.0, 0.2, 20_000, 0.015)]
        {
            let p = AnglePushforwardParams::new(m, kappa, alpha).unwrap();
            let mut pole = vec![0.0; m + 1];
            pole[m] = 1.0;
            let mut reference = vec![0.0; m + 1];
            reference[0] = alpha.sin();
            reference[m] = alpha.cos();
            let mean = UnitVector::new(pole).unwrap();

            let mut rng = stream_rng(606, m as u64);
            let mut angles: Vec<f64> = (0..n)
                .map(|_| {
                    let v = sample_vmf(&mean, kappa, &mut rng);
                    let dot: f64 = v.iter().zip(&reference).map(|(a, b)| a * b).sum();
                    dot.abs().min(1.0).acos()
                })
                .collect();
            let table = CdfTable::build(
                |t| log_f_theta(&p, t).unwrap().exp(),
                0.0,
                FRAC_PI_2,
                4096,
            );
            let d = ks_statistic(&mut angles, |x| table.eval(x));
            assert!(
                d < bound,
                "KS statistic {d} too large for m = {m}, kappa = {kappa}, alpha = {alpha}"
            );
        }
    }

    #[test]
    fn ln_gamma_is_wired_for_ratio_constants() {
        // spot check that the zero-argument ratio limit feeding the
        // angle density matches its closed form for m = 4 (order 1)
        let v: f64 = 1.0;
        let lim = crate::specfun::log_bessel_ratio_limit(v, 0.0).unwrap();
        assert!((lim - (-v * LN_2 - ln_gamma(v + 1.0))).abs() < 1e-14);
    }
}
