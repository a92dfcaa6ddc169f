//! Tabulates the analytic angle and curvature densities onto a uniform
//! grid, for plotting or external comparison.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use varcurve::pushforward::{
    log_f_omega_mixture, log_f_theta_mixture, MixtureAngleParams, MixtureCurvatureParams,
};
use varcurve::{Error, Result};

/// Which density to tabulate. Both accept single components as one-entry
/// mixtures.
#[derive(Debug, Clone)]
pub enum DensitySpec {
    /// Folded angle between fitted normals.
    Theta(MixtureAngleParams),
    /// Discrete curvature value.
    Omega(MixtureCurvatureParams),
}

impl DensitySpec {
    /// Density at `x`; zero outside the support instead of an error, so a
    /// grid may overshoot the support without failing.
    fn eval(&self, x: f64) -> f64 {
        let log = match self {
            DensitySpec::Theta(p) => log_f_theta_mixture(p, x),
            DensitySpec::Omega(p) => log_f_omega_mixture(p, x),
        };
        match log {
            Ok(l) => l.exp(),
            Err(_) => 0.0,
        }
    }
}

/// Evaluates the density at `n` evenly spaced points spanning `[lo, hi]`
/// inclusive. At least two points are required to define a grid.
pub fn tabulate_density(spec: &DensitySpec, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(Error::Domain(format!("grid needs at least 2 points, got {n}")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain(format!("bad grid range [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let x = if i + 1 == n { hi } else { lo + i as f64 * step };
            (x, spec.eval(x))
        })
        .collect())
}

pub fn write_density_csv(rows: &[(f64, f64)], out: &Path) -> Result<()> {
    let mut csv = String::from("x,density\n");
    for (x, d) in rows {
        let _ = writeln!(csv, "{x:.17e},{d:.17e}");
    }
    fs::write(out, csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;
    use varcurve::pushforward::{log_f_theta, AnglePushforwardParams};

    fn trapezoid(rows: &[(f64, f64)]) -> f64 {
        rows.windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum()
    }

    #[test]
    fn grid_preconditions() {
        let p = MixtureAngleParams::new(3, 0.3, vec![1.0], vec![100.0]).unwrap();
        let spec = DensitySpec::Theta(p);
        assert!(tabulate_density(&spec, 0.0, 1.0, 1).is_err());
        assert!(tabulate_density(&spec, 1.0, 0.0, 10).is_err());
        assert!(tabulate_density(&spec, 0.0, f64::INFINITY, 10).is_err());
        let rows = tabulate_density(&spec, 0.0, FRAC_PI_2, 11).unwrap();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0].0, 0.0);
        assert_eq!(rows[10].0, FRAC_PI_2);
    }

    #[test]
    fn theta_grid_matches_direct_evaluation() {
        let p = MixtureAngleParams::new(5, 0.4, vec![1.0], vec![300.0]).unwrap();
        let single = AnglePushforwardParams::new(5, 300.0, 0.4).unwrap();
        let rows = tabulate_density(&DensitySpec::Theta(p), 0.01, 1.5, 7).unwrap();
        for (x, d) in rows {
            let direct = log_f_theta(&single, x).unwrap().exp();
            assert!((d - direct).abs() <= 1e-12 * direct.max(1.0), "x = {x}");
        }
    }

    #[test]
    fn theta_density_integrates_to_one() {
        let p = MixtureAngleParams::new(5, 0.4, vec![0.7, 0.3], vec![300.0, 2_000.0]).unwrap();
        let rows = tabulate_density(&DensitySpec::Theta(p), 0.0, FRAC_PI_2, 10_000).unwrap();
        assert!((trapezoid(&rows) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn omega_density_integrates_to_one_and_tolerates_overshoot() {
        let p =
            MixtureCurvatureParams::from_radius(3, 0.3, 1.0, vec![1.0], vec![100.0]).unwrap();
        let top = p.scale / 2.0f64.sqrt();
        let rows =
            tabulate_density(&DensitySpec::Omega(p.clone()), 1e-9, top, 10_000).unwrap();
        assert!((trapezoid(&rows) - 1.0).abs() < 1e-4);

        // Past the support the density is reported as zero, not an error.
        let over = tabulate_density(&DensitySpec::Omega(p), top, 2.0 * top, 50).unwrap();
        assert!(over.iter().skip(1).all(|&(_, d)| d == 0.0));
    }

    #[test]
    fn csv_emission() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("density.csv");
        write_density_csv(&[(0.1, 2.0), (0.2, 3.0)], &out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,density"));
        assert_eq!(lines.count(), 2);
    }
}
