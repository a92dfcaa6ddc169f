//! Log-scaled special functions: modified Bessel functions of the first
//! kind, log-gamma, log-cosh and hypersphere surface areas.
//!
//! Everything is evaluated and returned in log space so that the
//! concentration parameters appearing elsewhere in the crate (up to
//! 1e8) never overflow. `log_bessel_i` keeps at least ten significant
//! digits for orders in `[0, 50]` and arguments in `[0, 1e6]`.

use std::f64::consts::{LN_2, PI};

use crate::{Error, Result};

/// Orders below this bound are rejected; the function is undefined
/// there for our purposes.
const MIN_ORDER: f64 = -0.5;

/// Arguments left of `series_hankel_split(order)` use the ascending
/// power series, arguments right of it the exponentially scaled
/// asymptotic expansion. Both branches agree to better than 1e-10
/// at the seam (tested below).
fn series_hankel_split(order: f64) -> f64 {
    (0.6 * order * order + 10.0).max(30.0)
}

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection keeps the argument of the core expansion above 0.5
        return PI.ln() - (PI * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln cosh(x)`, stable for arbitrarily large `|x|`.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// Surface area of the sphere of intrinsic dimension `m` and radius `r`
/// embedded in `R^(m+1)`.
pub fn sphere_surface_area(m: usize, r: f64) -> Result<f64> {
    if m == 0 || !(r > 0.0) {
        return Err(Error::Domain(format!(
            "sphere_surface_area needs m >= 1 and r > 0, got m = {m}, r = {r}"
        )));
    }
    let mf = m as f64;
    Ok((LN_2 + 0.5 * (mf + 1.0) * PI.ln() + mf * r.ln() - ln_gamma(0.5 * (mf + 1.0))).exp())
}

fn check_order_arg(order: f64, z: f64) -> Result<()> {
    if !order.is_finite() || !z.is_finite() || order < MIN_ORDER || z < 0.0 {
        return Err(Error::Domain(format!(
            "bessel arguments out of range: order = {order}, z = {z}"
        )));
    }
    Ok(())
}

/// `ln I_order(z)` for `order >= -1/2`, `z >= 0`.
///
/// Returns `-inf` at `z = 0` for positive orders and `+inf` there for
/// negative ones, matching the limiting behavior of `I`.
pub fn log_bessel_i(order: f64, z: f64) -> Result<f64> {
    check_order_arg(order, z)?;
    Ok(log_bessel_i_unchecked(order, z))
}

pub(crate) fn log_bessel_i_unchecked(order: f64, z: f64) -> f64 {
    if z == 0.0 {
        return match order.partial_cmp(&0.0).unwrap() {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => f64::NEG_INFINITY,
            std::cmp::Ordering::Less => f64::INFINITY,
        };
    }
    if z < series_hankel_split(order) {
        series_log_iv(order, z)
    } else {
        hankel_log_iv(order, z)
    }
}

/// `ln( I_order(z) / z^order )`, continuous down to `z = 0` where it
/// equals `-order ln 2 - ln Γ(order + 1)`.
pub fn log_bessel_ratio_limit(order: f64, z: f64) -> Result<f64> {
    check_order_arg(order, z)?;
    Ok(log_bessel_ratio_limit_unchecked(order, z))
}

pub(crate) fn log_bessel_ratio_limit_unchecked(order: f64, z: f64) -> f64 {
    if z < series_hankel_split(order) {
        // the z^order factor of the series cancels exactly, so this
        // expression is finite and smooth through z = 0
        -order * LN_2 - ln_gamma(order + 1.0) + series_scaled_sum(order, z)
    } else {
        hankel_log_iv(order, z) - order * z.ln()
    }
}

/// `ln( Σ_j Γ(v+1) (z²/4)^j / (j! Γ(v+j+1)) )`: the ascending series
/// with its leading `(z/2)^v / Γ(v+1)` factor removed. All terms are
/// positive, so the sum is stable; a running offset keeps it in range
/// for arguments far beyond the overflow point of `exp`.
fn series_scaled_sum(v: f64, z: f64) -> f64 {
    const RESCALE: f64 = 1e280;
    let ln_rescale: f64 = 280.0 * std::f64::consts::LN_10;
    let q = z * z / 4.0;
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut offset = 0.0;
    let mut j = 0.0f64;
    loop {
        j += 1.0;
        term *= q / (j * (v + j));
        sum += term;
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            offset += ln_rescale;
        }
        if term < sum * 1e-17 {
            break;
        }
    }
    offset + sum.ln()
}

fn series_log_iv(v: f64, z: f64) -> f64 {
    v * (0.5 * z).ln() - ln_gamma(v + 1.0) + series_scaled_sum(v, z)
}

/// Exponentially scaled large-argument expansion,
/// `I_v(z) ~ e^z / sqrt(2 pi z) * Σ_k (-1)^k a_k(v) / z^k`.
/// Used only for `z > 0.6 v² + 10`, where the terms decay well below
/// 1e-15 before the divergent tail of the expansion sets in.
fn hankel_log_iv(v: f64, z: f64) -> f64 {
    let mu = 4.0 * v * v;
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    for k in 1..=60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (8.0 * kf * z);
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    z - 0.5 * (2.0 * PI * z).ln() + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-10;

    fn assert_close(got: f64, expected: f64, tol: f64) {
        let scale = expected.abs().max(1.0);
        assert!(
            (got - expected).abs() <= tol * scale,
            "got {got}, expected {expected} (tol {tol})"
        );
    }

    /// ln I_(1/2)(z) = ln( sqrt(2/(pi z)) sinh z ), written in a form
    /// that stays finite for large z.
    fn ln_half_order(z: f64) -> f64 {
        z + 0.5 * (2.0 / (PI * z)).ln() - LN_2 + (-(-2.0 * z).exp()).ln_1p()
    }

    /// ln I_(3/2)(z) = ln( sqrt(2/(pi z)) (cosh z - sinh z / z) ).
    fn ln_three_half_order(z: f64) -> f64 {
        0.5 * (2.0 / (PI * z)).ln() + z - LN_2 + (1.0 - 1.0 / z + (-2.0 * z).exp() * (1.0 + 1.0 / z)).ln()
    }

    #[test]
    fn zero_argument_limits() {
        assert_eq!(log_bessel_i(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(log_bessel_i(1.0, 0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(log_bessel_i(-0.5, 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(log_bessel_i(-0.6, 1.0).is_err());
        assert!(log_bessel_i(1.0, -1.0).is_err());
        assert!(log_bessel_i(f64::NAN, 1.0).is_err());
        assert!(log_bessel_ratio_limit(2.0, f64::INFINITY).is_err());
    }

    #[test]
    fn half_integer_closed_forms() {
        for &z in &[0.3, 0.5, 2.0, 7.5, 29.0, 31.0, 100.0, 1e4, 1e6] {
            assert_close(log_bessel_i(0.5, z).unwrap(), ln_half_order(z), TOL);
        }
        for &z in &[0.7, 3.0, 40.0, 1e3, 1e6] {
            assert_close(log_bessel_i(1.5, z).unwrap(), ln_three_half_order(z), TOL);
        }
    }

    #[test]
    fn reference_values_from_scipy() {
        // scipy.special.iv checked values
        assert_close(log_bessel_i(0.0, 8.0).unwrap(), 427.564_115_721_804_74_f64.ln(), 1e-12);
        assert_close(log_bessel_i(0.0, 10.0).unwrap(), 2_815.716_628_466_254_f64.ln(), 1e-12);
        assert_close(log_bessel_i(1.0, 10.0).unwrap(), 2_670.988_303_701_255_f64.ln(), 1e-12);
        assert_close(log_bessel_i(20.0, 2.0).unwrap(), 4.310_560_576_109_548e-19_f64.ln(), 1e-12);
        assert_close(log_bessel_i(60.0, 40.0).unwrap(), 0.071_856_419_684_526_32_f64.ln(), 1e-11);
    }

    #[test]
    fn branches_agree_at_the_seam() {
        for &v in &[0.0, 0.5, 1.0, 2.5, 7.0, 13.2, 24.5, 50.0] {
            let z = series_hankel_split(v);
            let a = series_log_iv(v, z);
            let b = hankel_log_iv(v, z);
            let scale = a.abs().max(1.0);
            assert!(
                (a - b).abs() <= 1e-10 * scale,
                "seam mismatch at v = {v}: series {a} vs asymptotic {b}"
            );
        }
    }

    #[test]
    fn recurrence_relation_holds() {
        // I_(v-1)(z) - I_(v+1)(z) = (2 v / z) I_v(z), checked via ratios
        // computed from the log values.
        let mut cases = Vec::new();
        for i in 0..40 {
            let v = 1.0 + (i as f64) * 19.0 / 39.0;
            for j in 0..25 {
                let z = 0.1 * (1000.0_f64 / 0.1).powf(j as f64 / 24.0);
                cases.push((v, z));
            }
        }
        for (v, z) in cases {
            let la = log_bessel_i_unchecked(v - 1.0, z);
            let lb = log_bessel_i_unchecked(v + 1.0, z);
            let lc = log_bessel_i_unchecked(v, z);
            let lhs = (la - lc).exp() - (lb - lc).exp();
            let rhs = 2.0 * v / z;
            assert!(
                (lhs - rhs).abs() <= 1e-8 * rhs,
                "recurrence failed at v = {v}, z = {z}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn ratio_limit_is_continuous_at_zero() {
        let at_zero = log_bessel_ratio_limit(0.0, 0.0).unwrap();
        assert!(at_zero.abs() < 1e-13);
        assert_close(log_bessel_ratio_limit(1.0, 0.0).unwrap(), (0.5_f64).ln(), 1e-13);

        let near = log_bessel_ratio_limit(2.5, 1e-8).unwrap();
        let limit = log_bessel_ratio_limit(2.5, 0.0).unwrap();
        assert!((near - limit).abs() < 1e-10);
    }

    #[test]
    fn ratio_limit_matches_direct_quotient() {
        for &(v, z) in &[(0.0, 5.0), (1.5, 12.0), (4.0, 80.0), (9.5, 2000.0)] {
            let direct = log_bessel_i(v, z).unwrap() - v * z.ln();
            assert_close(log_bessel_ratio_limit(v, z).unwrap(), direct, 1e-12);
        }
    }

    #[test]
    fn ln_gamma_reference_points() {
        assert_close(ln_gamma(0.5), PI.sqrt().ln(), 1e-13);
        assert!(ln_gamma(1.0).abs() < 1e-13);
        assert!(ln_gamma(2.0).abs() < 1e-13);
        // Γ(5.5) = 4.5 * 3.5 * 2.5 * 1.5 * Γ(1.5)
        let exact = (4.5 * 3.5 * 2.5 * 1.5 * (PI.sqrt() / 2.0)).ln();
        assert_close(ln_gamma(5.5), exact, 1e-13);
        assert_close(ln_gamma(30.0), (1..30).map(|k| (k as f64).ln()).sum::<f64>(), 1e-13);
    }

    #[test]
    fn log_cosh_both_regimes() {
        for &x in &[0.0, 1e-8, 0.3, 2.0, 20.0] {
            assert_close(log_cosh(x), x.cosh().ln(), 1e-13);
            assert_eq!(log_cosh(x), log_cosh(-x));
        }
        assert_close(log_cosh(1e8), 1e8 - LN_2, 1e-14);
    }

    #[test]
    fn sphere_areas() {
        let two_pi_sq = 2.0 * PI * PI;
        assert_close(sphere_surface_area(1, 1.0).unwrap(), 2.0 * PI, 1e-12);
        assert_close(sphere_surface_area(2, 1.0).unwrap(), 4.0 * PI, 1e-12);
        assert_close(sphere_surface_area(3, 1.0).unwrap(), two_pi_sq, 1e-12);
        assert_close(sphere_surface_area(2, 2.0).unwrap(), 16.0 * PI, 1e-12);
        assert_close(sphere_surface_area(3, 2.0).unwrap(), two_pi_sq * 8.0, 1e-12);
        assert_close(sphere_surface_area(5, 1.0).unwrap(), PI.powi(3), 1e-12);
        assert!(sphere_surface_area(0, 1.0).is_err());
        assert!(sphere_surface_area(3, 0.0).is_err());
    }
}
