//! Small numeric building blocks: compensated summation, log-sum-exp,
//! golden-section search, adaptive Simpson quadrature and a couple of
//! statistics helpers used by tests and by the decoding pipeline.

/// Compensated (Neumaier) summation. The error of the result is
/// independent of the number of terms for well-scaled inputs.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `ln(sum(exp(terms)))`, stable for large negative terms. Terms equal
/// to `-inf` contribute nothing; an all-`-inf` input yields `-inf`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Outcome of a bounded golden-section search.
#[derive(Debug, Clone, Copy)]
pub struct GoldenResult {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes `f` over `[lo, hi]` by golden-section search, stopping when
/// the bracket is narrower than `xtol` or after `max_iter` shrinks.
/// `f` is assumed unimodal on the bracket; otherwise the result is a
/// local maximum.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> GoldenResult {
    debug_assert!(lo < hi && xtol > 0.0);
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while b - a > xtol && iterations < max_iter {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let (x, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    GoldenResult { x, value, iterations, converged: b - a <= xtol }
}

const INIT_PANELS: usize = 256;
const MAX_DEPTH: usize = 48;

/// Adaptive Simpson integral of `f` over `[a, b]` targeting absolute
/// error `tol`. The interval is pre-split into 256 panels before
/// adaptation so that narrow spikes well inside the interval are not
/// stepped over.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    debug_assert!(a < b && tol > 0.0);
    let h = (b - a) / INIT_PANELS as f64;
    let panel_tol = tol / INIT_PANELS as f64;
    let partials: Vec<f64> = (0..INIT_PANELS)
        .map(|i| {
            let pa = a + i as f64 * h;
            let pb = if i + 1 == INIT_PANELS { b } else { pa + h };
            let pm = 0.5 * (pa + pb);
            let (fa, fm, fb) = (f(pa), f(pm), f(pb));
            adaptive(&f, pa, pb, fa, fm, fb, simpson(pa, pb, fa, fm, fb), panel_tol, MAX_DEPTH)
        })
        .collect();
    neumaier_sum(partials)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Tabulated CDF of a nonnegative density on `[a, b]`, built by
/// composite Simpson on a uniform grid and normalized to end at 1.
pub struct CdfTable {
    a: f64,
    b: f64,
    step: f64,
    cdf: Vec<f64>,
}

impl CdfTable {
    /// `n` is the number of grid intervals (at least 8). The density is
    /// evaluated at `2n + 1` points.
    pub fn build(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 8 && a < b);
        let step = (b - a) / n as f64;
        let mut cdf = Vec::with_capacity(n + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        let mut comp = 0.0;
        let mut f_lo = f(a);
        for i in 0..n {
            let x_lo = a + i as f64 * step;
            let x_hi = if i + 1 == n { b } else { x_lo + step };
            let f_hi = f(x_hi);
            let piece = simpson(x_lo, x_hi, f_lo, f(0.5 * (x_lo + x_hi)), f_hi);
            // Neumaier accumulate
            let t = acc + piece;
            if acc.abs() >= piece.abs() {
                comp += (acc - t) + piece;
            } else {
                comp += (piece - t) + acc;
            }
            acc = t;
            cdf.push(acc + comp);
            f_lo = f_hi;
        }
        let total = *cdf.last().unwrap();
        assert!(total > 0.0, "density integrates to zero on [{a}, {b}]");
        for v in &mut cdf {
            *v /= total;
        }
        CdfTable { a, b, step, cdf }
    }

    /// CDF value at `x`, linearly interpolated between grid nodes.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.a {
            return 0.0;
        }
        if x >= self.b {
            return 1.0;
        }
        let pos = (x - self.a) / self.step;
        let i = (pos as usize).min(self.cdf.len() - 2);
        let frac = pos - i as f64;
        self.cdf[i] + frac * (self.cdf[i + 1] - self.cdf[i])
    }
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against a model
/// CDF. Sorts the sample buffer in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty());
    samples.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let fx = cdf(x);
        d = d.max(fx - i as f64 / n).max((i + 1) as f64 / n - fx);
    }
    d
}

/// Upper critical value of the chi-square distribution with `df`
/// degrees of freedom at standard-normal quantile `z` (Wilson-Hilferty
/// approximation; `z = 3.0902` gives the 99.9th percentile).
pub fn chi_square_upper_critical(df: usize, z: f64) -> f64 {
    let k = df as f64;
    let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn neumaier_handles_cancellation() {
        let vals = vec![1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(vals), 2.0);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let terms = [-7450.0, -7451.0, -7452.5];
        // every exp() here underflows to zero, so the naive route is -inf
        let direct = ((-7450.0_f64).exp() + (-7451.0_f64).exp() + (-7452.5_f64).exp()).ln();
        assert!(direct.is_infinite());
        let expected = -7450.0 + (1.0 + (-1.0_f64).exp() + (-2.5_f64).exp()).ln();
        assert!((log_sum_exp(&terms) - expected).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let plain = [0.3, -0.2, 1.7];
        let naive = (0.3_f64.exp() + (-0.2_f64).exp() + 1.7_f64.exp()).ln();
        assert!((log_sum_exp(&plain) - naive).abs() < 1e-14);
    }

    #[test]
    fn golden_finds_quadratic_maximum() {
        let r = golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-10, 200);
        assert!(r.converged);
        assert!((r.x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn integrates_smooth_and_spiky() {
        let v = integrate(|x| x.sin(), 0.0, PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
        // narrow Gaussian spike fully inside the interval
        let s = 1e-3;
        let g = integrate(
            |x: f64| (-(x - 0.737).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt()),
            0.0,
            2.0,
            1e-11,
        );
        assert!((g - 1.0).abs() < 1e-9, "got {g}");
    }

    #[test]
    fn cdf_table_matches_closed_form() {
        let n = 4096;
        let t = CdfTable::build(|x| x.sin(), 0.0, PI, n);
        // grid nodes carry the composite-Simpson accuracy
        for i in [100, 512, 1000, 2048, 3000] {
            let x = PI * i as f64 / n as f64;
            let expected = (1.0 - x.cos()) / 2.0;
            assert!((t.eval(x) - expected).abs() < 1e-12);
        }
        // off-node points see the linear interpolation error, O(step^2)
        for &x in &[0.1f64, 0.5, 1.0, 2.0, 3.0] {
            let expected = (1.0 - x.cos()) / 2.0;
            assert!((t.eval(x) - expected).abs() < 1e-7);
        }
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(4.0), 1.0);
    }

    #[test]
    fn ks_statistic_on_exact_grid_is_small() {
        // quantiles of U(0,1) give the minimal possible statistic 1/(2n)
        let n = 1000;
        let mut samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&mut samples, |x| x);
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn chi_square_critical_matches_tables() {
        // reference values: 99.9th percentile, standard tables
        assert!((chi_square_upper_critical(35, 3.0902) - 66.62).abs() < 0.5);
        assert!((chi_square_upper_critical(19, 3.0902) - 43.82).abs() < 0.4);
    }
}
