//! Discrete absolute-variation curvature: per-neighbor curvature
//! samples built from estimated normals, their plain average (the
//! naive estimator), and a Monte Carlo evaluation of the continuous
//! quantity for a known shape operator.

use crate::exec;
use crate::numeric::neumaier_sum;
use crate::randgeom::{uniform_unit_vector, PointCloud};
use crate::tangent::{annulus_neighbors, estimate_tangent, tangent_angle};
use crate::{Error, Result};

/// One neighbor's contribution: folded normal angle, chord length, and
/// the discrete curvature value they induce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    pub theta: f64,
    pub chord: f64,
    pub omega: f64,
}

/// Discrete curvature of a point pair: `2 sin(theta / 2) / chord`.
/// On a circle of radius `r` this is exactly `1 / r` for every pair.
pub fn discrete_variation_curvature(theta: f64, chord: f64) -> f64 {
    debug_assert!(chord > 0.0);
    2.0 * (0.5 * theta).sin() / chord
}

/// Curvature samples of `x` against every annulus neighbor, in
/// neighbor-index order. The tangent space is fitted at `x` and at
/// each neighbor with PCA radius `epsilon`; pairs are drawn from the
/// annulus `inner < |y - x| < outer`.
pub fn curvature_samples(
    cloud: &PointCloud,
    x: &[f64],
    m: usize,
    epsilon: f64,
    inner: f64,
    outer: f64,
    weight_scale: f64,
) -> Result<Vec<CurvatureSample>> {
    let center = estimate_tangent(cloud, x, m, epsilon, weight_scale)?;
    let neighbors = annulus_neighbors(cloud, x, inner, outer)?;
    let samples = exec::try_map_indexed(neighbors.len(), |k| {
        let y = cloud.point(neighbors[k]);
        let est = estimate_tangent(cloud, y, m, epsilon, weight_scale)?;
        let theta = tangent_angle(&center.normal, &est.normal);
        let chord: f64 =
            y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        Ok::<CurvatureSample, Error>(CurvatureSample {
            theta,
            chord,
            omega: discrete_variation_curvature(theta, chord),
        })
    })
    .map_err(|(_, e)| e)?;
    Ok(samples)
}

/// The naive estimate: the unweighted mean of the discrete curvature
/// samples, together with the samples themselves.
#[derive(Debug, Clone)]
pub struct NaiveCurvature {
    pub omega_bar: f64,
    pub samples: Vec<CurvatureSample>,
}

pub fn naive_curvature(
    cloud: &PointCloud,
    x: &[f64],
    m: usize,
    epsilon: f64,
    inner: f64,
    outer: f64,
    weight_scale: f64,
) -> Result<NaiveCurvature> {
    let samples = curvature_samples(cloud, x, m, epsilon, inner, outer, weight_scale)?;
    let omega_bar = neumaier_sum(samples.iter().map(|s| s.omega)) / samples.len() as f64;
    Ok(NaiveCurvature { omega_bar, samples })
}

/// A shape operator given by its eigenvalues (principal curvatures).
#[derive(Debug, Clone)]
pub struct ShapeOperatorSpec {
    pub eigenvalues: Vec<f64>,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Trials per independently seeded chunk. Fixing the chunk size makes
/// the result identical whether chunks run in parallel or not.
const MC_CHUNK: u64 = 4096;

/// Monte Carlo evaluation of the mean of `|L u|` over uniformly random
/// unit tangent directions `u`, for the diagonalized shape operator
/// `L`. For equal principal curvatures the integrand is constant and
/// the estimate is exact.
pub fn absolute_variation_curvature_mc(
    spec: &ShapeOperatorSpec,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    let m = spec.eigenvalues.len();
    if m == 0 || trials == 0 {
        return Err(Error::Domain(
            "need at least one eigenvalue and one trial".into(),
        ));
    }
    let n_chunks = trials.div_ceil(MC_CHUNK) as usize;
    let moments = exec::map_indexed(n_chunks, |c| {
        let c = c as u64;
        let lo = c * MC_CHUNK;
        let hi = (lo + MC_CHUNK).min(trials);
        let mut rng = crate::randgeom::stream_rng(seed, c);
        let mut vals = Vec::with_capacity((hi - lo) as usize);
        for _ in lo..hi {
            let u = uniform_unit_vector(m, &mut rng);
            let norm_sq: f64 = spec
                .eigenvalues
                .iter()
                .zip(&u)
                .map(|(l, ui)| (l * ui) * (l * ui))
                .sum();
            vals.push(norm_sq.sqrt());
        }
        let s = neumaier_sum(vals.iter().copied());
        let s2 = neumaier_sum(vals.iter().map(|v| v * v));
        (s, s2)
    });
    let total = neumaier_sum(moments.iter().map(|m| m.0));
    let total_sq = neumaier_sum(moments.iter().map(|m| m.1));
    let n = trials as f64;
    let mean = total / n;
    let var = (total_sq / n - mean * mean).max(0.0);
    Ok(McEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        trials,
    })
}
