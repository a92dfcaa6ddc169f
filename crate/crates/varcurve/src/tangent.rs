//! Local tangent-space estimation by weighted PCA over metric
//! neighborhoods, plus the folded angle between estimated normals.
//!
//! Neighbor selection uses strict inequalities throughout: a ball
//! neighborhood is `0 < d < radius` (the query point and its exact
//! duplicates never count), an annulus is `inner < d < outer`.

use nalgebra::DMatrix;

use crate::randgeom::{PointCloud, UnitVector};
use crate::{Error, Result};

/// Indices of points with `0 < |p - x| < radius`.
pub fn ball_neighbors(cloud: &PointCloud, x: &[f64], radius: f64) -> Vec<usize> {
    assert_eq!(cloud.ambient_dim(), x.len());
    let r2 = radius * radius;
    let mut out = Vec::new();
    for (i, p) in cloud.iter().enumerate() {
        let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 > 0.0 && d2 < r2 {
            out.push(i);
        }
    }
    out
}

/// Indices of points with `inner < |p - x| < outer`; errors when the
/// annulus is empty.
pub fn annulus_neighbors(
    cloud: &PointCloud,
    x: &[f64],
    inner: f64,
    outer: f64,
) -> Result<Vec<usize>> {
    assert_eq!(cloud.ambient_dim(), x.len());
    if !(0.0 <= inner && inner < outer) {
        return Err(Error::Domain(format!(
            "annulus radii must satisfy 0 <= inner < outer, got {inner}, {outer}"
        )));
    }
    let (i2, o2) = (inner * inner, outer * outer);
    let mut out = Vec::new();
    for (i, p) in cloud.iter().enumerate() {
        let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 > i2 && d2 < o2 && d2 > 0.0 {
            out.push(i);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyAnnulus { inner, outer });
    }
    Ok(out)
}

/// Result of a local tangent fit: the estimated unit normal (sign
/// normalized so its largest-magnitude coordinate is positive) and the
/// number of neighbors that entered the fit.
#[derive(Debug, Clone)]
pub struct TangentEstimate {
    pub normal: UnitVector,
    pub neighbor_count: usize,
}

/// Weighted PCA tangent fit at `x` for a hypersurface of intrinsic
/// dimension `m` in `R^(m+1)`. Neighbor `i` at distance `d_i` enters
/// with weight `exp(-weight_scale * d_i^2 / epsilon)`; the normal is
/// the right singular vector of the weighted, centered data matrix
/// with the smallest singular value.
pub fn estimate_tangent(
    cloud: &PointCloud,
    x: &[f64],
    m: usize,
    epsilon: f64,
    weight_scale: f64,
) -> Result<TangentEstimate> {
    estimate_tangent_impl(cloud, x, m, epsilon, weight_scale, false)
}

/// Same fit with the scale-free weight variant
/// `exp(-weight_scale * d_i^2 / epsilon^2)`, which leaves the weight
/// profile invariant under a joint rescaling of the cloud and
/// `epsilon`. Coincides with `estimate_tangent` at `epsilon = 1`.
pub fn estimate_tangent_normalized(
    cloud: &PointCloud,
    x: &[f64],
    m: usize,
    epsilon: f64,
    weight_scale: f64,
) -> Result<TangentEstimate> {
    estimate_tangent_impl(cloud, x, m, epsilon, weight_scale, true)
}

fn estimate_tangent_impl(
    cloud: &PointCloud,
    x: &[f64],
    m: usize,
    epsilon: f64,
    weight_scale: f64,
    normalized: bool,
) -> Result<TangentEstimate> {
    let ambient = cloud.ambient_dim();
    if m < 1 || ambient != m + 1 {
        return Err(Error::Domain(format!(
            "hypersurface fit needs ambient dimension m + 1, got m = {m}, ambient = {ambient}"
        )));
    }
    if !(epsilon > 0.0) || !(weight_scale >= 0.0) {
        return Err(Error::Domain(format!(
            "epsilon must be positive and weight_scale nonnegative, got {epsilon}, {weight_scale}"
        )));
    }
    let neighbors = ball_neighbors(cloud, x, epsilon);
    let needed = m + 1;
    if neighbors.len() < needed {
        return Err(Error::InsufficientNeighbors { found: neighbors.len(), needed });
    }

    let denom = if normalized { epsilon * epsilon } else { epsilon };
    let mut rows = Vec::with_capacity(neighbors.len() * ambient);
    for &i in &neighbors {
        let p = cloud.point(i);
        let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        // square root of the PCA weight, applied to the data row
        let wr = (-0.5 * weight_scale * d2 / denom).exp();
        for (a, b) in p.iter().zip(x) {
            rows.push(wr * (a - b));
        }
    }
    let mat = DMatrix::from_row_slice(neighbors.len(), ambient, &rows);
    let svd = mat
        .try_svd(false, true, f64::EPSILON, 256)
        .ok_or_else(|| Error::ConvergenceFailure("SVD did not converge".into()))?;
    let v_t = svd.v_t.as_ref().expect("v_t was requested");

    let sv = svd.singular_values.as_slice();
    let mut min_idx = 0;
    for (i, &s) in sv.iter().enumerate() {
        if s < sv[min_idx] {
            min_idx = i;
        }
    }
    let mut sorted = sv.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = sorted[sorted.len() - 1].max(f64::MIN_POSITIVE);
    let gap = (sorted[1] - sorted[0]) / scale;
    if gap < 1e-12 {
        return Err(Error::DegenerateNeighborhood { gap });
    }

    let mut normal: Vec<f64> = v_t.row(min_idx).iter().copied().collect();
    let lead = normal
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    if normal[lead] < 0.0 {
        for v in &mut normal {
            *v = -*v;
        }
    }
    Ok(TangentEstimate {
        normal: UnitVector::normalized(normal)?,
        neighbor_count: neighbors.len(),
    })
}

/// Angle between the lines spanned by two unit normals, folded into
/// `[0, pi/2]` so the arbitrary sign of each normal drops out.
pub fn tangent_angle(a: &UnitVector, b: &UnitVector) -> f64 {
    let dot: f64 = a.dot(b.as_slice());
    dot.abs().min(1.0).acos()
}
