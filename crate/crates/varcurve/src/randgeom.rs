//! Point clouds, deterministic RNG streams, and samplers for spheres,
//! ambient Gaussian noise, and von Mises-Fisher distributions.
//!
//! All sampling is driven by explicit `ChaCha8Rng` streams so that any
//! run is reproducible from a single `u64` seed, independently of
//! thread count or platform.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::specfun::log_bessel_i_unchecked;
use crate::{Error, Result};

/// Magic bytes of the binary point-cloud format.
const BINARY_MAGIC: &[u8; 4] = b"PCLD";

/// A set of points in `R^ambient_dim`, stored row-major in one flat
/// buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    ambient_dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn new(ambient_dim: usize) -> Self {
        assert!(ambient_dim >= 1);
        PointCloud { ambient_dim, data: Vec::new() }
    }

    pub fn with_capacity(ambient_dim: usize, points: usize) -> Self {
        assert!(ambient_dim >= 1);
        PointCloud { ambient_dim, data: Vec::with_capacity(ambient_dim * points) }
    }

    /// Takes ownership of a row-major coordinate buffer.
    pub fn from_flat(ambient_dim: usize, data: Vec<f64>) -> Result<Self> {
        if ambient_dim == 0 || data.len() % ambient_dim != 0 {
            return Err(Error::Domain(format!(
                "flat buffer of length {} is not a multiple of dimension {}",
                data.len(),
                ambient_dim
            )));
        }
        Ok(PointCloud { ambient_dim, data })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.ambient_dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, point: &[f64]) {
        assert_eq!(point.len(), self.ambient_dim);
        self.data.extend_from_slice(point);
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.ambient_dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Writes one comma-separated row per point. With `header` a
    /// generated `x0,x1,...` line is emitted first.
    pub fn write_csv(&self, path: &Path, header: bool) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        if header {
            let names: Vec<String> = (0..self.ambient_dim).map(|i| format!("x{i}")).collect();
            writeln!(w, "{}", names.join(","))?;
        }
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads comma-separated coordinates. A first line that does not
    /// parse as numbers is skipped as a header; all rows must have the
    /// same width.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut dim: Option<usize> = None;
        let mut data = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                trimmed.split(',').map(|f| f.trim().parse::<f64>()).collect();
            match parsed {
                Ok(row) => {
                    match dim {
                        None => dim = Some(row.len()),
                        Some(d) if d != row.len() => {
                            return Err(Error::Parse(format!(
                                "line {}: expected {} fields, found {}",
                                lineno + 1,
                                d,
                                row.len()
                            )));
                        }
                        _ => {}
                    }
                    data.extend_from_slice(&row);
                }
                Err(e) => {
                    if lineno == 0 {
                        continue; // header line
                    }
                    return Err(Error::Parse(format!("line {}: {e}", lineno + 1)));
                }
            }
        }
        let dim = dim.ok_or_else(|| Error::Parse("no data rows".into()))?;
        PointCloud::from_flat(dim, data)
    }

    /// Binary layout: `PCLD`, u32 LE dimension, u32 LE point count,
    /// four reserved zero bytes, then the coordinates as f64 LE.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.ambient_dim as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u32).to_le_bytes())?;
        w.write_all(&[0u8; 4])?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[0..4] != BINARY_MAGIC {
            return Err(Error::Parse("bad magic; not a point-cloud file".into()));
        }
        let dim = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let count = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        if dim == 0 {
            return Err(Error::Parse("dimension field is zero".into()));
        }
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        let expected = dim * count * 8;
        if payload.len() != expected {
            return Err(Error::Parse(format!(
                "payload is {} bytes, header promises {}",
                payload.len(),
                expected
            )));
        }
        let data: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        PointCloud::from_flat(dim, data)
    }
}

/// A vector of unit Euclidean norm (validated to 1e-12).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let norm_sq: f64 = v.iter().map(|x| x * x).sum();
        if v.is_empty() || (norm_sq.sqrt() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "not a unit vector: |v| = {}",
                norm_sq.sqrt()
            )));
        }
        Ok(UnitVector(v))
    }

    /// Rescales `v` to unit norm; errors on (near-)zero input.
    pub fn normalized(v: Vec<f64>) -> Result<Self> {
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::Domain("cannot normalize a zero vector".into()));
        }
        Ok(UnitVector(v.into_iter().map(|x| x / norm).collect()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

impl<'de> Deserialize<'de> for UnitVector {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let v = Vec::<f64>::deserialize(deserializer)?;
        UnitVector::new(v).map_err(serde::de::Error::custom)
    }
}

/// One von Mises-Fisher component with a mixture weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VmfComponent {
    pub weight: f64,
    pub mean: UnitVector,
    pub kappa: f64,
}

/// A finite mixture of von Mises-Fisher distributions on a common
/// sphere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VmfMixture {
    components: Vec<VmfComponent>,
}

impl VmfMixture {
    pub fn new(components: Vec<VmfComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("mixture needs at least one component".into()));
        }
        let dim = components[0].mean.dim();
        let total: f64 = components.iter().map(|c| c.weight).sum();
        for c in &components {
            if c.mean.dim() != dim {
                return Err(Error::Domain("mixture components have mixed dimensions".into()));
            }
            if !(c.weight >= 0.0) || !(c.kappa >= 0.0) || !c.kappa.is_finite() {
                return Err(Error::Domain(format!(
                    "bad component: weight = {}, kappa = {}",
                    c.weight, c.kappa
                )));
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("weights sum to {total}, expected 1")));
        }
        Ok(VmfMixture { components })
    }

    pub fn components(&self) -> &[VmfComponent] {
        &self.components
    }

    pub fn ambient_dim(&self) -> usize {
        self.components[0].mean.dim()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut pick: f64 = rng.random();
        let mut chosen = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            if pick < c.weight {
                chosen = i;
                break;
            }
            pick -= c.weight;
        }
        let c = &self.components[chosen];
        sample_vmf(&c.mean, c.kappa, rng)
    }

    pub fn sample_many<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> PointCloud {
        let mut cloud = PointCloud::with_capacity(self.ambient_dim(), n);
        for _ in 0..n {
            let p = self.sample(rng);
            cloud.push(&p);
        }
        cloud
    }
}

/// A ChaCha8 generator for (seed, stream). Distinct streams under the
/// same seed are independent, which gives each Monte Carlo work unit
/// its own generator without any sequential coupling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a seed with a purpose tag so that different pipeline stages
/// (calibration, repeat trials, ...) never share a generator, even at
/// equal stream indices. SplitMix64 finalizer.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `(0, ..., 0, r)` in `R^(m+1)`.
pub fn north_pole(m: usize, r: f64) -> Vec<f64> {
    let mut p = vec![0.0; m + 1];
    p[m] = r;
    p
}

/// A point drawn uniformly from the sphere of intrinsic dimension `m`
/// and radius `r` (normalized Gaussian).
pub fn sphere_point_uniform<R: Rng + ?Sized>(m: usize, r: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m + 1).map(|_| StandardNormal.sample(rng)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-100 {
            return v.into_iter().map(|x| x * r / norm).collect();
        }
    }
}

/// `n` i.i.d. uniform points on the same sphere.
pub fn sample_sphere_uniform<R: Rng + ?Sized>(
    m: usize,
    r: f64,
    n: usize,
    rng: &mut R,
) -> PointCloud {
    let mut cloud = PointCloud::with_capacity(m + 1, n);
    for _ in 0..n {
        let p = sphere_point_uniform(m, r, rng);
        cloud.push(&p);
    }
    cloud
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every coordinate in place.
pub fn add_gaussian_noise<R: Rng + ?Sized>(cloud: &mut PointCloud, sigma: f64, rng: &mut R) {
    assert!(sigma >= 0.0);
    if sigma == 0.0 {
        return;
    }
    for i in 0..cloud.len() {
        for v in cloud.point_mut(i) {
            let g: f64 = StandardNormal.sample(rng);
            *v += sigma * g;
        }
    }
}

/// A uniform random unit vector in `R^dim`.
pub fn uniform_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    assert!(dim >= 1);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-100 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// One draw from the von Mises-Fisher distribution on the unit sphere
/// in `R^p` with the given mean direction and concentration.
///
/// Rejection sampler for the cosine `w` of the polar angle around the
/// mean. The acceptance test is evaluated in a cancellation-free form
/// so concentrations up to 1e8 work; `kappa = 0` degenerates to the
/// exact uniform cosine density.
pub fn sample_vmf<R: Rng + ?Sized>(mean: &UnitVector, kappa: f64, rng: &mut R) -> Vec<f64> {
    assert!(kappa >= 0.0 && kappa.is_finite());
    let p = mean.dim();
    assert!(p >= 2, "vMF needs an ambient dimension of at least 2");
    let d = (p - 1) as f64;

    let beta = Beta::new(0.5 * d, 0.5 * d).expect("valid Beta parameters");
    let w;
    let one_minus_w;
    if kappa == 0.0 {
        let z: f64 = beta.sample(rng);
        w = 1.0 - 2.0 * z;
        one_minus_w = 2.0 * z;
    } else {
        // b solves the envelope optimization; small for large kappa
        let b = d / (2.0 * kappa + (4.0 * kappa * kappa + d * d).sqrt());
        let mut accepted = None;
        for _ in 0..100_000 {
            let z: f64 = beta.sample(rng);
            let denom = 1.0 - (1.0 - b) * z;
            // w - x0 and 1 - x0*w reduce to these closed forms, which
            // avoids catastrophic cancellation near w = x0 = 1
            let w_minus_x0 = 2.0 * b * (1.0 - 2.0 * z) / ((1.0 + b) * denom);
            let log_ratio = ((1.0 + b) / 2.0).ln() - denom.ln();
            let u: f64 = rng.random();
            if kappa * w_minus_x0 + d * log_ratio >= u.ln() {
                accepted = Some(z);
                break;
            }
        }
        let z = accepted.expect("vMF rejection sampler failed to accept");
        let omw = 2.0 * b * z / (1.0 - (1.0 - b) * z);
        w = 1.0 - omw;
        one_minus_w = omw;
    }

    // point in the frame whose pole is e_p = (0, ..., 0, 1)
    let tangential = uniform_unit_vector(p - 1, rng);
    let sin_part = (one_minus_w * (2.0 - one_minus_w)).max(0.0).sqrt();
    let mut x = Vec::with_capacity(p);
    for t in &tangential {
        x.push(sin_part * t);
    }
    x.push(w);

    // Householder reflection taking e_p to the mean direction
    let mu = mean.as_slice();
    let mut u = mu.to_vec();
    u[p - 1] -= 1.0;
    let unorm: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if unorm > 1e-12 {
        let proj: f64 = u.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / (unorm * unorm);
        for (xi, ui) in x.iter_mut().zip(&u) {
            *xi -= 2.0 * proj * ui;
        }
    }
    x
}

/// Mean resultant length of a vMF distribution on the sphere in `R^p`:
/// the expected cosine against the mean direction.
pub fn vmf_mean_resultant(p: usize, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    let half = 0.5 * p as f64;
    (log_bessel_i_unchecked(half, kappa) - log_bessel_i_unchecked(half - 1.0, kappa)).exp()
}
