//! Synthetic instances: Gaussian blobs around well-separated centers plus
//! planted far-away outliers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metric::PointSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub dim: usize,
    pub k_true: usize,
    /// Per-coordinate standard deviation inside a blob.
    pub spread: f64,
    /// Minimum distance between planted centers.
    pub sep: f64,
    pub z_true: usize,
    /// Minimum distance of a planted outlier from every center.
    pub outlier_dist: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if self.k_true == 0 {
            return Err(invalid("k_true", "must be at least 1"));
        }
        if self.n < self.k_true + self.z_true {
            return Err(invalid(
                "n",
                format!("{} is below k_true + z_true = {}", self.n, self.k_true + self.z_true),
            ));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return Err(invalid("spread", "must be finite and nonnegative"));
        }
        if !(self.sep > 0.0 && self.sep.is_finite()) {
            return Err(invalid("sep", "must be finite and positive"));
        }
        if !(self.outlier_dist > self.sep && self.outlier_dist.is_finite()) {
            return Err(invalid("outlier_dist", "must be finite and exceed sep"));
        }
        Ok(())
    }
}

/// What was planted; reported alongside results, never shown to solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub centers: Vec<Vec<f64>>,
    /// Indices of the planted outliers (the last `z_true` points).
    pub outliers: Vec<usize>,
    /// Blob of every inlier; `None` for outliers.
    pub labels: Vec<Option<usize>>,
}

const PLACEMENT_ATTEMPTS: usize = 10_000;

/// Draws `k` centers pairwise at least `sep` apart, growing the sampling
/// box whenever rejection sampling stalls.
fn place_centers(rng: &mut ChaCha8Rng, k: usize, dim: usize, sep: f64) -> Vec<Vec<f64>> {
    let mut side = 2.0 * sep * (k as f64).powf(1.0 / dim as f64).max(1.0);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut misses = 0;
    while centers.len() < k {
        let c: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * side).collect();
        if centers.iter().all(|o| euclid(o, &c) >= sep) {
            centers.push(c);
            misses = 0;
        } else {
            misses += 1;
            if misses == PLACEMENT_ATTEMPTS {
                side *= 2.0;
                misses = 0;
            }
        }
    }
    centers
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn generate(spec: &GenSpec) -> Result<(PointSet, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.dim;
    let centers = place_centers(&mut rng, spec.k_true, dim, spec.sep);
    let inliers = spec.n - spec.z_true;
    let noise = Normal::new(0.0, spec.spread).map_err(|e| invalid("spread", e.to_string()))?;

    let mut coords = Vec::with_capacity(spec.n * dim);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..inliers {
        let c = i % spec.k_true;
        coords.extend(centers[c].iter().map(|&x| x + noise.sample(&mut rng)));
        labels.push(Some(c));
    }

    let mid: Vec<f64> = (0..dim)
        .map(|j| centers.iter().map(|c| c[j]).sum::<f64>() / spec.k_true as f64)
        .collect();
    let reach = centers.iter().map(|c| euclid(c, &mid)).fold(0.0, f64::max);
    for _ in 0..spec.z_true {
        let dir = loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect::<Vec<f64>>();
            }
        };
        let r = reach + spec.outlier_dist * (1.0 + rng.random::<f64>());
        coords.extend(mid.iter().zip(&dir).map(|(m, u)| m + r * u));
        labels.push(None);
    }

    let ps = PointSet::from_coords(dim, coords)?;
    Ok((
        ps,
        GroundTruth {
            centers,
            outliers: (inliers..spec.n).collect(),
            labels,
        },
    ))
}
