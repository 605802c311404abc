//! Sequential weighted solvers.
//!
//! [`seq_kmeans`] / [`seq_kmeans_weighted`] are the no-outlier building
//! block used inside the coreset rounds. [`ls_outlier_weighted`] and
//! [`kmeans_out_weighted`] are bicriteria local searches for weighted
//! k-means with outliers; [`brute_force_opt`] is the exact solver used as
//! an oracle and as a final-round solver on tiny coresets.
//!
//! All solvers are deterministic functions of instance, configuration and
//! seed. Candidate evaluation may run in parallel; acceptance is decided
//! once per iteration on the gathered results.

mod brute;
pub(crate) mod combinations;
mod kmeans_out;
mod ls_outlier;
mod seq_kmeans;
mod swap;

pub use brute::{brute_force_opt, brute_force_solution, EnumBudget};
pub use kmeans_out::kmeans_out_weighted;
pub use ls_outlier::{ls_outlier, ls_outlier_weighted};
pub use seq_kmeans::{seq_kmeans, seq_kmeans_weighted, SEQ_KMEANS_EPSILON};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::metric::{scale_out, IndexSubset, KahanSum, PointSet, WeightFn};

/// Parameters shared by the local-search solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSearchConfig {
    /// A step is accepted only if it lowers the objective below `(1 − ε/k)` times its value.
    pub epsilon: f64,
    /// Largest `|Q|` and `|U|` in a k-Means-Out swap.
    pub rho_swap: usize,
    /// Cap on accepted steps; `None` means `100·k`.
    pub max_iters: Option<usize>,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            rho_swap: 1,
            max_iters: None,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl LocalSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon", format!("must lie in (0,1), got {}", self.epsilon)));
        }
        if self.rho_swap == 0 {
            return Err(invalid("rho_swap", "must be at least 1"));
        }
        if self.max_iters == Some(0) {
            return Err(invalid("max_iters", "must be at least 1"));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, k: usize) -> usize {
        self.max_iters.unwrap_or(100 * k.max(1))
    }
}

/// A (possibly bicriteria) solution to weighted k-means with outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSolution {
    pub centers: IndexSubset,
    /// `ŵ = w − w^Z`.
    pub residual: WeightFn,
    /// Weight scaled out as outliers, `w^Z`.
    pub outliers: WeightFn,
    /// `cost(P, ŵ, C)` at termination.
    pub value: f64,
    /// Objective after initialization and after every accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// `true` when the search stopped because no step met the improvement threshold.
    pub converged: bool,
    /// Most centers the solver may return.
    pub center_budget: usize,
    /// `Σ w^Z`.
    pub outlier_weight: u64,
    /// Max/min pairwise distance ratio of the input, reported by LS-Outlier.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aspect_ratio: Option<f64>,
}

/// Points with weights, addressed by position. Positions are ascending in
/// point index, so position order is the global tie-break order.
pub(crate) struct Instance<'a> {
    pub ps: &'a PointSet,
    pub points: Vec<usize>,
    pub weights: Vec<u64>,
}

impl<'a> Instance<'a> {
    pub fn new(ps: &'a PointSet, points: &IndexSubset, w: &WeightFn) -> Result<Self> {
        points.check_bounds(ps.len())?;
        if points.is_empty() {
            return Err(crate::error::Error::EmptySet("input point set"));
        }
        let points = points.as_slice().to_vec();
        let weights = points.iter().map(|&p| w.get(p)).collect();
        Ok(Self { ps, points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// Distance from every position to its closest center.
    pub fn distances(&self, centers: &[usize]) -> Vec<f64> {
        let cs: Vec<usize> = centers.iter().map(|&c| self.points[c]).collect();
        self.points.iter().map(|&p| self.ps.nearest(p, &cs).0).collect()
    }

    /// `Σ r_i d_i²` over positions in order, zero weights skipped. Matches
    /// [`crate::metric::wcost`] term for term.
    pub fn weighted_cost(dists: &[f64], residual: &[u64]) -> f64 {
        dists
            .iter()
            .zip(residual)
            .filter(|&(_, &r)| r > 0)
            .map(|(&d, &r)| r as f64 * (d * d))
            .collect::<KahanSum>()
            .value()
    }

    /// Like [`Instance::weighted_cost`] but gives up once the running sum exceeds `bound`.
    pub fn weighted_cost_bounded(dists: &[f64], residual: &[u64], bound: f64) -> Option<f64> {
        let mut acc = KahanSum::new();
        for (&d, &r) in dists.iter().zip(residual) {
            if r > 0 {
                acc.add(r as f64 * (d * d));
                if acc.value() > bound {
                    return None;
                }
            }
        }
        Some(acc.value())
    }

    /// Objective with `z` units scaled out from the farthest positions.
    /// Returns the cost and the removed weight per position.
    pub fn scaled_cost(&self, dists: &[f64], z: u64) -> (f64, Vec<u64>) {
        let removed = scale_out(dists, &self.weights, z);
        let residual: Vec<u64> = self.weights.iter().zip(&removed).map(|(w, r)| w - r).collect();
        (Self::weighted_cost(dists, &residual), removed)
    }

    pub fn subset(&self, positions: &[usize]) -> IndexSubset {
        IndexSubset::from_unsorted(positions.iter().map(|&i| self.points[i]).collect())
    }

    pub fn weight_fn(&self, values: &[u64]) -> WeightFn {
        WeightFn::from_pairs(self.points.iter().copied().zip(values.iter().copied()))
    }
}

pub(crate) fn check_k(k: usize, available: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    if k > available {
        return Err(invalid("k", format!("{k} exceeds the {available} available points")));
    }
    Ok(())
}

/// Ratio between the largest and smallest positive pairwise distance.
/// Exact up to 4096 points, estimated from a fixed sample of pairs beyond.
pub fn aspect_ratio(ps: &PointSet, points: &IndexSubset) -> Option<f64> {
    use rand::{Rng, SeedableRng};
    let pts = points.as_slice();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut visit = |a: usize, b: usize| {
        let d = ps.dist(a, b);
        if d > 0.0 {
            lo = lo.min(d);
            hi = hi.max(d);
        }
    };
    if pts.len() <= 4096 {
        for (i, &a) in pts.iter().enumerate() {
            for &b in &pts[i + 1..] {
                visit(a, b);
            }
        }
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..200_000 {
            let a = pts[rng.random_range(0..pts.len())];
            let b = pts[rng.random_range(0..pts.len())];
            visit(a, b);
        }
    }
    (hi > 0.0).then(|| hi / lo)
}
