use serde::{Deserialize, Serialize};

use super::combinations::Combinations;
use super::{check_k, Instance, OutlierSolution};
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::metric::{IndexSubset, PointSet, WeightFn};

/// Hard limits on exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumBudget {
    pub max_points: usize,
    pub max_k: usize,
}

impl Default for EnumBudget {
    fn default() -> Self {
        Self {
            max_points: 25,
            max_k: 3,
        }
    }
}

impl EnumBudget {
    pub fn check(&self, points: usize, k: usize) -> Result<()> {
        if points > self.max_points || k > self.max_k {
            return Err(Error::BudgetExceeded(format!(
                "exhaustive search over {points} points with k = {k} exceeds the budget \
                 ({} points, k ≤ {})",
                self.max_points, self.max_k
            )));
        }
        Ok(())
    }
}

/// Exact `OPT_{k,z}(P,w)`: the k-subset of `points` minimizing the cost
/// with `z` units of weight scaled out. Ties go to the lexicographically
/// first subset.
pub fn brute_force_opt(
    ps: &PointSet,
    points: &IndexSubset,
    w: &WeightFn,
    k: usize,
    z: u64,
    budget: EnumBudget,
    exec: Exec,
) -> Result<(IndexSubset, f64)> {
    let (centers, value, _) = search(ps, points, w, k, z, budget, exec)?;
    Ok((centers, value))
}

/// [`brute_force_opt`] packaged as an [`OutlierSolution`].
pub fn brute_force_solution(
    ps: &PointSet,
    points: &IndexSubset,
    w: &WeightFn,
    k: usize,
    z: u64,
    budget: EnumBudget,
    exec: Exec,
) -> Result<OutlierSolution> {
    let (centers, value, (residual, outliers)) = search(ps, points, w, k, z, budget, exec)?;
    Ok(OutlierSolution {
        centers,
        outlier_weight: outliers.total(),
        residual,
        outliers,
        value,
        trace: vec![value],
        iterations: 0,
        converged: true,
        center_budget: k,
        aspect_ratio: None,
    })
}

type Found = (IndexSubset, f64, (WeightFn, WeightFn));

fn search(
    ps: &PointSet,
    points: &IndexSubset,
    w: &WeightFn,
    k: usize,
    z: u64,
    budget: EnumBudget,
    exec: Exec,
) -> Result<Found> {
    let inst = Instance::new(ps, points, w)?;
    check_k(k, inst.len())?;
    budget.check(inst.len(), k)?;
    let total = inst.total_weight();
    if z > total {
        return Err(invalid("z", format!("{z} exceeds total weight {total}")));
    }
    let m = inst.len();
    let firsts = m - k + 1;
    let per_first = exec.map_range(firsts, |first| {
        let mut rest = Combinations::new(first + 1, m, k - 1);
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut centers = vec![first; k];
        while let Some(tail) = rest.next_combination() {
            centers[1..].copy_from_slice(tail);
            let (cost, _) = inst.scaled_cost(&inst.distances(&centers), z);
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, centers.clone()));
            }
        }
        best
    });
    let (value, centers) = per_first
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one k-subset exists");
    let (_, removed) = inst.scaled_cost(&inst.distances(&centers), z);
    let residual: Vec<u64> = inst.weights.iter().zip(&removed).map(|(w, r)| w - r).collect();
    Ok((
        inst.subset(&centers),
        value,
        (inst.weight_fn(&residual), inst.weight_fn(&removed)),
    ))
}
