//! LS-Outlier local search with bicriteria outlier growth.
//!
//! Each iteration first runs single-swap local search on the current
//! inliers, then considers two ways of discarding more weight:
//!
//! * keep the centers and scale out `z` further units from the residual
//!   (disjoint outlier sets combine by pointwise sum);
//! * apply the most profitable single swap and scale out `z` fresh units
//!   from the whole input (overlapping sets combine by pointwise maximum).
//!
//! Outliers are recomputed after the swap. The cheaper candidate is taken
//! if it improves the objective by a factor `1 − ε/k`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::swap::{best_single_swap, pick_best, Assignment, Swap};
use super::{aspect_ratio, check_k, Instance, LocalSearchConfig, OutlierSolution};
use crate::error::{invalid, Result};
use crate::metric::{cost_on, out_z_on, scale_out, IndexSubset, PointSet, WeightFn};

/// How outliers are represented during the search.
trait OutlierModel {
    /// Residual inlier weight per position.
    fn residual(&self, inst: &Instance<'_>) -> Vec<u64>;
    /// Keep `centers`, discard `z` more units among current inliers.
    fn extend(&self, inst: &Instance<'_>, centers: &[usize], z: u64) -> Self;
    /// Union with a fresh `z`-unit discard measured on the whole input.
    fn merge_fresh(&self, inst: &Instance<'_>, centers: &[usize], z: u64) -> Self;
    fn objective(&self, inst: &Instance<'_>, centers: &[usize]) -> f64;
}

/// Outliers as a weight function `w^Z` with `0 ≤ w^Z ≤ w`.
#[derive(Clone)]
struct WeightedOutliers(Vec<u64>);

impl OutlierModel for WeightedOutliers {
    fn residual(&self, inst: &Instance<'_>) -> Vec<u64> {
        inst.weights.iter().zip(&self.0).map(|(w, o)| w - o).collect()
    }

    fn extend(&self, inst: &Instance<'_>, centers: &[usize], z: u64) -> Self {
        let residual = self.residual(inst);
        let left: u64 = residual.iter().sum();
        let extra = scale_out(&inst.distances(centers), &residual, z.min(left));
        Self(self.0.iter().zip(extra).map(|(a, b)| a + b).collect())
    }

    fn merge_fresh(&self, inst: &Instance<'_>, centers: &[usize], z: u64) -> Self {
        let fresh = scale_out(&inst.distances(centers), &inst.weights, z);
        Self(self.0.iter().zip(fresh).map(|(&a, b)| a.max(b)).collect())
    }

    fn objective(&self, inst: &Instance<'_>, centers: &[usize]) -> f64 {
        Instance::weighted_cost(&inst.distances(centers), &self.residual(inst))
    }
}

/// Outliers as an explicit set of points, for unit-weight inputs.
#[derive(Clone)]
struct SetOutliers(Vec<usize>);

impl SetOutliers {
    fn inliers(&self, inst: &Instance<'_>) -> Vec<usize> {
        inst.points
            .iter()
            .copied()
            .filter(|p| self.0.binary_search(p).is_err())
            .collect()
    }

    fn union(&self, more: Vec<usize>) -> Self {
        let mut all = self.0.clone();
        all.extend(more);
        all.sort_unstable();
        all.dedup();
        Self(all)
    }
}

impl OutlierModel for SetOutliers {
    fn residual(&self, inst: &Instance<'_>) -> Vec<u64> {
        inst.points
            .iter()
            .map(|p| u64::from(self.0.binary_search(p).is_err()))
            .collect()
    }

    fn extend(&self, inst: &Instance<'_>, centers: &[usize], z: u64) -> Self {
        let cs = inst.subset(centers);
        self.union(out_z_on(inst.ps, &self.inliers(inst), cs.as_slice(), z as usize))
    }

    fn merge_fresh(&self, inst: &Instance<'_>, centers: &[usize], z: u64) -> Self {
        let cs = inst.subset(centers);
        self.union(out_z_on(inst.ps, &inst.points, cs.as_slice(), z as usize))
    }

    fn objective(&self, inst: &Instance<'_>, centers: &[usize]) -> f64 {
        let cs = inst.subset(centers);
        cost_on(inst.ps, &self.inliers(inst), cs.as_slice())
    }
}

/// Weighted LS-Outlier. The returned outlier weight may exceed `z`.
pub fn ls_outlier_weighted(
    ps: &PointSet,
    points: &IndexSubset,
    w: &WeightFn,
    k: usize,
    z: u64,
    cfg: &LocalSearchConfig,
) -> Result<OutlierSolution> {
    let inst = Instance::new(ps, points, w)?;
    let (centers, outliers, run) = search(&inst, k, z, cfg, |c| {
        WeightedOutliers(scale_out(&inst.distances(c), &inst.weights, z))
    })?;
    let residual = outliers.residual(&inst);
    Ok(run.into_solution(
        &inst,
        &centers,
        inst.weight_fn(&residual),
        inst.weight_fn(&outliers.0),
        aspect_ratio(ps, points),
    ))
}

/// Set-based LS-Outlier on unit-weight points, with `Z ⊂ P` tracked
/// explicitly. On unit weights it follows the same trajectory as
/// [`ls_outlier_weighted`].
pub fn ls_outlier(
    ps: &PointSet,
    points: &IndexSubset,
    k: usize,
    z: usize,
    cfg: &LocalSearchConfig,
) -> Result<OutlierSolution> {
    let unit = WeightFn::unit(points.iter());
    let inst = Instance::new(ps, points, &unit)?;
    let (centers, outliers, run) = search(&inst, k, z as u64, cfg, |c| {
        let cs = inst.subset(c);
        SetOutliers(out_z_on(ps, &inst.points, cs.as_slice(), z))
    })?;
    let residual = outliers.residual(&inst);
    let removed: Vec<u64> = residual.iter().map(|r| 1 - r).collect();
    Ok(run.into_solution(
        &inst,
        &centers,
        inst.weight_fn(&residual),
        inst.weight_fn(&removed),
        aspect_ratio(ps, points),
    ))
}

struct Run {
    value: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl Run {
    fn into_solution(
        self,
        inst: &Instance<'_>,
        centers: &[usize],
        residual: WeightFn,
        outliers: WeightFn,
        aspect_ratio: Option<f64>,
    ) -> OutlierSolution {
        OutlierSolution {
            centers: inst.subset(centers),
            outlier_weight: outliers.total(),
            residual,
            outliers,
            value: self.value,
            trace: self.trace,
            iterations: self.iterations,
            converged: self.converged,
            center_budget: centers.len(),
            aspect_ratio,
        }
    }
}

fn search<M: OutlierModel + Clone + Sync>(
    inst: &Instance<'_>,
    k: usize,
    z: u64,
    cfg: &LocalSearchConfig,
    initial_outliers: impl Fn(&[usize]) -> M,
) -> Result<(Vec<usize>, M, Run)> {
    cfg.validate()?;
    check_k(k, inst.len())?;
    let total = inst.total_weight();
    if z >= total {
        return Err(invalid("z", format!("{z} must be below the total weight {total}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centers: Vec<usize> = sample(&mut rng, inst.len(), k).into_vec();
    centers.sort_unstable();
    let mut outliers = initial_outliers(&centers);
    let mut value = outliers.objective(inst, &centers);

    let factor = 1.0 - cfg.epsilon / k as f64;
    let cap = cfg.iteration_cap(k);
    let mut trace = vec![value];
    let mut iterations = 0;
    let mut converged = false;

    'outer: while iterations < cap {
        // (a) local search on the current inliers
        loop {
            if iterations >= cap {
                break 'outer;
            }
            let residual = outliers.residual(inst);
            let assignment = Assignment::new(inst, &centers);
            let Some(swap) = best_single_swap(inst, &residual, &centers, &assignment, cfg.exec)
            else {
                break;
            };
            let next = swap.apply(&centers);
            let cost = outliers.objective(inst, &next);
            if cost < factor * value {
                centers = next;
                value = cost;
                trace.push(value);
                iterations += 1;
            } else {
                break;
            }
        }

        // (b) same centers, z more units discarded among the inliers
        let grown = outliers.extend(inst, &centers, z);
        let grown_cost = grown.objective(inst, &centers);

        // (c) best single swap, then a fresh z-unit discard merged in
        let assignment = Assignment::new(inst, &centers);
        let swapped = best_swap_with_fresh_outliers(inst, &centers, &assignment, &outliers, z, cfg);

        let (next_centers, next_outliers, next_value) = match swapped {
            Some((swap, cost)) if cost < grown_cost => {
                let next = swap.apply(&centers);
                let merged = outliers.merge_fresh(inst, &next, z);
                let exact = merged.objective(inst, &next);
                debug_assert!((exact - cost).abs() <= 1e-9 * exact.max(1.0));
                (next, merged, exact)
            }
            _ => (centers.clone(), grown, grown_cost),
        };
        if next_value < factor * value {
            centers = next_centers;
            outliers = next_outliers;
            value = next_value;
            trace.push(value);
            iterations += 1;
        } else {
            converged = true;
            break;
        }
    }

    Ok((
        centers,
        outliers,
        Run {
            value,
            trace,
            iterations,
            converged,
        },
    ))
}

fn best_swap_with_fresh_outliers<M: OutlierModel + Sync>(
    inst: &Instance<'_>,
    centers: &[usize],
    assignment: &Assignment,
    outliers: &M,
    z: u64,
    cfg: &LocalSearchConfig,
) -> Option<(Swap, f64)> {
    let kept = outliers.residual(inst);
    let candidates = cfg.exec.map_range(inst.len(), |u| {
        if centers.binary_search(&u).is_ok() {
            return None;
        }
        pick_best((0..centers.len()).map(|slot| {
            let dists = assignment.swapped(inst, slot, u);
            let fresh = scale_out(&dists, &inst.weights, z);
            // residual of the pointwise max of current and fresh outliers
            let residual: Vec<u64> = inst
                .weights
                .iter()
                .zip(&kept)
                .zip(&fresh)
                .map(|((&w, &r), &f)| r.min(w - f))
                .collect();
            Some(Swap {
                cost: Instance::weighted_cost(&dists, &residual),
                slot,
                incoming: u,
            })
        }))
    });
    pick_best(candidates).map(|s| (s, s.cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::metric::wcost;
    use crate::solvers::{brute_force_opt, EnumBudget};

    fn line(xs: &[f64]) -> PointSet {
        PointSet::from_coords(1, xs.to_vec()).unwrap()
    }

    fn cfg(seed: u64) -> LocalSearchConfig {
        LocalSearchConfig {
            seed,
            exec: Exec::Sequential,
            ..Default::default()
        }
    }

    #[test]
    fn three_points_one_outlier() {
        let ps = line(&[0.0, 1.0, 100.0]);
        let all = IndexSubset::all(3);
        let w = WeightFn::unit(0..3);
        let (_, opt) =
            brute_force_opt(&ps, &all, &w, 1, 1, EnumBudget::default(), Exec::Sequential).unwrap();
        assert_eq!(opt, 1.0);
        for seed in 0..10 {
            let sol = ls_outlier_weighted(&ps, &all, &w, 1, 1, &cfg(seed)).unwrap();
            assert!(sol.value <= 274.0 * opt);
            assert!(sol.outlier_weight >= 1);
            assert_eq!(sol.value, wcost(&ps, &sol.residual, &sol.centers).unwrap());
        }
    }

    #[test]
    fn all_points_as_centers_cost_nothing() {
        let ps = line(&[0.0, 4.0, 9.0]);
        let all = IndexSubset::all(3);
        let sol = ls_outlier_weighted(&ps, &all, &WeightFn::unit(0..3), 3, 0, &cfg(1)).unwrap();
        assert_eq!(sol.value, 0.0);
        assert!(sol.converged);
    }

    #[test]
    fn trace_improves_by_the_threshold() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 31) % 17) as f64 + (i / 10) as f64 * 50.0).collect();
        let ps = line(&xs);
        let all = IndexSubset::all(40);
        let w = WeightFn::from_pairs((0..40).map(|i| (i, 1 + (i % 3) as u64)));
        let c = cfg(3);
        let sol = ls_outlier_weighted(&ps, &all, &w, 3, 2, &c).unwrap();
        let factor = 1.0 - c.epsilon / 3.0;
        for pair in sol.trace.windows(2) {
            assert!(pair[1] < factor * pair[0]);
        }
        assert!(sol.outliers.iter().all(|(p, o)| o <= w.get(p)));
    }

    #[test]
    fn set_and_weighted_variants_agree_on_unit_weights() {
        let xs: Vec<f64> = (0..30).map(|i| ((i * 13) % 29) as f64 * 1.5 + if i % 7 == 0 { 90.0 } else { 0.0 }).collect();
        let ps = line(&xs);
        let all = IndexSubset::all(30);
        for seed in 0..5 {
            let a = ls_outlier(&ps, &all, 2, 2, &cfg(seed)).unwrap();
            let b = ls_outlier_weighted(&ps, &all, &WeightFn::unit(0..30), 2, 2, &cfg(seed)).unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert_eq!(a.centers, b.centers);
            assert_eq!(a.outliers, b.outliers);
        }
    }

    #[test]
    fn rejects_outlier_budget_of_whole_input() {
        let ps = line(&[0.0, 1.0]);
        let all = IndexSubset::all(2);
        assert!(ls_outlier_weighted(&ps, &all, &WeightFn::unit(0..2), 1, 2, &cfg(0)).is_err());
    }
}
