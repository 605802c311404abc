use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::combinations::all_up_to;
use super::{check_k, Instance, LocalSearchConfig, OutlierSolution};
use crate::error::{invalid, Result};
use crate::metric::{scale_out, IndexSubset, PointSet, WeightFn};

/// Most centers k-Means-Out may hold: `⌊(1+ε)k⌋`.
pub fn center_cap(k: usize, epsilon: f64) -> usize {
    (((1.0 + epsilon) * k as f64) + 1e-9).floor() as usize
}

/// Weighted k-Means-Out: multi-swap local search that exchanges up to
/// `ρ_swap` centers for up to `ρ_swap` non-centers per step, keeping at
/// most `⌊(1+ε)k⌋` centers, with the objective measured after scaling out
/// exactly `z` units of weight.
pub fn kmeans_out_weighted(
    ps: &PointSet,
    points: &IndexSubset,
    w: &WeightFn,
    k: usize,
    z: u64,
    cfg: &LocalSearchConfig,
) -> Result<OutlierSolution> {
    cfg.validate()?;
    let inst = Instance::new(ps, points, w)?;
    check_k(k, inst.len())?;
    let total = inst.total_weight();
    if z >= total {
        return Err(invalid("z", format!("{z} must be below the total weight {total}")));
    }
    let m = inst.len();
    let cap = center_cap(k, cfg.epsilon).min(m);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centers: Vec<usize> = sample(&mut rng, m, k).into_vec();
    centers.sort_unstable();
    let mut value = inst.scaled_cost(&inst.distances(&centers), z).0;

    let factor = 1.0 - cfg.epsilon / k as f64;
    let iteration_cap = cfg.iteration_cap(k);
    let mut trace = vec![value];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < iteration_cap {
        let threshold = factor * value;
        let outside: Vec<usize> = (0..m).filter(|i| centers.binary_search(i).is_err()).collect();
        let removals = all_up_to(centers.len(), 0, cfg.rho_swap);
        let additions = all_up_to(outside.len(), 0, cfg.rho_swap);

        let per_addition = cfg.exec.map(&additions, |added| {
            let mut best: Option<(f64, Vec<usize>)> = None;
            for removed in &removals {
                if removed.is_empty() && added.is_empty() {
                    continue;
                }
                let size = centers.len() - removed.len() + added.len();
                if size == 0 || size > cap {
                    continue;
                }
                let candidate = exchange(&centers, removed, added, &outside);
                let dists = inst.distances(&candidate);
                let residual: Vec<u64> = inst
                    .weights
                    .iter()
                    .zip(scale_out(&dists, &inst.weights, z))
                    .map(|(w, r)| w - r)
                    .collect();
                let bound = best.as_ref().map_or(threshold, |(b, _)| b.min(threshold));
                if let Some(cost) = Instance::weighted_cost_bounded(&dists, &residual, bound) {
                    if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                        best = Some((cost, candidate));
                    }
                }
            }
            best
        });
        let best = per_addition
            .into_iter()
            .flatten()
            .reduce(|a, b| if b.0 < a.0 { b } else { a });

        match best {
            Some((_, next)) => {
                let cost = inst.scaled_cost(&inst.distances(&next), z).0;
                if cost < threshold {
                    centers = next;
                    value = cost;
                    trace.push(value);
                    iterations += 1;
                    continue;
                }
                converged = true;
                break;
            }
            None => {
                converged = true;
                break;
            }
        }
    }

    let (_, removed) = inst.scaled_cost(&inst.distances(&centers), z);
    let residual: Vec<u64> = inst.weights.iter().zip(&removed).map(|(w, r)| w - r).collect();
    Ok(OutlierSolution {
        centers: inst.subset(&centers),
        residual: inst.weight_fn(&residual),
        outliers: inst.weight_fn(&removed),
        outlier_weight: removed.iter().sum(),
        value,
        trace,
        iterations,
        converged,
        center_budget: cap,
        aspect_ratio: None,
    })
}

/// `(C ∖ Q) ∪ U` where `removed` indexes into `centers` and `added` into `outside`.
fn exchange(centers: &[usize], removed: &[usize], added: &[usize], outside: &[usize]) -> Vec<usize> {
    let mut next: Vec<usize> = centers
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(i))
        .map(|(_, &c)| c)
        .chain(added.iter().map(|&a| outside[a]))
        .collect();
    next.sort_unstable();
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::metric::wcost_out;
    use crate::solvers::{brute_force_opt, EnumBudget};

    fn line(xs: &[f64]) -> PointSet {
        PointSet::from_coords(1, xs.to_vec()).unwrap()
    }

    fn cfg(seed: u64, epsilon: f64, rho_swap: usize) -> LocalSearchConfig {
        LocalSearchConfig {
            seed,
            epsilon,
            rho_swap,
            max_iters: None,
            exec: Exec::Sequential,
        }
    }

    #[test]
    fn cap_is_floor_of_inflated_k() {
        assert_eq!(center_cap(3, 0.1), 3);
        assert_eq!(center_cap(10, 0.1), 11);
        assert_eq!(center_cap(10, 0.3), 13);
        assert_eq!(center_cap(4, 0.5), 6);
    }

    #[test]
    fn three_points_one_outlier() {
        let ps = line(&[0.0, 1.0, 100.0]);
        let all = IndexSubset::all(3);
        let w = WeightFn::unit(0..3);
        for seed in 0..8 {
            let sol = kmeans_out_weighted(&ps, &all, &w, 1, 1, &cfg(seed, 0.1, 1)).unwrap();
            assert!(sol.value <= 1.1 * 1.0, "value {}", sol.value);
            assert_eq!(sol.outlier_weight, 1);
            assert_eq!(sol.value, wcost_out(&ps, &w, &sol.centers, 1).unwrap());
        }
    }

    #[test]
    fn extra_centers_within_cap() {
        let xs: Vec<f64> = (0..24).map(|i| (i / 6) as f64 * 40.0 + (i % 6) as f64 * 0.5).collect();
        let ps = line(&xs);
        let all = IndexSubset::all(24);
        let w = WeightFn::from_pairs((0..24).map(|i| (i, 1 + (i % 4) as u64)));
        for seed in 0..5 {
            let c = cfg(seed, 0.5, 2);
            let sol = kmeans_out_weighted(&ps, &all, &w, 4, 3, &c).unwrap();
            assert!(sol.centers.len() <= center_cap(4, 0.5));
            assert_eq!(sol.outlier_weight, 3);
            let factor = 1.0 - c.epsilon / 4.0;
            for pair in sol.trace.windows(2) {
                assert!(pair[1] < factor * pair[0]);
            }
        }
    }

    #[test]
    fn multi_swap_reaches_optimum_on_separated_groups() {
        let ps = line(&[0.0, 0.2, 50.0, 50.3, 100.0, 100.1, 500.0]);
        let all = IndexSubset::all(7);
        let w = WeightFn::unit(0..7);
        let (_, opt) =
            brute_force_opt(&ps, &all, &w, 3, 1, EnumBudget::default(), Exec::Sequential).unwrap();
        for seed in 0..5 {
            let sol = kmeans_out_weighted(&ps, &all, &w, 3, 1, &cfg(seed, 0.1, 2)).unwrap();
            assert!(sol.value <= 1.1 * opt + 1e-12, "{} vs {opt}", sol.value);
        }
    }

    #[test]
    fn all_points_as_centers() {
        let ps = line(&[0.0, 2.0, 3.0]);
        let all = IndexSubset::all(3);
        let sol = kmeans_out_weighted(&ps, &all, &WeightFn::unit(0..3), 3, 0, &cfg(0, 0.1, 1))
            .unwrap();
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.iterations, 0);
    }
}
