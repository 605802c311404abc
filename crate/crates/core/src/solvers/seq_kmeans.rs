use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::swap::{best_single_swap, Assignment};
use super::{check_k, Instance};
use crate::error::Result;
use crate::exec::Exec;
use crate::metric::{IndexSubset, PointSet, WeightFn};

/// Improvement threshold of the refinement phase: a swap is taken only if
/// it lowers the cost below `(1 − ε₀/k)` times the current cost.
pub const SEQ_KMEANS_EPSILON: f64 = 0.25;

/// k-means without outliers on the points of `points`: D²-sampling seeding
/// followed by single-swap local search.
pub fn seq_kmeans(
    ps: &PointSet,
    points: &IndexSubset,
    k: usize,
    seed: u64,
    exec: Exec,
) -> Result<IndexSubset> {
    seq_kmeans_weighted(ps, points, &WeightFn::unit(points.iter()), k, seed, exec)
}

/// Weighted variant of [`seq_kmeans`]; seeding samples proportionally to
/// `w_p·d(p,S)²` and the refinement minimizes `wcost`.
pub fn seq_kmeans_weighted(
    ps: &PointSet,
    points: &IndexSubset,
    w: &WeightFn,
    k: usize,
    seed: u64,
    exec: Exec,
) -> Result<IndexSubset> {
    let inst = Instance::new(ps, points, w)?;
    check_k(k, inst.len())?;
    if k == inst.len() {
        return Ok(points.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = d2_seeding(&inst, k, &mut rng);

    let residual = &inst.weights;
    let mut current = Instance::weighted_cost(&inst.distances(&centers), residual);
    let factor = 1.0 - SEQ_KMEANS_EPSILON / k as f64;
    for _ in 0..100 * k {
        if current == 0.0 {
            break;
        }
        let assignment = Assignment::new(&inst, &centers);
        let Some(swap) = best_single_swap(&inst, residual, &centers, &assignment, exec) else {
            break;
        };
        let next = swap.apply(&centers);
        let cost = Instance::weighted_cost(&inst.distances(&next), residual);
        if cost < factor * current {
            centers = next;
            current = cost;
        } else {
            break;
        }
    }
    Ok(inst.subset(&centers))
}

/// Picks `k` distinct positions: the first proportionally to weight, each
/// next one proportionally to `w·d²` to the centers chosen so far.
fn d2_seeding(inst: &Instance<'_>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let m = inst.len();
    let mut chosen = vec![false; m];
    let mut centers = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; m];

    let first_mass: Vec<f64> = inst.weights.iter().map(|&w| w as f64).collect();
    let first = sample(&first_mass, &chosen, rng);
    centers.push(first);
    chosen[first] = true;

    while centers.len() < k {
        let last = inst.points[*centers.last().unwrap()];
        for (i, &p) in inst.points.iter().enumerate() {
            nearest[i] = nearest[i].min(inst.ps.dist(p, last));
        }
        let mass: Vec<f64> = nearest
            .iter()
            .zip(&inst.weights)
            .zip(&chosen)
            .map(|((&d, &w), &c)| if c { 0.0 } else { w as f64 * d * d })
            .collect();
        let next = sample(&mass, &chosen, rng);
        centers.push(next);
        chosen[next] = true;
    }
    centers.sort_unstable();
    centers
}

/// Draws a position with probability proportional to `mass`, falling back
/// to a uniform draw over unchosen positions when all mass is zero.
fn sample(mass: &[f64], chosen: &[bool], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = mass.iter().sum();
    if total > 0.0 && total.is_finite() {
        let mut target = rng.random::<f64>() * total;
        let mut last = None;
        for (i, &m) in mass.iter().enumerate() {
            if m <= 0.0 {
                continue;
            }
            last = Some(i);
            if target < m {
                return i;
            }
            target -= m;
        }
        if let Some(i) = last {
            return i;
        }
    }
    let free: Vec<usize> = (0..chosen.len()).filter(|&i| !chosen[i]).collect();
    free[rng.random_range(0..free.len())]
}
