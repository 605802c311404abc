//! Single-swap evaluation shared by the local searches.

use super::Instance;
use crate::exec::Exec;

/// Nearest and second-nearest center distance for every position.
pub(crate) struct Assignment {
    pub first: Vec<f64>,
    pub slot: Vec<usize>,
    pub second: Vec<f64>,
}

impl Assignment {
    /// `centers` are positions in ascending order; slots index into it.
    pub fn new(inst: &Instance<'_>, centers: &[usize]) -> Self {
        let m = inst.len();
        let mut first = vec![f64::INFINITY; m];
        let mut second = vec![f64::INFINITY; m];
        let mut slot = vec![usize::MAX; m];
        for (i, &p) in inst.points.iter().enumerate() {
            for (s, &c) in centers.iter().enumerate() {
                let d = inst.ps.dist(p, inst.points[c]);
                if d < first[i] {
                    second[i] = first[i];
                    first[i] = d;
                    slot[i] = s;
                } else if d < second[i] {
                    second[i] = d;
                }
            }
        }
        Self { first, slot, second }
    }

    /// Distances after replacing the center in `slot` with position `u`.
    pub fn swapped(&self, inst: &Instance<'_>, slot: usize, u: usize) -> Vec<f64> {
        let pu = inst.points[u];
        inst.points
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let kept = if self.slot[i] == slot { self.second[i] } else { self.first[i] };
                kept.min(inst.ps.dist(p, pu))
            })
            .collect()
    }
}

/// A candidate swap: replace `centers[slot]` with position `incoming`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Swap {
    pub cost: f64,
    pub slot: usize,
    pub incoming: usize,
}

impl Swap {
    pub fn apply(&self, centers: &[usize]) -> Vec<usize> {
        let mut next = centers.to_vec();
        next[self.slot] = self.incoming;
        next.sort_unstable();
        next
    }
}

/// Keeps the first strictly smallest candidate in iteration order.
pub(crate) fn pick_best(candidates: impl IntoIterator<Item = Option<Swap>>) -> Option<Swap> {
    let mut best: Option<Swap> = None;
    for c in candidates.into_iter().flatten() {
        if best.is_none_or(|b| c.cost < b.cost) {
            best = Some(c);
        }
    }
    best
}

/// The single swap minimizing `Σ r_i d_i²`. Costs are estimates used for
/// ranking; callers recompute the accepted candidate exactly.
pub(crate) fn best_single_swap(
    inst: &Instance<'_>,
    residual: &[u64],
    centers: &[usize],
    assignment: &Assignment,
    exec: Exec,
) -> Option<Swap> {
    let k = centers.len();
    let m = inst.len();
    let per_candidate = exec.map_range(m, |u| {
        if centers.binary_search(&u).is_ok() {
            return None;
        }
        let pu = inst.points[u];
        let mut base = 0.0;
        let mut delta = vec![0.0; k];
        for (i, &p) in inst.points.iter().enumerate() {
            let r = residual[i];
            if r == 0 {
                continue;
            }
            let r = r as f64;
            let du = inst.ps.dist(p, pu);
            let keep_first = assignment.first[i].min(du);
            let keep_second = assignment.second[i].min(du);
            base += r * keep_first * keep_first;
            delta[assignment.slot[i]] += r * (keep_second * keep_second - keep_first * keep_first);
        }
        pick_best((0..k).map(|slot| {
            Some(Swap {
                cost: base + delta[slot],
                slot,
                incoming: u,
            })
        }))
    });
    pick_best(per_candidate)
}
