//! Greedy ball cover.
//!
//! Points are visited in scan order; each still-uncovered point opens a
//! ball and absorbs every remaining point `p` with
//! `d(p,q) ≤ δ·max{R, d(p,X)}`. The result is a weighted subset of the
//! input together with the proxy map that produced the weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::metric::{IndexSubset, PointSet, Proxy, ProxySet, WeightFn};

/// Output of a cover call: `Y`, its weights, and the proxy map.
pub type CoverResult = ProxySet;

/// Below this many remaining points the absorption scan stays sequential.
const PARALLEL_SCAN_MIN: usize = 2048;

/// Order in which uncovered points are picked as ball centers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanPolicy {
    #[default]
    Ascending,
    /// A seeded random permutation of the input.
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoverOptions {
    pub scan: ScanPolicy,
    pub exec: Exec,
}

pub fn cover_with_balls(
    ps: &PointSet,
    points: &IndexSubset,
    centers: &IndexSubset,
    delta: f64,
    radius: f64,
    opts: CoverOptions,
) -> Result<CoverResult> {
    cover(ps, points, None, centers, delta, radius, opts)
}

/// As [`cover_with_balls`], but an absorbed point adds its input weight to
/// its proxy instead of one.
pub fn cover_with_balls_weighted(
    ps: &PointSet,
    points: &IndexSubset,
    weights: &WeightFn,
    centers: &IndexSubset,
    delta: f64,
    radius: f64,
    opts: CoverOptions,
) -> Result<CoverResult> {
    if let Some(p) = points.iter().find(|&p| weights.get(p) == 0) {
        return Err(invalid("weights", format!("point {p} has no positive weight")));
    }
    cover(ps, points, Some(weights), centers, delta, radius, opts)
}

fn cover(
    ps: &PointSet,
    points: &IndexSubset,
    weights: Option<&WeightFn>,
    centers: &IndexSubset,
    delta: f64,
    radius: f64,
    opts: CoverOptions,
) -> Result<CoverResult> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(invalid("radius", format!("must be nonnegative, got {radius}")));
    }
    if points.is_empty() {
        return Err(Error::EmptySet("point set to cover"));
    }
    if centers.is_empty() {
        return Err(Error::EmptySet("center set X"));
    }
    points.check_bounds(ps.len())?;
    centers.check_bounds(ps.len())?;

    let members = points.as_slice();
    let x = centers.as_slice();
    let weight_of = |p: usize| weights.map_or(1, |w| w.get(p));

    // d(p,X) never changes during the loop.
    let threshold: Vec<f64> = opts
        .exec
        .map(members, |&p| delta * radius.max(ps.nearest(p, x).0));

    let mut remaining: Vec<usize> = (0..members.len()).collect();
    if let ScanPolicy::Shuffled { seed } = opts.scan {
        remaining.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }

    let mut chosen = Vec::new();
    let mut out_weights = WeightFn::new();
    let mut proxy = Vec::with_capacity(members.len());
    while let Some((&head, rest)) = remaining.split_first() {
        let q = members[head];
        let test = |&i: &usize| ps.dist(members[i], q) <= threshold[i];
        let absorbed: Vec<bool> = if rest.len() >= PARALLEL_SCAN_MIN {
            opts.exec.map(rest, test)
        } else {
            rest.iter().map(test).collect()
        };

        let mut wq = weight_of(q);
        proxy.push((q, q));
        let mut next = Vec::with_capacity(rest.len());
        for (&i, hit) in rest.iter().zip(absorbed) {
            if hit {
                let p = members[i];
                wq += weight_of(p);
                proxy.push((p, q));
            } else {
                next.push(i);
            }
        }
        chosen.push(q);
        out_weights.set(q, wq);
        remaining = next;
    }

    Ok(ProxySet {
        members: IndexSubset::from_unsorted(chosen),
        weights: out_weights,
        proxy: Proxy::from_pairs(proxy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::from_coords(1, xs.to_vec()).unwrap()
    }

    fn subset(v: &[usize], n: usize) -> IndexSubset {
        IndexSubset::new(v.to_vec(), n).unwrap()
    }

    #[test]
    fn hand_traced_absorption() {
        let ps = line(&[0.0, 0.4, 10.0]);
        let all = IndexSubset::all(3);
        let r = cover_with_balls(&ps, &all, &subset(&[0], 3), 0.5, 1.0, CoverOptions::default())
            .unwrap();
        assert_eq!(r.members.as_slice(), &[0, 2]);
        assert_eq!(r.weights, WeightFn::from_pairs([(0, 2), (2, 1)]));
        assert_eq!(r.proxy.get(1), Some(0));
        assert_eq!(r.proxy.get(2), Some(2));
    }

    #[test]
    fn nothing_absorbed_when_balls_are_small() {
        let ps = line(&[0.0, 1.0, 10.0]);
        let all = IndexSubset::all(3);
        let r = cover_with_balls(&ps, &all, &subset(&[0], 3), 0.5, 1.0, CoverOptions::default())
            .unwrap();
        assert_eq!(r.members, all);
        assert!(r.weights.iter().all(|(_, w)| w == 1));

        let ps = line(&[0.0, 3.0, 7.0, 20.0]);
        let all = IndexSubset::all(4);
        let r = cover_with_balls(&ps, &all, &subset(&[0], 4), 0.01, 1.0, CoverOptions::default())
            .unwrap();
        assert_eq!(r.members, all);
    }

    #[test]
    fn weighted_absorption_adds_input_weight() {
        let ps = line(&[0.0, 0.4]);
        let all = IndexSubset::all(2);
        let w = WeightFn::from_pairs([(0, 5), (1, 7)]);
        let r = cover_with_balls_weighted(
            &ps,
            &all,
            &w,
            &subset(&[0], 2),
            1.0,
            1.0,
            CoverOptions::default(),
        )
        .unwrap();
        assert_eq!(r.members.as_slice(), &[0]);
        assert_eq!(r.weights, WeightFn::from_pairs([(0, 12)]));

        let ps = line(&[3.0]);
        let one = IndexSubset::all(1);
        let w = WeightFn::from_pairs([(0, 41)]);
        let r = cover_with_balls_weighted(&ps, &one, &w, &one, 0.3, 0.0, CoverOptions::default())
            .unwrap();
        assert_eq!(r.weights, w);
    }

    #[test]
    fn zero_radius_absorbs_only_duplicates_of_centers() {
        let ps = line(&[1.0, 1.0, 1.0, 2.0]);
        let all = IndexSubset::all(4);
        let r = cover_with_balls(&ps, &all, &subset(&[0], 4), 0.5, 0.0, CoverOptions::default())
            .unwrap();
        assert_eq!(r.members.as_slice(), &[0, 3]);
        assert_eq!(r.weights.get(0), 3);
    }

    #[test]
    fn rejects_bad_arguments() {
        let ps = line(&[0.0, 1.0]);
        let all = IndexSubset::all(2);
        let x = subset(&[0], 2);
        let o = CoverOptions::default();
        assert!(cover_with_balls(&ps, &all, &x, 0.0, 1.0, o).is_err());
        assert!(cover_with_balls(&ps, &all, &x, -1.0, 1.0, o).is_err());
        assert!(cover_with_balls(&ps, &all, &x, 0.5, -1.0, o).is_err());
        assert!(matches!(
            cover_with_balls(&ps, &all, &IndexSubset::empty(), 0.5, 1.0, o),
            Err(Error::EmptySet(_))
        ));
        let w = WeightFn::from_pairs([(0, 1)]);
        assert!(cover_with_balls_weighted(&ps, &all, &w, &x, 0.5, 1.0, o).is_err());
    }

    #[test]
    fn shuffled_scan_is_reproducible_and_conserves_weight() {
        let xs: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let ps = line(&xs);
        let all = IndexSubset::all(200);
        let x = subset(&[0, 50], 200);
        let o = CoverOptions {
            scan: ScanPolicy::Shuffled { seed: 9 },
            exec: Exec::Sequential,
        };
        let a = cover_with_balls(&ps, &all, &x, 0.2, 0.5, o).unwrap();
        let b = cover_with_balls(&ps, &all, &x, 0.2, 0.5, o).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.weights.total(), 200);
    }
}
