//! Points, metrics, and the cost and outlier primitives every other module
//! builds on.
//!
//! Ties are always broken by lowest point index: the closest member of a
//! center set, the order in which outliers are discarded, and the order in
//! which weight is scaled out. Sums of squared distances go through
//! [`KahanSum`] in ascending point-index order, skipping zero weights, so
//! weighted and unweighted routes over the same points agree bitwise.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Triangle inequality is checked on every triple up to this size.
pub const EXHAUSTIVE_TRIANGLE_CHECK: usize = 512;
/// Random triples checked for larger distance matrices.
pub const SAMPLED_TRIANGLE_CHECKS: usize = 10_000;

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Row-major `n × dim` coordinates under the Euclidean distance.
    Euclidean { dim: usize, coords: Vec<f64> },
    /// Row-major `n × n` distance matrix.
    Matrix { dmat: Vec<f64> },
}

/// An immutable indexed point set with its metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    n: usize,
    geometry: Geometry,
}

impl PointSet {
    pub fn from_coords(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(invalid(
                "coords",
                format!("length {} is not a positive multiple of dim {dim}", coords.len()),
            ));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidMetric(format!(
                "non-finite coordinate for point {}",
                i / dim
            )));
        }
        Ok(Self {
            n: coords.len() / dim,
            geometry: Geometry::Euclidean { dim, coords },
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptySet("point set"))?;
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            return Err(invalid(
                "coords",
                format!("row {i} has {} coordinates, expected {dim}", rows[i].len()),
            ));
        }
        Self::from_coords(dim, rows.concat())
    }

    /// Builds a point set from an explicit distance matrix, validating the
    /// metric axioms.
    pub fn from_matrix(n: usize, dmat: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySet("point set"));
        }
        if dmat.len() != n * n {
            return Err(invalid(
                "dmat",
                format!("expected {} entries, found {}", n * n, dmat.len()),
            ));
        }
        for i in 0..n {
            if dmat[i * n + i] != 0.0 {
                return Err(Error::InvalidMetric(format!("d({i},{i}) is not zero")));
            }
            for j in 0..n {
                let d = dmat[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "d({i},{j}) = {d} is not a finite nonnegative value"
                    )));
                }
                if d != dmat[j * n + i] {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        let ps = Self {
            n,
            geometry: Geometry::Matrix { dmat },
        };
        ps.check_triangles()?;
        Ok(ps)
    }

    fn check_triangles(&self) -> Result<()> {
        let n = self.n;
        let check = |i: usize, j: usize, k: usize| -> Result<()> {
            let lhs = self.dist(i, j);
            let rhs = self.dist(i, k) + self.dist(k, j);
            if lhs > rhs + 1e-9 * lhs.max(1.0) {
                return Err(Error::InvalidMetric(format!(
                    "triangle inequality fails: d({i},{j}) > d({i},{k}) + d({k},{j})"
                )));
            }
            Ok(())
        };
        if n <= EXHAUSTIVE_TRIANGLE_CHECK {
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in 0..n {
                        check(i, j, k)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for _ in 0..SAMPLED_TRIANGLE_CHECKS {
                check(
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                )?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Ambient dimension for coordinate point sets.
    pub fn dim(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Euclidean { dim, .. } => Some(*dim),
            Geometry::Matrix { .. } => None,
        }
    }

    pub fn coords(&self, p: usize) -> Option<&[f64]> {
        match &self.geometry {
            Geometry::Euclidean { dim, coords } => coords.get(p * dim..(p + 1) * dim),
            Geometry::Matrix { .. } => None,
        }
    }

    pub fn check_index(&self, p: usize) -> Result<()> {
        if p < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: p,
                n: self.n,
            })
        }
    }

    /// Distance between two points. Panics on out-of-range indices; use
    /// [`PointSet::try_dist`] for checked access.
    #[inline]
    pub fn dist(&self, p: usize, q: usize) -> f64 {
        match &self.geometry {
            Geometry::Euclidean { dim, coords } => {
                let a = &coords[p * dim..(p + 1) * dim];
                let b = &coords[q * dim..(q + 1) * dim];
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            }
            Geometry::Matrix { dmat } => {
                assert!(p < self.n && q < self.n, "point index out of range");
                dmat[p * self.n + q]
            }
        }
    }

    pub fn try_dist(&self, p: usize, q: usize) -> Result<f64> {
        self.check_index(p)?;
        self.check_index(q)?;
        Ok(self.dist(p, q))
    }

    /// Distance from `p` to the closest member of `set` and that member,
    /// lowest index on ties. `set` must be nonempty and in ascending order
    /// for the tie policy to hold.
    #[inline]
    pub fn nearest(&self, p: usize, set: &[usize]) -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for &s in set {
            let d = self.dist(p, s);
            if d < best.0 {
                best = (d, s);
            }
        }
        best
    }
}

/// A duplicate-free, ascending set of point indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexSubset(Vec<usize>);

impl IndexSubset {
    /// Sorts and validates `members` against a point set of size `n`.
    pub fn new(mut members: Vec<usize>, n: usize) -> Result<Self> {
        members.sort_unstable();
        if let Some(&index) = members.iter().find(|&&m| m >= n) {
            return Err(Error::IndexOutOfRange { index, n });
        }
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("subset", "duplicate member"));
        }
        Ok(Self(members))
    }

    pub fn all(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Collects and sorts distinct indices without range validation.
    pub(crate) fn from_unsorted(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self(members)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn check_bounds(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&index) if index >= n => Err(Error::IndexOutOfRange { index, n }),
            _ => Ok(()),
        }
    }
}

impl From<IndexSubset> for Vec<usize> {
    fn from(s: IndexSubset) -> Self {
        s.0
    }
}

/// Nonnegative integer weights keyed by point index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightFn(BTreeMap<usize, u64>);

impl WeightFn {
    pub fn new() -> Self {
        Self::default()
    }

    /// Weight 1 on every listed point.
    pub fn unit(points: impl IntoIterator<Item = usize>) -> Self {
        Self(points.into_iter().map(|p| (p, 1)).collect())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u64)>) -> Self {
        Self(pairs.into_iter().collect())
    }

    pub fn get(&self, p: usize) -> u64 {
        self.0.get(&p).copied().unwrap_or(0)
    }

    pub fn set(&mut self, p: usize, w: u64) {
        self.0.insert(p, w);
    }

    pub fn add(&mut self, p: usize, w: u64) {
        *self.0.entry(p).or_insert(0) += w;
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entries in ascending point order, zero weights included.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.0.iter().map(|(&p, &w)| (p, w))
    }

    pub fn points(&self) -> Vec<usize> {
        self.0.keys().copied().collect()
    }

    pub fn check_bounds(&self, n: usize) -> Result<()> {
        match self.0.keys().next_back() {
            Some(&index) if index >= n => Err(Error::IndexOutOfRange { index, n }),
            _ => Ok(()),
        }
    }
}

/// Map from points to their representatives, ascending by point.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Proxy(Vec<(usize, usize)>);

impl Proxy {
    pub fn from_pairs(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        Self(pairs)
    }

    pub fn identity(points: impl IntoIterator<Item = usize>) -> Self {
        Self::from_pairs(points.into_iter().map(|p| (p, p)).collect())
    }

    pub fn get(&self, p: usize) -> Option<usize> {
        self.0
            .binary_search_by_key(&p, |&(q, _)| q)
            .ok()
            .map(|i| self.0[i].1)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().copied()
    }

    /// `p ↦ outer(self(p))`. Representatives missing from `outer` map to
    /// themselves.
    pub fn then(&self, outer: &Proxy) -> Proxy {
        Proxy(
            self.0
                .iter()
                .map(|&(p, q)| (p, outer.get(q).unwrap_or(q)))
                .collect(),
        )
    }

    /// `Σ_p d(p, π(p))²` in ascending point order.
    pub fn cost(&self, ps: &PointSet) -> f64 {
        self.0
            .iter()
            .map(|&(p, q)| {
                let d = ps.dist(p, q);
                d * d
            })
            .collect::<KahanSum>()
            .value()
    }
}

/// A weighted subset together with the proxy map that induced its weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProxySet {
    pub members: IndexSubset,
    pub weights: WeightFn,
    pub proxy: Proxy,
}

impl ProxySet {
    /// The trivial coreset: every point is its own proxy with weight 1.
    pub fn identity(points: &IndexSubset) -> Self {
        Self {
            members: points.clone(),
            weights: WeightFn::unit(points.iter()),
            proxy: Proxy::identity(points.iter()),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn nonempty<'a>(s: &'a IndexSubset, what: &'static str) -> Result<&'a [usize]> {
    if s.is_empty() {
        Err(Error::EmptySet(what))
    } else {
        Ok(s.as_slice())
    }
}

/// `(d(p,S), p^S)`.
pub fn dist_to_set(ps: &PointSet, p: usize, s: &IndexSubset) -> Result<(f64, usize)> {
    ps.check_index(p)?;
    s.check_bounds(ps.len())?;
    Ok(ps.nearest(p, nonempty(s, "center set")?))
}

/// `Σ_{p∈domain} d(p,S)²`.
pub fn cost_on(ps: &PointSet, domain: &[usize], s: &[usize]) -> f64 {
    domain
        .iter()
        .map(|&p| {
            let d = ps.nearest(p, s).0;
            d * d
        })
        .collect::<KahanSum>()
        .value()
}

/// `cost(P,S) = Σ_{p∈P} d(p,S)²`.
pub fn cost(ps: &PointSet, s: &IndexSubset) -> Result<f64> {
    s.check_bounds(ps.len())?;
    let centers = nonempty(s, "center set")?;
    let all: Vec<usize> = (0..ps.len()).collect();
    Ok(cost_on(ps, &all, centers))
}

/// The `z` members of `domain` farthest from `S`, lowest index first among
/// equal distances.
pub fn out_z_on(ps: &PointSet, domain: &[usize], s: &[usize], z: usize) -> Vec<usize> {
    let mut ranked: Vec<(f64, usize)> = domain.iter().map(|&p| (ps.nearest(p, s).0, p)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<usize> = ranked.into_iter().take(z).map(|(_, p)| p).collect();
    out.sort_unstable();
    out
}

/// `out_z(P,S)`.
pub fn out_z(ps: &PointSet, s: &IndexSubset, z: usize) -> Result<IndexSubset> {
    s.check_bounds(ps.len())?;
    let centers = nonempty(s, "center set")?;
    if z > ps.len() {
        return Err(invalid("z", format!("{z} exceeds n = {}", ps.len())));
    }
    let all: Vec<usize> = (0..ps.len()).collect();
    Ok(IndexSubset(out_z_on(ps, &all, centers, z)))
}

/// `cost(domain ∖ out_z(domain,S), S)`.
pub fn cost_out_on(ps: &PointSet, domain: &[usize], s: &[usize], z: usize) -> f64 {
    let out = out_z_on(ps, domain, s, z);
    let inliers: Vec<usize> = domain
        .iter()
        .copied()
        .filter(|p| out.binary_search(p).is_err())
        .collect();
    cost_on(ps, &inliers, s)
}

/// `cost(P ∖ out_z(P,S), S)`.
pub fn cost_out(ps: &PointSet, s: &IndexSubset, z: usize) -> Result<f64> {
    let out = out_z(ps, s, z)?;
    let inliers: Vec<usize> = (0..ps.len()).filter(|&p| !out.contains(p)).collect();
    Ok(cost_on(ps, &inliers, s.as_slice()))
}

/// `Σ_p w_p d(p,S)²`, zero weights skipped.
pub fn wcost(ps: &PointSet, w: &WeightFn, s: &IndexSubset) -> Result<f64> {
    s.check_bounds(ps.len())?;
    w.check_bounds(ps.len())?;
    let centers = nonempty(s, "center set")?;
    Ok(weighted_cost_on(
        ps,
        w.iter().filter(|&(_, wp)| wp > 0),
        centers,
    ))
}

pub(crate) fn weighted_cost_on(
    ps: &PointSet,
    entries: impl Iterator<Item = (usize, u64)>,
    s: &[usize],
) -> f64 {
    entries
        .filter(|&(_, w)| w > 0)
        .map(|(p, w)| {
            let d = ps.nearest(p, s).0;
            w as f64 * (d * d)
        })
        .collect::<KahanSum>()
        .value()
}

/// Amount of weight to remove at each position so that exactly `z` units
/// leave, farthest first, lowest position first among equal distances.
/// Positions are expected in ascending point-index order.
pub(crate) fn scale_out(dists: &[f64], weights: &[u64], z: u64) -> Vec<u64> {
    debug_assert_eq!(dists.len(), weights.len());
    let mut order: Vec<usize> = (0..dists.len()).collect();
    order.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
    let mut removed = vec![0; dists.len()];
    let mut left = z;
    for i in order {
        if left == 0 {
            break;
        }
        let take = weights[i].min(left);
        removed[i] = take;
        left -= take;
    }
    removed
}

/// `ŵ`: `w` with `z` units scaled out from the points farthest from `S`.
pub fn scale_weights(ps: &PointSet, w: &WeightFn, s: &IndexSubset, z: u64) -> Result<WeightFn> {
    s.check_bounds(ps.len())?;
    w.check_bounds(ps.len())?;
    let centers = nonempty(s, "center set")?;
    let total = w.total();
    if z > total {
        return Err(invalid("z", format!("{z} exceeds total weight {total}")));
    }
    let entries: Vec<(usize, u64)> = w.iter().collect();
    let dists: Vec<f64> = entries.iter().map(|&(p, _)| ps.nearest(p, centers).0).collect();
    let weights: Vec<u64> = entries.iter().map(|&(_, wp)| wp).collect();
    let removed = scale_out(&dists, &weights, z);
    Ok(WeightFn(
        entries
            .iter()
            .zip(removed)
            .map(|(&(p, wp), r)| (p, wp - r))
            .collect(),
    ))
}

/// `cost(P, ŵ, S)` with `ŵ = scale_weights(w, S, z)`.
pub fn wcost_out(ps: &PointSet, w: &WeightFn, s: &IndexSubset, z: u64) -> Result<f64> {
    let scaled = scale_weights(ps, w, s, z)?;
    wcost(ps, &scaled, s)
}
