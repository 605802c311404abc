//! Executable checks of the coreset quality definitions.
//!
//! The approximate-coreset audit compares `cost(P∖Z, S)` with the coreset
//! cost `Σ_q ŵ_q d(q,S)²`, where `ŵ` subtracts from each coreset point the
//! members of `Z` it represents, over every (or a sample of) pair `(S, Z)`
//! with `1 ≤ |S| ≤ k` and `|Z| ≤ z`.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::metric::{cost_out_on, IndexSubset, KahanSum, PointSet, Proxy, ProxySet, WeightFn};
use crate::solvers::combinations::{all_up_to, binomial, Combinations};
use crate::solvers::{brute_force_opt, EnumBudget};

/// Relative slack applied to every inequality an audit asserts.
pub const NUMERIC_SLACK: f64 = 1e-9;

/// Largest instance the exhaustive approximate-coreset audit accepts.
pub const AUDIT_MAX_POINTS: usize = 30;
pub const AUDIT_MAX_K: usize = 2;
pub const AUDIT_MAX_Z: usize = 2;

/// Most candidate center sets the centroid-set audit will enumerate.
pub const MAX_CENTROID_CANDIDATES: u128 = 20_000_000;

/// `a ≤ b` up to [`NUMERIC_SLACK`] relative to the larger magnitude.
pub fn within(a: f64, b: f64) -> bool {
    a <= b + NUMERIC_SLACK * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AuditMode {
    Exhaustive,
    Sampled { trials: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetAudit {
    pub mode: AuditMode,
    pub gamma_target: f64,
    pub max_rel_error: f64,
    /// `(S, Z)` attaining `max_rel_error`.
    pub worst_pair: Option<(IndexSubset, IndexSubset)>,
    pub pairs_checked: u128,
    /// Pairs with `cost(P∖Z, S) = 0`, left out of the maximum.
    pub zero_cost_pairs: u128,
    /// Zero-cost pairs whose coreset cost is not zero.
    pub zero_cost_violations: u128,
    pub passed: bool,
}

/// Number of `(S, Z)` pairs the exhaustive audit visits.
pub fn exhaustive_pair_count(n: usize, k: usize, z: usize) -> u128 {
    let centers: u128 = (1..=k).map(|s| binomial(n, s)).sum();
    let outliers: u128 = (0..=z).map(|t| binomial(n, t)).sum();
    centers * outliers
}

struct PairEval {
    rel: Option<f64>,
    zero_violation: bool,
}

struct AuditInstance<'a> {
    ps: &'a PointSet,
    members: Vec<usize>,
    weights: Vec<u64>,
    /// Position in `members` of each input point's proxy.
    proxy_pos: Vec<usize>,
}

impl<'a> AuditInstance<'a> {
    fn new(ps: &'a PointSet, cs: &ProxySet) -> Result<Self> {
        let n = ps.len();
        cs.members.check_bounds(n)?;
        let members = cs.members.as_slice().to_vec();
        let weights: Vec<u64> = members.iter().map(|&q| cs.weights.get(q)).collect();
        let mut proxy_pos = vec![usize::MAX; n];
        for (p, q) in cs.proxy.iter() {
            if p >= n {
                return Err(Error::IndexOutOfRange { index: p, n });
            }
            proxy_pos[p] = members
                .binary_search(&q)
                .map_err(|_| invalid("proxy", format!("{p} maps to {q}, which is not a coreset member")))?;
        }
        if let Some(p) = proxy_pos.iter().position(|&q| q == usize::MAX) {
            return Err(invalid("proxy", format!("point {p} has no proxy")));
        }
        Ok(Self {
            ps,
            members,
            weights,
            proxy_pos,
        })
    }

    fn sq_dists(&self, s: &[usize]) -> Vec<f64> {
        (0..self.ps.len())
            .map(|p| self.ps.nearest(p, s).0.powi(2))
            .collect()
    }

    fn eval(&self, sq: &[f64], z: &[usize]) -> PairEval {
        let mut full = KahanSum::new();
        for (p, &d) in sq.iter().enumerate() {
            if !z.contains(&p) {
                full.add(d);
            }
        }
        let mut weights = self.weights.clone();
        for &p in z {
            weights[self.proxy_pos[p]] -= 1;
        }
        let mut core = KahanSum::new();
        for (&q, &w) in self.members.iter().zip(&weights) {
            if w > 0 {
                core.add(w as f64 * sq[q]);
            }
        }
        let (full, core) = (full.value(), core.value());
        if full == 0.0 {
            PairEval {
                rel: None,
                zero_violation: core != 0.0,
            }
        } else {
            PairEval {
                rel: Some((full - core).abs() / full),
                zero_violation: false,
            }
        }
    }
}

#[derive(Default)]
struct Tally {
    max: f64,
    worst: Option<(Vec<usize>, Vec<usize>)>,
    checked: u128,
    zero: u128,
    violations: u128,
}

impl Tally {
    fn record(&mut self, s: &[usize], z: &[usize], e: PairEval) {
        self.checked += 1;
        match e.rel {
            Some(r) => {
                if self.worst.is_none() || r > self.max {
                    self.max = r;
                    self.worst = Some((s.to_vec(), z.to_vec()));
                }
            }
            None => {
                self.zero += 1;
                self.violations += e.zero_violation as u128;
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        if other.worst.is_some() && (self.worst.is_none() || other.max > self.max) {
            self.max = other.max;
            self.worst = other.worst;
        }
        self.checked += other.checked;
        self.zero += other.zero;
        self.violations += other.violations;
        self
    }
}

/// Checks the approximate-coreset property of `cs` for `k` centers and `z`
/// outliers against `gamma_target`.
pub fn verify_approximate_coreset(
    ps: &PointSet,
    cs: &ProxySet,
    k: usize,
    z: usize,
    gamma_target: f64,
    mode: AuditMode,
    exec: Exec,
) -> Result<CoresetAudit> {
    let n = ps.len();
    if k == 0 || k > n {
        return Err(invalid("k", format!("must lie in 1..={n}, got {k}")));
    }
    if z > n {
        return Err(invalid("z", format!("{z} exceeds n = {n}")));
    }
    let inst = AuditInstance::new(ps, cs)?;
    let tally = match mode {
        AuditMode::Exhaustive => {
            if n > AUDIT_MAX_POINTS || k > AUDIT_MAX_K || z > AUDIT_MAX_Z {
                return Err(Error::BudgetExceeded(format!(
                    "exhaustive audit needs n ≤ {AUDIT_MAX_POINTS}, k ≤ {AUDIT_MAX_K}, \
                     z ≤ {AUDIT_MAX_Z}; got n = {n}, k = {k}, z = {z}"
                )));
            }
            let center_sets = all_up_to(n, 1, k);
            let outlier_sets = all_up_to(n, 0, z);
            exec.map(&center_sets, |s| {
                let sq = inst.sq_dists(s);
                let mut t = Tally::default();
                for zs in &outlier_sets {
                    t.record(s, zs, inst.eval(&sq, zs));
                }
                t
            })
            .into_iter()
            .fold(Tally::default(), Tally::merge)
        }
        AuditMode::Sampled { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = Tally::default();
            for _ in 0..trials {
                let (sk, sz) = (rng.random_range(1..=k), rng.random_range(0..=z));
                let mut s = sample(&mut rng, n, sk).into_vec();
                let mut zs = sample(&mut rng, n, sz).into_vec();
                s.sort_unstable();
                zs.sort_unstable();
                let e = inst.eval(&inst.sq_dists(&s), &zs);
                t.record(&s, &zs, e);
            }
            t
        }
    };
    let passed = within(tally.max, gamma_target) && tally.violations == 0;
    Ok(CoresetAudit {
        mode,
        gamma_target,
        max_rel_error: tally.max,
        worst_pair: tally
            .worst
            .map(|(s, z)| (IndexSubset::from_unsorted(s), IndexSubset::from_unsorted(z))),
        pairs_checked: tally.checked,
        zero_cost_pairs: tally.zero,
        zero_cost_violations: tally.violations,
        passed,
    })
}

/// Memoized exact optima `OPT_{k,z}(P)` for one point set.
#[derive(Debug, Clone)]
pub struct OptCache {
    budget: EnumBudget,
    exec: Exec,
    values: HashMap<(usize, usize), (IndexSubset, f64)>,
}

impl OptCache {
    pub fn new(budget: EnumBudget, exec: Exec) -> Self {
        Self {
            budget,
            exec,
            values: HashMap::new(),
        }
    }

    /// Optimal centers and cost for `k` centers and `z` outliers. The
    /// cache must only ever be used with the same point set.
    pub fn opt(&mut self, ps: &PointSet, k: usize, z: usize) -> Result<(IndexSubset, f64)> {
        if let Some(v) = self.values.get(&(k, z)) {
            return Ok(v.clone());
        }
        let all = IndexSubset::all(ps.len());
        let v = brute_force_opt(
            ps,
            &all,
            &WeightFn::unit(0..ps.len()),
            k,
            z as u64,
            self.budget,
            self.exec,
        )?;
        self.values.insert((k, z), v.clone());
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidAudit {
    pub factor_target: f64,
    /// Best candidate `X ⊆ T`, `|X| ≤ k`.
    pub best: IndexSubset,
    pub best_cost: f64,
    pub opt: f64,
    /// `cost_out(P, X, z) / OPT_{k,z}(P)`; 1 when both are zero.
    pub ratio: f64,
    pub candidates: u128,
    pub passed: bool,
}

/// Checks whether `t` contains a solution within `factor_target` of the
/// optimum for `k` centers and `z` outliers.
pub fn verify_centroid_set(
    ps: &PointSet,
    t: &IndexSubset,
    k: usize,
    z: usize,
    factor_target: f64,
    cache: &mut OptCache,
) -> Result<CentroidAudit> {
    t.check_bounds(ps.len())?;
    if t.is_empty() {
        return Err(Error::EmptySet("centroid candidates"));
    }
    let k_eff = k.min(t.len());
    let candidates: u128 = (1..=k_eff).map(|s| binomial(t.len(), s)).sum();
    if candidates > MAX_CENTROID_CANDIDATES {
        return Err(Error::BudgetExceeded(format!(
            "{candidates} candidate center sets exceed the limit of {MAX_CENTROID_CANDIDATES}"
        )));
    }
    let (_, opt) = cache.opt(ps, k, z)?;
    let members = t.as_slice();
    let domain: Vec<usize> = (0..ps.len()).collect();
    let per_size = (1..=k_eff).map(|size| {
        let firsts: Vec<usize> = (0..=t.len() - size).collect();
        cache
            .exec
            .map(&firsts, |&first| {
                let mut rest = Combinations::new(first + 1, t.len(), size - 1);
                let mut best: Option<(f64, Vec<usize>)> = None;
                let mut x = vec![members[first]; size];
                while let Some(tail) = rest.next_combination() {
                    for (slot, &i) in tail.iter().enumerate() {
                        x[slot + 1] = members[i];
                    }
                    let c = cost_out_on(ps, &domain, &x, z);
                    if best.as_ref().is_none_or(|(b, _)| c < *b) {
                        best = Some((c, x.clone()));
                    }
                }
                best
            })
            .into_iter()
            .flatten()
            .reduce(|a, b| if b.0 < a.0 { b } else { a })
    });
    let (best_cost, best) = per_size
        .flatten()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one candidate");
    let ratio = if opt > 0.0 {
        best_cost / opt
    } else if best_cost == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(CentroidAudit {
        factor_target,
        best: IndexSubset::from_unsorted(best),
        best_cost,
        opt,
        ratio,
        candidates,
        passed: within(best_cost, factor_target * opt),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyAudit {
    /// `Σ_p d(p, π(p))²`.
    pub lhs: f64,
    /// The reference optimum.
    pub opt: f64,
    /// `δ_target · opt`.
    pub rhs: f64,
    /// `lhs / opt`, absent when `opt = 0`.
    pub delta_eff: Option<f64>,
    /// `δ_eff + 2√δ_eff`.
    pub implied_gamma: Option<f64>,
    /// Positive proxy cost against a zero optimum.
    pub degenerate: bool,
    pub passed: bool,
}

/// Checks `Σ_p d(p, π(p))² ≤ δ_target · OPT_{k,z}(P)` and reports the
/// approximation level this proxy cost implies.
pub fn verify_proxy_bound(
    ps: &PointSet,
    proxy: &Proxy,
    delta_target: f64,
    k: usize,
    z: usize,
    cache: &mut OptCache,
) -> Result<ProxyAudit> {
    if proxy.len() != ps.len() {
        return Err(invalid(
            "proxy",
            format!("covers {} of {} points", proxy.len(), ps.len()),
        ));
    }
    let lhs = proxy.cost(ps);
    let (_, opt) = cache.opt(ps, k, z)?;
    let rhs = delta_target * opt;
    let delta_eff = (opt > 0.0).then(|| lhs / opt).or((lhs == 0.0).then_some(0.0));
    Ok(ProxyAudit {
        lhs,
        opt,
        rhs,
        delta_eff,
        implied_gamma: delta_eff.map(|d| d + 2.0 * d.sqrt()),
        degenerate: opt == 0.0 && lhs > 0.0,
        passed: within(lhs, rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::from_coords(1, xs.to_vec()).unwrap()
    }

    fn small_coreset() -> (PointSet, ProxySet) {
        let ps = line(&[0.0, 0.4, 10.0]);
        let cs = ProxySet {
            members: IndexSubset::new(vec![0, 2], 3).unwrap(),
            weights: WeightFn::from_pairs([(0, 2), (2, 1)]),
            proxy: Proxy::from_pairs(vec![(0, 0), (1, 0), (2, 2)]),
        };
        (ps, cs)
    }

    #[test]
    fn pair_counts() {
        assert_eq!(exhaustive_pair_count(3, 1, 1), 3 * 4);
        assert_eq!(exhaustive_pair_count(30, 2, 2), 465 * 466);
    }

    #[test]
    fn identity_coreset_is_exact() {
        let ps = line(&[0.0, 1.0, 3.0, 7.5, 20.0]);
        let cs = ProxySet::identity(&IndexSubset::all(5));
        let a = verify_approximate_coreset(&ps, &cs, 2, 2, 0.0, AuditMode::Exhaustive, Exec::Parallel)
            .unwrap();
        assert_eq!(a.max_rel_error, 0.0);
        assert!(a.passed);
        assert_eq!(a.pairs_checked, exhaustive_pair_count(5, 2, 2));
    }

    #[test]
    fn duplicate_absorbed_at_zero_distance() {
        let ps = line(&[0.0, 0.0, 4.0]);
        let cs = ProxySet {
            members: IndexSubset::new(vec![0, 2], 3).unwrap(),
            weights: WeightFn::from_pairs([(0, 2), (2, 1)]),
            proxy: Proxy::from_pairs(vec![(0, 0), (1, 0), (2, 2)]),
        };
        let a = verify_approximate_coreset(&ps, &cs, 1, 1, 0.0, AuditMode::Exhaustive, Exec::Sequential)
            .unwrap();
        assert_eq!(a.max_rel_error, 0.0);
    }

    #[test]
    fn three_point_coreset_against_direct_enumeration() {
        let (ps, cs) = small_coreset();
        let a = verify_approximate_coreset(&ps, &cs, 1, 1, 1.0, AuditMode::Exhaustive, Exec::Sequential)
            .unwrap();
        // every (S, Z) written out by hand: point 0.4 is represented by 0
        let xs = [0.0f64, 0.4, 10.0];
        let mut expect: f64 = 0.0;
        for s in 0..3 {
            for z in [None, Some(0), Some(1), Some(2)] {
                let full: f64 = (0..3)
                    .filter(|&p| Some(p) != z)
                    .map(|p| (xs[p] - xs[s]).powi(2))
                    .sum();
                let mut w = [2.0, 0.0, 1.0];
                if let Some(p) = z {
                    w[if p == 2 { 2 } else { 0 }] -= 1.0;
                }
                let core: f64 = (0..3).map(|q| w[q] * (xs[q] - xs[s]).powi(2)).sum();
                if full > 0.0 {
                    expect = expect.max((full - core).abs() / full);
                }
            }
        }
        assert!((a.max_rel_error - expect).abs() < 1e-15);
        // S = {0}, Z = {10}: only 0.4 remains, but its proxy sits on the center
        assert_eq!(expect, 1.0);
        assert_eq!(a.pairs_checked, 12);
        assert_eq!(
            a.worst_pair,
            Some((IndexSubset::new(vec![0], 3).unwrap(), IndexSubset::new(vec![2], 3).unwrap()))
        );
    }

    #[test]
    fn sampled_never_exceeds_exhaustive() {
        let (ps, cs) = small_coreset();
        let ex = verify_approximate_coreset(&ps, &cs, 1, 1, 1.0, AuditMode::Exhaustive, Exec::Sequential)
            .unwrap();
        let sa = verify_approximate_coreset(
            &ps,
            &cs,
            1,
            1,
            1.0,
            AuditMode::Sampled { trials: 50, seed: 4 },
            Exec::Sequential,
        )
        .unwrap();
        assert!(sa.max_rel_error <= ex.max_rel_error);
        assert_eq!(sa.pairs_checked, 50);
    }

    #[test]
    fn audit_budget() {
        let xs: Vec<f64> = (0..31).map(f64::from).collect();
        let ps = line(&xs);
        let cs = ProxySet::identity(&IndexSubset::all(31));
        let r = verify_approximate_coreset(&ps, &cs, 1, 1, 0.1, AuditMode::Exhaustive, Exec::Sequential);
        assert!(matches!(r, Err(Error::BudgetExceeded(_))));
        let ps = line(&xs[..10]);
        let cs = ProxySet::identity(&IndexSubset::all(10));
        let r = verify_approximate_coreset(&ps, &cs, 3, 1, 0.1, AuditMode::Exhaustive, Exec::Sequential);
        assert!(matches!(r, Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn zero_cost_pairs_are_counted_separately() {
        let ps = line(&[0.0, 5.0]);
        let cs = ProxySet::identity(&IndexSubset::all(2));
        let a = verify_approximate_coreset(&ps, &cs, 2, 1, 0.0, AuditMode::Exhaustive, Exec::Sequential)
            .unwrap();
        // S = {0,1} with any Z, and |S| = 1 with the other point removed
        assert_eq!(a.zero_cost_pairs, 3 + 2);
        assert_eq!(a.zero_cost_violations, 0);
    }

    #[test]
    fn centroid_set_containing_optimum() {
        let ps = line(&[0.0, 0.3, 9.0, 9.2, 50.0]);
        let mut cache = OptCache::new(EnumBudget::default(), Exec::Sequential);
        let (opt_centers, _) = cache.opt(&ps, 2, 1).unwrap();
        let a = verify_centroid_set(&ps, &opt_centers, 2, 1, 1.0, &mut cache).unwrap();
        assert_eq!(a.ratio, 1.0);
        assert!(a.passed);
        let all = verify_centroid_set(&ps, &IndexSubset::all(5), 2, 1, 1.0, &mut cache).unwrap();
        assert_eq!(all.ratio, 1.0);
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn centroid_set_missing_a_cluster() {
        let ps = line(&[0.0, 0.3, 9.0, 9.2, 50.0]);
        let mut cache = OptCache::new(EnumBudget::default(), Exec::Sequential);
        let t = IndexSubset::new(vec![0, 1], 5).unwrap();
        let a = verify_centroid_set(&ps, &t, 2, 1, 2.0, &mut cache).unwrap();
        assert!(a.ratio > 2.0);
        assert!(!a.passed);
    }

    #[test]
    fn proxy_bound_cases() {
        let ps = line(&[0.0, 1.0, 10.0, 11.0]);
        let mut cache = OptCache::new(EnumBudget::default(), Exec::Sequential);
        let id = verify_proxy_bound(&ps, &Proxy::identity(0..4), 0.1, 2, 0, &mut cache).unwrap();
        assert_eq!((id.lhs, id.implied_gamma), (0.0, Some(0.0)));
        assert!(id.passed);

        let proxy = Proxy::from_pairs(vec![(0, 0), (1, 0), (2, 2), (3, 3)]);
        let a = verify_proxy_bound(&ps, &proxy, 0.5, 2, 0, &mut cache).unwrap();
        assert_eq!(a.opt, 2.0);
        assert_eq!(a.delta_eff, Some(0.5));
        assert!(a.passed);
        let g = 0.1f64;
        let d = 4.0 * g * g;
        assert!((d + 2.0 * d.sqrt() - (4.0 * g * g + 4.0 * g)).abs() < 1e-15);

        let ps = line(&[0.0, 1.0]);
        let mut cache = OptCache::new(EnumBudget::default(), Exec::Sequential);
        let proxy = Proxy::from_pairs(vec![(0, 0), (1, 0)]);
        let a = verify_proxy_bound(&ps, &proxy, 1.0, 2, 0, &mut cache).unwrap();
        assert!(a.degenerate && !a.passed);
    }

    #[test]
    fn proxy_must_cover_every_point() {
        let ps = line(&[0.0, 1.0]);
        let mut cache = OptCache::new(EnumBudget::default(), Exec::Sequential);
        let proxy = Proxy::from_pairs(vec![(0, 0)]);
        assert!(verify_proxy_bound(&ps, &proxy, 1.0, 1, 0, &mut cache).is_err());
    }
}
