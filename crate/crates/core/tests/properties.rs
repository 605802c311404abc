use proptest::prelude::*;
use robust_coreset::cover::{cover_with_balls, cover_with_balls_weighted, CoverOptions, ScanPolicy};
use robust_coreset::metric::{cost, cost_out, dist_to_set, out_z, scale_weights, wcost, wcost_out};
use robust_coreset::verify::{verify_approximate_coreset, verify_proxy_bound, AuditMode, OptCache};
use robust_coreset::solvers::EnumBudget;
use robust_coreset::{mr_coreset, CoresetConfig, Exec, IndexSubset, PointSet, WeightFn};
use robust_coreset::coreset::{Reducers, SeqSolver};

fn points(max_n: usize) -> impl Strategy<Value = PointSet> {
    (1usize..=3).prop_flat_map(move |dim| {
        prop::collection::vec(-100.0f64..100.0, dim..=dim * max_n)
            .prop_map(move |mut v| {
                v.truncate(v.len() / dim * dim);
                PointSet::from_coords(dim, v).unwrap()
            })
    })
}

fn subset(n: usize, max: usize) -> impl Strategy<Value = IndexSubset> {
    prop::collection::btree_set(0..n, 1..=max.min(n))
        .prop_map(move |s| IndexSubset::new(s.into_iter().collect(), n).unwrap())
}

fn with_subset(max_n: usize, max_s: usize) -> impl Strategy<Value = (PointSet, IndexSubset)> {
    points(max_n).prop_flat_map(move |ps| {
        let n = ps.len();
        (Just(ps), subset(n, max_s))
    })
}

proptest! {
    #[test]
    fn distance_to_set_obeys_triangle(
        (ps, s) in with_subset(30, 5),
        a in any::<prop::sample::Index>(),
        b in any::<prop::sample::Index>(),
    ) {
        let (p, q) = (a.index(ps.len()), b.index(ps.len()));
        let (dp, _) = dist_to_set(&ps, p, &s).unwrap();
        let (dq, _) = dist_to_set(&ps, q, &s).unwrap();
        prop_assert!(dp <= ps.dist(p, q) + dq + 1e-12 * (1.0 + dp));
    }

    #[test]
    fn relaxed_triangle_for_squares(
        ps in points(20),
        a in any::<prop::sample::Index>(),
        b in any::<prop::sample::Index>(),
        c in any::<prop::sample::Index>(),
        factor in prop::sample::select(vec![0.1, 1.0, 10.0]),
    ) {
        let n = ps.len();
        let (p, q, t) = (a.index(n), b.index(n), c.index(n));
        let lhs = ps.dist(p, t).powi(2);
        let rhs = (1.0 + factor) * ps.dist(p, q).powi(2) + (1.0 + 1.0 / factor) * ps.dist(q, t).powi(2);
        prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn cost_out_is_nonincreasing_in_z((ps, s) in with_subset(25, 4)) {
        let mut last = cost(&ps, &s).unwrap();
        prop_assert_eq!(last, cost_out(&ps, &s, 0).unwrap());
        for z in 1..=ps.len() {
            let c = cost_out(&ps, &s, z).unwrap();
            prop_assert!(c <= last);
            last = c;
        }
        prop_assert_eq!(out_z(&ps, &s, ps.len()).unwrap(), IndexSubset::all(ps.len()));
    }

    #[test]
    fn unit_weights_reproduce_cost_bitwise((ps, s) in with_subset(40, 5)) {
        let w = WeightFn::unit(0..ps.len());
        prop_assert_eq!(wcost(&ps, &w, &s).unwrap().to_bits(), cost(&ps, &s).unwrap().to_bits());
        for z in [0, 1, ps.len() / 2] {
            prop_assert_eq!(
                wcost_out(&ps, &w, &s, z as u64).unwrap().to_bits(),
                cost_out(&ps, &s, z).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn scaling_removes_exactly_z(
        (ps, s) in with_subset(25, 3),
        raw in prop::collection::vec(0u64..6, 25),
        frac in 0.0f64..=1.0,
    ) {
        let w = WeightFn::from_pairs((0..ps.len()).map(|p| (p, raw[p])));
        let z = (w.total() as f64 * frac).floor() as u64;
        let hat = scale_weights(&ps, &w, &s, z).unwrap();
        prop_assert_eq!(hat.total(), w.total() - z);
        for p in 0..ps.len() {
            prop_assert!(hat.get(p) <= w.get(p));
        }
        // removed weight never sits closer than kept weight on another point
        let d: Vec<f64> = (0..ps.len()).map(|p| dist_to_set(&ps, p, &s).unwrap().0).collect();
        for p in (0..ps.len()).filter(|&p| hat.get(p) < w.get(p)) {
            for r in (0..ps.len()).filter(|&r| r != p && hat.get(r) > 0) {
                prop_assert!(d[p] >= d[r]);
            }
        }
        prop_assert!(scale_weights(&ps, &w, &s, w.total() + 1).is_err());
    }

    #[test]
    fn cover_invariants(
        (ps, x) in with_subset(60, 6),
        delta in 0.01f64..1.0,
        radius in 0.0f64..20.0,
        seed in any::<u64>(),
        shuffled in any::<bool>(),
    ) {
        let n = ps.len();
        let all = IndexSubset::all(n);
        let scan = if shuffled { ScanPolicy::Shuffled { seed } } else { ScanPolicy::Ascending };
        let opts = CoverOptions { scan, exec: Exec::Sequential };
        let y = cover_with_balls(&ps, &all, &x, delta, radius, opts).unwrap();
        prop_assert_eq!(y.weights.total(), n as u64);
        prop_assert_eq!(y.proxy.len(), n);
        for q in y.members.iter() {
            prop_assert_eq!(y.proxy.get(q), Some(q));
        }
        let mut counts = vec![0u64; n];
        for (p, q) in y.proxy.iter() {
            counts[q] += 1;
            let bound = delta * radius.max(dist_to_set(&ps, p, &x).unwrap().0);
            prop_assert!(ps.dist(p, q) <= bound);
        }
        for q in y.members.iter() {
            prop_assert_eq!(counts[q], y.weights.get(q));
        }
        let parallel = cover_with_balls(&ps, &all, &x, delta, radius, CoverOptions { scan, exec: Exec::Parallel }).unwrap();
        prop_assert_eq!(&parallel, &y);
        let unit = cover_with_balls_weighted(&ps, &all, &WeightFn::unit(0..n), &x, delta, radius, opts).unwrap();
        prop_assert_eq!(unit, y);
    }

    #[test]
    fn weighted_cover_conserves_weight(
        (ps, x) in with_subset(40, 4),
        raw in prop::collection::vec(1u64..9, 40),
        delta in 0.05f64..1.0,
    ) {
        let n = ps.len();
        let w = WeightFn::from_pairs((0..n).map(|p| (p, raw[p])));
        let y = cover_with_balls_weighted(&ps, &IndexSubset::all(n), &w, &x, delta, 1.0, CoverOptions::default()).unwrap();
        prop_assert_eq!(y.weights.total(), w.total());
        let mut sums = std::collections::BTreeMap::new();
        for (p, q) in y.proxy.iter() {
            *sums.entry(q).or_insert(0) += w.get(p);
        }
        for (q, total) in sums {
            prop_assert_eq!(y.weights.get(q), total);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coreset_conserves_weight_and_covers_everyone(
        ps in points(120),
        k in 1usize..3,
        z in 0usize..3,
        gamma in 0.02f64..0.5,
        improved in any::<bool>(),
    ) {
        let mut cfg = CoresetConfig::new(k, z, gamma);
        cfg.variant = if improved { robust_coreset::Variant::Improved } else { robust_coreset::Variant::Basic };
        prop_assume!(ps.len() >= cfg.k_prime());
        let out = mr_coreset(&ps, &cfg).unwrap();
        let t = &out.coreset;
        prop_assert_eq!(t.weights.total(), ps.len() as u64);
        prop_assert_eq!(t.proxy.len(), ps.len());
        prop_assert!(t.len() <= ps.len());
        prop_assert!(t.proxy.iter().all(|(_, q)| t.members.contains(q)));
        if let (Some(c), Some(u)) = (&out.compressed, &out.union) {
            prop_assert!(c.len() <= u.len());
        }
    }

    #[test]
    fn audit_never_exceeds_what_the_proxy_cost_implies(
        ps in points(14),
        gamma in 0.05f64..0.3,
        l in 1usize..3,
    ) {
        let (k, z) = (1, 1);
        let mut cfg = CoresetConfig::new(k, z, gamma);
        cfg.beta = 1.0;
        cfg.reducers = Reducers::Fixed(l);
        cfg.seq_solver = SeqSolver::Exact { budget: EnumBudget::default() };
        prop_assume!(ps.len() >= 2 * l);
        let out = mr_coreset(&ps, &cfg).unwrap();
        let mut cache = OptCache::new(EnumBudget::default(), Exec::Sequential);
        let bound = verify_proxy_bound(&ps, &out.coreset.proxy, 1.0, k, z, &mut cache).unwrap();
        prop_assume!(bound.opt > 0.0);
        let implied = bound.implied_gamma.unwrap();
        let audit = verify_approximate_coreset(&ps, &out.coreset, k, z, implied, AuditMode::Exhaustive, Exec::Sequential).unwrap();
        prop_assert!(audit.passed, "error {} above implied {}", audit.max_rel_error, implied);
        let sampled = verify_approximate_coreset(
            &ps, &out.coreset, k, z, implied, AuditMode::Sampled { trials: 40, seed: 1 }, Exec::Sequential,
        ).unwrap();
        prop_assert!(sampled.max_rel_error <= audit.max_rel_error);
    }
}
