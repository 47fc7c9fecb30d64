use iqpsdp_core::bnb::{branch_on, solve_with, BnbNode, BnbObserver};
use iqpsdp_core::dual::{
    best_lower_facet, initial_point, CandidateRule, DualObserver, DualSolver, DualState, IterationInfo, VertexRule,
};
use iqpsdp_core::linalg::{
    dense_inverse, is_positive_definite, spectral_decompose, sym_block_update, woodbury_rank1, Matrix,
};
use iqpsdp_core::oracle::enumerate_optimum;
use iqpsdp_core::{
    build_relaxation, BetaPolicy, BnbConfig, IntDomain, IqpInstance, LinearConstraint, NoClock, SolveMode,
    SolverConfig, SymMatrix,
};
use proptest::prelude::*;

fn spd(dim: usize, entries: &[f64]) -> SymMatrix {
    // B B^T + I
    let b = Matrix::from_fn(dim, dim, |i, j| entries[(i * dim + j) % entries.len()]);
    let bbt = b.mul(&b.transpose()).unwrap();
    SymMatrix::from_lower_fn(dim, |i, j| bbt.get(i, j) + if i == j { 1.0 } else { 0.0 })
}

fn sym(dim: usize, entries: &[f64]) -> SymMatrix {
    SymMatrix::from_lower_fn(dim, |i, j| entries[(i * dim + j) % entries.len()])
}

fn instance_strategy(n: std::ops::RangeInclusive<usize>, lo: i64, hi: i64) -> impl Strategy<Value = IqpInstance> {
    n.prop_flat_map(move |n| {
        (
            prop::collection::vec(-1.0..1.0f64, n * n),
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(lo..=hi, n),
            prop::collection::vec(0..=(hi - lo), n),
        )
            .prop_map(move |(q, l, los, widths)| {
                let q = SymMatrix::from_lower_fn(n, |i, j| q[i * n + j]);
                let domains = los.iter().zip(&widths).map(|(&a, &w)| IntDomain::new(a, (a + w).min(hi))).collect();
                IqpInstance::new(q, l, 0.0, domains, vec![]).unwrap()
            })
    })
}

/// Records the bound and whether every facet dual stayed nonpositive.
struct BoundLog {
    bounds: Vec<f64>,
    facets: usize,
    nonpositive: bool,
}

impl DualObserver for BoundLog {
    fn on_iteration(&mut self, state: &DualState, info: &IterationInfo) {
        self.bounds.push(info.bound);
        self.nonpositive &= state.y[1..=self.facets].iter().all(|&v| v <= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn woodbury_rank1_matches_dense(dim in 2usize..=30, e in prop::collection::vec(-1.0..1.0f64, 64),
                                     v in prop::collection::vec(-1.0..1.0f64, 30), c in -0.3..0.3f64) {
        let m = spd(dim, &e);
        let w = dense_inverse(&m).unwrap();
        let v = &v[..dim];
        let mut m2 = m.clone();
        for i in 0..dim { for j in 0..=i { m2.set(i, j, m.get(i, j) - c * v[i] * v[j]); } }
        prop_assume!(is_positive_definite(&m2));
        let upd = woodbury_rank1(&w, v, c).unwrap();
        let dense = dense_inverse(&m2).unwrap();
        prop_assert!(upd.max_abs_diff(&dense) < 1e-8 * (1.0 + dense.max_abs()));
    }

    #[test]
    fn block_update_matches_dense(dim in 2usize..=30, e in prop::collection::vec(-1.0..1.0f64, 64),
                                  blk in prop::collection::vec(-0.3..0.3f64, 3), a in 0usize..30, b in 0usize..30) {
        let (a, b) = (a % dim, b % dim);
        prop_assume!(a != b);
        let m = spd(dim, &e);
        let mut w = dense_inverse(&m).unwrap();
        let bm = [[blk[0], blk[1]], [blk[1], blk[2]]];
        let mut m2 = m.clone();
        m2.add(a, a, -bm[0][0]);
        m2.add(a, b, -bm[0][1]);
        m2.add(b, b, -bm[1][1]);
        prop_assume!(is_positive_definite(&m2));
        let u0 = w.row(a).to_vec();
        let u1 = w.row(b).to_vec();
        let p = [[w.get(a, a), w.get(a, b)], [w.get(b, a), w.get(b, b)]];
        sym_block_update(&mut w, &u0, &u1, p, bm).unwrap();
        let dense = dense_inverse(&m2).unwrap();
        prop_assert!(w.max_abs_diff(&dense) < 1e-8 * (1.0 + dense.max_abs()));
    }

    #[test]
    fn eigen_reconstruction(dim in 1usize..=30, e in prop::collection::vec(-5.0..5.0f64, 100)) {
        let m = sym(dim, &e);
        let sd = spectral_decompose(&m).unwrap();
        prop_assert!(sd.reconstruct().max_abs_diff(&m) < 1e-10 * (1.0 + m.max_abs()));
        prop_assert!(sd.eigenvalues.windows(2).all(|p| p[0] <= p[1]));
        let v = &sd.eigenvectors;
        let vtv = v.transpose().mul(v).unwrap();
        for i in 0..dim { for j in 0..dim {
            let t = if i == j { 1.0 } else { 0.0 };
            prop_assert!((vtv.get(i, j) - t).abs() < 1e-10);
        } }
    }

    #[test]
    fn inverse_is_an_involution(dim in 1usize..=30, e in prop::collection::vec(-1.0..1.0f64, 64)) {
        let m = spd(dim, &e);
        let back = dense_inverse(&dense_inverse(&m).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&m) < 1e-9 * (1.0 + m.max_abs()));
    }

    #[test]
    fn weak_duality_every_iteration(inst in instance_strategy(1..=4, -2, 2), cd2d in any::<bool>()) {
        let opt = enumerate_optimum(&inst).unwrap().unwrap().0;
        let rel = build_relaxation(&inst, BetaPolicy::ZeroFirstEntry);
        let mode = if cd2d { SolveMode::Cd2d } else { SolveMode::Cd };
        let cfg = SolverConfig { mode, max_iterations: 2_000, ..Default::default() };
        let st = initial_point(&rel, cfg.sigma_init).unwrap();
        let mut log = BoundLog { bounds: vec![], facets: rel.facets.len(), nonpositive: true };
        let res = DualSolver::new(&rel, &cfg, st).unwrap().run(None, &mut log).unwrap();
        prop_assert!(log.nonpositive);
        for &b in &log.bounds {
            prop_assert!(b <= opt + 1e-6, "iterate bound {} above optimum {}", b, opt);
        }
        prop_assert!(res.bound <= opt + 1e-6);
        prop_assert!((0..rel.facets.len()).all(|k| res.y[rel.facet_coord(k)] <= 0.0));
    }

    #[test]
    fn shortcut_equals_exhaustive(inst in instance_strategy(2..=3, -10, 10), iters in 0usize..150,
                                  cd2d in any::<bool>(), printed_policy in 0usize..3) {
        let policy = [BetaPolicy::ZeroFirstEntry, BetaPolicy::AllZero, BetaPolicy::RankOne][printed_policy];
        let rel = build_relaxation(&inst, policy);
        let mode = if cd2d { SolveMode::Cd2d } else { SolveMode::Cd };
        let cfg = SolverConfig { mode, ..Default::default() };
        let mut s = DualSolver::new(&rel, &cfg, initial_point(&rel, 1.0).unwrap()).unwrap();
        for _ in 0..iters {
            s.iterate(None).unwrap();
            if s.refactor_due() { s.state.refactor(&rel).unwrap(); }
        }
        for var in 0..rel.n() {
            let a = best_lower_facet(&s.state, &rel, var, mode, CandidateRule::Shortcut(VertexRule::Exact));
            let b = best_lower_facet(&s.state, &rel, var, mode, CandidateRule::Exhaustive);
            prop_assert_eq!(a.map(|p| p.1), b.map(|p| p.1));
        }
    }

    #[test]
    fn branching_partitions(los in prop::collection::vec(-10i64..5, 3), widths in prop::collection::vec(0i64..12, 3),
                            x in prop::collection::vec(-20.0..20.0f64, 3)) {
        let domains: Vec<IntDomain> = los.iter().zip(&widths).map(|(&l, &w)| IntDomain::new(l, l + w)).collect();
        prop_assume!(domains.iter().any(|d| !d.is_singleton()));
        let node = BnbNode { domains: domains.clone(), depth: 0, parent_bound: 0.0 };
        let (a, b) = branch_on(&node, &x).unwrap();
        let changed: Vec<usize> = (0..3).filter(|&i| a.domains[i] != domains[i] || b.domains[i] != domains[i]).collect();
        prop_assert_eq!(changed.len(), 1);
        let i = changed[0];
        let (d, da, db) = (domains[i], a.domains[i], b.domains[i]);
        prop_assert!(da.lo == d.lo && db.hi == d.hi && da.hi + 1 == db.lo);
        prop_assert!(da.size() >= 1 && db.size() >= 1);
        prop_assert!(a.domains.iter().zip(&b.domains).enumerate().all(|(k, (p, q))| k == i || p == q));
    }
}

struct IncumbentLog(Vec<f64>);

impl BnbObserver for IncumbentLog {
    fn on_incumbent(&mut self, value: f64, _x: &[i64]) {
        self.0.push(value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn incumbent_is_monotone_and_optimal(inst in instance_strategy(2..=5, -1, 1), knap in any::<bool>()) {
        let inst = if knap {
            let n = inst.n();
            IqpInstance::new(inst.q_hat.clone(), inst.l_hat.clone(), 0.0, inst.domains.clone(),
                vec![LinearConstraint::new(vec![1.0; n], 0.0)]).unwrap()
        } else { inst };
        let mut log = IncumbentLog(vec![]);
        let r = solve_with(&inst, &BnbConfig::default(), &NoClock, &mut log).unwrap();
        prop_assert!(log.0.windows(2).all(|p| p[1] < p[0]));
        let opt = enumerate_optimum(&inst).unwrap().map(|p| p.0);
        match opt {
            Some(v) => prop_assert!((r.objective - v).abs() < 1e-6, "bnb {} oracle {}", r.objective, v),
            None => prop_assert!(r.x.is_none()),
        }
    }
}
