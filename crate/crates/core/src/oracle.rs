//! Reference engines for tests: exhaustive enumeration and dense evaluation
//! of the barrier function. None of this is used by the solver itself.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, SymMatrix};
use crate::model::{objective_value, FacetDescriptor, IqpInstance, LinearConstraintDescriptor, SdpRelaxation};

/// Largest number of points `enumerate_optimum` will visit.
pub const ENUMERATION_CAP: u128 = 10_000_000;

fn space_size(inst: &IqpInstance) -> u128 {
    inst.domains.iter().fold(1u128, |acc, d| acc.saturating_mul(d.size() as u128))
}

/// Exact minimum over all feasible integer points, or `None` when no point
/// satisfies the linear constraints. Ties keep the first point in
/// lexicographic order (first variable slowest).
pub fn enumerate_optimum(inst: &IqpInstance) -> Result<Option<(f64, Vec<i64>)>> {
    let total = space_size(inst);
    if total > ENUMERATION_CAP {
        return Err(Error::TooLarge(total));
    }
    let n = inst.n();
    let mut x: Vec<i64> = inst.domains.iter().map(|d| d.lo).collect();
    let mut best: Option<(f64, Vec<i64>)> = None;
    loop {
        if inst.satisfies_linear(&x) {
            let v = objective_value(inst, &x);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, x.clone()));
            }
        }
        // odometer, last variable fastest
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(best);
            }
            k -= 1;
            if x[k] < inst.domains[k].hi {
                x[k] += 1;
                break;
            }
            x[k] = inst.domains[k].lo;
        }
    }
}

/// Same minimum computed with a different traversal: first variable
/// fastest, downward from the upper bounds, objective expanded from scratch.
pub fn enumerate_optimum_reverse(inst: &IqpInstance) -> Result<Option<f64>> {
    let total = space_size(inst);
    if total > ENUMERATION_CAP {
        return Err(Error::TooLarge(total));
    }
    let n = inst.n();
    let mut x: Vec<i64> = inst.domains.iter().map(|d| d.hi).collect();
    let mut best: Option<f64> = None;
    loop {
        let feasible = inst.linear.iter().all(|lc| {
            let act: f64 = (0..n).map(|i| lc.a[i] * x[i] as f64).sum();
            act <= lc.rhs + crate::model::FEAS_TOL
        });
        if feasible {
            let mut v = inst.c_hat;
            for i in 0..n {
                v += inst.l_hat[i] * x[i] as f64;
                for k in 0..n {
                    v += inst.q_hat.get(i, k) * x[i] as f64 * x[k] as f64;
                }
            }
            if best.is_none_or(|b| v < b) {
                best = Some(v);
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                return Ok(best);
            }
            if x[k] > inst.domains[k].lo {
                x[k] -= 1;
                break;
            }
            x[k] = inst.domains[k].hi;
            k += 1;
        }
    }
}

pub fn dense_facet_matrix(f: &FacetDescriptor, dim: usize) -> SymMatrix {
    let mut a = SymMatrix::zeros(dim);
    let i = f.index();
    a.set(0, 0, f.a00);
    a.set(0, i, f.a0i);
    a.set(i, i, f.aii);
    a
}

pub fn dense_linear_matrix(lc: &LinearConstraintDescriptor, dim: usize) -> SymMatrix {
    let mut a = SymMatrix::zeros(dim);
    a.set(0, 0, lc.a00);
    for (k, &g) in lc.first_row.iter().enumerate() {
        a.set(0, k + 1, g);
    }
    a
}

/// Dense constraint matrix of dual coordinate `k`.
pub fn dense_constraint_matrix(rel: &SdpRelaxation, k: usize) -> SymMatrix {
    let m = rel.facets.len();
    if k == 0 {
        let mut a = SymMatrix::zeros(rel.dim);
        a.set(0, 0, 1.0);
        a
    } else if k <= m {
        dense_facet_matrix(&rel.facets[k - 1], rel.dim)
    } else {
        dense_linear_matrix(&rel.linear[k - 1 - m], rel.dim)
    }
}

/// `Q - sum_k y_k A_k` assembled from dense constraint matrices.
pub fn dense_slack(rel: &SdpRelaxation, y: &[f64]) -> SymMatrix {
    let mut s = rel.q.clone();
    for (k, &yk) in y.iter().enumerate() {
        if yk != 0.0 {
            s.add_scaled(&dense_constraint_matrix(rel, k), -yk);
        }
    }
    s
}

/// `<b, y> + sigma log det(Q - A^T y)`.
pub fn dense_barrier_value(rel: &SdpRelaxation, y: &[f64], sigma: f64) -> Result<f64> {
    let ld = cholesky(&dense_slack(rel, y))?.log_det();
    let by: f64 = rel.b.iter().zip(y).map(|(b, y)| b * y).sum();
    Ok(by + sigma * ld)
}

/// `b - sigma A(W)` with `W = (Q - A^T y)^{-1}`.
pub fn dense_barrier_gradient(rel: &SdpRelaxation, y: &[f64], sigma: f64) -> Result<Vec<f64>> {
    let w = cholesky(&dense_slack(rel, y))?.inverse();
    let mut g = vec![0.0; y.len()];
    for (k, gk) in g.iter_mut().enumerate() {
        *gk = rel.b[k] - sigma * dense_constraint_matrix(rel, k).inner(&w);
    }
    Ok(g)
}

/// Central finite difference of the barrier along `dir`, at `y + t dir`.
pub fn directional_fd(
    rel: &SdpRelaxation,
    y: &[f64],
    dir: &[f64],
    t: f64,
    sigma: f64,
    h: f64,
) -> Result<f64> {
    let at = |s: f64| -> Vec<f64> { y.iter().zip(dir).map(|(y, d)| y + s * d).collect() };
    let fp = dense_barrier_value(rel, &at(t + h), sigma)?;
    let fm = dense_barrier_value(rel, &at(t - h), sigma)?;
    Ok((fp - fm) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_relaxation, BetaPolicy, IntDomain, LinearConstraint};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn enumerate_examples() {
        let inst = IqpInstance::new(SymMatrix::identity(1), vec![-3.0], 0.0, vec![IntDomain::new(0, 1)], vec![]).unwrap();
        assert_eq!(enumerate_optimum(&inst).unwrap(), Some((-2.0, vec![1])));

        let inst = IqpInstance::new(
            SymMatrix::identity(2).scaled(-1.0),
            vec![0.0; 2],
            0.0,
            vec![IntDomain::ternary(); 2],
            vec![],
        )
        .unwrap();
        let (v, x) = enumerate_optimum(&inst).unwrap().unwrap();
        assert_eq!(v, -2.0);
        assert!(x.iter().all(|v| v.abs() == 1));
    }

    #[test]
    fn enumerate_infeasible_and_cap() {
        let inst = IqpInstance::new(
            SymMatrix::identity(1),
            vec![0.0],
            0.0,
            vec![IntDomain::new(-3, 3)],
            vec![LinearConstraint::new(vec![1.0], -1.0), LinearConstraint::new(vec![-1.0], -1.0)],
        )
        .unwrap();
        assert_eq!(enumerate_optimum(&inst).unwrap(), None);
        assert_eq!(enumerate_optimum_reverse(&inst).unwrap(), None);
        let big = IqpInstance::new(SymMatrix::identity(8), vec![0.0; 8], 0.0, vec![IntDomain::new(-10, 10); 8], vec![])
            .unwrap();
        assert!(matches!(enumerate_optimum(&big), Err(Error::TooLarge(_))));
    }

    #[test]
    fn two_traversals_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let n = 5;
            let q = SymMatrix::from_lower_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let l = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lin = vec![LinearConstraint::new((0..n).map(|_| rng.random_range(1..=5) as f64).collect(), 4.0)];
            let inst = IqpInstance::new(q, l, 0.0, vec![IntDomain::new(-1, 2); n], lin).unwrap();
            let a = enumerate_optimum(&inst).unwrap().map(|p| p.0);
            let b = enumerate_optimum_reverse(&inst).unwrap();
            assert!((a.unwrap() - b.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 4;
        let q = SymMatrix::from_lower_fn(n, |i, j| if i == j { 3.0 } else { rng.random_range(-0.3..0.3) });
        let l = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lin = vec![LinearConstraint::new(vec![1.0, -1.0, 0.5, 2.0], 1.0)];
        let inst = IqpInstance::new(q, l, 0.0, vec![IntDomain::ternary(); n], lin).unwrap();
        let rel = build_relaxation(&inst, BetaPolicy::ZeroFirstEntry);
        let mut y = vec![0.0; rel.num_coords()];
        y[0] = -5.0;
        for v in y.iter_mut().skip(1) {
            *v = rng.random_range(-0.1..0.0);
        }
        let sigma = 0.7;
        let g = dense_barrier_gradient(&rel, &y, sigma).unwrap();
        for k in 0..y.len() {
            let mut e = vec![0.0; y.len()];
            e[k] = 1.0;
            let fd = directional_fd(&rel, &y, &e, 0.0, sigma, 1e-6).unwrap();
            assert!((fd - g[k]).abs() <= 1e-3 * g[k].abs().max(1.0), "k={k} fd={fd} g={}", g[k]);
        }
    }

    #[test]
    fn small_sigma_value_tends_to_linear_term() {
        let inst = IqpInstance::new(SymMatrix::identity(2), vec![0.0; 2], 0.0, vec![IntDomain::ternary(); 2], vec![])
            .unwrap();
        let rel = build_relaxation(&inst, BetaPolicy::ZeroFirstEntry);
        let mut y = rel.zero_dual();
        y[0] = -1.0;
        let by = rel.dual_objective(&y);
        assert!((dense_barrier_value(&rel, &y, 1e-12).unwrap() - by).abs() < 1e-10);
    }
}
