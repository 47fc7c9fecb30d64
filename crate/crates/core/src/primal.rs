//! Primal matrix recovery from a dual solution.
//!
//! At an optimal pair the primal `X` lives in the nullspace of the slack
//! `Q - A^T y` and satisfies the active constraints with equality. We take
//! the eigenvectors of the (numerically) zero eigenvalues as a basis `N`,
//! write `X = N Y N^T` and fit `Y` to the active constraints in the
//! least-squares sense.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{spectral_decompose, sym_pseudo_inverse, Matrix, SymMatrix};
use crate::model::SdpRelaxation;

pub const DEFAULT_ZERO_EIG_TOL: f64 = 0.01;
pub const DEFAULT_ACTIVE_TOL: f64 = 1e-7;
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct PrimalEstimate {
    /// The recovered matrix `X`.
    pub x_mat: SymMatrix,
    /// `X[0][i] / X[0][0]`.
    pub x: Vec<f64>,
    pub min_eig_x: f64,
    /// Per variable, number of facet duals with `|y| > active_tol`.
    pub active_counts: Vec<usize>,
    pub psd_ok: bool,
    /// Max-norm residual of the fitted constraint system.
    pub residual: f64,
    pub nullspace_dim: usize,
    /// Smallest slack eigenvalue kept out of the nullspace minus the
    /// largest one put in; small values mean the cutoff is ambiguous.
    pub eigen_gap: f64,
}

/// Sparse description of one constraint row.
enum Row<'a> {
    Zero,
    Facet { i: usize, a00: f64, a0i: f64, aii: f64 },
    Linear { a00: f64, g: &'a [f64] },
}

pub fn recover_primal(rel: &SdpRelaxation, y: &[f64], zero_eig_tol: f64, active_tol: f64) -> Result<PrimalEstimate> {
    if y.len() != rel.num_coords() {
        return Err(Error::DimensionMismatch { expected: rel.num_coords(), got: y.len() });
    }
    let dim = rel.dim;
    let slack = rel.slack_matrix(y);
    let sd = spectral_decompose(&slack)?;
    let mut k = sd.eigenvalues.iter().filter(|&&l| l <= zero_eig_tol).count();
    if k == 0 {
        k = 1;
    }
    let eigen_gap = if k < dim { sd.eigenvalues[k] - sd.eigenvalues[k - 1] } else { f64::INFINITY };
    // N: dim x k
    let nmat = Matrix::from_fn(dim, k, |r, c| sd.eigenvectors.get(r, c));

    let mut rows: Vec<(Row<'_>, f64)> = vec![(Row::Zero, 1.0)];
    let mut active_counts = vec![0usize; rel.n()];
    for (idx, f) in rel.facets.iter().enumerate() {
        if y[rel.facet_coord(idx)].abs() > active_tol {
            active_counts[f.var] += 1;
            rows.push((Row::Facet { i: f.index(), a00: f.a00, a0i: f.a0i, aii: f.aii }, f.beta));
        }
    }
    for (j, lc) in rel.linear.iter().enumerate() {
        if y[rel.linear_coord(j)].abs() > active_tol {
            rows.push((Row::Linear { a00: lc.a00, g: &lc.first_row }, lc.beta));
        }
    }

    // Unknowns: upper triangle of Y in svec scaling.
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|p| (p..k).map(move |q| (p, q))).collect();
    let t = pairs.len();
    let m = rows.len();
    let sqrt2 = core::f64::consts::SQRT_2;
    let mut gmat = Matrix::zeros(m, t);
    let mut rhs = vec![0.0; m];
    for (r, (row, b)) in rows.iter().enumerate() {
        rhs[r] = *b;
        // C = N^T A N
        let c = |p: usize, q: usize| -> f64 {
            let n0p = nmat.get(0, p);
            let n0q = nmat.get(0, q);
            match row {
                Row::Zero => n0p * n0q,
                Row::Facet { i, a00, a0i, aii } => {
                    let (nip, niq) = (nmat.get(*i, p), nmat.get(*i, q));
                    a00 * n0p * n0q + a0i * (n0p * niq + nip * n0q) + aii * nip * niq
                }
                Row::Linear { a00, g } => {
                    let gp: f64 = g.iter().enumerate().map(|(kk, gv)| gv * nmat.get(kk + 1, p)).sum();
                    let gq: f64 = g.iter().enumerate().map(|(kk, gv)| gv * nmat.get(kk + 1, q)).sum();
                    a00 * n0p * n0q + n0p * gq + gp * n0q
                }
            }
        };
        for (col, &(p, q)) in pairs.iter().enumerate() {
            let v = if p == q { c(p, p) } else { sqrt2 * c(p, q) };
            gmat.set(r, col, v);
        }
    }

    // Minimum-norm least squares: v = G^T (G G^T)^+ rhs.
    let ggt = gmat.mul(&gmat.transpose())?;
    let ggt = SymMatrix::from_lower_fn(m, |i, j| 0.5 * (ggt.get(i, j) + ggt.get(j, i)));
    let pinv = sym_pseudo_inverse(&ggt, 1e-12)?;
    let z = pinv.mul_vec(&rhs);
    let mut v = vec![0.0; t];
    for (col, vc) in v.iter_mut().enumerate() {
        *vc = (0..m).map(|r| gmat.get(r, col) * z[r]).sum();
    }
    let mut residual = 0.0f64;
    for r in 0..m {
        let gv: f64 = (0..t).map(|col| gmat.get(r, col) * v[col]).sum();
        residual = residual.max((gv - rhs[r]).abs());
    }

    let mut ymat = SymMatrix::zeros(k);
    for (col, &(p, q)) in pairs.iter().enumerate() {
        ymat.set(p, q, if p == q { v[col] } else { v[col] / sqrt2 });
    }
    // X = N Y N^T
    let ny = nmat.mul(&ymat.to_matrix())?;
    let x_mat = SymMatrix::from_lower_fn(dim, |i, j| (0..k).map(|p| ny.get(i, p) * nmat.get(j, p)).sum());
    let x00 = x_mat.get(0, 0);
    let x = (1..dim).map(|i| if x00.abs() > 1e-12 { x_mat.get(0, i) / x00 } else { x_mat.get(0, i) }).collect();
    let min_eig_x = spectral_decompose(&x_mat)?.eigenvalues[0];
    Ok(PrimalEstimate {
        x_mat,
        x,
        min_eig_x,
        active_counts,
        psd_ok: min_eig_x >= -PSD_TOL,
        residual,
        nullspace_dim: k,
        eigen_gap,
    })
}

/// `||(Q - A^T y) X||_max`.
pub fn complementarity_residual(rel: &SdpRelaxation, y: &[f64], x: &SymMatrix) -> Result<f64> {
    let s = rel.slack_matrix(y).to_matrix();
    Ok(s.mul(&x.to_matrix())?.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{solve_dual, SolverConfig};
    use crate::model::{build_relaxation, BetaPolicy, IntDomain, IqpInstance};

    #[test]
    fn single_equation_when_nothing_active() {
        let inst = IqpInstance::new(SymMatrix::identity(2), vec![0.3, -0.2], 0.0, vec![IntDomain::ternary(); 2], vec![])
            .unwrap();
        let rel = build_relaxation(&inst, BetaPolicy::ZeroFirstEntry);
        let y = rel.zero_dual();
        let est = recover_primal(&rel, &y, DEFAULT_ZERO_EIG_TOL, DEFAULT_ACTIVE_TOL).unwrap();
        assert!((est.x_mat.get(0, 0) - 1.0).abs() < 1e-8);
        assert_eq!(est.active_counts, vec![0, 0]);
    }

    #[test]
    fn binary_rank_one_optimum() {
        // min x^2 - 3x on {0, 1}: optimum x = 1, value -2, and the SDP is tight.
        let inst = IqpInstance::new(SymMatrix::identity(1), vec![-3.0], 0.0, vec![IntDomain::new(0, 1)], vec![]).unwrap();
        let rel = build_relaxation(&inst, BetaPolicy::ZeroFirstEntry);
        let cfg = SolverConfig { min_iterations: Some(2000), check_period: Some(1000), ..Default::default() };
        let res = solve_dual(&rel, &cfg, None).unwrap();
        assert!((res.bound + 2.0).abs() < 1e-4, "bound {}", res.bound);
        let est = recover_primal(&rel, &res.y, DEFAULT_ZERO_EIG_TOL, DEFAULT_ACTIVE_TOL).unwrap();
        assert!(est.psd_ok);
        assert!((est.x[0] - 1.0).abs() < 1e-3, "x = {:?}", est.x);
        let target = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(est.x_mat.max_abs_diff(&target) < 1e-3);
        assert!(complementarity_residual(&rel, &res.y, &est.x_mat).unwrap() < 1e-3);
    }

    #[test]
    fn complementarity_of_zero_is_zero() {
        let inst = IqpInstance::new(SymMatrix::identity(1), vec![0.0], 0.0, vec![IntDomain::new(0, 1)], vec![]).unwrap();
        let rel = build_relaxation(&inst, BetaPolicy::ZeroFirstEntry);
        assert_eq!(complementarity_residual(&rel, &rel.zero_dual(), &SymMatrix::zeros(2)).unwrap(), 0.0);
    }
}
