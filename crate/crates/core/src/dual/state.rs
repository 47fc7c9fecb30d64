use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{dense_inverse, min_eigenvalue, sym_block_update, SymMatrix, WOODBURY_GUARD};
use crate::model::{FacetKind, SdpRelaxation};

/// Dual iterate together with the maintained inverse slack.
#[derive(Debug, Clone)]
pub struct DualState {
    /// Layout as in [`crate::model`]: `y0`, facets, linear constraints.
    pub y: Vec<f64>,
    /// `(Q - A^T y)^{-1}`.
    pub w: SymMatrix,
    pub sigma: f64,
    pub iterations: u64,
    /// `<b, y>` for the current `y`.
    pub bound: f64,
    pub updates_since_refactor: usize,
    /// Sum of the condition estimates of the updates since the last
    /// refactorization; a rough bound on how much rounding in `w` has been
    /// amplified.
    pub error_growth: f64,
    /// Per variable, facet indices of lower facets with a negative dual.
    pub active_lower: Vec<Vec<usize>>,
}

impl DualState {
    /// Builds a state from a dual vector, factoring the slack densely.
    pub fn from_dual(rel: &SdpRelaxation, y: Vec<f64>, sigma: f64) -> Result<Self> {
        if y.len() != rel.num_coords() {
            return Err(Error::DimensionMismatch { expected: rel.num_coords(), got: y.len() });
        }
        let w = dense_inverse(&rel.slack_matrix(&y))?;
        Ok(Self::from_parts(rel, y, w, sigma))
    }

    /// Builds a state from a dual vector and a claimed inverse slack without
    /// checking that they agree.
    pub fn from_parts(rel: &SdpRelaxation, y: Vec<f64>, w: SymMatrix, sigma: f64) -> Self {
        let mut active_lower = vec![Vec::new(); rel.n()];
        for (k, f) in rel.facets.iter().enumerate() {
            if matches!(f.kind, FacetKind::Lower(_)) && y[rel.facet_coord(k)] < 0.0 {
                active_lower[f.var].push(k);
            }
        }
        let bound = rel.dual_objective(&y);
        DualState { y, w, sigma, iterations: 0, bound, updates_since_refactor: 0, error_growth: 0.0, active_lower }
    }

    pub fn facet_dual(&self, rel: &SdpRelaxation, k: usize) -> f64 {
        self.y[rel.facet_coord(k)]
    }

    pub fn linear_dual(&self, rel: &SdpRelaxation, j: usize) -> f64 {
        self.y[rel.linear_coord(j)]
    }

    pub(crate) fn set_facet_dual(&mut self, rel: &SdpRelaxation, k: usize, v: f64) {
        let v = v.min(0.0);
        let c = rel.facet_coord(k);
        let was = self.y[c] < 0.0;
        self.y[c] = v;
        let f = &rel.facets[k];
        if matches!(f.kind, FacetKind::Lower(_)) {
            let list = &mut self.active_lower[f.var];
            match (was, v < 0.0) {
                (false, true) => list.push(k),
                (true, false) => list.retain(|&x| x != k),
                _ => {}
            }
        }
    }

    /// Recomputes `W` densely and returns the max-norm drift of the
    /// incrementally maintained copy.
    pub fn refactor(&mut self, rel: &SdpRelaxation) -> Result<f64> {
        let fresh = dense_inverse(&rel.slack_matrix(&self.y))?;
        let drift = fresh.max_abs_diff(&self.w);
        self.w = fresh;
        self.bound = rel.dual_objective(&self.y);
        self.updates_since_refactor = 0;
        self.error_growth = 0.0;
        Ok(drift)
    }

    /// `W <- (W^{-1} - s e0 e0^T)^{-1}`.
    pub(crate) fn update_zero(&mut self, s: f64) -> Result<()> {
        let w00 = self.w.get(0, 0);
        let den = 1.0 - s * w00;
        if !den.is_finite() || den.abs() <= WOODBURY_GUARD {
            return Err(Error::SingularUpdate(den));
        }
        let u0 = self.w.row(0).to_vec();
        self.w.add_sym_rank1(&u0, s / den);
        self.error_growth += 1.0 / den.abs().min(1.0);
        Ok(())
    }

    /// `W <- (W^{-1} - E B E^T)^{-1}` with `E = [e_a, e_b]`.
    pub(crate) fn update_block(&mut self, a: usize, b: usize, blk: [[f64; 2]; 2]) -> Result<()> {
        let u0 = self.w.row(a).to_vec();
        let u1 = self.w.row(b).to_vec();
        let p = [[self.w.get(a, a), self.w.get(a, b)], [self.w.get(b, a), self.w.get(b, b)]];
        let (_, cond) = sym_block_update(&mut self.w, &u0, &u1, p, blk)?;
        self.error_growth += cond;
        Ok(())
    }

    /// `W <- (W^{-1} - (e0 h^T + h e0^T))^{-1}` given `W h`.
    pub(crate) fn update_e0_sym(&mut self, wh: &[f64], h_w_h: f64) -> Result<()> {
        let u0 = self.w.row(0).to_vec();
        let p = [[self.w.get(0, 0), wh[0]], [wh[0], h_w_h]];
        let (_, cond) = sym_block_update(&mut self.w, &u0, wh, p, [[0.0, 1.0], [1.0, 0.0]])?;
        self.error_growth += cond;
        Ok(())
    }
}

/// Spectral facts about the objective that do not depend on the domains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartInfo {
    pub q_hat_min_eig: f64,
    pub q_min_eig: f64,
}

impl StartInfo {
    pub fn compute(rel: &SdpRelaxation) -> Result<Self> {
        let n = rel.n();
        let q_hat = SymMatrix::from_lower_fn(n, |i, j| rel.q.get(i + 1, j + 1));
        Ok(StartInfo { q_hat_min_eig: min_eigenvalue(&q_hat)?, q_min_eig: min_eigenvalue(&rel.q)? })
    }
}

/// Tolerance on `lambda_min(Q)` for starting from `y = 0`.
pub const CONVEX_START_TOL: f64 = 1e-9;

/// Strictly feasible starting point.
pub fn initial_point(rel: &SdpRelaxation, sigma: f64) -> Result<DualState> {
    initial_point_with(rel, &StartInfo::compute(rel)?, sigma)
}

pub fn initial_dual(rel: &SdpRelaxation, info: &StartInfo) -> Vec<f64> {
    let mut y = rel.zero_dual();
    if info.q_min_eig > CONVEX_START_TOL {
        return y;
    }
    let yt = (info.q_hat_min_eig - 1.0).min(0.0);
    let mut sum_a00 = 0.0;
    let mut norm2 = 0.0;
    for i in 0..rel.n() {
        let k = rel.upper_facet(i);
        let f = &rel.facets[k];
        sum_a00 += f.a00;
        let v = rel.q.get(0, i + 1) - yt * f.a0i;
        norm2 += v * v;
        y[rel.facet_coord(k)] = yt;
    }
    y[0] = rel.q.get(0, 0) - yt * sum_a00 - 1.0 - norm2;
    y
}

pub fn initial_point_with(rel: &SdpRelaxation, info: &StartInfo, sigma: f64) -> Result<DualState> {
    let y = initial_dual(rel, info);
    DualState::from_dual(rel, y, sigma).map_err(|_| {
        Error::Internal(alloc::string::String::from("starting point is not strictly feasible"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;
    use crate::model::{build_relaxation, BetaPolicy, IntDomain, IqpInstance};

    #[test]
    fn convex_start_is_zero() {
        let inst = IqpInstance::new(SymMatrix::identity(2), vec![0.0; 2], 1.0, vec![IntDomain::ternary(); 2], vec![])
            .unwrap();
        let rel = build_relaxation(&inst, BetaPolicy::ZeroFirstEntry);
        let st = initial_point(&rel, 1.0).unwrap();
        assert!(st.y.iter().all(|&v| v == 0.0));
        assert!(st.w.max_abs_diff(&dense_inverse(&rel.q).unwrap()) < 1e-14);
    }

    #[test]
    fn concave_one_variable() {
        let inst = IqpInstance::new(
            SymMatrix::from_diag(&[-1.0]),
            vec![0.0],
            0.0,
            vec![IntDomain::ternary()],
            vec![],
        )
        .unwrap();
        let rel = build_relaxation(&inst, BetaPolicy::ZeroFirstEntry);
        let st = initial_point(&rel, 1.0).unwrap();
        assert_eq!(st.y[rel.facet_coord(rel.upper_facet(0))], -2.0);
        assert!(min_eigenvalue(&rel.slack_matrix(&st.y)).unwrap() > 0.0);
    }

    #[test]
    fn active_list_tracks_sign() {
        let inst = IqpInstance::new(SymMatrix::identity(1), vec![0.0], 0.0, vec![IntDomain::new(-3, 3)], vec![])
            .unwrap();
        let rel = build_relaxation(&inst, BetaPolicy::ZeroFirstEntry);
        let mut st = initial_point(&rel, 1.0).unwrap();
        st.set_facet_dual(&rel, 2, -0.5);
        st.set_facet_dual(&rel, 4, -0.1);
        assert_eq!(st.active_lower[0], vec![2, 4]);
        st.set_facet_dual(&rel, 2, 0.0);
        assert_eq!(st.active_lower[0], vec![4]);
        // upper facet is never listed
        st.set_facet_dual(&rel, 6, -1.0);
        assert_eq!(st.active_lower[0], vec![4]);
    }
}
