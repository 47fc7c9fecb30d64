//! Integer QP instances and their SDP relaxation.
//!
//! Indices into the lifted `(n+1) x (n+1)` matrices are shifted by one:
//! row/column `0` is the homogenizing coordinate and variable `i` lives at
//! index `i + 1`.
//!
//! A dual vector is a flat `Vec<f64>` laid out as
//! `[y0, facet_0, ..., facet_{m-1}, linear_0, ..., linear_{p-1}]`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::linalg::SymMatrix;

/// Integer interval `{lo, ..., hi}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntDomain {
    pub lo: i64,
    pub hi: i64,
}

impl IntDomain {
    pub const fn new(lo: i64, hi: i64) -> Self {
        IntDomain { lo, hi }
    }

    pub const fn ternary() -> Self {
        IntDomain { lo: -1, hi: 1 }
    }

    pub fn size(&self) -> u64 {
        (self.hi - self.lo + 1) as u64
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn values(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    /// Clamp a real value into `[lo, hi]`.
    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lo as f64).min(self.hi as f64)
    }
}

/// `a^T x <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub a: Vec<f64>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(a: Vec<f64>, rhs: f64) -> Self {
        LinearConstraint { a, rhs }
    }

    pub fn activity(&self, x: &[i64]) -> f64 {
        self.a.iter().zip(x).map(|(a, &v)| a * v as f64).sum()
    }

    pub fn violation(&self, x: &[i64]) -> f64 {
        (self.activity(x) - self.rhs).max(0.0)
    }
}

/// Absolute slack allowed when checking linear constraints on integer points.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct IqpInstance {
    pub q_hat: SymMatrix,
    pub l_hat: Vec<f64>,
    pub c_hat: f64,
    pub domains: Vec<IntDomain>,
    pub linear: Vec<LinearConstraint>,
}

impl IqpInstance {
    pub fn new(
        q_hat: SymMatrix,
        l_hat: Vec<f64>,
        c_hat: f64,
        domains: Vec<IntDomain>,
        linear: Vec<LinearConstraint>,
    ) -> Result<Self> {
        let inst = IqpInstance { q_hat, l_hat, c_hat, domains, linear };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.q_hat.dim();
        if n == 0 {
            return Err(invalid("instance needs at least one variable"));
        }
        if self.l_hat.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.l_hat.len() });
        }
        if self.domains.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.domains.len() });
        }
        if !self.q_hat.is_finite() || !self.c_hat.is_finite() || self.l_hat.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite objective data"));
        }
        if self.domains.iter().any(|d| d.lo > d.hi) {
            return Err(invalid("empty variable domain"));
        }
        for lc in &self.linear {
            if lc.a.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: lc.a.len() });
            }
            if !lc.rhs.is_finite() || lc.a.iter().any(|v| !v.is_finite()) {
                return Err(invalid("non-finite constraint data"));
            }
            if lc.a.iter().all(|&v| v == 0.0) {
                return Err(invalid("linear constraint with zero coefficient vector"));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.q_hat.dim()
    }

    /// Same objective and constraints on different domains.
    pub fn with_domains(&self, domains: Vec<IntDomain>) -> IqpInstance {
        IqpInstance { domains, ..self.clone() }
    }

    pub fn max_domain_size(&self) -> u64 {
        self.domains.iter().map(IntDomain::size).max().unwrap_or(1)
    }

    pub fn in_domains(&self, x: &[i64]) -> bool {
        x.len() == self.n() && self.domains.iter().zip(x).all(|(d, &v)| d.contains(v))
    }

    pub fn satisfies_linear(&self, x: &[i64]) -> bool {
        self.linear.iter().all(|lc| lc.activity(x) <= lc.rhs + FEAS_TOL)
    }

    pub fn is_feasible(&self, x: &[i64]) -> bool {
        self.in_domains(x) && self.satisfies_linear(x)
    }
}

/// `x^T Q x + l^T x + c`.
pub fn objective_value(inst: &IqpInstance, x: &[i64]) -> f64 {
    let n = inst.n();
    let mut v = inst.c_hat;
    for i in 0..n {
        let xi = x[i] as f64;
        v += inst.l_hat[i] * xi;
        let row = inst.q_hat.row(i);
        let mut s = 0.0;
        for k in 0..n {
            s += row[k] * x[k] as f64;
        }
        v += xi * s;
    }
    v
}

/// Upper bound on the objective over the domain box, by interval arithmetic
/// on each term. Any dual bound above it certifies that the node has no
/// feasible point.
pub fn objective_upper_bound(inst: &IqpInstance) -> f64 {
    let n = inst.n();
    let d = &inst.domains;
    let mut ub = inst.c_hat;
    for i in 0..n {
        let (lo, hi) = (d[i].lo as f64, d[i].hi as f64);
        ub += (inst.l_hat[i] * lo).max(inst.l_hat[i] * hi);
        let sq_max = (lo * lo).max(hi * hi);
        let sq_min = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { (lo * lo).min(hi * hi) };
        let qii = inst.q_hat.get(i, i);
        ub += (qii * sq_max).max(qii * sq_min);
        for k in i + 1..n {
            let q = inst.q_hat.get(i, k);
            if q == 0.0 {
                continue;
            }
            let (lk, hk) = (d[k].lo as f64, d[k].hi as f64);
            let prods = [lo * lk, lo * hk, hi * lk, hi * hk];
            let m = prods.iter().fold(f64::NEG_INFINITY, |m, &p| m.max(2.0 * q * p));
            ub += m;
        }
    }
    ub
}

/// How the free right-hand sides of the lifted constraints are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaPolicy {
    /// Every constraint matrix has a zero `(0,0)` entry.
    #[default]
    ZeroFirstEntry,
    AllZero,
    /// Rank-one facet matrices. Linear constraints use their right-hand side.
    RankOne,
}

impl BetaPolicy {
    pub fn upper(self, d: IntDomain) -> f64 {
        let (l, u) = (d.lo as f64, d.hi as f64);
        match self {
            BetaPolicy::ZeroFirstEntry => -l * u,
            BetaPolicy::AllZero => 0.0,
            BetaPolicy::RankOne => (l - u) * (l - u) / 4.0,
        }
    }

    pub fn lower(self, j: i64) -> f64 {
        let j = j as f64;
        match self {
            BetaPolicy::ZeroFirstEntry => j * (j + 1.0),
            BetaPolicy::AllZero => 0.0,
            BetaPolicy::RankOne => -0.25,
        }
    }

    /// Coefficients `(q, l, c)` with `lower(j) = q j^2 + l j + c`.
    pub fn lower_poly(self) -> (f64, f64, f64) {
        match self {
            BetaPolicy::ZeroFirstEntry => (1.0, 1.0, 0.0),
            BetaPolicy::AllZero => (0.0, 0.0, 0.0),
            BetaPolicy::RankOne => (0.0, 0.0, -0.25),
        }
    }

    pub fn linear(self, rhs: f64) -> f64 {
        match self {
            BetaPolicy::AllZero => 0.0,
            BetaPolicy::ZeroFirstEntry | BetaPolicy::RankOne => rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetKind {
    /// Lower facet through `(j, j^2)` and `(j+1, (j+1)^2)`.
    Lower(i64),
    Upper,
}

/// One facet of the convex hull of `{(v, v^2) : v in D_i}` as a sparse
/// constraint matrix with entries at `(0,0)`, `(0,i)` and `(i,i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetDescriptor {
    /// Zero-based variable index.
    pub var: usize,
    pub kind: FacetKind,
    pub beta: f64,
    pub a00: f64,
    pub a0i: f64,
    pub aii: f64,
}

impl FacetDescriptor {
    pub fn new(var: usize, kind: FacetKind, domain: IntDomain, policy: BetaPolicy) -> Self {
        match kind {
            FacetKind::Lower(j) => {
                let beta = policy.lower(j);
                let jf = j as f64;
                FacetDescriptor { var, kind, beta, a00: beta - jf * (jf + 1.0), a0i: jf + 0.5, aii: -1.0 }
            }
            FacetKind::Upper => {
                let beta = policy.upper(domain);
                let (l, u) = (domain.lo as f64, domain.hi as f64);
                FacetDescriptor { var, kind, beta, a00: beta + l * u, a0i: -(l + u) / 2.0, aii: 1.0 }
            }
        }
    }

    /// Row/column of the variable in the lifted matrix.
    #[inline]
    pub fn index(&self) -> usize {
        self.var + 1
    }

    /// Determinant of the nonzero 2x2 block.
    #[inline]
    pub fn alpha1(&self) -> f64 {
        self.a00 * self.aii - self.a0i * self.a0i
    }

    pub fn is_rank_one(&self) -> bool {
        let scale = 1.0 + self.a00.abs() * self.aii.abs() + self.a0i * self.a0i;
        self.alpha1().abs() <= 1e-12 * scale
    }
}

/// `a^T x <= rhs` lifted to `<A_j, X> <= beta` with `A_j` supported on row
/// and column zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraintDescriptor {
    pub index: usize,
    pub a: Vec<f64>,
    pub rhs: f64,
    pub beta: f64,
    pub a00: f64,
    /// `a / 2`, the entries `(0, k+1)`.
    pub first_row: Vec<f64>,
}

impl LinearConstraintDescriptor {
    pub fn new(index: usize, lc: &LinearConstraint, policy: BetaPolicy) -> Self {
        let beta = policy.linear(lc.rhs);
        LinearConstraintDescriptor {
            index,
            a: lc.a.clone(),
            rhs: lc.rhs,
            beta,
            a00: beta - lc.rhs,
            first_row: lc.a.iter().map(|v| v / 2.0).collect(),
        }
    }

    /// The vector `g` with `A_j = e0 g^T + g e0^T`: `g_0 = a00 / 2`,
    /// `g_{k+1} = a_k / 2`.
    pub fn g_vector(&self) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.a.len() + 1);
        g.push(self.a00 / 2.0);
        g.extend_from_slice(&self.first_row);
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpRelaxation {
    pub dim: usize,
    pub q: SymMatrix,
    pub facets: Vec<FacetDescriptor>,
    pub linear: Vec<LinearConstraintDescriptor>,
    pub b: Vec<f64>,
    /// Facet index range per variable; the last entry is the upper facet.
    pub var_facets: Vec<Range<usize>>,
    pub domains: Vec<IntDomain>,
    pub policy: BetaPolicy,
}

pub fn build_relaxation(inst: &IqpInstance, policy: BetaPolicy) -> SdpRelaxation {
    let n = inst.n();
    let dim = n + 1;
    let q = SymMatrix::from_lower_fn(dim, |i, j| match (i, j) {
        (0, 0) => inst.c_hat,
        (i, 0) => inst.l_hat[i - 1] / 2.0,
        (i, j) => inst.q_hat.get(i - 1, j - 1),
    });
    let mut facets = Vec::new();
    let mut var_facets = Vec::with_capacity(n);
    for (i, d) in inst.domains.iter().enumerate() {
        let start = facets.len();
        for j in d.lo..d.hi {
            facets.push(FacetDescriptor::new(i, FacetKind::Lower(j), *d, policy));
        }
        facets.push(FacetDescriptor::new(i, FacetKind::Upper, *d, policy));
        var_facets.push(start..facets.len());
    }
    let linear: Vec<_> =
        inst.linear.iter().enumerate().map(|(j, lc)| LinearConstraintDescriptor::new(j, lc, policy)).collect();
    let mut b = Vec::with_capacity(1 + facets.len() + linear.len());
    b.push(1.0);
    b.extend(facets.iter().map(|f| f.beta));
    b.extend(linear.iter().map(|l| l.beta));
    SdpRelaxation { dim, q, facets, linear, b, var_facets, domains: inst.domains.clone(), policy }
}

impl SdpRelaxation {
    pub fn n(&self) -> usize {
        self.dim - 1
    }

    pub fn num_coords(&self) -> usize {
        1 + self.facets.len() + self.linear.len()
    }

    #[inline]
    pub fn facet_coord(&self, k: usize) -> usize {
        1 + k
    }

    #[inline]
    pub fn linear_coord(&self, j: usize) -> usize {
        1 + self.facets.len() + j
    }

    pub fn upper_facet(&self, var: usize) -> usize {
        self.var_facets[var].end - 1
    }

    /// `<b, y>`.
    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        self.b.iter().zip(y).map(|(b, y)| b * y).sum()
    }

    /// `sum_k y_k A_k`, with `A_0 = e0 e0^T`.
    pub fn adjoint(&self, y: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.dim);
        m.add(0, 0, y[0]);
        for (k, f) in self.facets.iter().enumerate() {
            let yk = y[self.facet_coord(k)];
            if yk == 0.0 {
                continue;
            }
            let i = f.index();
            m.add(0, 0, yk * f.a00);
            m.add(0, i, yk * f.a0i);
            m.add(i, i, yk * f.aii);
        }
        for (j, lc) in self.linear.iter().enumerate() {
            let yj = y[self.linear_coord(j)];
            if yj == 0.0 {
                continue;
            }
            m.add(0, 0, yj * lc.a00);
            for (k, &g) in lc.first_row.iter().enumerate() {
                m.add(0, k + 1, yj * g);
            }
        }
        m
    }

    /// `Q - A^T y`.
    pub fn slack_matrix(&self, y: &[f64]) -> SymMatrix {
        let mut s = self.q.clone();
        s.add_scaled(&self.adjoint(y), -1.0);
        s
    }

    pub fn zero_dual(&self) -> Vec<f64> {
        vec![0.0; self.num_coords()]
    }
}

/// `<A_f, W>` in O(1).
#[inline]
pub fn facet_inner_product(f: &FacetDescriptor, w: &SymMatrix) -> f64 {
    let i = f.index();
    f.a00 * w.get(0, 0) + 2.0 * f.a0i * w.get(0, i) + f.aii * w.get(i, i)
}

/// `<A_j, W>` in O(n).
pub fn linear_inner_product(lc: &LinearConstraintDescriptor, w: &SymMatrix) -> f64 {
    let row = w.row(0);
    let mut s = lc.a00 * row[0];
    for (k, &g) in lc.first_row.iter().enumerate() {
        s += 2.0 * g * row[k + 1];
    }
    s
}
