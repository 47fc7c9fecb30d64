//! Exact line and plane searches.
//!
//! Moving a dual coordinate with constraint matrix `A = E B E^T` by `s`
//! changes the slack to `M - sA`, and
//! `det(M - sA) / det(M) = 1 - tau s + delta s^2 =: D(s)` with
//! `tau = <A, W>` and `delta = det(B) det(E^T W E)`. Every coordinate of the
//! problem is therefore described by three numbers `(b, tau, delta)` and the
//! barrier along the line is `b s + sigma log D(s)`.
//!
//! For the plane search the homogenizing coordinate `s0` is maximized out,
//! leaving `g(s) = b s + D(s) / n00(s) + sigma log n00(s)` with
//! `n00(s) = w00 - kappa s` proportional to the determinant of the slack
//! with row and column zero removed.

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::SymMatrix;
use crate::model::{FacetDescriptor, LinearConstraintDescriptor};

/// How a step was determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Stationary point of the barrier in the interior.
    InteriorRoot,
    /// The dual reached zero from below.
    ClampedToZeroDual,
    /// No stationary point on an unbounded descent ray; the step is the
    /// configured cap.
    UnboundedRay,
    /// Nothing to do (zero gradient, or a clamp from a dual already at zero).
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub s: f64,
    pub kind: StepKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step2dOutcome {
    pub s: f64,
    pub s0: f64,
    pub kind: StepKind,
}

/// Scalars entering the closed-form steps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepCoefficients {
    /// `a00 aii - a0i^2` for facets.
    pub alpha1: f64,
    /// `<A, W>` restricted to the facet block.
    pub alpha2: f64,
    /// `w00 wii - w0i^2`.
    pub w: f64,
    /// `v^T W v` for a rank-one facet `A = v v^T` (signed by `aii`).
    pub t: f64,
    /// `g^T W g` for a linear constraint.
    pub d: f64,
    /// `(W g)_0` for a linear constraint.
    pub f: f64,
}

pub fn facet_coefficients(fd: &FacetDescriptor, w: &SymMatrix) -> StepCoefficients {
    let i = fd.index();
    let (w00, w0i, wii) = (w.get(0, 0), w.get(0, i), w.get(i, i));
    let alpha2 = fd.a00 * w00 + 2.0 * fd.a0i * w0i + fd.aii * wii;
    StepCoefficients {
        alpha1: fd.alpha1(),
        alpha2,
        w: w00 * wii - w0i * w0i,
        // For rank-one A = aii v v^T, t = v^T W v = alpha2 / aii.
        t: alpha2 / fd.aii,
        d: 0.0,
        f: 0.0,
    }
}

/// `f = (W g)_0` only, O(n).
pub fn linear_f(lc: &LinearConstraintDescriptor, w: &SymMatrix) -> f64 {
    let row = w.row(0);
    let mut f = 0.5 * lc.a00 * row[0];
    for (k, &g) in lc.first_row.iter().enumerate() {
        f += g * row[k + 1];
    }
    f
}

/// `W g` for the constraint's `g` vector.
pub fn linear_wg(lc: &LinearConstraintDescriptor, w: &SymMatrix) -> alloc::vec::Vec<f64> {
    let dim = w.dim();
    let mut out = alloc::vec![0.0; dim];
    let half00 = 0.5 * lc.a00;
    for (r, o) in out.iter_mut().enumerate() {
        let row = w.row(r);
        let mut s = half00 * row[0];
        for (k, &g) in lc.first_row.iter().enumerate() {
            if g != 0.0 {
                s += g * row[k + 1];
            }
        }
        *o = s;
    }
    out
}

pub fn linear_coefficients(lc: &LinearConstraintDescriptor, w: &SymMatrix) -> (StepCoefficients, alloc::vec::Vec<f64>) {
    let wg = linear_wg(lc, w);
    let f = wg[0];
    let mut d = 0.5 * lc.a00 * wg[0];
    for (k, &g) in lc.first_row.iter().enumerate() {
        d += g * wg[k + 1];
    }
    (StepCoefficients { d, f, ..Default::default() }, wg)
}

/// One-dimensional model `b s + sigma log(1 - tau s + delta s^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineModel {
    pub b: f64,
    pub tau: f64,
    pub delta: f64,
}

impl LineModel {
    pub fn zero(w: &SymMatrix) -> Self {
        LineModel { b: 1.0, tau: w.get(0, 0), delta: 0.0 }
    }

    pub fn facet(fd: &FacetDescriptor, c: &StepCoefficients) -> Self {
        LineModel { b: fd.beta, tau: c.alpha2, delta: c.alpha1 * c.w }
    }

    pub fn linear(lc: &LinearConstraintDescriptor, c: &StepCoefficients, w00: f64) -> Self {
        LineModel { b: lc.beta, tau: 2.0 * c.f, delta: c.f * c.f - c.d * w00 }
    }

    pub fn det_ratio(&self, s: f64) -> f64 {
        1.0 - self.tau * s + self.delta * s * s
    }

    pub fn derivative(&self, s: f64, sigma: f64) -> f64 {
        self.b + sigma * (2.0 * self.delta * s - self.tau) / self.det_ratio(s)
    }

    /// Numerator of the derivative, `b D(s) + sigma D'(s)`.
    pub fn numerator(&self, sigma: f64) -> [f64; 3] {
        [
            self.b * self.delta,
            2.0 * sigma * self.delta - self.b * self.tau,
            self.b - sigma * self.tau,
        ]
    }

    /// The open interval around zero on which the slack stays definite.
    pub fn interval(&self) -> (f64, f64) {
        definite_interval(self.tau, self.delta)
    }
}

/// The interval `{s : 1 - tau s + delta s^2 > 0}` containing zero.
pub fn definite_interval(tau: f64, delta: f64) -> (f64, f64) {
    // D(s) = (1 - l1 s)(1 - l2 s) with l1 + l2 = tau, l1 l2 = delta.
    let disc = (tau * tau - 4.0 * delta).max(0.0);
    let sq = disc.sqrt();
    let (l1, l2) = if tau >= 0.0 {
        let l1 = 0.5 * (tau + sq);
        (l1, if l1 != 0.0 { delta / l1 } else { 0.0 })
    } else {
        let l1 = 0.5 * (tau - sq);
        (l1, if l1 != 0.0 { delta / l1 } else { 0.0 })
    };
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for l in [l1, l2] {
        if l > 0.0 {
            hi = hi.min(1.0 / l);
        } else if l < 0.0 {
            lo = lo.max(1.0 / l);
        }
    }
    (lo, hi)
}

/// Real roots of `a s^2 + b s + c`, computed without cancellation.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> ([f64; 2], usize) {
    if a == 0.0 {
        if b == 0.0 {
            return ([0.0; 2], 0);
        }
        return ([-c / b, 0.0], 1);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return ([0.0; 2], 0);
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    if q == 0.0 {
        return ([0.0, 0.0], 2);
    }
    ([q / a, c / q], 2)
}

/// Pick the unique sign change of `num` inside `(lo, hi)` on the requested
/// side of zero. Falls back to bisection when rounding pushes the algebraic
/// roots just outside the interval.
fn root_on_side(
    coef: [f64; 3],
    lo: f64,
    hi: f64,
    ascent: bool,
    eval: impl Fn(f64) -> f64,
) -> Option<f64> {
    let (roots, k) = quadratic_roots(coef[0], coef[1], coef[2]);
    let mut best: Option<f64> = None;
    for &r in &roots[..k] {
        let ok = if ascent { r > 0.0 && r < hi } else { r < 0.0 && r > lo };
        if ok && r.is_finite() && best.is_none_or(|b| r.abs() < b.abs()) {
            best = Some(r);
        }
    }
    if best.is_some() {
        return best;
    }
    // Bisection on a finite bracket.
    let (mut a, mut b) = if ascent { (0.0, hi) } else { (lo, 0.0) };
    if !a.is_finite() || !b.is_finite() {
        return None;
    }
    // Pull the open end slightly inside.
    if ascent {
        b -= b.abs() * 1e-15;
    } else {
        a += a.abs() * 1e-15;
    }
    let (fa, fb) = (eval(a), eval(b));
    if !(fa.signum() != fb.signum()) {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = eval(m);
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Exact line search.
///
/// `y_cur` is the current value of a sign-restricted dual (`None` for the
/// unrestricted `y0`). Ascent steps of restricted duals are clamped at zero.
pub fn line_step(model: &LineModel, sigma: f64, y_cur: Option<f64>, neg_step_cap: f64) -> StepOutcome {
    let g0 = model.b - sigma * model.tau;
    if g0 == 0.0 || !g0.is_finite() {
        return StepOutcome { s: 0.0, kind: StepKind::Blocked };
    }
    let (lo, hi) = model.interval();
    let coef = model.numerator(sigma);
    let eval = |s: f64| coef[0] * s * s + coef[1] * s + coef[2];
    let ascent = g0 > 0.0;
    let root = root_on_side(coef, lo, hi, ascent, eval);
    finish(root, ascent, lo, y_cur, neg_step_cap)
}

fn finish(root: Option<f64>, ascent: bool, lo: f64, y_cur: Option<f64>, neg_step_cap: f64) -> StepOutcome {
    if ascent {
        match (root, y_cur) {
            (Some(s), Some(y)) if s > -y => clamp_step(y),
            (None, Some(y)) => clamp_step(y),
            (Some(s), _) => StepOutcome { s, kind: StepKind::InteriorRoot },
            (None, None) => StepOutcome { s: 0.0, kind: StepKind::Blocked },
        }
    } else {
        match root {
            Some(s) => StepOutcome { s, kind: StepKind::InteriorRoot },
            None if lo == f64::NEG_INFINITY => StepOutcome { s: neg_step_cap, kind: StepKind::UnboundedRay },
            None => StepOutcome { s: 0.0, kind: StepKind::Blocked },
        }
    }
}

fn clamp_step(y: f64) -> StepOutcome {
    if y < 0.0 {
        StepOutcome { s: -y, kind: StepKind::ClampedToZeroDual }
    } else {
        StepOutcome { s: 0.0, kind: StepKind::Blocked }
    }
}

/// Step along `y0`: `s = 1/w00 - sigma`, never clamped.
pub fn step_zero(w: &SymMatrix, sigma: f64) -> StepOutcome {
    let w00 = w.get(0, 0);
    if !(w00 > 0.0) {
        return StepOutcome { s: 0.0, kind: StepKind::Blocked };
    }
    let s = 1.0 / w00 - sigma;
    StepOutcome { s, kind: if s == 0.0 { StepKind::Blocked } else { StepKind::InteriorRoot } }
}

/// Closed-form step for a rank-one facet: `s = 1/(aii t) - sigma/beta`.
pub fn step_facet_rank1(fd: &FacetDescriptor, w: &SymMatrix, sigma: f64, y_cur: f64, neg_step_cap: f64) -> StepOutcome {
    let c = facet_coefficients(fd, w);
    let model = LineModel::facet(fd, &c);
    if fd.beta == 0.0 || c.alpha2.abs() < 1e-12 {
        return line_step(&model, sigma, Some(y_cur), neg_step_cap);
    }
    let g0 = fd.beta - sigma * c.alpha2;
    if g0 == 0.0 {
        return StepOutcome { s: 0.0, kind: StepKind::Blocked };
    }
    let s = 1.0 / c.alpha2 - sigma / fd.beta;
    let (lo, hi) = model.interval();
    let ascent = g0 > 0.0;
    let inside = if ascent { s > 0.0 && s < hi } else { s < 0.0 && s > lo };
    finish(inside.then_some(s), ascent, lo, Some(y_cur), neg_step_cap)
}

/// Line search for a rank-two facet.
pub fn step_facet_rank2(fd: &FacetDescriptor, w: &SymMatrix, sigma: f64, y_cur: f64, neg_step_cap: f64) -> StepOutcome {
    let c = facet_coefficients(fd, w);
    line_step(&LineModel::facet(fd, &c), sigma, Some(y_cur), neg_step_cap)
}

pub fn step_facet(fd: &FacetDescriptor, w: &SymMatrix, sigma: f64, y_cur: f64, neg_step_cap: f64) -> StepOutcome {
    if fd.is_rank_one() {
        step_facet_rank1(fd, w, sigma, y_cur, neg_step_cap)
    } else {
        step_facet_rank2(fd, w, sigma, y_cur, neg_step_cap)
    }
}

/// Line search for a linear-constraint dual.
pub fn step_linear(
    lc: &LinearConstraintDescriptor,
    w: &SymMatrix,
    sigma: f64,
    y_cur: f64,
    neg_step_cap: f64,
) -> StepOutcome {
    let (c, _) = linear_coefficients(lc, w);
    line_step(&LineModel::linear(lc, &c, w.get(0, 0)), sigma, Some(y_cur), neg_step_cap)
}

/// Plane model: line model plus the scalars of `n00(s) = p00 - kappa s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneModel {
    pub line: LineModel,
    pub p00: f64,
    pub kappa: f64,
}

impl PlaneModel {
    pub fn facet(fd: &FacetDescriptor, c: &StepCoefficients, w00: f64) -> Self {
        PlaneModel { line: LineModel::facet(fd, c), p00: w00, kappa: fd.aii * c.w }
    }

    pub fn linear(lc: &LinearConstraintDescriptor, c: &StepCoefficients, w00: f64) -> Self {
        PlaneModel { line: LineModel::linear(lc, c, w00), p00: w00, kappa: 0.0 }
    }

    pub fn n00(&self, s: f64) -> f64 {
        self.p00 - self.kappa * s
    }

    /// Optimal `s0` for a given `s`.
    pub fn s0(&self, s: f64, sigma: f64) -> f64 {
        self.line.det_ratio(s) / self.n00(s) - sigma
    }

    /// Reduced objective `g(s)` up to a constant.
    pub fn value(&self, s: f64, sigma: f64) -> f64 {
        let n = self.n00(s);
        self.line.b * s + self.line.det_ratio(s) / n + sigma * n.ln()
    }

    /// Numerator of `g'(s)`; `g'(s) = N(s) / n00(s)^2`.
    pub fn numerator(&self, sigma: f64) -> [f64; 3] {
        let LineModel { b, tau, delta } = self.line;
        let (p, k) = (self.p00, self.kappa);
        [
            b * k * k - delta * k,
            2.0 * delta * p - 2.0 * b * p * k + sigma * k * k,
            k + b * p * p - tau * p - sigma * k * p,
        ]
    }

    pub fn derivative(&self, s: f64, sigma: f64) -> f64 {
        let c = self.numerator(sigma);
        let n = self.n00(s);
        (c[0] * s * s + c[1] * s + c[2]) / (n * n)
    }

    /// `g'(0)`, the plane-search coordinate score.
    pub fn score(&self, sigma: f64) -> f64 {
        let p = self.p00;
        self.line.b - self.line.tau / p + self.kappa / (p * p) - sigma * self.kappa / p
    }

    /// Interval on which `n00(s) > 0`.
    pub fn interval(&self) -> (f64, f64) {
        if self.kappa > 0.0 {
            (f64::NEG_INFINITY, self.p00 / self.kappa)
        } else if self.kappa < 0.0 {
            (self.p00 / self.kappa, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }
}

/// Exact plane search over `(s, s0)`.
pub fn plane_step(model: &PlaneModel, sigma: f64, y_cur: f64, neg_step_cap: f64) -> Step2dOutcome {
    let g0 = model.score(sigma);
    if g0 == 0.0 || !g0.is_finite() {
        return Step2dOutcome { s: 0.0, s0: model.s0(0.0, sigma), kind: StepKind::Blocked };
    }
    let (lo, hi) = model.interval();
    let coef = model.numerator(sigma);
    let eval = |s: f64| coef[0] * s * s + coef[1] * s + coef[2];
    let ascent = g0 > 0.0;
    let root = root_on_side(coef, lo, hi, ascent, eval);
    let out = finish(root, ascent, lo, Some(y_cur), neg_step_cap);
    Step2dOutcome { s: out.s, s0: model.s0(out.s, sigma), kind: out.kind }
}

pub fn step_2d_facet(fd: &FacetDescriptor, w: &SymMatrix, sigma: f64, y_cur: f64, neg_step_cap: f64) -> Step2dOutcome {
    let c = facet_coefficients(fd, w);
    plane_step(&PlaneModel::facet(fd, &c, w.get(0, 0)), sigma, y_cur, neg_step_cap)
}

/// Plane search for a linear constraint; the unclamped step is
/// `(2f - beta w00) / (2 (f^2 - d w00))` regardless of `sigma`.
pub fn step_2d_linear(
    lc: &LinearConstraintDescriptor,
    w: &SymMatrix,
    sigma: f64,
    y_cur: f64,
    neg_step_cap: f64,
) -> Step2dOutcome {
    let (c, _) = linear_coefficients(lc, w);
    plane_step(&PlaneModel::linear(lc, &c, w.get(0, 0)), sigma, y_cur, neg_step_cap)
}
