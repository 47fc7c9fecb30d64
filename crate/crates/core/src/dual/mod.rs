//! Barrier coordinate ascent on the dual of the SDP relaxation.
//!
//! The dual is `max <b, y>` subject to `Q - A^T y` positive semidefinite and
//! `y_k <= 0` for all inequality duals. The log-determinant barrier
//! `f(y) = <b, y> + sigma log det(Q - A^T y)` is maximized one coordinate at
//! a time (CD), or one coordinate jointly with `y0` (CD2D), with exact step
//! sizes. `W = (Q - A^T y)^{-1}` is updated by Woodbury in `O(n^2)`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::SdpRelaxation;

pub mod select;
pub mod state;
pub mod step;

pub use select::{
    admissible, best_lower_facet, coordinate_score, gradient_entry_facet, gradient_entry_linear, gradient_entry_zero,
    lower_candidates, score_2d_facet, score_2d_linear, select_coordinate, CandidateRule, Coordinate, VertexRule,
};
pub use state::{initial_dual, initial_point, initial_point_with, DualState, StartInfo};
pub use step::{
    line_step, plane_step, step_2d_facet, step_2d_linear, step_facet, step_facet_rank1, step_facet_rank2, step_linear,
    step_zero, LineModel, PlaneModel, Step2dOutcome, StepCoefficients, StepKind, StepOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMode {
    /// One coordinate per iteration.
    Cd,
    /// One coordinate together with `y0` per iteration.
    #[default]
    Cd2d,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub sigma_init: f64,
    pub sigma_factor: f64,
    pub sigma_floor: f64,
    /// `None` picks 0.1 when every domain has at most three values and
    /// 0.001 otherwise.
    pub grad_threshold: Option<f64>,
    pub gap_fraction: f64,
    pub opt_eps: f64,
    /// `None` means `n`.
    pub check_period: Option<u64>,
    /// `None` means `max_i |D_i| * n`.
    pub min_iterations: Option<u64>,
    pub max_iterations: u64,
    pub mode: SolveMode,
    pub neg_step_cap: f64,
    pub refactor_period: usize,
    /// Refactor early once `DualState::error_growth` passes this.
    /// `f64::INFINITY` leaves only the fixed period.
    pub growth_budget: f64,
    pub candidates: CandidateRule,
    /// Consecutive capped descents on one linear dual before giving up on
    /// the primal.
    pub unbounded_escalation: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            sigma_init: 1.0,
            sigma_factor: 0.25,
            sigma_floor: 1e-8,
            grad_threshold: None,
            gap_fraction: 0.1,
            opt_eps: 1e-6,
            check_period: None,
            min_iterations: None,
            max_iterations: 100_000,
            mode: SolveMode::Cd2d,
            neg_step_cap: -1e6,
            refactor_period: 200,
            growth_budget: 1e6,
            candidates: CandidateRule::default(),
            unbounded_escalation: 3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(alloc::string::String::from(m)));
        if !(self.sigma_floor > 0.0 && self.sigma_floor < self.sigma_init) {
            return bad("need 0 < sigma_floor < sigma_init");
        }
        if !(self.sigma_factor > 0.0 && self.sigma_factor < 1.0) {
            return bad("sigma_factor must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gap_fraction) {
            return bad("gap_fraction must lie in [0, 1]");
        }
        if !(self.opt_eps >= 0.0) {
            return bad("opt_eps must be nonnegative");
        }
        if !(self.neg_step_cap < 0.0) {
            return bad("neg_step_cap must be negative");
        }
        if self.refactor_period == 0 {
            return bad("refactor_period must be positive");
        }
        if !(self.growth_budget > 0.0) {
            return bad("growth_budget must be positive");
        }
        Ok(())
    }

    fn threshold_for(&self, rel: &SdpRelaxation) -> f64 {
        self.grad_threshold.unwrap_or_else(|| {
            let max_size = rel.domains.iter().map(|d| d.size()).max().unwrap_or(1);
            if max_size <= 3 {
                0.1
            } else {
                0.001
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualStatus {
    /// No admissible direction at the smallest sigma, or the gap rule fired.
    Converged,
    /// The bound reached the incumbent.
    BoundReached,
    IterationLimit,
    /// The dual is unbounded: the node has no feasible point.
    PrimalInfeasible,
}

#[derive(Debug, Clone)]
pub struct DualResult {
    pub status: DualStatus,
    /// Best certified `<b, y>` seen.
    pub bound: f64,
    /// The dual vector achieving `bound`.
    pub y: Vec<f64>,
    pub iterations: u64,
    pub sigma: f64,
    /// Max-norm drift of `W` measured at each refactorization.
    pub refactor_drifts: Vec<f64>,
    /// Steps skipped because the Woodbury guard fired twice.
    pub skipped_steps: u64,
    pub unbounded_steps: u64,
}

/// Per-iteration report passed to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationInfo {
    pub iteration: u64,
    pub coordinate: Coordinate,
    pub kind: StepKind,
    pub s: f64,
    pub s0: f64,
    /// `<b, y>` after the step.
    pub bound: f64,
    pub sigma: f64,
}

/// Receives every accepted iteration of a dual solve.
pub trait DualObserver {
    fn on_iteration(&mut self, _state: &DualState, _info: &IterationInfo) {}
    fn on_refactor(&mut self, _drift: f64) {}
}

/// Observer that ignores everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoObserver;

impl DualObserver for NoObserver {}

/// Solves the dual from the standard starting point.
pub fn solve_dual(rel: &SdpRelaxation, cfg: &SolverConfig, incumbent: Option<f64>) -> Result<DualResult> {
    let info = StartInfo::compute(rel)?;
    let state = initial_point_with(rel, &info, cfg.sigma_init)?;
    DualSolver::new(rel, cfg, state)?.run(incumbent, &mut NoObserver)
}

/// Driver holding the relaxation, the configuration and the iterate.
#[derive(Debug)]
pub struct DualSolver<'a> {
    rel: &'a SdpRelaxation,
    cfg: SolverConfig,
    pub state: DualState,
    threshold: f64,
    infeasible_above: f64,
}

/// Outcome of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IterOutcome {
    Stepped(IterationInfo),
    /// The Woodbury guard fired twice; `W` and `y` are unchanged.
    Skipped(Coordinate),
    /// No admissible coordinate; sigma was reduced (or is at the floor when
    /// `at_floor`).
    NoCandidate { at_floor: bool },
}

impl<'a> DualSolver<'a> {
    pub fn new(rel: &'a SdpRelaxation, cfg: &SolverConfig, state: DualState) -> Result<Self> {
        cfg.validate()?;
        let ub = rel_objective_upper_bound(rel);
        Ok(DualSolver {
            rel,
            cfg: *cfg,
            threshold: cfg.threshold_for(rel),
            infeasible_above: ub + 1e-6 * (1.0 + ub.abs()),
            state,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// One selection plus step. `exclude` bars a coordinate for this round.
    pub fn iterate(&mut self, exclude: Option<Coordinate>) -> Result<IterOutcome> {
        let rel = self.rel;
        let mode = self.cfg.mode;
        let Some((coord, g)) =
            select_coordinate(&self.state, rel, mode, self.cfg.candidates, self.cfg.opt_eps, exclude)
        else {
            let at_floor = self.state.sigma <= self.cfg.sigma_floor;
            self.reduce_sigma();
            return Ok(IterOutcome::NoCandidate { at_floor });
        };

        let (mut s, mut s0, kind) = self.compute_step(coord);
        let mut applied = self.apply(coord, s, s0);
        if applied.is_err() {
            s *= 0.5;
            if mode == SolveMode::Cd2d && coord != Coordinate::Zero {
                s0 = self.plane_s0(coord, s);
            }
            applied = self.apply(coord, s, s0);
        }
        if applied.is_err() {
            return Ok(IterOutcome::Skipped(coord));
        }
        self.state.iterations += 1;
        if g.abs() < self.threshold {
            self.reduce_sigma();
        }
        Ok(IterOutcome::Stepped(IterationInfo {
            iteration: self.state.iterations,
            coordinate: coord,
            kind,
            s,
            s0,
            bound: self.state.bound,
            sigma: self.state.sigma,
        }))
    }

    /// Whether the fixed period or the error-growth budget calls for a
    /// fresh factorization.
    pub fn refactor_due(&self) -> bool {
        self.state.updates_since_refactor >= self.cfg.refactor_period || self.state.error_growth > self.cfg.growth_budget
    }

    fn reduce_sigma(&mut self) {
        self.state.sigma = (self.state.sigma * self.cfg.sigma_factor).max(self.cfg.sigma_floor);
    }

    /// Step `(s, s0)` for a coordinate under the configured mode.
    pub fn compute_step(&self, coord: Coordinate) -> (f64, f64, StepKind) {
        let rel = self.rel;
        let st = &self.state;
        let cap = self.cfg.neg_step_cap;
        match (coord, self.cfg.mode) {
            (Coordinate::Zero, _) => {
                let o = step_zero(&st.w, st.sigma);
                (o.s, 0.0, o.kind)
            }
            (Coordinate::Facet(k), SolveMode::Cd) => {
                let o = step_facet(&rel.facets[k], &st.w, st.sigma, st.facet_dual(rel, k), cap);
                (o.s, 0.0, o.kind)
            }
            (Coordinate::Linear(j), SolveMode::Cd) => {
                let o = step_linear(&rel.linear[j], &st.w, st.sigma, st.linear_dual(rel, j), cap);
                (o.s, 0.0, o.kind)
            }
            (Coordinate::Facet(k), SolveMode::Cd2d) => {
                let o = step_2d_facet(&rel.facets[k], &st.w, st.sigma, st.facet_dual(rel, k), cap);
                (o.s, o.s0, o.kind)
            }
            (Coordinate::Linear(j), SolveMode::Cd2d) => {
                let o = step_2d_linear(&rel.linear[j], &st.w, st.sigma, st.linear_dual(rel, j), cap);
                (o.s, o.s0, o.kind)
            }
        }
    }

    fn plane_s0(&self, coord: Coordinate, s: f64) -> f64 {
        let st = &self.state;
        let w00 = st.w.get(0, 0);
        match coord {
            Coordinate::Facet(k) => {
                let f = &self.rel.facets[k];
                PlaneModel::facet(f, &step::facet_coefficients(f, &st.w), w00).s0(s, st.sigma)
            }
            Coordinate::Linear(j) => {
                let lc = &self.rel.linear[j];
                let (c, _) = step::linear_coefficients(lc, &st.w);
                PlaneModel::linear(lc, &c, w00).s0(s, st.sigma)
            }
            Coordinate::Zero => 0.0,
        }
    }

    /// Applies `y_coord += s`, `y0 += s0` and updates `W`. Leaves the state
    /// untouched on a guard failure.
    pub fn apply(&mut self, coord: Coordinate, s: f64, s0: f64) -> Result<()> {
        if s == 0.0 && s0 == 0.0 {
            return Ok(());
        }
        if !s.is_finite() || !s0.is_finite() {
            return Err(Error::SingularUpdate(f64::NAN));
        }
        let rel = self.rel;
        match coord {
            Coordinate::Zero => {
                self.state.update_zero(s)?;
                self.state.y[0] += s;
                self.state.bound += s;
            }
            Coordinate::Facet(k) => {
                let f = &rel.facets[k];
                let blk = [[s * f.a00 + s0, s * f.a0i], [s * f.a0i, s * f.aii]];
                self.state.update_block(0, f.index(), blk)?;
                let y = self.state.facet_dual(rel, k) + s;
                // Clamped steps land exactly on zero; anything above is rounding.
                self.state.set_facet_dual(rel, k, y);
                self.state.y[0] += s0;
                self.state.bound += f.beta * s + s0;
            }
            Coordinate::Linear(j) => {
                let lc = &rel.linear[j];
                let (c, wg) = step::linear_coefficients(lc, &self.state.w);
                let w00 = self.state.w.get(0, 0);
                // h = s g + (s0 / 2) e0
                let row0 = self.state.w.row(0);
                let wh: Vec<f64> = wg.iter().zip(row0).map(|(a, r)| s * a + 0.5 * s0 * r).collect();
                let hwh = s * s * c.d + s * s0 * c.f + 0.25 * s0 * s0 * w00;
                self.state.update_e0_sym(&wh, hwh)?;
                let c = rel.linear_coord(j);
                self.state.y[c] = (self.state.y[c] + s).min(0.0);
                self.state.y[0] += s0;
                self.state.bound += lc.beta * s + s0;
            }
        }
        self.state.updates_since_refactor += 1;
        #[cfg(debug_assertions)]
        {
            // Q - A^T y is only as exact as y itself, which matters once
            // capped descents have driven the duals to 1e6 and beyond.
            let slack = rel.slack_matrix(&self.state.y);
            let lam = crate::linalg::min_eigenvalue(&slack).unwrap_or(f64::NAN);
            let ymax = self.state.y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let floor = 4.0 * (rel.n() + 1) as f64 * f64::EPSILON * ymax.max(slack.max_abs());
            debug_assert!(lam > -floor, "slack lost definiteness after {coord:?} step: {lam:e}");
        }
        Ok(())
    }

    /// Runs until a stopping rule fires.
    pub fn run(mut self, incumbent: Option<f64>, obs: &mut dyn DualObserver) -> Result<DualResult> {
        let rel = self.rel;
        let cfg = self.cfg;
        let n = rel.n() as u64;
        let max_size = rel.domains.iter().map(|d| d.size()).max().unwrap_or(1);
        let check_period = cfg.check_period.unwrap_or(n).max(1);
        let min_iterations = cfg.min_iterations.unwrap_or(max_size * n);

        let mut best_bound = self.state.bound;
        let mut best_y = self.state.y.clone();
        // Last iterate whose slack was factored successfully.
        let mut checkpoint: (f64, Vec<f64>) = (self.state.bound, self.state.y.clone());
        let mut drifts = Vec::new();
        let mut skipped = 0u64;
        let mut unbounded = 0u64;
        let mut ray_streak: (Option<usize>, u32) = (None, 0);
        let mut last_check: Option<f64> = None;
        let mut exclude = None;
        let mut total_rounds = 0u64;

        let status = loop {
            if let Some(inc) = incumbent {
                if best_bound >= inc - cfg.opt_eps {
                    break DualStatus::BoundReached;
                }
            }
            if best_bound > self.infeasible_above {
                break DualStatus::PrimalInfeasible;
            }
            if self.state.iterations >= cfg.max_iterations || total_rounds >= 4 * cfg.max_iterations {
                break DualStatus::IterationLimit;
            }
            total_rounds += 1;

            match self.iterate(exclude.take())? {
                IterOutcome::NoCandidate { at_floor } => {
                    if at_floor {
                        break DualStatus::Converged;
                    }
                    continue;
                }
                IterOutcome::Skipped(c) => {
                    skipped += 1;
                    exclude = Some(c);
                    continue;
                }
                IterOutcome::Stepped(info) => {
                    obs.on_iteration(&self.state, &info);
                    if info.kind == StepKind::UnboundedRay {
                        unbounded += 1;
                        if let Coordinate::Linear(j) = info.coordinate {
                            ray_streak = match ray_streak {
                                (Some(p), c) if p == j => (Some(j), c + 1),
                                _ => (Some(j), 1),
                            };
                            if ray_streak.1 >= cfg.unbounded_escalation && rel.linear[j].beta < 0.0 {
                                break DualStatus::PrimalInfeasible;
                            }
                        }
                    } else {
                        ray_streak = (None, 0);
                    }
                }
            }

            if self.refactor_due() {
                match self.state.refactor(rel) {
                    Ok(drift) => {
                        drifts.push(drift);
                        obs.on_refactor(drift);
                        checkpoint = (self.state.bound, self.state.y.clone());
                    }
                    Err(_) => {
                        // Drift pushed the slack out of the cone; fall back to
                        // the last factored iterate.
                        let (b, y) = checkpoint.clone();
                        if b >= best_bound {
                            best_y = y.clone();
                        }
                        self.state = DualState::from_dual(rel, y, self.state.sigma)?;
                        break DualStatus::Converged;
                    }
                }
            }

            if self.state.bound > best_bound {
                best_bound = self.state.bound;
                best_y.clone_from(&self.state.y);
            }

            let it = self.state.iterations;
            if it >= min_iterations && it % check_period == 0 {
                match incumbent {
                    Some(inc) => {
                        let gap = inc - best_bound;
                        if gap < cfg.opt_eps {
                            break DualStatus::BoundReached;
                        }
                        if let Some(old) = last_check {
                            if (1.0 - cfg.gap_fraction) * old < gap {
                                break DualStatus::Converged;
                            }
                        }
                        last_check = Some(gap);
                    }
                    None => {
                        if let Some(old) = last_check {
                            let tol = cfg.gap_fraction * best_bound.abs().max(1.0) * 1e-3;
                            if best_bound - old < tol {
                                break DualStatus::Converged;
                            }
                        }
                        last_check = Some(best_bound);
                    }
                }
            }
        };

        // Certify the reported dual; the incremental W may have drifted.
        let (bound, y) = if crate::linalg::is_positive_definite(&rel.slack_matrix(&best_y)) {
            (rel.dual_objective(&best_y), best_y)
        } else if crate::linalg::is_positive_definite(&rel.slack_matrix(&checkpoint.1)) {
            (checkpoint.0, checkpoint.1)
        } else {
            let info = StartInfo::compute(rel)?;
            let y0 = initial_dual(rel, &info);
            (rel.dual_objective(&y0), y0)
        };
        let status = match status {
            DualStatus::BoundReached if incumbent.is_some_and(|inc| bound < inc - cfg.opt_eps) => DualStatus::Converged,
            DualStatus::PrimalInfeasible if bound <= self.infeasible_above && ray_streak.1 < cfg.unbounded_escalation => {
                DualStatus::Converged
            }
            s => s,
        };
        Ok(DualResult {
            status,
            bound,
            y,
            iterations: self.state.iterations,
            sigma: self.state.sigma,
            refactor_drifts: drifts,
            skipped_steps: skipped,
            unbounded_steps: unbounded,
        })
    }
}

/// Interval bound on the objective over the relaxation's domains, read
/// from the augmented matrix.
pub fn rel_objective_upper_bound(rel: &SdpRelaxation) -> f64 {
    let n = rel.n();
    let q = &rel.q;
    let d = &rel.domains;
    let mut ub = q.get(0, 0);
    for i in 0..n {
        let (lo, hi) = (d[i].lo as f64, d[i].hi as f64);
        let li = 2.0 * q.get(0, i + 1);
        ub += (li * lo).max(li * hi);
        let sq_max = (lo * lo).max(hi * hi);
        let sq_min = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { (lo * lo).min(hi * hi) };
        let qii = q.get(i + 1, i + 1);
        ub += (qii * sq_max).max(qii * sq_min);
        for k in i + 1..n {
            let qk = q.get(i + 1, k + 1);
            if qk == 0.0 {
                continue;
            }
            let (lk, hk) = (d[k].lo as f64, d[k].hi as f64);
            ub += [lo * lk, lo * hk, hi * lk, hi * hk].iter().fold(f64::NEG_INFINITY, |m, &p| m.max(2.0 * qk * p));
        }
    }
    ub
}
