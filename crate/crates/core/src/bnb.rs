//! Best-first branch-and-bound over integer domains.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dual::{DualObserver, DualSolver, DualState, DualStatus, IterationInfo, StartInfo, SolverConfig};
use crate::dual::state::initial_point_with;
use crate::error::{Error, Result};
use crate::model::{build_relaxation, objective_value, BetaPolicy, IntDomain, IqpInstance};
use crate::primal::{recover_primal, PrimalEstimate, DEFAULT_ACTIVE_TOL, DEFAULT_ZERO_EIG_TOL};

/// Wall-clock source; the core crate has none of its own.
pub trait Clock {
    /// Seconds since the solve started.
    fn elapsed(&self) -> f64;
}

/// A clock that never advances, so time limits never fire.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchRule {
    /// Most fractional recovered `x_i`, falling back to the largest domain.
    #[default]
    MostFractional,
    /// Always split the largest domain at its midpoint.
    LargestDomain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbConfig {
    pub node_limit: u64,
    /// Seconds; checked between nodes.
    pub time_limit: f64,
    pub solver: SolverConfig,
    pub branch_rule: BranchRule,
    pub beta_policy: BetaPolicy,
    /// Improve heuristic points by single-coordinate moves.
    pub local_search: bool,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            node_limit: u64::MAX,
            time_limit: f64::INFINITY,
            solver: SolverConfig::default(),
            branch_rule: BranchRule::default(),
            beta_policy: BetaPolicy::default(),
            local_search: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnbStatus {
    Optimal,
    Infeasible,
    NodeLimit,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbResult {
    pub status: BnbStatus,
    /// Incumbent value, `+inf` if none was found.
    pub objective: f64,
    pub x: Option<Vec<i64>>,
    pub nodes_explored: u64,
    pub root_bound: f64,
    /// Lower bound on the optimum over the unexplored tree at exit.
    pub best_bound: f64,
    pub dual_iterations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub domains: Vec<IntDomain>,
    pub depth: u32,
    pub parent_bound: f64,
}

/// Hooks into the search, for diagnostics and tests.
pub trait BnbObserver {
    /// Every dual iteration of every node solve, with `<b, y>` after the step.
    fn on_dual_iteration(&mut self, _node: &BnbNode, _bound: f64) {}
    /// A node's final certified dual bound.
    fn on_node_bound(&mut self, _node: &BnbNode, _bound: f64, _status: DualStatus) {}
    /// Drift measured at each refactorization.
    fn on_refactor(&mut self, _drift: f64) {}
    /// A strictly better incumbent was found.
    fn on_incumbent(&mut self, _value: f64, _x: &[i64]) {}
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoBnbObserver;

impl BnbObserver for NoBnbObserver {}

struct Queued {
    bound: f64,
    seq: u64,
    node: BnbNode,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // BinaryHeap is a max-heap: smaller bound, then older node, wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

struct Forward<'a, 'b> {
    node: &'a BnbNode,
    obs: &'b mut dyn BnbObserver,
}

impl DualObserver for Forward<'_, '_> {
    fn on_iteration(&mut self, _state: &DualState, info: &IterationInfo) {
        self.obs.on_dual_iteration(self.node, info.bound);
    }
    fn on_refactor(&mut self, drift: f64) {
        self.obs.on_refactor(drift);
    }
}

pub fn solve(inst: &IqpInstance, cfg: &BnbConfig) -> Result<BnbResult> {
    solve_with(inst, cfg, &NoClock, &mut NoBnbObserver)
}

pub fn solve_with(
    inst: &IqpInstance,
    cfg: &BnbConfig,
    clock: &dyn Clock,
    obs: &mut dyn BnbObserver,
) -> Result<BnbResult> {
    inst.validate()?;
    cfg.solver.validate()?;
    let eps = cfg.solver.opt_eps;
    // The objective block is the same at every node.
    let info = StartInfo::compute(&build_relaxation(inst, cfg.beta_policy))?;

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Queued {
        bound: f64::NEG_INFINITY,
        seq,
        node: BnbNode { domains: inst.domains.clone(), depth: 0, parent_bound: f64::NEG_INFINITY },
    });
    let mut incumbent: Option<(f64, Vec<i64>)> = None;
    let mut nodes = 0u64;
    let mut root_bound = f64::NEG_INFINITY;
    let mut dual_iterations = 0u64;

    let inc_val = |inc: &Option<(f64, Vec<i64>)>| inc.as_ref().map(|(v, _)| *v);

    let status = loop {
        let Some(Queued { node, .. }) = heap.pop() else {
            break if incumbent.is_some() { BnbStatus::Optimal } else { BnbStatus::Infeasible };
        };
        if inc_val(&incumbent).is_some_and(|v| node.parent_bound >= v - eps) {
            continue;
        }
        if nodes >= cfg.node_limit {
            heap.push(Queued { bound: node.parent_bound, seq: 0, node });
            break BnbStatus::NodeLimit;
        }
        if clock.elapsed() > cfg.time_limit {
            heap.push(Queued { bound: node.parent_bound, seq: 0, node });
            break BnbStatus::TimeLimit;
        }
        nodes += 1;
        let node_inst = inst.with_domains(node.domains.clone());

        if node.domains.iter().all(IntDomain::is_singleton) {
            let x: Vec<i64> = node.domains.iter().map(|d| d.lo).collect();
            if node_inst.satisfies_linear(&x) {
                let v = objective_value(inst, &x);
                if nodes == 1 {
                    root_bound = v;
                }
                offer(&mut incumbent, x, v, obs);
            } else if nodes == 1 {
                root_bound = f64::INFINITY;
            }
            continue;
        }

        let rel = build_relaxation(&node_inst, cfg.beta_policy);
        let state = initial_point_with(&rel, &info, cfg.solver.sigma_init)?;
        let solver = DualSolver::new(&rel, &cfg.solver, state)?;
        let mut res = solver.run(inc_val(&incumbent), &mut Forward { node: &node, obs })?;
        dual_iterations += res.iterations;
        obs.on_node_bound(&node, res.bound, res.status);
        if nodes == 1 {
            root_bound = if res.status == DualStatus::PrimalInfeasible { f64::INFINITY } else { res.bound };
        }
        if res.status == DualStatus::PrimalInfeasible {
            continue;
        }
        if inc_val(&incumbent).is_some_and(|v| res.bound >= v - eps) {
            continue;
        }

        let est = recover_primal(&rel, &res.y, DEFAULT_ZERO_EIG_TOL, DEFAULT_ACTIVE_TOL).ok();
        let xr: Vec<f64> = match &est {
            Some(e) if e.x.iter().all(|v| v.is_finite()) => e.x.clone(),
            _ => node.domains.iter().map(|d| 0.5 * (d.lo + d.hi) as f64).collect(),
        };
        let before = inc_val(&incumbent);
        if let Some((x, v)) = heuristic_from(&node_inst, &xr, cfg.local_search) {
            offer(&mut incumbent, x, v, obs);
        }
        if inc_val(&incumbent).is_some_and(|v| res.bound >= v - eps) {
            continue;
        }
        // A fresh incumbent gives the GAP rule a target; resume the dual
        // solve from where it stopped before deciding to branch.
        if inc_val(&incumbent) != before && res.status != DualStatus::IterationLimit {
            let state = DualState::from_dual(&rel, res.y.clone(), res.sigma)?;
            let more = DualSolver::new(&rel, &cfg.solver, state)?
                .run(inc_val(&incumbent), &mut Forward { node: &node, obs })?;
            dual_iterations += more.iterations;
            if more.bound > res.bound {
                res = more;
            }
            if nodes == 1 {
                root_bound = res.bound;
            }
            if inc_val(&incumbent).is_some_and(|v| res.bound >= v - eps) {
                continue;
            }
        }

        let (a, b) = match cfg.branch_rule {
            BranchRule::MostFractional => branch_on(&node, &xr)?,
            BranchRule::LargestDomain => split_largest(&node)?,
        };
        for mut child in [a, b] {
            child.parent_bound = res.bound;
            seq += 1;
            heap.push(Queued { bound: res.bound, seq, node: child });
        }
    };

    let open_min = heap.iter().map(|q| q.bound).fold(f64::INFINITY, f64::min);
    let best_bound = match status {
        BnbStatus::Optimal => inc_val(&incumbent).unwrap_or(f64::INFINITY),
        BnbStatus::Infeasible => f64::INFINITY,
        _ => open_min.min(inc_val(&incumbent).unwrap_or(f64::INFINITY)),
    };
    let (objective, x) = match incumbent {
        Some((v, x)) => (v, Some(x)),
        None => (f64::INFINITY, None),
    };
    Ok(BnbResult { status, objective, x, nodes_explored: nodes, root_bound, best_bound, dual_iterations })
}

fn offer(incumbent: &mut Option<(f64, Vec<i64>)>, x: Vec<i64>, v: f64, obs: &mut dyn BnbObserver) {
    if incumbent.as_ref().is_none_or(|(b, _)| v < *b) {
        obs.on_incumbent(v, &x);
        *incumbent = Some((v, x));
    }
}

/// Rounding heuristic on a recovered primal estimate.
pub fn heuristic_point(inst: &IqpInstance, est: &PrimalEstimate) -> Option<(Vec<i64>, f64)> {
    heuristic_from(inst, &est.x, false)
}

/// Rounds `x` into the domains, repairs linear violations by greedy
/// single-coordinate moves (at most `n` passes) and optionally improves the
/// objective by feasible single-coordinate moves.
pub fn heuristic_from(inst: &IqpInstance, x: &[f64], local_search: bool) -> Option<(Vec<i64>, f64)> {
    let n = inst.n();
    let mut z: Vec<i64> = inst
        .domains
        .iter()
        .zip(x)
        .map(|(d, &v)| {
            let v = if v.is_finite() { v } else { 0.5 * (d.lo + d.hi) as f64 };
            d.clamp(v).round() as i64
        })
        .collect();
    let violation = |z: &[i64]| -> f64 { inst.linear.iter().map(|lc| lc.violation(z)).sum() };

    let mut viol = violation(&z);
    let mut passes = 0;
    while viol > crate::model::FEAS_TOL && passes < n {
        passes += 1;
        let mut improved = false;
        for i in 0..n {
            let cur = z[i];
            let mut best = (viol, objective_value(inst, &z), cur);
            for v in inst.domains[i].values() {
                if v == cur {
                    continue;
                }
                z[i] = v;
                let cand = (violation(&z), objective_value(inst, &z));
                if cand.0 < best.0 - 1e-12 || (cand.0 <= best.0 + 1e-12 && cand.1 < best.1 && cand.0 < viol) {
                    best = (cand.0, cand.1, v);
                }
            }
            z[i] = best.2;
            if best.0 < viol - 1e-12 {
                improved = true;
                viol = best.0;
            }
        }
        if !improved {
            break;
        }
    }
    if !inst.is_feasible(&z) {
        return None;
    }
    let mut val = objective_value(inst, &z);
    if local_search {
        // First-improvement descent; each sweep is O(n |D| n).
        loop {
            let mut improved = false;
            for i in 0..n {
                let cur = z[i];
                let mut best = (val, cur);
                for v in inst.domains[i].values() {
                    if v == cur {
                        continue;
                    }
                    z[i] = v;
                    if inst.satisfies_linear(&z) {
                        let o = objective_value(inst, &z);
                        if o < best.0 - 1e-12 {
                            best = (o, v);
                        }
                    }
                }
                z[i] = best.1;
                if best.1 != cur {
                    val = best.0;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
    }
    Some((z, val))
}

/// Splits the most fractional variable, or the largest domain when every
/// clipped `x_i` is integral.
pub fn branch_on(node: &BnbNode, x: &[f64]) -> Result<(BnbNode, BnbNode)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in node.domains.iter().enumerate() {
        if d.is_singleton() {
            continue;
        }
        let xi = d.clamp(x[i]);
        let frac = (xi - xi.floor()).min(xi.ceil() - xi);
        if frac > 1e-9 && best.is_none_or(|(_, f)| frac > f) {
            best = Some((i, frac));
        }
    }
    let Some((i, _)) = best else {
        return split_largest(node);
    };
    let d = node.domains[i];
    let k = (d.clamp(x[i]).floor() as i64).clamp(d.lo, d.hi - 1);
    Ok(split_at(node, i, k))
}

/// Splits the largest domain at its midpoint.
pub fn split_largest(node: &BnbNode) -> Result<(BnbNode, BnbNode)> {
    let mut best: Option<usize> = None;
    for (i, d) in node.domains.iter().enumerate() {
        if !d.is_singleton() && best.is_none_or(|b| d.size() > node.domains[b].size()) {
            best = Some(i);
        }
    }
    let i = best.ok_or(Error::AllFixed)?;
    let d = node.domains[i];
    let k = (d.lo + d.hi).div_euclid(2);
    Ok(split_at(node, i, k))
}

fn split_at(node: &BnbNode, i: usize, k: i64) -> (BnbNode, BnbNode) {
    let d = node.domains[i];
    let mut left = node.clone();
    let mut right = node.clone();
    left.domains[i] = IntDomain::new(d.lo, k);
    right.domains[i] = IntDomain::new(k + 1, d.hi);
    left.depth += 1;
    right.depth += 1;
    (left, right)
}
