//! Machine-readable solve records.

use serde::{Deserialize, Serialize};

use iqpsdp_core::{BnbResult, BnbStatus, SolveMode};

pub const SOLVE_SCHEMA: &str = "iqpsdp.solve/1";

/// One `solve` run. Non-finite numbers are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub schema: String,
    pub instance: String,
    pub mode: String,
    pub status: String,
    pub objective: Option<f64>,
    pub x: Option<Vec<i64>>,
    pub nodes: u64,
    pub root_bound: Option<f64>,
    pub best_bound: Option<f64>,
    pub dual_iterations: u64,
    pub wall_time: f64,
    pub seed: u64,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn status_name(s: BnbStatus) -> &'static str {
    match s {
        BnbStatus::Optimal => "optimal",
        BnbStatus::Infeasible => "infeasible",
        BnbStatus::NodeLimit => "node_limit",
        BnbStatus::TimeLimit => "time_limit",
    }
}

pub fn mode_name(m: SolveMode) -> &'static str {
    match m {
        SolveMode::Cd => "cd",
        SolveMode::Cd2d => "cd2d",
    }
}

impl SolveRecord {
    pub fn new(instance: &str, mode: SolveMode, r: &BnbResult, wall_time: f64, seed: u64) -> Self {
        SolveRecord {
            schema: SOLVE_SCHEMA.to_string(),
            instance: instance.to_string(),
            mode: mode_name(mode).to_string(),
            status: status_name(r.status).to_string(),
            objective: finite(r.objective),
            x: r.x.clone(),
            nodes: r.nodes_explored,
            root_bound: finite(r.root_bound),
            best_bound: finite(r.best_bound),
            dual_iterations: r.dual_iterations,
            wall_time,
            seed,
        }
    }
}

/// Human-readable block printed by `solve` without `--json`.
pub fn text(rec: &SolveRecord) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |v| format!("{v:.10}"));
    let x = rec.x.as_ref().map_or_else(
        || "none".to_string(),
        |x| x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
    );
    format!(
        "status      {}\nobjective   {}\nx           {}\nnodes       {}\nroot bound  {}\nbest bound  {}\nwall time   {:.3} s\n",
        rec.status,
        opt(rec.objective),
        x,
        rec.nodes,
        opt(rec.root_bound),
        opt(rec.best_bound),
        rec.wall_time
    )
}
