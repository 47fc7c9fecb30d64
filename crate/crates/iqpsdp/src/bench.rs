//! Benchmark sweeps in the layout of the experiment tables: per `(n, p)`
//! the number of solved instances, and average nodes and time over the
//! solved ones.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use iqpsdp_core::bnb::{solve_with, NoBnbObserver};
use iqpsdp_core::instances::{generate, ConstraintSpec, DomainSpec, Family, GenSpec};
use iqpsdp_core::{BnbConfig, BnbStatus, SolveMode};

use crate::clock::StdClock;
use crate::report::mode_name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FamilyKind {
    Dense,
    Sparse,
    LowRank,
}

impl FamilyKind {
    pub fn with_p(self, p: f64) -> Family {
        match self {
            FamilyKind::Dense => Family::DenseSpectrum { p },
            FamilyKind::Sparse => Family::Sparse { p },
            FamilyKind::LowRank => Family::LowRank { p },
        }
    }

    pub fn name(self) -> &'static str {
        self.with_p(0.0).name()
    }
}

/// Seed of instance `k` in the suite cell `(n, p)`. `generate` and `bench`
/// both use it, so a bench cell can be regenerated as files.
pub fn suite_seed(base: u64, n: usize, p: f64, k: usize) -> u64 {
    // splitmix64 over the packed cell coordinates
    let mut z = base
        ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ ((p * 100.0).round() as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ (k as u64).wrapping_mul(0x94D0_49BB_1331_11EB);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub family: FamilyKind,
    pub ns: Vec<usize>,
    pub ps: Vec<f64>,
    pub count: usize,
    pub domain: DomainSpec,
    pub constraints: ConstraintSpec,
    pub modes: Vec<SolveMode>,
    pub seed: u64,
    /// Base configuration; `solver.mode` is overridden per mode.
    pub config: BnbConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub family: FamilyKind,
    pub n: usize,
    pub p: f64,
    pub k: usize,
    pub mode: SolveMode,
    pub status: BnbStatus,
    pub objective: f64,
    pub nodes: u64,
    pub time: f64,
}

impl BenchRecord {
    pub fn solved(&self) -> bool {
        matches!(self.status, BnbStatus::Optimal | BnbStatus::Infeasible)
    }
}

/// One output row; `p = None` is the average over all `p` for that `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub family: FamilyKind,
    pub n: usize,
    pub p: Option<f64>,
    pub mode: SolveMode,
    pub solved: usize,
    pub total: usize,
    pub avg_nodes: Option<f64>,
    pub avg_time: Option<f64>,
}

pub fn spec_for(spec: &BenchSpec, n: usize, p: f64, k: usize) -> GenSpec {
    GenSpec {
        n,
        family: spec.family.with_p(p),
        domain: spec.domain.clone(),
        constraints: spec.constraints,
        seed: suite_seed(spec.seed, n, p, k),
    }
}

/// Solves every instance of the suite under every mode, in parallel over
/// instances. Each solve runs single-threaded.
pub fn run(spec: &BenchSpec) -> iqpsdp_core::Result<Vec<BenchRecord>> {
    let mut jobs = Vec::new();
    for &n in &spec.ns {
        for &p in &spec.ps {
            for k in 0..spec.count {
                for &mode in &spec.modes {
                    jobs.push((n, p, k, mode));
                }
            }
        }
    }
    jobs.into_par_iter()
        .map(|(n, p, k, mode)| {
            let inst = generate(&spec_for(spec, n, p, k))?;
            let mut cfg = spec.config.clone();
            cfg.solver.mode = mode;
            let clock = StdClock::start();
            let r = solve_with(&inst, &cfg, &clock, &mut NoBnbObserver)?;
            let time = iqpsdp_core::Clock::elapsed(&clock);
            Ok(BenchRecord {
                family: spec.family,
                n,
                p,
                k,
                mode,
                status: r.status,
                objective: r.objective,
                nodes: r.nodes_explored,
                time,
            })
        })
        .collect()
}

fn mode_key(m: SolveMode) -> u8 {
    match m {
        SolveMode::Cd2d => 0,
        SolveMode::Cd => 1,
    }
}

/// Per-`(n, p, mode)` rows followed by per-`(n, mode)` rows. Averages use
/// solved instances only.
pub fn aggregate(records: &[BenchRecord]) -> Vec<BenchRow> {
    type Key = (FamilyKind, usize, Option<i64>, u8);
    let mut groups: BTreeMap<Key, (SolveMode, Vec<&BenchRecord>)> = BTreeMap::new();
    for r in records {
        let pk = Some((r.p * 1000.0).round() as i64);
        for p in [pk, None] {
            groups.entry((r.family, r.n, p, mode_key(r.mode))).or_insert_with(|| (r.mode, Vec::new())).1.push(r);
        }
    }
    let mut rows: Vec<BenchRow> = groups
        .into_iter()
        .map(|((family, n, p, _), (mode, rs))| {
            let solved: Vec<_> = rs.iter().filter(|r| r.solved()).collect();
            let avg = |f: &dyn Fn(&BenchRecord) -> f64| {
                (!solved.is_empty()).then(|| solved.iter().map(|r| f(r)).sum::<f64>() / solved.len() as f64)
            };
            BenchRow {
                family,
                n,
                p: p.map(|v| v as f64 / 1000.0),
                mode,
                solved: solved.len(),
                total: rs.len(),
                avg_nodes: avg(&|r| r.nodes as f64),
                avg_time: avg(&|r| r.time),
            }
        })
        .collect();
    // Per-p rows first, then the per-n summaries.
    rows.sort_by_key(|r| (r.p.is_none(), r.family, r.n, r.p.map(|p| (p * 1000.0) as i64), mode_key(r.mode)));
    rows
}

fn p_text(p: Option<f64>) -> String {
    p.map_or_else(|| "all".to_string(), |p| format!("{p}"))
}

fn opt_text(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(String::new, |v| format!("{v:.prec$}"))
}

pub const CSV_HEADER: &str = "family,n,p,mode,solved,avg_nodes,avg_time";

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.family.name(),
            r.n,
            p_text(r.p),
            mode_name(r.mode),
            r.solved,
            opt_text(r.avg_nodes, 2),
            opt_text(r.avg_time, 4)
        );
    }
    out
}

/// Aligned text table with `solved/total` in the `#` column.
pub fn to_table(rows: &[BenchRow]) -> String {
    let head = ["family", "n", "p", "mode", "#", "nodes", "time"];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.family.name().to_string(),
                r.n.to_string(),
                p_text(r.p),
                mode_name(r.mode).to_string(),
                format!("{}/{}", r.solved, r.total),
                opt_text(r.avg_nodes, 2),
                opt_text(r.avg_time, 4),
            ]
        })
        .collect();
    let mut width = head.map(str::len);
    for row in &body {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |cells: &[&str], out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(i, (c, &w))| if i < 1 || i == 3 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&head, &mut out);
    for row in &body {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&cells, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(n: usize, p: f64, mode: SolveMode, status: BnbStatus, nodes: u64, time: f64) -> BenchRecord {
        BenchRecord { family: FamilyKind::Dense, n, p, k: 0, mode, status, objective: 0.0, nodes, time }
    }

    #[test]
    fn averages_skip_unsolved() {
        let rs = vec![
            rec(4, 0.0, SolveMode::Cd2d, BnbStatus::Optimal, 3, 1.0),
            rec(4, 0.0, SolveMode::Cd2d, BnbStatus::TimeLimit, 1000, 60.0),
            rec(4, 0.0, SolveMode::Cd2d, BnbStatus::Optimal, 5, 3.0),
        ];
        let rows = aggregate(&rs);
        assert_eq!(rows.len(), 2);
        let r = &rows[0];
        assert_eq!((r.solved, r.total), (2, 3));
        assert_eq!(r.avg_nodes, Some(4.0));
        assert_eq!(r.avg_time, Some(2.0));
        assert_eq!(rows[1].p, None);
    }

    #[test]
    fn csv_columns() {
        let rs = vec![rec(4, 50.0, SolveMode::Cd, BnbStatus::NodeLimit, 3, 1.0)];
        let csv = to_csv(&aggregate(&rs));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("dense,4,50,cd,0,,"));
    }

    #[test]
    fn table_is_aligned() {
        let rs = vec![
            rec(4, 0.0, SolveMode::Cd2d, BnbStatus::Optimal, 3, 1.0),
            rec(12, 100.0, SolveMode::Cd, BnbStatus::Optimal, 30000, 1.0),
        ];
        let t = to_table(&aggregate(&rs));
        let lens: Vec<usize> = t.lines().map(str::len).collect();
        assert!(lens.windows(2).all(|w| w[0] == w[1]), "{t}");
    }

    #[test]
    fn seeds_differ_across_cells() {
        let a = suite_seed(7, 8, 50.0, 0);
        assert_ne!(a, suite_seed(7, 8, 50.0, 1));
        assert_ne!(a, suite_seed(7, 8, 60.0, 0));
        assert_ne!(a, suite_seed(7, 10, 50.0, 0));
        assert_eq!(a, suite_seed(7, 8, 50.0, 0));
    }
}
