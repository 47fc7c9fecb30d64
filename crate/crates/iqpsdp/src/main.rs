use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use iqpsdp::bench::{self, BenchSpec, FamilyKind};
use iqpsdp::format::{read_instance, write_instance};
use iqpsdp::report::{self, SolveRecord};
use iqpsdp::StdClock;
use iqpsdp_core::bnb::{solve_with, NoBnbObserver};
use iqpsdp_core::instances::{generate_with_metadata, ConstraintSpec, DomainSpec, GenMetadata};
use iqpsdp_core::{BnbConfig, BnbStatus, Clock, SolveMode};

#[derive(Parser)]
#[command(name = "iqpsdp", version, about = "Branch-and-bound for box-constrained integer quadratic programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cd,
    Cd2d,
}

impl From<Mode> for SolveMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Cd => SolveMode::Cd,
            Mode::Cd2d => SolveMode::Cd2d,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Dense,
    Sparse,
    Lowrank,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Dense => FamilyKind::Dense,
            FamilyArg::Sparse => FamilyKind::Sparse,
            FamilyArg::Lowrank => FamilyKind::LowRank,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    /// {-1, 0, 1}
    Ternary,
    /// {lo, ..., hi}, default {-10, ..., 10}
    Integer,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstraintArg {
    None,
    /// sum_i x_i <= 0
    Sum,
    Knapsack,
}

impl From<ConstraintArg> for ConstraintSpec {
    fn from(c: ConstraintArg) -> Self {
        match c {
            ConstraintArg::None => ConstraintSpec::None,
            ConstraintArg::Sum => ConstraintSpec::SumNonpositive,
            ConstraintArg::Knapsack => ConstraintSpec::Knapsack,
        }
    }
}

#[derive(clap::Args)]
struct SuiteArgs {
    #[arg(long, value_enum, default_value = "dense")]
    family: FamilyArg,
    #[arg(long, value_enum, default_value = "ternary")]
    domain: DomainArg,
    #[arg(long, default_value_t = -10, allow_hyphen_values = true)]
    lo: i64,
    #[arg(long, default_value_t = 10, allow_hyphen_values = true)]
    hi: i64,
    #[arg(long, value_enum, default_value = "none")]
    constraints: ConstraintArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SuiteArgs {
    fn domain_spec(&self) -> DomainSpec {
        match self.domain {
            DomainArg::Ternary => DomainSpec::Ternary,
            DomainArg::Integer => DomainSpec::IntegerBox { lo: self.lo, hi: self.hi },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance file.
    Solve {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "cd2d")]
        mode: Mode,
        /// Fraction of the gap that must close between checks.
        #[arg(long)]
        gap: Option<f64>,
        #[arg(long)]
        opt_eps: Option<f64>,
        #[arg(long)]
        node_limit: Option<u64>,
        /// Seconds.
        #[arg(long, default_value_t = 60.0)]
        time_limit: f64,
        /// Recorded in the output; the solver itself is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Write random instances to files.
    Generate {
        #[command(flatten)]
        suite: SuiteArgs,
        #[arg(long)]
        n: usize,
        /// Percent negative eigenvalues (dense, lowrank) or density (sparse).
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Generate and solve a suite; print averages over solved instances.
    Bench {
        #[command(flatten)]
        suite: SuiteArgs,
        #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0,10,20,30,40,50,60,70,80,90,100")]
        p: Vec<f64>,
        /// Instances per (n, p).
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "cd2d,cd")]
        modes: Vec<Mode>,
        #[arg(long, default_value_t = 60.0)]
        time_limit: f64,
        #[arg(long)]
        node_limit: Option<u64>,
        /// Also write the CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve { path, mode, gap, opt_eps, node_limit, time_limit, seed, json } => {
            let inst = read_instance(&path).with_context(|| format!("reading {}", path.display()))?;
            let mut cfg = BnbConfig { time_limit, ..Default::default() };
            cfg.solver.mode = mode.into();
            if let Some(g) = gap {
                cfg.solver.gap_fraction = g;
            }
            if let Some(e) = opt_eps {
                cfg.solver.opt_eps = e;
            }
            if let Some(l) = node_limit {
                cfg.node_limit = l;
            }
            let clock = StdClock::start();
            let r = solve_with(&inst, &cfg, &clock, &mut NoBnbObserver)?;
            let rec = SolveRecord::new(&path.display().to_string(), mode.into(), &r, clock.elapsed(), seed);
            if json {
                println!("{}", serde_json::to_string_pretty(&rec)?);
            } else {
                print!("{}", report::text(&rec));
            }
            Ok(match r.status {
                BnbStatus::Optimal | BnbStatus::Infeasible => 0,
                BnbStatus::NodeLimit | BnbStatus::TimeLimit => 2,
            })
        }
        Command::Generate { suite, n, p, count, out } => {
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let spec = BenchSpec {
                family: suite.family.into(),
                ns: vec![n],
                ps: vec![p],
                count,
                domain: suite.domain_spec(),
                constraints: suite.constraints.into(),
                modes: vec![],
                seed: suite.seed,
                config: BnbConfig::default(),
            };
            for k in 0..count {
                let gs = bench::spec_for(&spec, n, p, k);
                let (inst, meta) = generate_with_metadata(&gs)?;
                let file = out.join(format!("{}-n{n}-p{p}-{k}.iqp", spec.family.name()));
                write_instance(&inst, &metadata_lines(&meta, k), &file)
                    .with_context(|| format!("writing {}", file.display()))?;
                println!("{}", file.display());
            }
            Ok(0)
        }
        Command::Bench { suite, n, p, count, modes, time_limit, node_limit, csv, threads } => {
            if modes.is_empty() {
                bail!("no modes given");
            }
            let mut config = BnbConfig { time_limit, ..Default::default() };
            if let Some(l) = node_limit {
                config.node_limit = l;
            }
            let spec = BenchSpec {
                family: suite.family.into(),
                ns: n,
                ps: p,
                count,
                domain: suite.domain_spec(),
                constraints: suite.constraints.into(),
                modes: modes.into_iter().map(Into::into).collect(),
                seed: suite.seed,
                config,
            };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build()?;
            let records = pool.install(|| bench::run(&spec))?;
            let rows = bench::aggregate(&records);
            print!("{}", bench::to_table(&rows));
            if let Some(path) = csv {
                std::fs::write(&path, bench::to_csv(&rows)).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(0)
        }
    }
}

fn metadata_lines(meta: &GenMetadata, k: usize) -> Vec<String> {
    let mut v = vec![
        format!("family {} p {} seed {} index {k}", meta.family, meta.p, meta.seed),
        format!("distributions: {}", meta.distributions),
    ];
    if let Some(neg) = meta.negative_eigenvalues {
        v.push(format!("negative eigenvalues {neg}"));
    }
    if let Some(z) = meta.zero_eigenvalues {
        v.push(format!("zero eigenvalues {z}"));
    }
    v
}
