//! Flag parsing, instance loading, dispatch, and structured output.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use sfm::algorithms::{
    approx_sfm, exact_sfm, mincut_sgd, multiplicative_approx, sparse_approx_sfm,
    sparse_exact_sfm, RunReport,
};
use sfm::lowerbound::{simulate_recognizer, SimulationReport, StrategyKind};
use sfm::oracle::formats::parse_instance;
use sfm::oracle::{AnyInstance, Submodular};
use sfm::verify::{brute_force_min, check_submodular, CHECK_MAX_N};

use crate::genspec::parse_genspec;

#[derive(Parser)]
#[command(name = "sfm", version, about = "Submodular function minimization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an algorithm against an instance file or a generator spec.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Algorithm to run.
    #[arg(long, value_enum)]
    alg: Alg,
    /// Instance file path (formats: cut, table, lb).
    #[arg(long, conflicts_with = "gen")]
    instance: Option<PathBuf>,
    /// Generator spec: cut:n=..[,density=..][,wmax=..] or lb:n=..
    #[arg(long)]
    gen: Option<String>,
    /// Additive error (approx, mincut) or relative error delta (mult).
    #[arg(long)]
    eps: Option<f64>,
    /// Certified bound on |f(S)| for the exact algorithms.
    #[arg(long = "M")]
    m: Option<f64>,
    /// Sparsity promise for the capped variants.
    #[arg(long)]
    s: Option<usize>,
    /// Base seed. Fan-out trial t runs with seed + t; generators always
    /// draw from the base seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent runs for randomized algorithms (default 1); Monte-
    /// Carlo trial count for lowerbound (default 1000).
    #[arg(long)]
    trials: Option<u64>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Out::Json)]
    out: Out,
    /// Recognizer strategy for lowerbound: lex, reverse-lex,
    /// uniform-shuffle, static-shuffle, or all.
    #[arg(long, default_value = "all")]
    strategy: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Alg {
    Exact,
    Approx,
    SparseExact,
    SparseApprox,
    Mult,
    Mincut,
    Lowerbound,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Out {
    Json,
    Csv,
}

/// Usage problems exit 2; execution problems (including unreadable or
/// malformed instance files) exit 1.
enum Failure {
    Usage(String),
    Exec(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        match self {
            Failure::Usage(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            Failure::Exec(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
        }
    }
}

fn verbose() -> bool {
    static ON: OnceLock<bool> = OnceLock::new();
    *ON.get_or_init(|| {
        std::env::var("SFM_LOG").map(|v| !v.is_empty() && v != "0" && v != "off").unwrap_or(false)
    })
}

macro_rules! log {
    ($($arg:tt)*) => {
        if verbose() {
            eprintln!($($arg)*);
        }
    };
}

pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    match dispatch(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => failure.report(),
    }
}

fn load_instance(args: &RunArgs) -> Result<AnyInstance, Failure> {
    match (&args.instance, &args.gen) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Exec(format!("cannot read {}: {e}", path.display()))
            })?;
            parse_instance(&text)
                .map_err(|e| Failure::Exec(format!("{}: {e}", path.display())))
        }
        (None, Some(spec)) => {
            parse_genspec(spec, args.seed).map_err(|e| Failure::Usage(e.to_string()))
        }
        (None, None) => Err(Failure::Usage(
            "an instance source is required: --instance <path> or --gen <spec>".into(),
        )),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with rejects this"),
    }
}

fn require_eps(args: &RunArgs, what: &str) -> Result<f64, Failure> {
    let eps = args
        .eps
        .ok_or_else(|| Failure::Usage(format!("--eps is required for {}", what)))?;
    if !(eps.is_finite() && eps > 0.0 && eps <= 1.0) {
        return Err(Failure::Usage(format!("--eps must lie in (0, 1], got {eps}")));
    }
    Ok(eps)
}

fn require_m(args: &RunArgs) -> Result<f64, Failure> {
    let m = args
        .m
        .ok_or_else(|| Failure::Usage("--M is required for exact algorithms".into()))?;
    if !(m.is_finite() && m > 0.0) {
        return Err(Failure::Usage(format!("--M must be positive, got {m}")));
    }
    Ok(m)
}

fn require_s(args: &RunArgs) -> Result<usize, Failure> {
    let s = args
        .s
        .ok_or_else(|| Failure::Usage("--s is required for sparse variants".into()))?;
    if s == 0 {
        return Err(Failure::Usage("--s must be at least 1".into()));
    }
    Ok(s)
}

fn dispatch(args: &RunArgs) -> Result<(), Failure> {
    match args.alg {
        Alg::Lowerbound => run_lowerbound(args),
        Alg::Verify => run_verify(args),
        _ => run_reports(args),
    }
}

fn run_reports(args: &RunArgs) -> Result<(), Failure> {
    let instance = load_instance(args)?;
    let trials = args.trials.unwrap_or(1);
    if trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let randomized = matches!(args.alg, Alg::Approx | Alg::SparseApprox | Alg::Mult | Alg::Mincut);
    if trials > 1 && !randomized {
        return Err(Failure::Usage(
            "--trials > 1 applies to randomized algorithms and lowerbound".into(),
        ));
    }
    // Required parameters are pinned before any run starts.
    let eps = match args.alg {
        Alg::Approx | Alg::SparseApprox => Some(require_eps(args, "approximate algorithms")?),
        Alg::Mult => Some(require_eps(args, "mult (relative error delta)")?),
        Alg::Mincut => Some(require_eps(args, "mincut")?),
        _ => None,
    };
    let m = match args.alg {
        Alg::Exact | Alg::SparseExact => Some(require_m(args)?),
        _ => None,
    };
    let s = match args.alg {
        Alg::SparseExact | Alg::SparseApprox => Some(require_s(args)?),
        _ => None,
    };
    if args.alg == Alg::Mincut && instance.as_cut().is_none() {
        return Err(Failure::Usage("mincut requires a cut instance".into()));
    }
    log!(
        "running {:?}: n={} trials={trials} seed={}",
        args.alg,
        instance.n(),
        args.seed
    );
    let reports: Vec<sfm::Result<RunReport>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = args.seed.wrapping_add(t);
            match args.alg {
                Alg::Exact => exact_sfm(instance.as_dyn(), m.unwrap()),
                Alg::SparseExact => sparse_exact_sfm(instance.as_dyn(), m.unwrap(), s.unwrap()),
                Alg::Approx => approx_sfm(instance.as_dyn(), eps.unwrap(), seed),
                Alg::SparseApprox => {
                    sparse_approx_sfm(instance.as_dyn(), eps.unwrap(), s.unwrap(), seed)
                }
                Alg::Mult => multiplicative_approx(instance.as_dyn(), eps.unwrap(), seed),
                Alg::Mincut => mincut_sgd(instance.as_cut().unwrap(), eps.unwrap(), seed),
                Alg::Lowerbound | Alg::Verify => unreachable!(),
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(reports.len());
    for (t, report) in reports.into_iter().enumerate() {
        let report = report.map_err(|e| Failure::Exec(e.to_string()))?;
        log!("trial {t}: value {} in {} calls", report.value, report.eval_calls);
        rows.push((t as u64, report));
    }
    match args.out {
        Out::Json => {
            for (_, report) in &rows {
                println!("{}", report_json(report));
            }
        }
        Out::Csv => {
            println!("trial,seed,value,eval_calls,iterations,batches,elapsed_ms,minimizer");
            for (t, report) in &rows {
                println!(
                    "{t},{},{},{},{},{},{},{}",
                    report.seed,
                    report.value,
                    report.eval_calls,
                    report.iterations,
                    report.batches,
                    report.elapsed.as_millis(),
                    join_elements(&report.minimizer)
                );
            }
        }
    }
    Ok(())
}

/// Elements are 1-based in all output, semicolon-separated in CSV.
fn join_elements(minimizer: &[usize]) -> String {
    minimizer.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(";")
}

fn report_json(report: &RunReport) -> String {
    let minimizer: Vec<u64> = report.minimizer.iter().map(|&c| c as u64 + 1).collect();
    serde_json::json!({
        "minimizer": minimizer,
        "value": report.value,
        "eval_calls": report.eval_calls,
        "iterations": report.iterations,
        "batches": report.batches,
        "seed": report.seed,
        "elapsed_ms": report.elapsed.as_millis() as u64,
    })
    .to_string()
}

fn run_lowerbound(args: &RunArgs) -> Result<(), Failure> {
    let instance = load_instance(args)?;
    let n = instance.n();
    let trials = args.trials.unwrap_or(1000);
    if trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let kinds: Vec<StrategyKind> = if args.strategy == "all" {
        StrategyKind::ALL.to_vec()
    } else {
        vec![args
            .strategy
            .parse()
            .map_err(|e: sfm::Error| Failure::Usage(e.to_string()))?]
    };
    let mut reports: Vec<(StrategyKind, SimulationReport)> = Vec::with_capacity(kinds.len());
    for kind in kinds {
        let mut strategy = kind.build();
        let report = simulate_recognizer(strategy.as_mut(), n, trials, args.seed)
            .map_err(|e| Failure::Exec(e.to_string()))?;
        log!(
            "{}: mean {:.2} std {:.2} over {trials} trials",
            kind.name(),
            report.mean_queries,
            report.std_queries
        );
        reports.push((kind, report));
    }
    match args.out {
        Out::Csv => {
            println!("n,mean_queries,std");
            for (_, r) in &reports {
                println!("{},{},{}", r.n, r.mean_queries, r.std_queries);
            }
        }
        Out::Json => {
            for (kind, r) in &reports {
                let line = serde_json::json!({
                    "n": r.n,
                    "strategy": kind.name(),
                    "trials": r.trials,
                    "mean_queries": r.mean_queries,
                    "std_queries": r.std_queries,
                    "max_queries": r.max_queries,
                    "degenerate_trials": r.degenerate_trials,
                    "seed": args.seed,
                });
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn run_verify(args: &RunArgs) -> Result<(), Failure> {
    let instance = load_instance(args)?;
    let n = instance.n();
    let brute = brute_force_min(instance.as_dyn()).map_err(|e| Failure::Exec(e.to_string()))?;
    // The exhaustive pairwise check caps out earlier than enumeration;
    // beyond it the verdict is reported as unknown.
    let witness = if n <= CHECK_MAX_N {
        Some(check_submodular(instance.as_dyn()).map_err(|e| Failure::Exec(e.to_string()))?)
    } else {
        None
    };
    let minimizer: Vec<u64> = brute.minimizer.iter().map(|&c| c as u64 + 1).collect();
    match args.out {
        Out::Json => {
            let submodular = match &witness {
                None => serde_json::Value::Null,
                Some(w) => serde_json::Value::Bool(w.is_none()),
            };
            let witness_json = match &witness {
                Some(Some(w)) => {
                    let unpack = |mask: u32| -> Vec<u64> {
                        (0..n as u32).filter(|i| mask >> i & 1 == 1).map(|i| i as u64 + 1).collect()
                    };
                    serde_json::json!({
                        "s": unpack(w.s_mask),
                        "t": unpack(w.t_mask),
                        "element": w.element as u64 + 1,
                    })
                }
                _ => serde_json::Value::Null,
            };
            let line = serde_json::json!({
                "n": n,
                "submodular": submodular,
                "witness": witness_json,
                "minimizer": minimizer,
                "value": brute.value,
            });
            println!("{line}");
        }
        Out::Csv => {
            let submodular = match &witness {
                None => String::new(),
                Some(w) => w.is_none().to_string(),
            };
            println!("n,submodular,value,minimizer");
            println!("{n},{submodular},{},{}", brute.value, join_elements(&brute.minimizer));
        }
    }
    Ok(())
}
