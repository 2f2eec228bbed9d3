//! `dro`: generate instances, run solvers and benchmark sweeps.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dro_core::geometry::Geometry;
use dro_core::harness::{
    compare, load_report, run_benchmark, run_solver, save_report, write_bench_csv, write_report_csv, BenchConfig,
    RunSettings, SolverKind, StopRule, Termination,
};
use dro_core::sd::{sd_tune, SdOptions};
use dro_core::model::{generate_from_template, load_instance, save_instance, AmbiguityTemplate, DEFAULT_X_UPPER};

#[derive(Parser)]
#[command(name = "dro", version, about = "Distributionally robust two-stage solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic instance to a JSON file.
    Generate(GenerateArgs),
    /// Solve an instance and write a JSON report.
    Solve(SolveArgs),
    /// Run a benchmark grid from a JSON config and write CSV.
    Bench(BenchArgs),
    /// Summarize two saved reports.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AmbiguityArg {
    Simplex,
    Avar,
    ChiSquare,
    Kantorovich,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_X_UPPER)]
    x_upper: f64,
    #[arg(long, value_enum, default_value = "simplex")]
    ambiguity: AmbiguityArg,
    /// AVaR level.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Chi-square radius.
    #[arg(long, default_value_t = 0.1)]
    r: f64,
    /// Kantorovich radius.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Sd,
    Ssl,
    Benders,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    Euclidean,
    Entropy,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    solver: SolverArg,
    #[arg(long, value_enum, default_value = "entropy")]
    geometry: GeometryArg,
    #[arg(long)]
    gap_rel: Option<f64>,
    #[arg(long)]
    gap_abs: Option<f64>,
    /// Known optimal value; gaps are then measured against it.
    #[arg(long)]
    reference_fstar: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    time_limit: Option<f64>,
    /// Report JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Optional per-iteration CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// SD only: try every combination of these factors on the default sigma, tau
    /// and eta (for example `0.1,1`) and keep the fastest run.
    #[arg(long, value_delimiter = ',')]
    tune_scales: Option<Vec<f64>>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    first: PathBuf,
    second: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), Box<dyn std::error::Error>> {
    match command {
        Command::Generate(a) => {
            let template = match a.ambiguity {
                AmbiguityArg::Simplex => AmbiguityTemplate::Simplex,
                AmbiguityArg::Avar => AmbiguityTemplate::Avar { alpha: a.alpha },
                AmbiguityArg::ChiSquare => AmbiguityTemplate::ChiSquare { r: a.r },
                AmbiguityArg::Kantorovich => AmbiguityTemplate::Kantorovich { delta: a.delta },
            };
            let inst = generate_from_template(a.seed, a.n, a.m, a.k, a.x_upper, &template)?;
            save_instance(&inst, &a.out)?;
        }
        Command::Solve(a) => {
            let inst = load_instance(&a.instance)?;
            let solver = match a.solver {
                SolverArg::Sd => SolverKind::Sd,
                SolverArg::Ssl => SolverKind::Ssl,
                SolverArg::Benders => SolverKind::Benders,
                SolverArg::Md => SolverKind::Md,
            };
            let geometry = match a.geometry {
                GeometryArg::Euclidean => Geometry::Euclidean,
                GeometryArg::Entropy => Geometry::Entropy,
            };
            let mut stop = StopRule { gap_rel: a.gap_rel, gap_abs: a.gap_abs, reference_fstar: a.reference_fstar };
            if stop.gap_rel.is_none() && stop.gap_abs.is_none() {
                stop.gap_rel = Some(1e-3);
            }
            let settings = RunSettings { stop, max_iters: a.max_iters, time_limit_secs: a.time_limit };
            let mut report = match &a.tune_scales {
                None => run_solver(solver, &inst, geometry, &settings)?,
                Some(scales) => {
                    if solver != SolverKind::Sd {
                        return Err("--tune-scales applies to the sd solver only".into());
                    }
                    let d = SdOptions::default();
                    let opts = SdOptions {
                        stop,
                        time_limit_secs: a.time_limit,
                        max_iters: a.max_iters.unwrap_or(d.max_iters),
                        ..d
                    };
                    let tuned = sd_tune(&inst, geometry, scales, &opts)?;
                    let mut report = tuned.report;
                    report.echo("tuning_grid", &tuned.tried);
                    report
                }
            };
            report.echo("instance", a.instance.display().to_string());
            save_report(&report, &a.out)?;
            if let Some(path) = &a.csv {
                write_report_csv(&report, std::fs::File::create(path)?)?;
            }
            println!(
                "{} {}: f = {:.9} after {} iterations ({:?})",
                report.solver, report.geometry, report.f_best, report.iterations, report.termination
            );
            if let Termination::Error(e) = &report.termination {
                return Err(format!("solver stopped with an error: {e}").into());
            }
        }
        Command::Bench(a) => {
            let config = BenchConfig::from_json(&std::fs::read_to_string(&a.config)?)?;
            let rows = run_benchmark(&config)?;
            match &a.out {
                Some(path) => write_bench_csv(&rows, std::fs::File::create(path)?)?,
                None => write_bench_csv(&rows, std::io::stdout().lock())?,
            }
        }
        Command::Compare(a) => {
            let first = load_report(&a.first)?;
            let second = load_report(&a.second)?;
            println!("{}", compare(&first, &second));
        }
    }
    Ok(())
}
