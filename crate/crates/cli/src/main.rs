//! Command-line driver: `legacy-forge run` executes the pipeline from a
//! config file; `legacy-forge report` recomputes the aggregate from
//! persisted session records.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use legacy_forge_core::config::{load_config, BackendConfig, TargetSelector};
use legacy_forge_core::orchestrator::{
    aggregate, emit_reports, load_session_records, run_pipeline, AggregateReport,
};

#[derive(Parser)]
#[command(
    name = "legacy-forge",
    about = "Generate, execute, and iteratively improve unit-test suites for legacy C functions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Run the full pipeline over the configured source roots.
    Run(RunArgs),
    /// Recompute the aggregate report from persisted session records.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Target selector override: `all`, a glob, or a comma-separated list.
    #[arg(long)]
    targets: Option<String>,
    /// Iteration budget override.
    #[arg(long = "max-iter")]
    max_iter: Option<u32>,
    /// Backend override: `scripted:<dir>` or `http`.
    #[arg(long)]
    backend: Option<String>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Output directory holding per-target session records.
    #[arg(long)]
    out: PathBuf,
}

fn print_summary(report: &AggregateReport) {
    println!(
        "targets: {}  executed: {}  coverage measured: {}  improved: {}",
        report.n_targets, report.n_executed, report.n_coverage_measured, report.n_improved
    );
    println!(
        "errors: {} compile, {} crash tests, {} verifier timeouts",
        report.counters.compile_errors_total,
        report.counters.crash_tests_total,
        report.counters.verifier_timeouts_total
    );
    match (report.pearson_r, report.pearson_p) {
        (Some(r), Some(p)) => println!("cycles vs gain: r = {r:.4}, p = {p:.6}"),
        _ => println!("cycles vs gain: not enough variation for a correlation"),
    }
    for t in &report.per_target {
        let rating = match (t.initial_rating, t.final_rating) {
            (Some(i), Some(f)) => format!("rating {i} -> {f}"),
            _ => "no rating".to_string(),
        };
        let coverage = t
            .coverage_pct
            .map(|c| format!("{c:.1}% coverage"))
            .unwrap_or_else(|| "no coverage".to_string());
        println!(
            "  {:<24} {:?} after {} cycle(s), {}, {}",
            t.target, t.final_status, t.cycles, coverage, rating
        );
    }
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let mut config = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(1));
        }
    };
    if let Some(sel) = &args.targets {
        config.targets = if sel.contains(',') {
            TargetSelector::List(sel.split(',').map(|s| s.trim().to_string()).collect())
        } else {
            TargetSelector::parse(sel)
        };
    }
    if let Some(m) = args.max_iter {
        config.max_iterations = m;
    }
    if let Some(b) = &args.backend {
        if let Some(dir) = b.strip_prefix("scripted:") {
            config.backend = BackendConfig::Scripted {
                script_dir: PathBuf::from(dir),
            };
        } else if b != "http" {
            eprintln!("error: --backend must be `scripted:<dir>` or `http`");
            return Ok(ExitCode::from(1));
        }
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    match run_pipeline(&config) {
        Ok(report) => {
            print_summary(&report);
            if report.all_completed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        Err(legacy_forge_core::orchestrator::OrchestratorError::FatalConfig(e)) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(1))
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(2))
        }
    }
}

fn report(args: ReportArgs) -> anyhow::Result<ExitCode> {
    let records = load_session_records(&args.out)?;
    let report = aggregate(&records);
    emit_reports(&report, &args.out)?;
    print_summary(&report);
    if report.n_targets > 0 && report.all_completed() {
        Ok(ExitCode::SUCCESS)
    } else if report.n_targets == 0 {
        eprintln!("error: no session records under {}", args.out.display());
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::from(2))
    }
}

fn main() -> anyhow::Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        CliCommand::Run(args) => run(args),
        CliCommand::Report(args) => report(args),
    }
}
