//! Verification CLI: runs check suites against a metric and writes a
//! machine-readable JSON report.
//!
//! Exit codes: 0 all checks pass, 1 residual failure, 2 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ckforms::harness::{self, Suite, SuiteConfig};

#[derive(Parser)]
#[command(name = "ckforms", about = "conformal Killing form verification engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite against a metric.
    Verify(VerifyArgs),
    /// List all check ids with their identity anchors.
    ListChecks,
}

#[derive(Parser)]
struct VerifyArgs {
    /// Builtin metric name (flat, conf_flat, sphere, schwarzschild, random)
    /// or a path to a TOML/JSON metric file.
    #[arg(long, default_value = "flat")]
    metric: String,
    /// Chart dimension (ignored for schwarzschild, which is 4).
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// riemannian or lorentzian.
    #[arg(long, default_value = "riemannian")]
    signature: String,
    /// Form ranks to exercise, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    k: Vec<usize>,
    /// Tractor-splitting depths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    l: Vec<usize>,
    /// Sample points per check.
    #[arg(long, default_value_t = 10)]
    points: usize,
    /// RNG seed; reports are deterministic given the seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Absolute tolerance.
    #[arg(long, default_value_t = 1e-9)]
    atol: f64,
    /// Relative tolerance.
    #[arg(long, default_value_t = 1e-6)]
    rtol: f64,
    /// Metric jet-order cap (at most 4).
    #[arg(long, default_value_t = 4)]
    jet_order: usize,
    /// Check family: curvature | tractor | prolong | coupled | helicity | all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Perturb the named check's defining constant; that check must then fail.
    #[arg(long)]
    mutate: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListChecks => {
            for (id, anchor, suite) in harness::list_checks() {
                println!("{:<40} [{:?}] {}", id, suite, anchor);
            }
            ExitCode::SUCCESS
        }
        Command::Verify(args) => run_verify(args),
    }
}

fn run_verify(args: VerifyArgs) -> ExitCode {
    let suite: Suite = match args.suite.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}", e);
            return ExitCode::from(2);
        }
    };
    let cfg = SuiteConfig {
        metric: args.metric,
        dim: args.dim,
        signature: args.signature,
        k_values: args.k,
        l_values: args.l,
        points: args.points,
        seed: args.seed,
        atol: args.atol,
        rtol: args.rtol,
        jet_order_cap: args.jet_order,
        suite,
        mutate: args.mutate,
    };
    let report = match harness::run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}", e);
            return ExitCode::from(2);
        }
    };
    for c in &report.checks {
        println!(
            "{} {:<44} residual {:9.2e}  tol {:9.2e}  ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            c.max_residual,
            c.tolerance,
            c.anchor
        );
    }
    println!(
        "{}: {} checks on {}",
        if report.pass { "PASS" } else { "FAIL" },
        report.checks.len(),
        report.metric_name
    );
    if let Some(path) = args.out {
        if let Err(e) = std::fs::write(&path, report.to_json()) {
            eprintln!("error writing report: {}", e);
            return ExitCode::from(2);
        }
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
