use clap::{Args, Parser, Subcommand};
use pathlab::config::Config;
use pathlab::{runner, Failure};
use std::path::PathBuf;

/// Per-path stochastic control experiment runner.
///
/// Exit status: 0 when every enabled criterion passes, 1 on a criterion
/// failure, 2 on config or parse errors.
#[derive(Parser)]
#[command(name = "pathlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (line-oriented `key = value` with sections).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to $PATHLAB_OUT or ./pathlab-out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the seed fan-out.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the value process and compare against closed forms.
    Value(RunArgs),
    /// Check the solver against enumeration and lattice-DP oracles.
    OracleCompare(RunArgs),
    /// Dynamic-programming residuals at sampled (t, x) points.
    Dpp(RunArgs),
    /// Extract the optimal drift; momentum and transport residuals.
    Drift(RunArgs),
    /// Conserved quantities and the pointwise symmetry equation.
    Invariants(RunArgs),
    /// Terminal-cost monotonicity and constant-shift checks.
    Comparison(RunArgs),
    /// Simultaneous grid/step/path refinement study.
    Convergence(RunArgs),
    /// Stochastic heat-kernel exponent against quadrature and closed forms.
    HopfCole(RunArgs),
}

impl Command {
    fn split(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Value(a) => ("value", a),
            Command::OracleCompare(a) => ("oracle-compare", a),
            Command::Dpp(a) => ("dpp", a),
            Command::Drift(a) => ("drift", a),
            Command::Invariants(a) => ("invariants", a),
            Command::Comparison(a) => ("comparison", a),
            Command::Convergence(a) => ("convergence", a),
            Command::HopfCole(a) => ("hopf-cole", a),
        }
    }
}

fn default_out() -> PathBuf {
    std::env::var_os("PATHLAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("pathlab-out"))
}

fn main() {
    let cli = Cli::parse();
    let (sub, args) = cli.command.split();
    let out = args.out.clone().unwrap_or_else(default_out);
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cfg = match Config::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    match runner::run(sub, &cfg, &out, workers) {
        Ok(summary) => {
            print!("{}", summary.render_lines());
            if summary.pass {
                println!("{sub}: all criteria passed");
                std::process::exit(0);
            }
            if let Some(c) = summary.first_failure() {
                eprintln!(
                    "{sub}: criterion '{}' failed: {} {} {} does not hold",
                    c.name, c.measured, c.op, c.bound
                );
            }
            std::process::exit(1);
        }
        Err(e @ Failure::Config(_)) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
        Err(e @ Failure::Criterion(_)) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
