use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

use commands::{CliError, Run};

#[derive(Parser)]
#[command(name = "embedlens", version, about = "Abelian embeddings, correlations and dictatorship tests for finite distributions")]
struct Cli {
    /// Cap on worker threads (defaults to one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write a run manifest to this path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Write the report to this path instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Exact,
    Mc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ReduceOp {
    MuMkMk,
    Xi,
    TildeF,
    Obs34,
}

#[derive(Subcommand)]
enum Command {
    /// Embedding verdict, witness, lattice invariants and connectivity.
    Analyze { dist: PathBuf },
    /// k-wise correlation of functions under the n-fold product.
    Correlate {
        dist: PathBuf,
        #[arg(required = true)]
        functions: Vec<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Tensor the single-coordinate inputs to every n in 1..=N.
        #[arg(long, value_name = "N")]
        sweep: Option<usize>,
        /// Emit the sweep as CSV.
        #[arg(long, requires = "sweep")]
        csv: bool,
    },
    /// Noise stability, optionally with degree weights.
    Stability {
        function: PathBuf,
        #[arg(long)]
        rho: f64,
        /// Comma-separated weights of the base measure; uniform when absent.
        #[arg(long)]
        nu: Option<String>,
        #[arg(long)]
        decompose: bool,
    },
    /// Reduction constructions and identity checks.
    Reduce {
        dist: PathBuf,
        #[arg(long, value_enum)]
        op: ReduceOp,
        /// Function files for tilde-f (k − 1 of them) or obs34 (one).
        #[arg(long = "function")]
        functions: Vec<PathBuf>,
        #[arg(long)]
        p_star: Option<String>,
        /// Restriction rate: a rational, `1-alpha^2`, `1-alpha` or `auto`.
        #[arg(long, default_value = "1-alpha^2")]
        rate: String,
        /// Write constructed objects here instead of inlining them.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Acceptance probability of a dictatorship test.
    Dicttest {
        instance: PathBuf,
        function: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Also maximize acceptance over every function of this many coordinates.
        #[arg(long, value_name = "N")]
        max_over: Option<usize>,
    },
    /// Run one of the built-in property suites.
    Verify {
        suite: String,
        #[arg(long, default_value_t = embedlens::verify::DEFAULT_SEED)]
        seed: u64,
    },
}

fn dispatch(command: Command) -> Result<Run, CliError> {
    match command {
        Command::Analyze { dist } => commands::analyze(dist),
        Command::Correlate { dist, functions, n, mode, samples, seed, sweep, csv } => {
            commands::correlate(dist, functions, n, mode, samples, seed, sweep, csv)
        }
        Command::Stability { function, rho, nu, decompose } => commands::stability(function, rho, nu, decompose),
        Command::Reduce { dist, op, functions, p_star, rate, out_dir } => {
            commands::reduce(dist, op, functions, p_star, rate, out_dir)
        }
        Command::Dicttest { instance, function, mode, samples, seed, max_over } => {
            commands::dicttest(instance, function, mode, samples, seed, max_over)
        }
        Command::Verify { suite, seed } => commands::verify(suite, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let run = match dispatch(cli.command) {
        Ok(run) => run,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    if let Err(e) = run.finish(cli.output.as_deref(), cli.manifest.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    if run.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
