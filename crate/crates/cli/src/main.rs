use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use a2w::commands::{self, ConstantArgs, DivergenceArgs, Grid, Outcome, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
use a2w::verify::{self, Module};
use a2w_core::Functional;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "a2w", version, about = "A2 decisions and estimates for matrix power weights")]
struct Cli {
    /// Print the wall time of the command on standard error.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FunctionalArg {
    Trace,
    Norm,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the weight in a spec file is an A2 weight.
    Check {
        spec: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Estimate the A2 characteristic of a weight (a lower bound for the supremum).
    Constant {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "trace")]
        functional: FunctionalArg,
        #[arg(long, value_enum, default_value = "fine")]
        grid: Grid,
        #[arg(long)]
        json: bool,
        /// Densify the grid N times and report whether the estimate saturates.
        #[arg(long, value_name = "N")]
        certify_grid: Option<usize>,
    },
    /// Growth of the averages product on [2πn, 2πn + π] for the rotation weight.
    Divergence {
        #[arg(long, allow_hyphen_values = true)]
        gamma1: String,
        #[arg(long, allow_hyphen_values = true)]
        gamma2: String,
        #[arg(long, default_value_t = 100)]
        n_min: u64,
        #[arg(long, default_value_t = 100_000)]
        n_max: u64,
        #[arg(long, default_value_t = 13)]
        points: usize,
        /// CSV destination; without it the CSV goes to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the seeded randomized oracle suites.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        module: Module,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("A2W_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("A2W_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn dispatch(command: &Command) -> Outcome {
    match command {
        Command::Check { spec, json } => commands::check(spec, *json),
        Command::Constant {
            spec,
            functional,
            grid,
            json,
            certify_grid,
        } => commands::constant(&ConstantArgs {
            spec,
            functional: match functional {
                FunctionalArg::Trace => Functional::Trace,
                FunctionalArg::Norm => Functional::Norm,
            },
            grid: *grid,
            json: *json,
            certify_grid: *certify_grid,
        }),
        Command::Divergence {
            gamma1,
            gamma2,
            n_min,
            n_max,
            points,
            out,
        } => commands::divergence(&DivergenceArgs {
            gamma1,
            gamma2,
            n_min: *n_min,
            n_max: *n_max,
            points: *points,
            out: out.as_deref(),
        }),
        Command::Verify {
            module,
            trials,
            seed,
            inject_fault,
        } => {
            let outcomes = verify::run(*module, *trials, *seed, *inject_fault);
            let (stdout, ok) = verify::render(&outcomes, *seed);
            Outcome {
                stdout,
                stderr: String::new(),
                code: if ok { EXIT_OK } else { EXIT_VERIFY },
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE as u8);
    }
    let start = Instant::now();
    let outcome = dispatch(&cli.command);
    print!("{}", outcome.stdout);
    eprint!("{}", outcome.stderr);
    if cli.timing {
        eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    }
    ExitCode::from(outcome.code as u8)
}
