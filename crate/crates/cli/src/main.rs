use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trajopt_cli::commands::{self, Overrides, DEFAULT_FD_STEP};

#[derive(Parser)]
#[command(name = "trajopt", version, about = "Projection-based first-order trajectory optimization")]
struct Cli {
    /// Directory for results (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Seed for randomized steps (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem.
    Run { config: PathBuf },
    /// Compare the adjoint gradient with finite differences of the cost.
    CheckGradient {
        config: PathBuf,
        /// Horizon length in samples (at most 100).
        #[arg(long = "T", value_name = "N")]
        steps: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Central-difference step scale.
        #[arg(long, default_value_t = DEFAULT_FD_STEP)]
        fd_step: f64,
    },
    /// Run several methods from the same start and compare gradient norms.
    Compare {
        config: PathBuf,
        /// Comma-separated: gradient, cg, heavy_ball, nesterov, open_loop_gradient.
        #[arg(long)]
        methods: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_CONFIG } else { 0 });
        }
    };
    let overrides = Overrides {
        output_dir: cli.output_dir,
        seed: cli.seed,
    };
    let code = match cli.command {
        Command::Run { config } => commands::run(&config, &overrides),
        Command::CheckGradient {
            config,
            steps,
            tol,
            fd_step,
        } => commands::check_gradient(&config, &overrides, steps, tol, fd_step),
        Command::Compare { config, methods } => commands::compare(&config, &overrides, &methods),
    };
    ExitCode::from(code)
}
