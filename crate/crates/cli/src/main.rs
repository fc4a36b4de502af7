use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compacton_lab::commands::{effective_threads, execute_all};
use compacton_lab::{plan, Command, EXIT_OK};

#[derive(Parser)]
#[command(name = "compacton-lab", version, about = "K(m,n) compacton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Evolve the configured initial condition; writes snapshots, diagnostics, events and a manifest.
    Simulate(Target),
    /// Lifespan upper bounds of the configured initial condition; writes bounds.json.
    Bounds(Target),
    /// Self-convergence on the ladder K, 2K, 4K; writes convergence.csv.
    Convergence(Target),
}

#[derive(Args)]
struct Target {
    /// Config files (TOML) or built-in recipe names (paper-fig1, paper-fig2).
    #[arg(required = true)]
    configs: Vec<String>,
    /// Override the output directory (one subdirectory per config when several are given).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run up to N configs in parallel, capped by COMPACTON_LAB_THREADS.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, target) = match cli.command {
        Sub::Simulate(t) => (Command::Simulate, t),
        Sub::Bounds(t) => (Command::Bounds, t),
        Sub::Convergence(t) => (Command::Convergence, t),
    };

    let jobs = match plan(&target.configs, target.out.as_deref()) {
        Ok(jobs) => jobs,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cap = std::env::var("COMPACTON_LAB_THREADS").ok();
    let threads = effective_threads(target.jobs, cap.as_deref());

    let mut code = EXIT_OK;
    for (job, result) in jobs.iter().zip(execute_all(command, &jobs, threads)) {
        match result {
            Ok(outcome) => {
                println!("[{}] {}", job.label, outcome.summary);
                println!("[{}] artifacts in {}", job.label, outcome.directory.display());
                code = code.max(outcome.exit_code);
            }
            Err(e) => {
                eprintln!("[{}] error: {e}", job.label);
                code = code.max(e.exit_code());
            }
        }
    }
    ExitCode::from(code as u8)
}
