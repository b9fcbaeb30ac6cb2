use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isac_cli::config::load_config;
use isac_cli::{run, validate, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "isac", version, about = "Seeded ISAC design experiments")]
struct Cli {
    /// Override the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the config's output_dir, else out/<kind>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// Print the toolkit version.
    Version,
}

fn report(path: &std::path::Path, err: &CliError) {
    match err {
        CliError::Parse { .. } => eprintln!("error: {}: {err}", path.display()),
        _ => eprintln!("error: {err}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::Version => {
            println!("isac {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let parsed = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    report(&config, &e);
                    return ExitCode::from(2);
                }
            };
            let diagnostics = validate(&parsed);
            if diagnostics.is_empty() {
                println!("{}: ok", config.display());
                return ExitCode::SUCCESS;
            }
            for d in diagnostics {
                eprintln!("{}: {d}", config.display());
            }
            ExitCode::from(2)
        }
        Command::Run { config } => {
            let parsed = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    report(&config, &e);
                    return ExitCode::from(2);
                }
            };
            let opts = RunOptions {
                seed: cli.seed,
                out: cli.out,
            };
            match run(&parsed, &opts) {
                Ok(record) => {
                    for (k, v) in &record.summary {
                        println!("{k} = {v:.6}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    report(&config, &e);
                    match e {
                        CliError::Invalid(_) => ExitCode::from(2),
                        _ => ExitCode::FAILURE,
                    }
                }
            }
        }
    }
}
