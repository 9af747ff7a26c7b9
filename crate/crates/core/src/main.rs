use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tempdis::pipeline::{parse_config, run_config};

#[derive(Parser)]
#[command(name = "tempdis", version, about = "Temporal disaggregation of annual series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the jobs of a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated job names; default all.
        #[arg(long, value_delimiter = ',')]
        jobs: Option<Vec<String>>,
        /// Output root, overriding the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

const CONFIG_INVALID: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match parse_config(&config) {
            Ok(cfg) => {
                println!("{}: {} job(s) ok", config.display(), cfg.jobs.len());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(CONFIG_INVALID)
            }
        },
        Command::Run { config, jobs, out } => {
            let cfg = match parse_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(CONFIG_INVALID);
                }
            };
            let outcomes = match run_config(&cfg, jobs.as_deref(), out.as_deref()) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(CONFIG_INVALID);
                }
            };
            let mut failed = false;
            for o in &outcomes {
                match &o.result {
                    Ok(out) => println!(
                        "{}: ok (rho {:.3}) -> {}",
                        o.job,
                        out.fit.rho,
                        out.dir.display()
                    ),
                    Err(e) => {
                        failed = true;
                        eprintln!("{}: error: {e}", o.job);
                    }
                }
            }
            if failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
