use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prethermal_cli::{run_file, validate_config, CliError};

#[derive(Parser)]
#[command(
    name = "prethermal",
    version,
    about = "Floquet prethermalization experiments on simulated noisy hardware"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Check a JSON config and list every problem found.
    Validate { config: PathBuf },
    /// Shots needed to resolve the noisy echo at a given depth.
    Budget {
        #[arg(short = 'N', help = "number of qubits")]
        n: usize,
        #[arg(short = 'D', help = "circuit depth in layers")]
        depth: usize,
        #[arg(short = 'p', help = "error probability per qubit and layer")]
        p: f64,
        #[arg(long = "pm", default_value_t = 0.0, help = "readout error probability")]
        p_m: f64,
        #[arg(long, default_value_t = 1.0, help = "target error relative to the signal")]
        epsilon: f64,
    },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    // `-pm` is documented as a single flag; clap would read it as `-p m`.
    let args = std::env::args().map(|a| if a == "-pm" { "--pm".to_string() } else { a });
    let cli = Cli::parse_from(args);
    let result = match cli.command {
        Command::Run { config } => run_file(&config).map(|files| {
            for f in files {
                println!("{f}");
            }
        }),
        Command::Validate { config } => std::fs::read_to_string(&config)
            .map_err(CliError::from)
            .and_then(|raw| validate_config(&raw).map_err(CliError::Config))
            .map(|c| println!("ok: {} ({}x{}, seed {})", c.scenario.name(), c.rows, c.cols, c.seed)),
        Command::Budget {
            n,
            depth,
            p,
            p_m,
            epsilon,
        } => prethermal::sample_budget(n, depth, p, p_m, epsilon)
            .map_err(CliError::from)
            .map(|b| {
                println!(
                    "N={} D={} p={} p_m={} epsilon={} shots={:e}",
                    b.n, b.depth, b.p, b.p_m, b.epsilon, b.shots
                )
            }),
        Command::Version => {
            println!("prethermal {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
