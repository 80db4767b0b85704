use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use bergman_dpp::statistics::registry;
use bergman_dpp_cli::{parse_config, run, ExperimentConfig};
use clap::{Parser, Subcommand};

/// Partial Bergman kernel experiments.
#[derive(Parser)]
#[command(name = "bergman-dpp", version, disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its CSVs and manifest.
    Run { config: PathBuf },
    /// Check a config and print every problem found.
    Validate { config: PathBuf },
    /// List the registered test function families.
    ListFunctions,
    /// Print the version.
    Version,
}

const CONFIG_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

fn load(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(CONFIG_ERROR)
    })?;
    parse_config(&text).map_err(|errs| {
        for e in errs {
            eprintln!("{}: {e}", path.display());
        }
        ExitCode::from(CONFIG_ERROR)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(CONFIG_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run { config } => {
            let cfg = match load(&config) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            match run(&cfg) {
                Ok(summary) => {
                    for f in &summary.files {
                        println!("wrote {}", f.display());
                    }
                    println!("wrote {}", summary.manifest.display());
                    if let Some(c) = summary.measured_boundary_factor {
                        println!("measured boundary factor: {c}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    ExitCode::from(RUNTIME_ERROR)
                }
            }
        }
        Command::Validate { config } => match load(&config) {
            Ok(_) => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::ListFunctions => {
            println!("radial_bump(a,b)          1 on |z| <= a, 0 on |z| >= b");
            println!("angular_mode(k,cutoff)    Re((z sqrt(pi))^k), cut off between cutoff and 2 cutoff");
            println!("gaussian_bump(cx,cy,w)    exp(-|z-c|^2/(2w^2)), cut off between 5w and 6w");
            println!("constant_capped(r)        1 on |z| <= r, 0 beyond 2r");
            println!();
            println!("registered instances:");
            for (spec, _) in registry() {
                println!("  {spec}");
            }
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!("bergman-dpp {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}
