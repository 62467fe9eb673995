use std::path::PathBuf;
use std::process::ExitCode;

use cavity_readout::config::DEFAULT_CONFIG_TOML;
use cavity_readout::scenario::{run, RunOptions, SCENARIOS};
use cavity_readout::{Config, Error};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cavity-readout", version, about = "Single-atom hyperfine state detection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario and write its results.
    Run {
        scenario: String,
        /// TOML config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory [default: out/<scenario>].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo shots per state.
        #[arg(long)]
        shots: Option<u64>,
        /// Worker threads (0 = all cores). Does not affect results.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Check a config file and list every violated constraint.
    Validate { config: PathBuf },
    /// List registered scenarios.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Error::Violations(v) = &e {
                for violation in v {
                    eprintln!("{violation}");
                }
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::List => {
            let width = SCENARIOS.iter().map(|s| s.name.len()).max().unwrap_or(0);
            for s in SCENARIOS {
                println!("{:width$}  {}", s.name, s.description);
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = Config::load(&config)?;
            cfg.check()?;
            println!("{}: ok", config.display());
            Ok(())
        }
        Command::Run {
            scenario,
            config,
            out,
            seed,
            shots,
            workers,
        } => {
            let cfg = match &config {
                Some(path) => Config::load(path)?,
                None => Config::from_toml(DEFAULT_CONFIG_TOML)?,
            };
            let output = run(&scenario, &cfg, RunOptions { seed, shots, workers })?;
            let dir = out.unwrap_or_else(|| PathBuf::from("out").join(&scenario));
            output.write(&dir)?;
            for name in output.files.keys() {
                println!("{}", dir.join(name).display());
            }
            Ok(())
        }
    }
}
