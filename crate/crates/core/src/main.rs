use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use owtsim::harness::{self, LoadCase, Variant};
use owtsim::Error;

#[derive(Parser)]
#[command(
    name = "owtsim",
    version,
    about = "Monopile wind turbine structural load cases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a load case and write CSV results.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// LC12, LC21, LC23, LC51 or custom; defaults to the config's case.
        #[arg(long)]
        case: Option<LoadCase>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override a config value, e.g. `--set soil.beta_s=0.1`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Print the modal table of a model variant.
    Modes {
        #[arg(long)]
        config: PathBuf,
        /// clamped_dry or soil_wet.
        #[arg(long)]
        variant: Variant,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Validate a configuration and its input files.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn threads() -> Result<usize, Error> {
    match std::env::var("OWTSIM_THREADS") {
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!(
                "OWTSIM_THREADS must be a positive integer, got `{v}`"
            ))),
        },
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            case,
            out,
            seed,
            set,
        } => {
            let threads = threads()?;
            let mut cfg = harness::parse_config(&config, &set)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let case = case.unwrap_or(cfg.case);
            let result = harness::run_case(&cfg, case, threads)?;
            let written = harness::emit_outputs(&result.summary, &result.artifacts, &out)?;
            let s = &result.summary;
            println!("case {} digest {}", s.case, s.digest);
            for h in &s.headline {
                println!("  {} = {} ({})", h.key, h.value, h.source);
            }
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "wrote {} files to {} in {:.2} s",
                written.len(),
                out.display(),
                s.wall_time.as_secs_f64()
            );
        }
        Command::Modes {
            config,
            variant,
            set,
        } => {
            let cfg = harness::parse_config(&config, &set)?;
            let inputs = harness::load_inputs(&cfg)?;
            let result = harness::run_lc_eigen(&cfg, &inputs, variant)?;
            let table = result
                .artifacts
                .iter()
                .find(|a| a.name == "modes.csv")
                .expect("eigen run writes modes.csv");
            print!("{}", String::from_utf8_lossy(&table.body));
        }
        Command::Check { config, set } => {
            let cfg = harness::parse_config(&config, &set)?;
            harness::load_inputs(&cfg)?;
            println!("{}: ok (digest {})", config.display(), cfg.digest()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
