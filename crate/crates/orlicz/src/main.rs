use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orlicz::{load_scenario, load_sweep, Outcome, Overrides, RunError, CONFIG_ERROR};

#[derive(Parser)]
#[command(name = "orlicz", version, about = "Generalized Orlicz energy minimization and estimate verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Mesh size.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Verification radii, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    /// Drop continuation stages with larger λ.
    #[arg(long = "lambda-max", global = true)]
    lambda_max: Option<f64>,
    #[arg(long = "out-dir", global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads. Runs are sequential, so results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Solve even when a growth condition check fails.
    #[arg(long = "override-check", global = true)]
    override_check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the growth conditions of a scenario.
    Check { config: String },
    /// Minimize the energy and write the field and report.
    Solve { config: String },
    /// Evaluate the estimates on a field written by `solve`.
    Verify { config: String, field: PathBuf },
    /// Run a parameter sweep.
    Sweep { config: PathBuf },
}

fn run(cli: Cli) -> Result<Outcome, RunError> {
    let f = &cli.flags;
    if f.threads == 0 {
        return Err(RunError::Config("--threads must be at least 1".into()));
    }
    let overrides = Overrides {
        h: f.h,
        r: f.r.clone(),
        lambda_max: f.lambda_max,
        out_dir: f.out_dir.clone(),
    };
    let scenario = |arg: &str| {
        load_scenario(arg).map(|mut c| {
            c.apply(&overrides);
            c
        })
    };
    match &cli.command {
        Command::Check { config } => orlicz::run_check(&scenario(config)?),
        Command::Solve { config } => orlicz::run_solve(&scenario(config)?, f.override_check),
        Command::Verify { config, field } => orlicz::run_verify(&scenario(config)?, field),
        Command::Sweep { config } => {
            let sweep = load_sweep(config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            orlicz::run_sweep(&sweep, base, &overrides)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(out) => {
            for file in &out.files {
                println!("{}", file.display());
            }
            for m in &out.messages {
                eprintln!("{m}");
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CONFIG_ERROR as u8)
        }
    }
}
