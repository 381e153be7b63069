use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qnee_cli::commands::{cmd_estimate, cmd_ground_state};
use qnee_cli::config::{resolve, MethodSel, Overrides};
use qnee_cli::oracle::{run_checks, Mutation};
use qnee_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "qnee", version, about = "Entropy estimation sweeps on the XXZ chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact ground states, block spectra and entropies.
    GroundState(Common),
    /// Run the estimators over the lambda grid.
    Estimate(Common),
    /// Run the invariant suite on random instances.
    OracleCheck {
        #[arg(long, env = "QNEE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mutation::None)]
        mutate: Mutation,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, env = "QNEE_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "QNEE_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "QNEE_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "QNEE_METHOD", value_enum)]
    method: Option<MethodSel>,
    /// Comma list of values or inclusive `start:step:stop` ranges.
    #[arg(long, env = "QNEE_LAMBDA_GRID")]
    lambda_grid: Option<String>,
    /// Comma list of subsystem sizes.
    #[arg(long, env = "QNEE_SUBSYSTEM", value_delimiter = ',')]
    subsystem: Option<Vec<usize>>,
    #[arg(long, env = "QNEE_TRIALS")]
    trials: Option<usize>,
    #[arg(long, env = "QNEE_SHOTS")]
    shots: Option<u64>,
    /// Override any config key, e.g. `--set qnee.n_outer=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            method: self.method,
            lambda_grid: self.lambda_grid.clone(),
            subsystems: self.subsystem.clone(),
            trials: self.trials,
            shots: self.shots,
            set: self.set.clone(),
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GroundState(c) => {
            let cfg = resolve(c.config.as_deref(), &c.overrides())?;
            let summary = cmd_ground_state(&cfg)?;
            for r in &summary.rows {
                println!(
                    "lambda={:<6} k={} S={:.6} E0={:.6} deg={}",
                    r.lambda, r.subsystem, r.exact_entropy, r.energy, r.degeneracy
                );
            }
            for f in &summary.files {
                eprintln!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Estimate(c) => {
            let cfg = resolve(c.config.as_deref(), &c.overrides())?;
            let summary = cmd_estimate(&cfg)?;
            for r in &summary.aggregate {
                let fmt = |x: Option<f64>, e: bool| match (x, e) {
                    (Some(v), false) => format!("{v:.6}"),
                    (Some(v), true) => format!("{v:.2e}"),
                    (None, _) => "-".into(),
                };
                println!(
                    "{:<5} lambda={:<6} k={} estimate={} exact={:.6} err={} {}",
                    r.method,
                    r.lambda,
                    r.subsystem,
                    fmt(r.estimate, false),
                    r.exact_entropy,
                    fmt(r.abs_error, true),
                    r.status
                );
            }
            for f in &summary.files {
                eprintln!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::OracleCheck { seed, mutate } => {
            let report = run_checks(seed, mutate)?;
            println!("{report}");
            match report.failed() {
                0 => Ok(()),
                failed => Err(CliError::Invariant {
                    failed,
                    total: report.checks.len(),
                }),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
