#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

/// Generalized MHD solver and verification harness.
#[derive(Parser)]
#[command(name = "gmhd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Run configuration (`section.key = value` lines).
    #[arg(short, long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation, writing diagnostics CSV and checkpoints.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        /// Start from this checkpoint instead of the configured initial condition.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Tabulate kernel moments and norms against their decay envelopes.
    VerifyKernel {
        #[command(flatten)]
        config: ConfigArg,
        /// Output CSV; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Bernstein ratios and the fractional dissipation lower bound.
    VerifyBesov {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Integrate the Gronwall growth envelope.
    VerifyGronwall {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Overrides `gronwall.k`.
        #[arg(long)]
        k: Option<u32>,
        /// Overrides `gronwall.alpha0`.
        #[arg(long)]
        alpha0: Option<f64>,
        /// Overrides the horizon `time.t_end`.
        #[arg(long)]
        t_end: Option<f64>,
        /// Coefficient preset replacing `gronwall.{l,m,n,f}`.
        #[arg(long, value_enum)]
        preset: Option<commands::Preset>,
    },
    /// Fit a power law `value ~ t^p` to a CSV column.
    Fit {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        col: String,
        /// Divide each value by this column before fitting.
        #[arg(long)]
        correction: Option<String>,
        /// Power applied to the correction column.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        power: f64,
        /// Time column.
        #[arg(long, default_value = "t")]
        time: String,
        /// Keep only rows where `column=value`; repeatable.
        #[arg(long = "where", value_parser = parse_filter)]
        filters: Vec<(String, f64)>,
    },
}

fn parse_filter(s: &str) -> Result<(String, f64), String> {
    let (col, v) = s.split_once('=').ok_or("expected column=value")?;
    let v = v
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse {v:?} as a number"))?;
    Ok((col.trim().to_string(), v))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config, resume } => {
            commands::simulate(&config.config, resume.as_deref())
        }
        Command::VerifyKernel { config, output } => {
            commands::verify_kernel(&config.config, output.as_deref())
        }
        Command::VerifyBesov { config, output } => {
            commands::verify_besov(&config.config, output.as_deref())
        }
        Command::VerifyGronwall {
            config,
            output,
            k,
            alpha0,
            t_end,
            preset,
        } => {
            let overrides = commands::GronwallOverrides {
                k,
                alpha0,
                t_end,
                preset,
            };
            commands::verify_gronwall(&config.config, output.as_deref(), overrides)
        }
        Command::Fit {
            input,
            col,
            correction,
            power,
            time,
            filters,
        } => commands::fit(&input, &time, &col, correction.as_deref(), power, &filters),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gmhd: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
