use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sp8d::cli::{cmd_sweep, cmd_validate_channel, cmd_verify_formats, Outcome, SweepKind, EXIT_CONFIG, THREADS_ENV};
use sp8d::formats::FormatKind;

#[derive(Parser)]
#[command(name = "sp8d", version, about = "Set-partitioned PDM-QPSK 8D formats and WDM fiber Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Power,
    Reach,
}

#[derive(Subcommand)]
enum Command {
    /// Build the four formats and check their structural constraints.
    VerifyFormats,
    /// Q² sweep over launch power or span count.
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated format names; defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        formats: Option<Vec<FormatKind>>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Analytic checks of propagation, noise loading and equalizer.
    ValidateChannel,
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| format!("{THREADS_ENV}={v} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn finish(out: Outcome) -> ExitCode {
    print!("{}", out.text);
    ExitCode::from(out.code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    match cli.command {
        Command::VerifyFormats => finish(cmd_verify_formats()),
        Command::ValidateChannel => finish(cmd_validate_channel()),
        Command::Sweep { axis, formats, config, out } => {
            let kind = match axis {
                Axis::Power => SweepKind::Power,
                Axis::Reach => SweepKind::Reach,
            };
            finish(cmd_sweep(config.as_deref(), kind, formats.as_deref(), &out))
        }
    }
}
