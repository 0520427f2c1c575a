use clap::{Args, Parser, Subcommand};
use nli_cli::{run_file, Format, RunError, RunOptions, ScanParam, Stage};
use std::path::PathBuf;
use std::process::ExitCode;

/// Photon-pair joint spectra from multi-stage fiber interferometers.
#[derive(Parser)]
#[command(name = "nli", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the grid size of every scenario (N×N).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Exit with status 3 if any numerical-validity warning was raised.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: JSF, Schmidt, metrics, scans, high gain, design.
    Run(Common),
    /// JSF grid and marginals.
    Jsf(Common),
    /// Schmidt coefficients, mode dumps and island windows.
    Schmidt(Common),
    /// Filtered figures of merit.
    Metrics(Common),
    /// Green functions and mode indices over the gain ladder.
    Highgain(Common),
    /// Parameter sweep tables.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ScanParam::FilterBandwidth)]
        param: ScanParam,
    },
    /// Closed-form design rules.
    Design(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, stage) = match cli.command {
        Command::Run(c) => (c, Stage::All),
        Command::Jsf(c) => (c, Stage::Jsf),
        Command::Schmidt(c) => (c, Stage::Schmidt),
        Command::Metrics(c) => (c, Stage::Metrics),
        Command::Highgain(c) => (c, Stage::HighGain),
        Command::Scan { common, param } => (common, Stage::Scan(param)),
        Command::Design(c) => (c, Stage::Design),
    };
    let opts = RunOptions { out: common.out, grid: common.grid, format: common.format, strict: common.strict, stage };
    match run_file(&common.config, &opts) {
        Ok(m) => {
            for w in &m.warnings {
                eprintln!("warning: {}: {}: {}", w.scenario, w.step, w.message);
            }
            println!("{} file(s) written to {}", m.files.len(), opts.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let RunError::Strict { manifest, .. } = &e {
                for w in &manifest.warnings {
                    eprintln!("warning: {}: {}: {}", w.scenario, w.step, w.message);
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
