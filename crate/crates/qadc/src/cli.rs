use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Capacity of the AWGN channel behind a low-precision ADC.
#[derive(Debug, Parser)]
#[command(name = "qadc", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity for a fixed quantizer, with its optimal input law.
    ///
    /// `--bits 1` uses the sign quantizer; `--bits 2|3` use the PAM
    /// midpoint thresholds scaled to each SNR.
    Capacity(CommonArgs),
    /// Jointly optimise symmetric thresholds and the input law.
    Optimize(OptimizeArgs),
    /// Uniform PAM with midpoint thresholds.
    Benchmark(CommonArgs),
    /// Recompute a reference table and diff it against the published values.
    Tables(TablesArgs),
    /// Rates across an SNR range, per precision or for fixed thresholds.
    Sweep(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// SNR in dB, a single value or an inclusive range `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    /// Average input power (instead of --snr-db).
    #[arg(long)]
    pub power: Option<f64>,
    /// Noise variance.
    #[arg(long)]
    pub noise_var: Option<f64>,
    /// ADC precision in bits.
    #[arg(long, conflicts_with = "thresholds")]
    pub bits: Option<u8>,
    /// Explicit thresholds, comma separated and strictly increasing.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thresholds: Option<Vec<f64>>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// KKT violation tolerance, bits.
    #[arg(long)]
    pub kkt_tol: Option<f64>,
    /// Candidate grid spacing in units of the noise standard deviation.
    #[arg(long)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the document here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Emit the whole capacity-versus-threshold curve (2-bit only).
    #[arg(long)]
    pub curve: bool,
    /// Restart the 3-bit alternation from rescaled thresholds.
    #[arg(long)]
    pub multi_start: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TablesArgs {
    /// Table number, 1 to 4.
    #[arg(long)]
    pub which: u32,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}
