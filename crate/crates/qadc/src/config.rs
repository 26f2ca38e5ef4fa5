use std::path::PathBuf;

use qadc_core::{ChannelParams, QuantizerSpec, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::cli::{Cli, Command, CommonArgs, Format, OutputArgs, SolverArgs};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Capacity,
    Optimize,
    Benchmark,
    Tables,
    Sweep,
}

/// How the channel operating points were given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operating {
    SnrDb { snr_db: Vec<f64>, noise_var: f64 },
    Power { power: f64, noise_var: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizerChoice {
    Bits(u8),
    Thresholds(Vec<f64>),
}

/// Everything a run depends on. Echoed verbatim in the JSON `meta` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub operating: Option<Operating>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quantizer: Option<QuantizerChoice>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub table: Option<u32>,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub curve: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub multi_start: bool,
    pub solver: SolverOptions,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let blank = |command, solver: &SolverArgs, output: &OutputArgs| -> Result<Self, CliError> {
            Ok(RunConfig {
                command,
                operating: None,
                quantizer: None,
                table: None,
                curve: false,
                multi_start: false,
                solver: solver_options(solver)?,
                format: output.format,
                out: output.out.clone(),
            })
        };
        let with_common = |command, args: &CommonArgs| -> Result<Self, CliError> {
            let mut cfg = blank(command, &args.solver, &args.output)?;
            cfg.quantizer = quantizer_choice(args)?;
            cfg.operating = Some(operating(args)?);
            Ok(cfg)
        };
        let cfg = match cli.command {
            Command::Capacity(a) => {
                let cfg = with_common(CommandKind::Capacity, &a)?;
                match cfg.quantizer {
                    Some(QuantizerChoice::Bits(1..=3)) | Some(QuantizerChoice::Thresholds(_)) => cfg,
                    Some(QuantizerChoice::Bits(b)) => return Err(CliError::usage(format!("--bits must be 1, 2 or 3, got {b}"))),
                    None => return Err(CliError::usage("capacity needs --bits or --thresholds")),
                }
            }
            Command::Optimize(a) => {
                let mut cfg = with_common(CommandKind::Optimize, &a.common)?;
                match cfg.quantizer {
                    Some(QuantizerChoice::Bits(2)) => {}
                    Some(QuantizerChoice::Bits(3)) if a.curve => {
                        return Err(CliError::usage("--curve is only available for --bits 2"))
                    }
                    Some(QuantizerChoice::Bits(3)) => {}
                    Some(QuantizerChoice::Bits(b)) => return Err(CliError::usage(format!("--bits must be 2 or 3, got {b}"))),
                    Some(QuantizerChoice::Thresholds(_)) => {
                        return Err(CliError::usage("optimize takes --bits, not --thresholds"))
                    }
                    None => return Err(CliError::usage("optimize needs --bits 2 or --bits 3")),
                }
                cfg.curve = a.curve;
                cfg.multi_start = a.multi_start;
                cfg
            }
            Command::Benchmark(a) => {
                let cfg = with_common(CommandKind::Benchmark, &a)?;
                match cfg.quantizer {
                    Some(QuantizerChoice::Bits(1..=3)) => cfg,
                    Some(QuantizerChoice::Bits(b)) => return Err(CliError::usage(format!("--bits must be 1, 2 or 3, got {b}"))),
                    _ => return Err(CliError::usage("benchmark needs --bits")),
                }
            }
            Command::Sweep(a) => {
                let cfg = with_common(CommandKind::Sweep, &a)?;
                if let Some(QuantizerChoice::Bits(b)) = cfg.quantizer {
                    if !(1..=3).contains(&b) {
                        return Err(CliError::usage(format!("--bits must be 1, 2 or 3, got {b}")));
                    }
                }
                cfg
            }
            Command::Tables(a) => {
                if !(1..=4).contains(&a.which) {
                    return Err(CliError::usage(format!("--which must be 1, 2, 3 or 4, got {}", a.which)));
                }
                let mut cfg = blank(CommandKind::Tables, &a.solver, &a.output)?;
                cfg.table = Some(a.which);
                cfg
            }
        };
        Ok(cfg)
    }

    /// Operating points in order.
    pub fn channels(&self) -> Result<Vec<ChannelParams>, CliError> {
        match &self.operating {
            Some(Operating::SnrDb { snr_db, noise_var }) => snr_db
                .iter()
                .map(|&db| ChannelParams::from_snr_db(db, *noise_var).map_err(CliError::usage_from))
                .collect(),
            Some(Operating::Power { power, noise_var }) => {
                Ok(vec![ChannelParams::new(*power, *noise_var).map_err(CliError::usage_from)?])
            }
            None => Ok(Vec::new()),
        }
    }
}

fn solver_options(args: &SolverArgs) -> Result<SolverOptions, CliError> {
    let mut o = SolverOptions::default();
    if let Some(t) = args.kkt_tol {
        o.kkt_tol = t;
    }
    if let Some(s) = args.grid_step {
        o.grid_step = s;
    }
    o.validate().map_err(CliError::usage_from)?;
    Ok(o)
}

fn operating(args: &CommonArgs) -> Result<Operating, CliError> {
    let noise_var = args.noise_var.unwrap_or(1.0);
    match (&args.snr_db, args.power) {
        (Some(_), Some(_)) => Err(CliError::usage("give either --snr-db or --power, not both")),
        (Some(s), None) => Ok(Operating::SnrDb { snr_db: parse_snr(s)?, noise_var }),
        (None, Some(power)) => Ok(Operating::Power { power, noise_var }),
        (None, None) => Err(CliError::usage("one of --snr-db or --power is required")),
    }
}

fn quantizer_choice(args: &CommonArgs) -> Result<Option<QuantizerChoice>, CliError> {
    match (&args.thresholds, args.bits) {
        (Some(t), _) => {
            QuantizerSpec::new(t.clone()).map_err(CliError::usage_from)?;
            Ok(Some(QuantizerChoice::Thresholds(t.clone())))
        }
        (None, Some(b)) => Ok(Some(QuantizerChoice::Bits(b))),
        (None, None) => Ok(None),
    }
}

/// Parses `v` or the inclusive range `start:stop:step`.
pub fn parse_snr(s: &str) -> Result<Vec<f64>, CliError> {
    let num = |t: &str| -> Result<f64, CliError> {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::usage(format!("invalid SNR value `{t}`")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts[..] {
        [v] => Ok(vec![num(v)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step == 0.0 || (b - a) * step < 0.0 {
                return Err(CliError::usage(format!("SNR range `{s}` never reaches its end")));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize + 1;
            if n > 100_000 {
                return Err(CliError::usage("SNR range has too many points"));
            }
            // Snap to 1e-9 dB so 0.1 steps print as 0.3, not 0.30000000000000004.
            Ok((0..n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect())
        }
        _ => Err(CliError::usage(format!("--snr-db expects `v` or `start:stop:step`, got `{s}`"))),
    }
}
