use qadc_core::analysis::{reproduce_table, scheme_sweep, CellValue, Scheme, SweepRecord, Table, TableCell};
use qadc_core::design::{
    benchmark_pair, default_q_grid, three_bit_optimize_with, two_bit_optimum, two_bit_sweep, ThreeBitOptions,
};
use qadc_core::solver::capacity;
use qadc_core::{CapacityResult, ChannelParams, QuantizerSpec};

use crate::config::{CommandKind, QuantizerChoice, RunConfig};
use crate::error::{CliError, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_REGRESSION};
use crate::output::{finite, Document, ReferenceValue, Row};

/// Result document and exit code of a run.
pub struct Outcome {
    pub document: Document,
    pub exit_code: u8,
}

pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    let rows = match config.command {
        CommandKind::Capacity => cmd_capacity(config)?,
        CommandKind::Optimize => cmd_optimize(config)?,
        CommandKind::Benchmark => cmd_benchmark(config)?,
        CommandKind::Sweep => cmd_sweep(config)?,
        CommandKind::Tables => cmd_tables(config),
    };
    let exit_code = if config.command == CommandKind::Tables {
        if rows.iter().all(|r| matches!(r.status.as_deref(), Some("pass" | "anomaly"))) {
            EXIT_OK
        } else {
            EXIT_REGRESSION
        }
    } else if rows.iter().any(|r| r.converged == Some(false) || r.error.is_some()) {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    };
    Ok(Outcome { document: Document::new(config.clone(), rows), exit_code })
}

fn bits(config: &RunConfig) -> Option<u8> {
    match config.quantizer {
        Some(QuantizerChoice::Bits(b)) => Some(b),
        _ => None,
    }
}

fn positive(q: &QuantizerSpec) -> Vec<f64> {
    q.thresholds().iter().copied().filter(|t| *t > 0.0).collect()
}

fn solution_row(params: &ChannelParams, scheme: &str, thresholds: Vec<f64>, r: &CapacityResult) -> Row {
    Row {
        snr_db: finite(params.snr_db()),
        scheme: scheme.to_string(),
        value: Some(r.capacity),
        thresholds,
        converged: Some(r.converged),
        gamma: Some(r.gamma),
        kkt_slack: finite(r.kkt_slack),
        power_used: Some(r.power_used),
        outer_iters: Some(r.outer_iters),
        points: Some(r.distribution.points().to_vec()),
        probs: Some(r.distribution.probs().to_vec()),
        ..Row::default()
    }
}

fn record_row(r: &SweepRecord) -> Row {
    Row {
        snr_db: finite(r.snr_db),
        scheme: r.scheme.label().to_string(),
        value: Some(r.value),
        thresholds: r.params.clone(),
        converged: Some(r.converged),
        ..Row::default()
    }
}

fn error_row(snr_db: f64, scheme: &str, e: &qadc_core::Error) -> Row {
    Row { snr_db: finite(snr_db), scheme: scheme.to_string(), error: Some(e.to_string()), ..Row::default() }
}

fn cmd_capacity(config: &RunConfig) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for params in config.channels()? {
        let (label, quantizer) = match &config.quantizer {
            Some(QuantizerChoice::Bits(1)) => ("1bit".to_string(), QuantizerSpec::one_bit()),
            Some(QuantizerChoice::Bits(b)) => {
                let q = benchmark_pair(1 << b, &params).map_err(CliError::from_core)?.quantizer;
                (format!("{b}bit-mid"), q)
            }
            Some(QuantizerChoice::Thresholds(t)) => {
                ("custom".to_string(), QuantizerSpec::new(t.clone()).map_err(CliError::usage_from)?)
            }
            None => unreachable!("validated by RunConfig"),
        };
        let r = capacity(&params, &quantizer, &config.solver).map_err(CliError::from_core)?;
        rows.push(solution_row(&params, &label, quantizer.thresholds().to_vec(), &r));
    }
    Ok(rows)
}

fn cmd_optimize(config: &RunConfig) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for params in config.channels()? {
        match bits(config) {
            Some(2) if config.curve => {
                let sweep = two_bit_sweep(&params, &default_q_grid(&params), &config.solver)
                    .map_err(CliError::from_core)?;
                rows.extend(sweep.curve.iter().map(record_row));
                rows.push(solution_row(&params, Scheme::TwoBitOpt.label(), vec![sweep.best_q], &sweep.best));
            }
            Some(2) => {
                let (q, r) = two_bit_optimum(&params, &config.solver).map_err(CliError::from_core)?;
                rows.push(solution_row(&params, Scheme::TwoBitOpt.label(), vec![q.q()], &r));
            }
            Some(3) => {
                let design = ThreeBitOptions { multi_start: config.multi_start, ..ThreeBitOptions::default() };
                let d = three_bit_optimize_with(&params, &config.solver, &design).map_err(CliError::from_core)?;
                rows.push(solution_row(&params, Scheme::ThreeBitOpt.label(), d.quantizer.levels().to_vec(), &d.result));
            }
            _ => unreachable!("validated by RunConfig"),
        }
    }
    Ok(rows)
}

fn cmd_benchmark(config: &RunConfig) -> Result<Vec<Row>, CliError> {
    let b = bits(config).expect("validated by RunConfig");
    config
        .channels()?
        .iter()
        .map(|params| {
            let scheme = benchmark_pair(1 << b, params).map_err(CliError::from_core)?;
            let value = qadc_core::channel::mutual_information(&scheme.input, &scheme.quantizer, params.noise_std());
            Ok(Row {
                snr_db: finite(params.snr_db()),
                scheme: format!("{b}bit-bench"),
                value: Some(value),
                thresholds: positive(&scheme.quantizer),
                points: Some(scheme.input.points().to_vec()),
                probs: Some(scheme.input.probs().to_vec()),
                ..Row::default()
            })
        })
        .collect()
}

fn cmd_sweep(config: &RunConfig) -> Result<Vec<Row>, CliError> {
    let channels = config.channels()?;
    if let Some(QuantizerChoice::Thresholds(t)) = &config.quantizer {
        let q = QuantizerSpec::new(t.clone()).map_err(CliError::usage_from)?;
        return Ok(channels
            .iter()
            .map(|p| match capacity(p, &q, &config.solver) {
                Ok(r) => solution_row(p, "custom", t.clone(), &r),
                Err(e) => error_row(p.snr_db(), "custom", &e),
            })
            .collect());
    }
    let schemes: &[Scheme] = match bits(config) {
        Some(1) => &[Scheme::OneBitOpt],
        Some(2) => &[Scheme::TwoBitOpt, Scheme::TwoBitBench],
        Some(3) => &[Scheme::ThreeBitOpt, Scheme::ThreeBitBench],
        _ => &[
            Scheme::OneBitOpt,
            Scheme::TwoBitOpt,
            Scheme::TwoBitBench,
            Scheme::ThreeBitOpt,
            Scheme::ThreeBitBench,
            Scheme::Unquantized,
        ],
    };
    let results = scheme_sweep(schemes, &channels, &config.solver);
    let jobs = schemes.iter().flat_map(|s| channels.iter().map(move |p| (s, p)));
    Ok(jobs
        .zip(results)
        .map(|((s, p), r)| match r {
            Ok(rec) => record_row(&rec),
            Err(e) => error_row(p.snr_db(), s.label(), &e),
        })
        .collect())
}

fn cmd_tables(config: &RunConfig) -> Vec<Row> {
    let table = Table::from_number(config.table.expect("validated by RunConfig")).expect("validated by RunConfig");
    let report = reproduce_table(table, None, &config.solver);
    report.cells.iter().map(|c| table_row(table, c)).collect()
}

fn table_row(table: Table, cell: &TableCell) -> Row {
    let cell_number = |v: CellValue| match v {
        CellValue::Value(x) => Some(x),
        CellValue::Infeasible => None,
    };
    let mut row = Row {
        scheme: cell.scheme.label().to_string(),
        reference: cell.reference.map(|p| match p {
            CellValue::Value(x) => ReferenceValue::Number(x),
            CellValue::Infeasible => ReferenceValue::Marker("-".into()),
        }),
        diff: cell.diff(),
        tolerance: Some(cell.tolerance),
        status: Some(
            match (&cell.computed, cell.within_tolerance()) {
                (Err(_), _) => "error",
                (Ok(_), true) if cell.anomaly => "anomaly",
                (Ok(_), true) => "pass",
                (Ok(_), false) => "fail",
            }
            .to_string(),
        ),
        error: cell.computed.as_ref().err().cloned(),
        ..Row::default()
    };
    if table.inverts_rate() {
        row.value = Some(cell.column);
        row.snr_db = cell.computed.as_ref().ok().and_then(|v| cell_number(*v));
    } else {
        row.snr_db = Some(cell.column);
        row.value = cell.computed.as_ref().ok().and_then(|v| cell_number(*v));
        if let Some(rec) = &cell.record {
            row.thresholds = rec.params.clone();
            row.converged = Some(rec.converged);
        }
    }
    row
}
