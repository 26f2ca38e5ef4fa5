use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

/// One line of a result document.
///
/// Missing numbers are `None` rather than NaN so that JSON round-trips. For
/// table IV, `value` is the target rate and `snr_db` the SNR found (absent
/// when the rate is out of reach).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub snr_db: Option<f64>,
    pub scheme: String,
    pub value: Option<f64>,
    #[serde(default)]
    pub thresholds: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kkt_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub power_used: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub outer_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub points: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub probs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference: Option<ReferenceValue>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub status: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// A published cell: a number or the "-" marker of an unreachable rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReferenceValue {
    Number(f64),
    Marker(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub meta: Meta,
    pub results: Vec<Row>,
}

impl Document {
    pub fn new(config: RunConfig, results: Vec<Row>) -> Self {
        Document {
            meta: Meta { version: env!("CARGO_PKG_VERSION").to_string(), config },
            results,
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// CSV with a fixed leading block `snr_db,scheme,value,q1,...`; the
    /// optional column groups appear only if some row fills them.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let rows = &self.results;
        let n_q = rows.iter().map(|r| r.thresholds.len()).max().unwrap_or(0);
        let n_x = rows.iter().filter_map(|r| r.points.as_ref().map(Vec::len)).max().unwrap_or(0);
        let any = |f: fn(&Row) -> bool| rows.iter().any(f);
        let has_conv = any(|r| r.converged.is_some());
        let has_solver = any(|r| r.gamma.is_some());
        let has_ref = any(|r| r.status.is_some());
        let has_err = any(|r| r.error.is_some());

        let mut header: Vec<String> = ["snr_db", "scheme", "value"].map(String::from).to_vec();
        header.extend((1..=n_q).map(|i| format!("q{i}")));
        if has_conv {
            header.push("converged".into());
        }
        if has_solver {
            header.extend(["gamma", "kkt_slack", "power_used", "outer_iters"].map(String::from));
        }
        if has_ref {
            header.extend(["reference", "diff", "tolerance", "status"].map(String::from));
        }
        if has_err {
            header.push("error".into());
        }
        header.extend((1..=n_x).map(|i| format!("x{i}")));
        header.extend((1..=n_x).map(|i| format!("p{i}")));

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).map_err(csv_err)?;
        for r in rows {
            let mut rec: Vec<String> = vec![opt(r.snr_db), r.scheme.clone(), opt(r.value)];
            rec.extend(padded(&r.thresholds, n_q));
            if has_conv {
                rec.push(r.converged.map_or(String::new(), |c| c.to_string()));
            }
            if has_solver {
                rec.push(opt(r.gamma));
                rec.push(opt(r.kkt_slack));
                rec.push(opt(r.power_used));
                rec.push(r.outer_iters.map_or(String::new(), |n| n.to_string()));
            }
            if has_ref {
                rec.push(match &r.reference {
                    Some(ReferenceValue::Number(v)) => sig6(*v),
                    Some(ReferenceValue::Marker(m)) => m.clone(),
                    None => String::new(),
                });
                rec.push(opt(r.diff));
                rec.push(opt(r.tolerance));
                rec.push(r.status.clone().unwrap_or_default());
            }
            if has_err {
                rec.push(r.error.clone().unwrap_or_default());
            }
            rec.extend(padded(r.points.as_deref().unwrap_or(&[]), n_x));
            rec.extend(padded(r.probs.as_deref().unwrap_or(&[]), n_x));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
    }

    /// Writes to `path`, or standard output.
    pub fn emit(&self, text: &str, path: Option<&std::path::Path>) -> Result<(), CliError> {
        match path {
            Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.to_path_buf(), source }),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
            }
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::usage(e.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), sig6)
}

fn padded(v: &[f64], n: usize) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|x| sig6(*x)).chain(std::iter::repeat(String::new())).take(n)
}

/// `printf("%.6g")`: six significant digits, trailing zeros dropped,
/// scientific notation outside `[1e-5, 1e6)`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `None` for the non-finite values JSON cannot carry.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
