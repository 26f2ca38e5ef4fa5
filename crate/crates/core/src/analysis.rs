//! Comparisons across ADC precisions and the reference capacity tables.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::channel::ChannelParams;
use crate::design::{benchmark_mi, benchmark_pair, three_bit_optimize, two_bit_optimum};
use crate::error::{Error, Result};
use crate::par::map_ordered;
use crate::solver::{capacity, one_bit_capacity, SolverOptions};
use crate::QuantizerSpec;

/// A transmission/reception scheme whose rate can be tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(into = "&'static str", try_from = "String"))]
pub enum Scheme {
    /// 1-bit ADC with optimised input.
    OneBitOpt,
    /// 2-bit ADC, optimised symmetric thresholds and input.
    TwoBitOpt,
    /// 4-PAM with midpoint thresholds.
    TwoBitBench,
    /// 3-bit ADC, optimised symmetric thresholds and input.
    ThreeBitOpt,
    /// 8-PAM with midpoint thresholds.
    ThreeBitBench,
    /// Unquantized real AWGN channel.
    Unquantized,
    /// One point of a 2-bit capacity-versus-threshold curve.
    TwoBitCurve,
}

impl Scheme {
    /// Every scheme, in display order.
    pub const ALL: [Scheme; 7] = [
        Scheme::OneBitOpt,
        Scheme::TwoBitOpt,
        Scheme::TwoBitBench,
        Scheme::ThreeBitOpt,
        Scheme::ThreeBitBench,
        Scheme::Unquantized,
        Scheme::TwoBitCurve,
    ];

    /// Short label used in output files.
    pub fn label(self) -> &'static str {
        match self {
            Scheme::OneBitOpt => "1bit-opt",
            Scheme::TwoBitOpt => "2bit-opt",
            Scheme::TwoBitBench => "2bit-bench",
            Scheme::ThreeBitOpt => "3bit-opt",
            Scheme::ThreeBitBench => "3bit-bench",
            Scheme::Unquantized => "unquantized",
            Scheme::TwoBitCurve => "2bit-q",
        }
    }

    /// Parses [`Scheme::label`].
    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == s)
    }

    /// Number of quantizer bins, `None` when unquantized.
    pub fn bins(self) -> Option<usize> {
        match self {
            Scheme::OneBitOpt => Some(2),
            Scheme::TwoBitOpt | Scheme::TwoBitBench | Scheme::TwoBitCurve => Some(4),
            Scheme::ThreeBitOpt | Scheme::ThreeBitBench => Some(8),
            Scheme::Unquantized => None,
        }
    }

    /// Rate ceiling `log2 K`; infinite for the unquantized channel.
    pub fn ceiling(self) -> f64 {
        self.bins().map_or(f64::INFINITY, |k| libm::log2(k as f64))
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl From<Scheme> for &'static str {
    fn from(s: Scheme) -> Self {
        s.label()
    }
}

impl TryFrom<String> for Scheme {
    type Error = String;

    fn try_from(s: String) -> core::result::Result<Self, String> {
        Scheme::from_label(&s).ok_or_else(|| alloc::format!("unknown scheme `{s}`"))
    }
}

/// One tabulated rate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRecord {
    /// SNR in dB.
    pub snr_db: f64,
    /// Scheme evaluated.
    pub scheme: Scheme,
    /// Rate in bits per channel use.
    pub value: f64,
    /// Positive quantizer thresholds `q1 < q2 < ...` (empty for 1-bit and
    /// unquantized).
    pub params: Vec<f64>,
    /// False if the underlying capacity solve was not KKT-certified.
    pub converged: bool,
}

/// `0.5 log2(1 + SNR)`, bits per real channel use.
pub fn awgn_capacity(params: &ChannelParams) -> f64 {
    0.5 * libm::log2(1.0 + params.snr())
}

fn positive_thresholds(q: &QuantizerSpec) -> Vec<f64> {
    q.thresholds().iter().copied().filter(|t| *t > 0.0).collect()
}

/// Rate of `scheme` at `params`; optimised schemes run their optimiser.
pub fn evaluate(scheme: Scheme, params: &ChannelParams, opts: &SolverOptions) -> Result<SweepRecord> {
    let snr_db = params.snr_db();
    let record = |value: f64, params: Vec<f64>, converged: bool| SweepRecord { snr_db, scheme, value, params, converged };
    Ok(match scheme {
        Scheme::Unquantized => record(awgn_capacity(params), vec![], true),
        Scheme::OneBitOpt => {
            let r = one_bit_capacity(params);
            record(r.capacity, vec![], r.converged)
        }
        Scheme::TwoBitBench | Scheme::ThreeBitBench => {
            let k = scheme.bins().expect("quantized");
            let q = benchmark_pair(k, params)?.quantizer;
            record(benchmark_mi(k, params)?, positive_thresholds(&q), true)
        }
        Scheme::TwoBitOpt => {
            let (q, r) = two_bit_optimum(params, opts)?;
            record(r.capacity, vec![q.q()], r.converged)
        }
        Scheme::ThreeBitOpt => {
            let d = three_bit_optimize(params, opts)?;
            record(d.result.capacity, d.quantizer.levels().to_vec(), d.result.converged)
        }
        Scheme::TwoBitCurve => {
            return Err(Error::InvalidArgument("the 2-bit curve needs an explicit threshold"));
        }
    })
}

/// Outcome of inverting a capacity curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RateSolution {
    /// SNR in dB at which the scheme reaches the rate.
    Snr(f64),
    /// The rate is at or above the scheme's `log2 K` ceiling.
    Infeasible,
}

/// Default SNR window, in dB, for [`snr_for_rate`].
pub const RATE_WINDOW_DB: (f64, f64) = (-15.0, 25.0);

/// Resolution of the SNR returned by [`snr_for_rate`], in dB.
pub const RATE_TOL_DB: f64 = 0.01;

/// SNR in dB at which `scheme` reaches `rate`, by bisection on fresh solves.
///
/// If the window does not bracket the rate it is widened once by its own
/// width on the failing side.
pub fn snr_for_rate(scheme: Scheme, rate: f64, window_db: (f64, f64), opts: &SolverOptions) -> Result<RateSolution> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidArgument("rate must be positive"));
    }
    let (mut lo, mut hi) = window_db;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument("SNR window must be finite and increasing"));
    }
    if rate >= scheme.ceiling() {
        return Ok(RateSolution::Infeasible);
    }
    let value = |db: f64| evaluate(scheme, &ChannelParams::unit_noise(db), opts).map(|r| r.value);
    let width = hi - lo;
    if value(lo)? > rate {
        lo -= width;
        if value(lo)? > rate {
            return Err(Error::RateOutOfWindow);
        }
    }
    if value(hi)? < rate {
        hi += width;
        if value(hi)? < rate {
            return Err(Error::RateOutOfWindow);
        }
    }
    while hi - lo > RATE_TOL_DB {
        let mid = 0.5 * (lo + hi);
        if value(mid)? < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RateSolution::Snr(0.5 * (lo + hi)))
}

/// The four reference tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Table {
    /// 1-bit and 2-bit rates (optimised and benchmark).
    I,
    /// 3-bit rates (optimised and benchmark).
    II,
    /// Capacity across precisions.
    III,
    /// SNR required for a target spectral efficiency.
    IV,
}

impl Table {
    /// Table from its number 1 to 4.
    pub fn from_number(n: u32) -> Option<Self> {
        match n {
            1 => Some(Table::I),
            2 => Some(Table::II),
            3 => Some(Table::III),
            4 => Some(Table::IV),
            _ => None,
        }
    }

    /// Row schemes.
    pub fn rows(self) -> &'static [Scheme] {
        match self {
            Table::I => &[Scheme::OneBitOpt, Scheme::TwoBitOpt, Scheme::TwoBitBench],
            Table::II => &[Scheme::ThreeBitOpt, Scheme::ThreeBitBench],
            Table::III | Table::IV => &[Scheme::OneBitOpt, Scheme::TwoBitOpt, Scheme::ThreeBitOpt, Scheme::Unquantized],
        }
    }

    /// Default columns: SNRs in dB, or target rates for table IV.
    pub fn columns(self) -> &'static [f64] {
        match self {
            Table::I => &[-10.0, -5.0, 0.0, 7.0, 15.0],
            Table::II => &[-10.0, 0.0, 5.0, 10.0, 20.0],
            Table::III => &[-5.0, 0.0, 5.0, 10.0, 15.0],
            Table::IV => &[0.25, 0.5, 1.0, 1.73, 2.5],
        }
    }

    /// True when cells are SNRs in dB rather than rates in bits.
    pub fn inverts_rate(self) -> bool {
        self == Table::IV
    }
}

/// A cell value: a number or the "rate not reachable" marker.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CellValue {
    /// Rate in bits, or SNR in dB for table IV.
    Value(f64),
    /// Table IV marker for rates above the ceiling.
    Infeasible,
}

/// A reference value with its acceptance tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCell {
    /// Row.
    pub scheme: Scheme,
    /// Column: SNR in dB, or rate for table IV.
    pub column: f64,
    /// Published value.
    pub value: CellValue,
    /// Allowed absolute difference.
    pub tolerance: f64,
    /// Known inconsistency in the published table; not held against the
    /// computed value.
    pub anomaly: bool,
}

const NA: f64 = f64::NAN;

/// Published values, row-major in [`Table::rows`] and [`Table::columns`]
/// order. `NaN` marks an infeasible cell.
fn published(table: Table) -> &'static [[f64; 5]] {
    match table {
        Table::I => &[
            [0.0449, 0.1353, 0.3689, 0.9020, 0.9974],
            [0.0613, 0.1792, 0.4552, 1.0981, 1.9304],
            [0.0527, 0.1658, 0.4401, 1.0639, 1.9211],
        ],
        Table::II => &[
            [0.0667, 0.4817, 0.9753, 1.5844, 2.8367],
            [0.0557, 0.4707, 0.9547, 1.5332, 2.8084],
        ],
        Table::III => &[
            [0.1353, 0.3689, 0.7684, 0.9908, 0.9999],
            [0.1792, 0.4552, 0.8889, 1.4731, 1.9304],
            [0.1926, 0.4817, 0.9753, 1.5844, 2.2538],
            [0.1982, 0.5000, 1.0286, 1.7297, 2.5138],
        ],
        Table::IV => &[
            [-2.04, 1.79, NA, NA, NA],
            [-3.32, 0.59, 6.13, 12.30, NA],
            [-3.67, 0.23, 5.19, 11.04, 16.90],
            [-3.83, 0.00, 4.77, 10.00, 14.91],
        ],
    }
}

fn tolerance(table: Table, scheme: Scheme) -> f64 {
    let optimised = matches!(scheme, Scheme::TwoBitOpt | Scheme::ThreeBitOpt);
    match (table, scheme) {
        (Table::IV, Scheme::TwoBitOpt) => 0.15,
        (Table::IV, Scheme::ThreeBitOpt) => 0.3,
        (Table::IV, _) => 0.02,
        _ if optimised => 0.01,
        _ => 0.001,
    }
}

/// Reference cells of `table` with tolerances.
pub fn reference_cells(table: Table) -> Vec<ReferenceCell> {
    let mut cells = Vec::new();
    for (row, values) in table.rows().iter().zip(published(table)) {
        for (&column, &v) in table.columns().iter().zip(values) {
            cells.push(ReferenceCell {
                scheme: *row,
                column,
                value: if v.is_nan() { CellValue::Infeasible } else { CellValue::Value(v) },
                tolerance: tolerance(table, *row),
                // Table I lists 0.9974 for 1 bit at 15 dB; table III and the
                // closed form give 0.9999.
                anomaly: table == Table::I && *row == Scheme::OneBitOpt && column == 15.0,
            });
        }
    }
    cells
}

/// A computed cell next to its reference.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableCell {
    /// Row.
    pub scheme: Scheme,
    /// Column: SNR in dB, or rate for table IV.
    pub column: f64,
    /// Computed value, or the solver error.
    pub computed: core::result::Result<CellValue, String>,
    /// Published value, if the column is one of the published ones.
    pub reference: Option<CellValue>,
    /// Allowed absolute difference.
    pub tolerance: f64,
    /// See [`ReferenceCell::anomaly`].
    pub anomaly: bool,
    /// Underlying record (tables I to III).
    pub record: Option<SweepRecord>,
}

impl TableCell {
    /// `computed - reference` when both are numbers.
    pub fn diff(&self) -> Option<f64> {
        match (&self.computed, self.reference) {
            (Ok(CellValue::Value(c)), Some(CellValue::Value(p))) => Some(c - p),
            _ => None,
        }
    }

    /// True when the cell agrees with its reference (or has none, or is a
    /// known anomaly). Solver failures never pass.
    pub fn within_tolerance(&self) -> bool {
        match (&self.computed, self.reference) {
            (Err(_), _) => false,
            (Ok(_), None) => true,
            (Ok(_), Some(_)) if self.anomaly => true,
            (Ok(CellValue::Infeasible), Some(CellValue::Infeasible)) => true,
            (Ok(CellValue::Value(c)), Some(CellValue::Value(p))) => (c - p).abs() <= self.tolerance,
            _ => false,
        }
    }
}

/// Reproduced table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableReport {
    /// Which table.
    pub table: Table,
    /// Cells, row-major.
    pub cells: Vec<TableCell>,
}

impl TableReport {
    /// All cells within tolerance.
    pub fn passed(&self) -> bool {
        self.cells.iter().all(TableCell::within_tolerance)
    }
}

/// Recomputes `table`. `columns` overrides the published SNRs (or rates for
/// table IV); cells off the published grid carry no reference.
///
/// A failing cell is reported in place and does not stop the others.
pub fn reproduce_table(table: Table, columns: Option<&[f64]>, opts: &SolverOptions) -> TableReport {
    let columns = columns.unwrap_or(table.columns());
    let reference = reference_cells(table);
    let jobs: Vec<(Scheme, f64)> = table
        .rows()
        .iter()
        .flat_map(|&s| columns.iter().map(move |&c| (s, c)))
        .collect();
    let computed = map_ordered(&jobs, |&(scheme, column)| compute_cell(table, scheme, column, opts));
    let cells = jobs
        .iter()
        .zip(computed)
        .map(|(&(scheme, column), (computed, record))| {
            let reference = reference.iter().find(|c| c.scheme == scheme && c.column == column);
            TableCell {
                scheme,
                column,
                computed: computed.map_err(|e| alloc::format!("{e}")),
                reference: reference.map(|c| c.value),
                tolerance: tolerance(table, scheme),
                anomaly: reference.is_some_and(|c| c.anomaly),
                record,
            }
        })
        .collect();
    TableReport { table, cells }
}

fn compute_cell(table: Table, scheme: Scheme, column: f64, opts: &SolverOptions) -> (Result<CellValue>, Option<SweepRecord>) {
    if table.inverts_rate() {
        let v = snr_for_rate(scheme, column, RATE_WINDOW_DB, opts).map(|s| match s {
            RateSolution::Snr(db) => CellValue::Value(db),
            RateSolution::Infeasible => CellValue::Infeasible,
        });
        return (v, None);
    }
    match evaluate(scheme, &ChannelParams::unit_noise(column), opts) {
        Ok(r) => (Ok(CellValue::Value(r.value)), Some(r)),
        Err(e) => (Err(e), None),
    }
}

/// Rate of every quantized scheme as a fraction of the unquantized capacity.
pub fn ratio_report(snr_db: f64, opts: &SolverOptions) -> Result<Vec<(Scheme, f64)>> {
    let params = ChannelParams::unit_noise(snr_db);
    let reference = awgn_capacity(&params);
    if reference <= 0.0 {
        return Err(Error::InvalidArgument("ratios need a positive SNR"));
    }
    let schemes = [
        Scheme::OneBitOpt,
        Scheme::TwoBitOpt,
        Scheme::TwoBitBench,
        Scheme::ThreeBitOpt,
        Scheme::ThreeBitBench,
    ];
    let values = map_ordered(&schemes, |&s| evaluate(s, &params, opts));
    schemes
        .iter()
        .zip(values)
        .map(|(&s, v)| v.map(|r| (s, r.value / reference)))
        .collect()
}

/// Every scheme at every operating point, row-major by scheme. Failures are
/// kept in place.
pub fn scheme_sweep(schemes: &[Scheme], params: &[ChannelParams], opts: &SolverOptions) -> Vec<Result<SweepRecord>> {
    let jobs: Vec<(Scheme, &ChannelParams)> =
        schemes.iter().flat_map(|&s| params.iter().map(move |p| (s, p))).collect();
    map_ordered(&jobs, |&(s, p)| evaluate(s, p, opts))
}

/// Capacity of an arbitrary quantizer at each SNR, for sweeps.
pub fn quantizer_sweep(
    quantizer: &QuantizerSpec,
    snrs_db: &[f64],
    noise_var: f64,
    opts: &SolverOptions,
) -> Result<Vec<crate::CapacityResult>> {
    let params: Vec<ChannelParams> =
        snrs_db.iter().map(|&db| ChannelParams::from_snr_db(db, noise_var)).collect::<Result<_>>()?;
    map_ordered(&params, |p| capacity(p, quantizer, opts)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn awgn_values() {
        assert!((awgn_capacity(&ChannelParams::unit_noise(0.0)) - 0.5).abs() < 1e-15);
        assert!((awgn_capacity(&ChannelParams::unit_noise(10.0)) - 1.7297).abs() < 5e-5);
        assert_eq!(awgn_capacity(&ChannelParams::new(0.0, 1.0).unwrap()), 0.0);
    }

    #[test]
    fn labels_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(Scheme::from_label(s.label()), Some(s));
        }
        assert_eq!(Scheme::from_label("4bit"), None);
    }

    #[test]
    fn fixtures_have_twenty_cells_in_table_three() {
        let cells = reference_cells(Table::III);
        assert_eq!(cells.len(), 20);
        assert_eq!(reference_cells(Table::IV).iter().filter(|c| c.value == CellValue::Infeasible).count(), 4);
        assert_eq!(reference_cells(Table::I).iter().filter(|c| c.anomaly).count(), 1);
    }

    #[test]
    fn ceiling_marks_infeasible() {
        let o = SolverOptions::default();
        assert_eq!(snr_for_rate(Scheme::OneBitOpt, 1.0, RATE_WINDOW_DB, &o), Ok(RateSolution::Infeasible));
        assert_eq!(snr_for_rate(Scheme::TwoBitOpt, 2.5, RATE_WINDOW_DB, &o), Ok(RateSolution::Infeasible));
    }

    #[test]
    fn unquantized_inversion() {
        let o = SolverOptions::default();
        let RateSolution::Snr(db) = snr_for_rate(Scheme::Unquantized, 0.5, RATE_WINDOW_DB, &o).unwrap() else {
            panic!("feasible");
        };
        assert!(db.abs() < RATE_TOL_DB);
    }

    #[test]
    fn window_widens_once() {
        let o = SolverOptions::default();
        // 0.5 bits needs 0 dB; a window ending at -5 dB reaches it after one widening.
        assert!(matches!(snr_for_rate(Scheme::Unquantized, 0.5, (-10.0, -5.0), &o), Ok(RateSolution::Snr(_))));
        assert_eq!(snr_for_rate(Scheme::Unquantized, 0.5, (-20.0, -15.0), &o), Err(Error::RateOutOfWindow));
    }
}
