//! Quantizer design: the PAM benchmark and symmetric threshold optimisation.
//!
//! The 2-bit family has thresholds `{-q, 0, q}` and is searched by brute
//! force over `q`. The 3-bit family has thresholds
//! `{-q3, -q2, -q1, 0, q1, q2, q3}` (8 bins) and is optimised by alternating
//! between the capacity solver and a cyclic golden-section search over the
//! thresholds with the input law held fixed.

use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::{Scheme, SweepRecord};
use crate::channel::{mutual_information, ChannelParams, InputDistribution, QuantizerSpec};
use crate::error::{Error, Result};
use crate::par::map_ordered;
use crate::solver::{capacity, CapacityResult, SolverOptions};
use crate::special::golden_max;

/// Thresholds `{-q, 0, q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymmetricQuantizer2Bit {
    q: f64,
}

impl SymmetricQuantizer2Bit {
    /// Requires a finite `q > 0`.
    pub fn new(q: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidArgument("2-bit threshold must be positive"));
        }
        Ok(Self { q })
    }

    /// The outer threshold.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// The full threshold vector.
    pub fn spec(&self) -> QuantizerSpec {
        QuantizerSpec::new(vec![-self.q, 0.0, self.q]).expect("ordered by construction")
    }
}

/// Thresholds `{+-q1, +-q2, +-q3}` plus `0`, with `0 < q1 < q2 < q3`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymmetricQuantizer3Bit {
    q: [f64; 3],
}

impl SymmetricQuantizer3Bit {
    /// Requires `0 < q1 < q2 < q3`, all finite.
    pub fn new(q1: f64, q2: f64, q3: f64) -> Result<Self> {
        if !(q1.is_finite() && q2.is_finite() && q3.is_finite()) {
            return Err(Error::InvalidArgument("3-bit thresholds must be finite"));
        }
        if !(0.0 < q1 && q1 < q2 && q2 < q3) {
            return Err(Error::ThresholdsNotIncreasing);
        }
        Ok(Self { q: [q1, q2, q3] })
    }

    /// `[q1, q2, q3]`.
    pub fn levels(&self) -> [f64; 3] {
        self.q
    }

    /// The full 7-threshold vector.
    pub fn spec(&self) -> QuantizerSpec {
        let [a, b, c] = self.q;
        QuantizerSpec::new(vec![-c, -b, -a, 0.0, a, b, c]).expect("ordered by construction")
    }
}

/// Uniform K-PAM input with ML (midpoint) thresholds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchmarkScheme {
    /// Equiprobable, equispaced constellation at average power `P`.
    pub input: InputDistribution,
    /// Midpoints of adjacent constellation points.
    pub quantizer: QuantizerSpec,
}

/// K-PAM at points `+-a(2m - 1)` with `a = sqrt(3P / (K^2 - 1))` and
/// thresholds at `0, +-2a, +-4a, ...`.
pub fn benchmark_pair(k: usize, params: &ChannelParams) -> Result<BenchmarkScheme> {
    if k < 2 || k % 2 == 1 {
        return Err(Error::InvalidPamOrder(k));
    }
    if params.power() <= 0.0 {
        return Err(Error::InvalidArgument("benchmark needs positive power"));
    }
    let kf = k as f64;
    let a = libm::sqrt(3.0 * params.power() / (kf * kf - 1.0));
    let half = k as i64 / 2;
    let points: Vec<f64> = (-half..half).map(|m| a * (2 * m + 1) as f64).collect();
    let thresholds: Vec<f64> = (1 - half..half).map(|m| 2.0 * a * m as f64).collect();
    Ok(BenchmarkScheme {
        input: InputDistribution::uniform(points)?,
        quantizer: QuantizerSpec::new(thresholds)?,
    })
}

/// Mutual information of [`benchmark_pair`].
pub fn benchmark_mi(k: usize, params: &ChannelParams) -> Result<f64> {
    let scheme = benchmark_pair(k, params)?;
    Ok(mutual_information(&scheme.input, &scheme.quantizer, params.noise_std()))
}

/// Default 2-bit search grid: steps of `0.02 sigma` over `(0, 3 sqrt(P) + 3 sigma]`.
pub fn default_q_grid(params: &ChannelParams) -> Vec<f64> {
    let sigma = params.noise_std();
    let step = 0.02 * sigma;
    let q_max = 3.0 * libm::sqrt(params.power()) + 3.0 * sigma;
    let n = libm::floor(q_max / step + 1e-9) as usize;
    (1..=n).map(|i| i as f64 * step).collect()
}

/// Capacity curve over `q` and its maximiser.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoBitSweep {
    /// One record per grid value, in grid order; `params = [q]`.
    pub curve: Vec<SweepRecord>,
    /// Grid value with the largest capacity.
    pub best_q: f64,
    /// Solver output at `best_q`.
    pub best: CapacityResult,
}

/// Brute-force search over the 2-bit threshold `q`.
pub fn two_bit_sweep(params: &ChannelParams, q_grid: &[f64], opts: &SolverOptions) -> Result<TwoBitSweep> {
    if q_grid.is_empty() {
        return Err(Error::InvalidArgument("q grid is empty"));
    }
    if q_grid.iter().any(|q| !(q.is_finite() && *q > 0.0)) || q_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("q grid must be positive and increasing"));
    }
    let solved = map_ordered(q_grid, |&q| {
        let spec = SymmetricQuantizer2Bit::new(q)?.spec();
        capacity(params, &spec, opts)
    });
    let results: Vec<CapacityResult> = solved.into_iter().collect::<Result<_>>()?;
    let snr_db = params.snr_db();
    let curve = q_grid
        .iter()
        .zip(&results)
        .map(|(&q, r)| SweepRecord {
            snr_db,
            scheme: Scheme::TwoBitCurve,
            value: r.capacity,
            params: vec![q],
            converged: r.converged,
        })
        .collect();
    // First maximum wins ties, so the result does not depend on scheduling.
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.capacity > results[best].capacity {
            best = i;
        }
    }
    Ok(TwoBitSweep {
        curve,
        best_q: q_grid[best],
        best: results[best].clone(),
    })
}

/// Optimal 2-bit quantizer by a coarse scan (`0.1 sigma`) refined with
/// golden-section search to `1e-4 sigma`.
///
/// Much cheaper than the full [`two_bit_sweep`]; used where many optima are
/// needed, e.g. when inverting capacity for a target rate.
pub fn two_bit_optimum(params: &ChannelParams, opts: &SolverOptions) -> Result<(SymmetricQuantizer2Bit, CapacityResult)> {
    let sigma = params.noise_std();
    let step = 0.1 * sigma;
    let q_max = 3.0 * libm::sqrt(params.power()) + 3.0 * sigma;
    let n = libm::ceil(q_max / step) as usize;
    let grid: Vec<f64> = (1..=n).map(|i| i as f64 * step).collect();
    let coarse = two_bit_sweep(params, &grid, opts)?;
    let eval = |q: f64| {
        SymmetricQuantizer2Bit::new(q)
            .and_then(|s| capacity(params, &s.spec(), opts))
            .map_or(f64::NEG_INFINITY, |r| r.capacity)
    };
    let lo = (coarse.best_q - step).max(0.5 * step);
    let (q, value) = golden_max(eval, lo, coarse.best_q + step, 1e-4 * sigma);
    if value <= coarse.best.capacity {
        return Ok((SymmetricQuantizer2Bit::new(coarse.best_q)?, coarse.best));
    }
    let quantizer = SymmetricQuantizer2Bit::new(q)?;
    let result = capacity(params, &quantizer.spec(), opts)?;
    Ok((quantizer, result))
}

/// Knobs for [`three_bit_optimize_with`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThreeBitOptions {
    /// Alternation rounds cap.
    pub max_rounds: usize,
    /// Stop once a round gains less than this many bits.
    pub improve_tol: f64,
    /// Golden-section tolerance per threshold, in units of `sigma`.
    pub coord_tol: f64,
    /// Also start from rescaled benchmark thresholds and keep the best.
    pub multi_start: bool,
}

impl Default for ThreeBitOptions {
    fn default() -> Self {
        Self { max_rounds: 50, improve_tol: 1e-5, coord_tol: 1e-4, multi_start: false }
    }
}

/// Outcome of the 3-bit alternating optimisation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThreeBitDesign {
    /// Best thresholds found.
    pub quantizer: SymmetricQuantizer3Bit,
    /// Capacity with those thresholds.
    pub result: CapacityResult,
    /// Alternation rounds used by the winning start.
    pub rounds: usize,
    /// Capacity of the benchmark 8-PAM thresholds with an optimised input.
    pub initial_capacity: f64,
    /// Alternating optimisation only guarantees a local optimum. This is
    /// false only when several starts were run and all agreed.
    pub local_optimum: bool,
}

/// [`three_bit_optimize_with`] using the default [`ThreeBitOptions`].
pub fn three_bit_optimize(params: &ChannelParams, opts: &SolverOptions) -> Result<ThreeBitDesign> {
    three_bit_optimize_with(params, opts, &ThreeBitOptions::default())
}

/// Joint optimisation of the input law and the 3-bit thresholds.
///
/// Each round solves for the capacity-achieving input at the current
/// thresholds, then improves `q1`, `q2`, `q3` in turn by golden-section
/// search of the mutual information with that input held fixed, each within
/// the interval that keeps the thresholds ordered. Both steps never decrease
/// the objective.
pub fn three_bit_optimize_with(
    params: &ChannelParams,
    opts: &SolverOptions,
    design: &ThreeBitOptions,
) -> Result<ThreeBitDesign> {
    if params.power() <= 0.0 {
        return Err(Error::InvalidArgument("3-bit design needs positive power"));
    }
    if design.max_rounds == 0 || !(design.improve_tol > 0.0 && design.coord_tol > 0.0) {
        return Err(Error::InvalidOptions("3-bit rounds and tolerances must be positive"));
    }
    let bench = benchmark_pair(8, params)?;
    let t = bench.quantizer.thresholds();
    let base = [t[4], t[5], t[6]];
    let scales: &[f64] = if design.multi_start { &[1.0, 0.5, 0.75, 1.5, 2.0] } else { &[1.0] };
    let starts: Vec<[f64; 3]> = scales.iter().map(|s| base.map(|q| q * s)).collect();
    let runs = map_ordered(&starts, |start| alternate(params, opts, design, *start));
    let runs: Vec<(SymmetricQuantizer3Bit, CapacityResult, usize, f64)> = runs.into_iter().collect::<Result<_>>()?;

    let initial_capacity = runs[0].3;
    let values: Vec<f64> = runs.iter().map(|r| r.1.capacity).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let spread = values.iter().fold(0.0_f64, |m, v| m.max(values[best] - v));
    let local_optimum = runs.len() == 1 || spread > 10.0 * design.improve_tol;
    let (quantizer, result, rounds, _) = runs.into_iter().nth(best).expect("at least one start");
    Ok(ThreeBitDesign { quantizer, result, rounds, initial_capacity, local_optimum })
}

fn alternate(
    params: &ChannelParams,
    opts: &SolverOptions,
    design: &ThreeBitOptions,
    start: [f64; 3],
) -> Result<(SymmetricQuantizer3Bit, CapacityResult, usize, f64)> {
    let sigma = params.noise_std();
    let gap = 1e-6 * sigma;
    let mut q = SymmetricQuantizer3Bit::new(start[0], start[1], start[2])?;
    let mut result = capacity(params, &q.spec(), opts)?;
    let initial = result.capacity;
    let mut rounds = 0;
    while rounds < design.max_rounds {
        rounds += 1;
        let input = result.distribution.clone();
        let reach = input.points().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut levels = q.levels();
        for i in 0..3 {
            let lo = if i == 0 { 0.0 } else { levels[i - 1] } + gap;
            let hi = if i == 2 { (2.0 * levels[2]).max(reach + 4.0 * sigma) } else { levels[i + 1] } - gap;
            if hi <= lo {
                continue;
            }
            let current = levels[i];
            let objective = |t: f64| {
                let mut trial = levels;
                trial[i] = t;
                SymmetricQuantizer3Bit::new(trial[0], trial[1], trial[2])
                    .map_or(f64::NEG_INFINITY, |s| mutual_information(&input, &s.spec(), sigma))
            };
            let here = objective(current);
            let (t, value) = golden_max(objective, lo, hi, design.coord_tol * sigma);
            if value > here {
                levels[i] = t;
            }
        }
        let next = SymmetricQuantizer3Bit::new(levels[0], levels[1], levels[2])?;
        let solved = capacity(params, &next.spec(), opts)?;
        let gain = solved.capacity - result.capacity;
        if gain > 0.0 {
            q = next;
            result = solved;
        }
        if gain < design.improve_tol {
            break;
        }
    }
    Ok((q, result, rounds, initial))
}

/// Thresholds multiplied by `sqrt(r)`. Together with `(P, sigma^2) -> r (P,
/// sigma^2)` this leaves the capacity unchanged.
pub fn scale_quantizer(q: &QuantizerSpec, r: f64) -> Result<QuantizerSpec> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument("scale factor must be positive"));
    }
    let s = libm::sqrt(r);
    QuantizerSpec::new(q.thresholds().iter().map(|t| t * s).collect())
}
