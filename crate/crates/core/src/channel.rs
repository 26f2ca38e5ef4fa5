//! The AWGN channel with a quantized output.
//!
//! `Y = Q(X + N)` with `N ~ N(0, sigma^2)` and `Q` mapping the real line onto
//! `K` interval bins. Every quantity here is exact up to floating-point error:
//! inputs are discrete, so integrals over the input law become finite sums.
//! Information quantities are in bits.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::special::{db_to_linear, linear_to_db, normal_interval};

/// Transition probabilities below this are flushed to zero.
pub const PROB_FLOOR: f64 = 1e-300;

/// Average power `P` and noise variance `sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelParams {
    power: f64,
    noise_var: f64,
}

impl ChannelParams {
    /// Builds channel parameters from linear power and noise variance.
    pub fn new(power: f64, noise_var: f64) -> Result<Self> {
        if !(power.is_finite() && noise_var.is_finite() && power >= 0.0 && noise_var > 0.0) {
            return Err(Error::InvalidChannel);
        }
        Ok(Self { power, noise_var })
    }

    /// Power chosen so that `P / noise_var` equals `snr_db` in dB.
    pub fn from_snr_db(snr_db: f64, noise_var: f64) -> Result<Self> {
        Self::new(db_to_linear(snr_db) * noise_var, noise_var)
    }

    /// Unit noise variance at the given SNR in dB.
    pub fn unit_noise(snr_db: f64) -> Self {
        Self::from_snr_db(snr_db, 1.0).expect("finite SNR")
    }

    /// Average power constraint `P`.
    pub fn power(&self) -> f64 {
        self.power
    }

    /// Noise variance `sigma^2`.
    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Noise standard deviation `sigma`.
    pub fn noise_std(&self) -> f64 {
        libm::sqrt(self.noise_var)
    }

    /// Linear SNR `P / sigma^2`.
    pub fn snr(&self) -> f64 {
        self.power / self.noise_var
    }

    /// SNR in dB.
    pub fn snr_db(&self) -> f64 {
        linear_to_db(self.snr())
    }

    /// Both power and noise variance multiplied by `r`.
    pub fn scaled(&self, r: f64) -> Result<Self> {
        Self::new(self.power * r, self.noise_var * r)
    }
}

/// A K-bin interval quantizer given by its `K - 1` finite thresholds.
///
/// The sentinels `q_0 = -inf` and `q_K = +inf` are implicit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuantizerSpec {
    thresholds: Vec<f64>,
}

impl QuantizerSpec {
    /// Validates and wraps a threshold vector.
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::EmptyQuantizer);
        }
        if thresholds.iter().any(|t| !t.is_finite())
            || thresholds.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::ThresholdsNotIncreasing);
        }
        Ok(Self { thresholds })
    }

    /// The 1-bit quantizer with its threshold at zero.
    pub fn one_bit() -> Self {
        Self { thresholds: vec![0.0] }
    }

    /// Symmetric 2-bit quantizer `{-q, 0, q}`.
    pub fn symmetric_two_bit(q: f64) -> Result<Self> {
        Self::new(vec![-q, 0.0, q])
    }

    /// Number of bins `K`.
    pub fn bins(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// The ordered thresholds.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Largest gap-free check used by the solver: true if two thresholds
    /// are within `tol` of each other.
    pub fn has_near_duplicates(&self, tol: f64) -> bool {
        self.thresholds.windows(2).any(|w| w[1] - w[0] <= tol)
    }

    /// True when the threshold set is closed under negation.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.thresholds.len();
        (0..n).all(|i| (self.thresholds[i] + self.thresholds[n - 1 - i]).abs() <= tol)
    }

    /// Lowest and highest threshold.
    pub fn span(&self) -> (f64, f64) {
        (self.thresholds[0], self.thresholds[self.thresholds.len() - 1])
    }
}

/// A finitely supported input law.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InputDistribution {
    points: Vec<f64>,
    probs: Vec<f64>,
}

impl InputDistribution {
    /// Validates mass-point locations and probabilities.
    pub fn new(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if points.len() != probs.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), found: probs.len() });
        }
        if points.is_empty() {
            return Err(Error::InvalidDistribution("no mass points"));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite mass point"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution("points must be strictly increasing"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidDistribution("probability outside [0, 1]"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution("probabilities must sum to 1"));
        }
        Ok(Self { points, probs })
    }

    /// Equiprobable law on the given strictly increasing points.
    pub fn uniform(points: Vec<f64>) -> Result<Self> {
        let n = points.len().max(1);
        let probs = vec![1.0 / n as f64; points.len()];
        Self::new(points, probs)
    }

    /// Point mass at `x`.
    pub fn point_mass(x: f64) -> Self {
        Self { points: vec![x], probs: vec![1.0] }
    }

    /// Sorts, merges exact duplicates and renormalises. Used for solver
    /// iterates whose probabilities drift by rounding.
    pub(crate) fn from_weighted(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut probs: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, p) in pairs {
            if points.last() == Some(&x) {
                *probs.last_mut().unwrap() += p;
            } else {
                points.push(x);
                probs.push(p);
            }
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Self { points, probs }
    }

    /// Mass-point locations.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Probabilities, parallel to [`points`](Self::points).
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of mass points (including zero-probability ones).
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false for a validated distribution.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `E[X^2]`.
    pub fn avg_power(&self) -> f64 {
        self.points.iter().zip(&self.probs).map(|(x, p)| p * x * x).sum()
    }

    /// Entropy `H(X)` in bits.
    pub fn entropy(&self) -> f64 {
        self.probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * libm::log2(p)).sum()
    }

    /// Reflection `x -> -x`.
    pub fn negated(&self) -> Self {
        let points = self.points.iter().rev().map(|x| -x).collect();
        let probs = self.probs.iter().rev().copied().collect();
        Self { points, probs }
    }
}

/// Row `j`, column `i` holds `W_i(x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    bins: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Evaluates the transition rows for every point.
    pub fn new(points: &[f64], quantizer: &QuantizerSpec, noise_std: f64) -> Self {
        let bins = quantizer.bins();
        let mut data = vec![0.0; points.len() * bins];
        for (x, row) in points.iter().zip(data.chunks_exact_mut(bins)) {
            fill_transition_row(*x, quantizer.thresholds(), noise_std, row);
        }
        Self { bins, data }
    }

    /// Number of output bins `K`.
    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Number of input rows.
    pub fn rows(&self) -> usize {
        self.data.len() / self.bins
    }

    /// Row `j`.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.bins..(j + 1) * self.bins]
    }

    /// Iterator over rows.
    pub fn iter_rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.bins)
    }
}

/// Output PMF `R(y_i; F)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutputPmf {
    /// One probability per bin.
    pub probs: Vec<f64>,
}

pub(crate) fn fill_transition_row(x: f64, thresholds: &[f64], noise_std: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), thresholds.len() + 1);
    let mut lo = f64::NEG_INFINITY;
    for (i, slot) in out.iter_mut().enumerate() {
        let hi = thresholds.get(i).map_or(f64::INFINITY, |q| (q - x) / noise_std);
        let w = normal_interval(lo, hi);
        *slot = if w < PROB_FLOOR { 0.0 } else { w };
        lo = hi;
    }
}

/// `W_i(x)` for every bin `i`.
pub fn transition_row(x: f64, quantizer: &QuantizerSpec, noise_std: f64) -> Vec<f64> {
    let mut row = vec![0.0; quantizer.bins()];
    fill_transition_row(x, quantizer.thresholds(), noise_std, &mut row);
    row
}

/// `R(y_i) = sum_j p_j W_i(x_j)`.
pub fn output_pmf(input: &InputDistribution, w: &TransitionMatrix) -> Result<OutputPmf> {
    if w.rows() != input.len() {
        return Err(Error::DimensionMismatch { expected: input.len(), found: w.rows() });
    }
    let mut probs = vec![0.0; w.bins()];
    mix_rows(input.probs(), w, &mut probs);
    Ok(OutputPmf { probs })
}

pub(crate) fn mix_rows(weights: &[f64], w: &TransitionMatrix, out: &mut [f64]) {
    out.iter_mut().for_each(|r| *r = 0.0);
    for (p, row) in weights.iter().zip(w.iter_rows()) {
        for (r, wi) in out.iter_mut().zip(row) {
            *r += p * wi;
        }
    }
}

/// `sum_i w_i log2(w_i / r_i)` with `0 log 0 = 0` and `w log(w/0) = +inf`.
pub fn kl_bits(w: &[f64], r: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&wi, &ri) in w.iter().zip(r) {
        if wi > 0.0 {
            if ri <= 0.0 {
                return f64::INFINITY;
            }
            d += wi * (libm::log2(wi) - libm::log2(ri));
        }
    }
    d
}

/// Mutual information `I(F)` in bits per channel use.
pub fn mutual_information(input: &InputDistribution, quantizer: &QuantizerSpec, noise_std: f64) -> f64 {
    let w = TransitionMatrix::new(input.points(), quantizer, noise_std);
    mutual_information_with(input.probs(), &w)
}

pub(crate) fn mutual_information_with(probs: &[f64], w: &TransitionMatrix) -> f64 {
    let mut r = vec![0.0; w.bins()];
    mix_rows(probs, w, &mut r);
    let i: f64 = probs
        .iter()
        .zip(w.iter_rows())
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, row)| p * kl_bits(row, &r))
        .sum();
    i.max(0.0)
}

/// Divergence `d(x;F)` between `W(.|x)` and the output PMF, in bits.
///
/// Returns `+inf` when `x` reaches a bin that `F` never reaches.
pub fn divergence(x: f64, input: &InputDistribution, quantizer: &QuantizerSpec, noise_std: f64) -> f64 {
    let w = TransitionMatrix::new(input.points(), quantizer, noise_std);
    let mut r = vec![0.0; w.bins()];
    mix_rows(input.probs(), &w, &mut r);
    kl_bits(&transition_row(x, quantizer, noise_std), &r)
}
