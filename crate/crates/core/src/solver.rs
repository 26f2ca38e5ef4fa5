//! Capacity of the quantized-output channel for a fixed quantizer.
//!
//! The input law is searched over finite supports. For a fixed support the
//! power-penalised Blahut-Arimoto update
//!
//! ```text
//! p_j <- p_j * 2^(d(x_j;F) - gamma * x_j^2) / Z
//! ```
//!
//! maximises `I(F) - gamma * E[X^2]`; `gamma` is then tuned so the power
//! constraint binds. The outer loop evaluates the KKT function
//! `g(x) = d(x;F) + gamma (P - x^2) - I(F)` on a dense grid and adds the
//! violating local maxima to the support until `max g <= kkt_tol`. Between
//! cuts the support is polished by Newton's method on the stationarity
//! conditions, which collapses clusters of grid hits onto single mass points.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{
    fill_transition_row, kl_bits, mix_rows, mutual_information_with, ChannelParams, InputDistribution, QuantizerSpec,
    TransitionMatrix,
};
use crate::error::{Error, Result};
use crate::special::{binary_entropy, golden_max, normal_pdf, qfunc};

mod polish;
mod reduce;

/// Numerical knobs for [`capacity`]. Lengths are in units of `sigma`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverOptions {
    /// Minimum reach of the candidate grid beyond the outermost thresholds.
    pub grid_half_width: f64,
    /// Candidate grid spacing.
    pub grid_step: f64,
    /// KKT violation tolerance, bits.
    pub kkt_tol: f64,
    /// Allowed power excess relative to `P`.
    pub power_tol: f64,
    /// Cutting-plane iteration cap.
    pub max_outer_iters: usize,
    /// Mass points lighter than this are dropped.
    pub prune_prob: f64,
    /// Mass points closer than this are merged into their centroid.
    pub merge_dist: f64,
    /// Sup-norm stopping tolerance of the inner fixed point.
    pub inner_tol: f64,
    /// Inner fixed-point iteration cap.
    pub max_inner_iters: usize,
    /// Mass points closer than this are treated as one cluster when the
    /// support is polished by Newton's method.
    pub cluster_dist: f64,
    /// Polish each support with Newton's method on the stationarity system.
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_half_width: 10.0,
            grid_step: 0.01,
            kkt_tol: 1e-6,
            power_tol: 1e-8,
            max_outer_iters: 200,
            prune_prob: 1e-7,
            merge_dist: 1e-6,
            inner_tol: 1e-10,
            max_inner_iters: 200_000,
            cluster_dist: 0.05,
            polish: true,
        }
    }
}

impl SolverOptions {
    /// Checks ranges.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.grid_half_width,
            self.grid_step,
            self.kkt_tol,
            self.power_tol,
            self.prune_prob,
            self.merge_dist,
            self.inner_tol,
            self.cluster_dist,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidOptions("tolerances and grid sizes must be positive"));
        }
        if self.grid_step >= self.grid_half_width {
            return Err(Error::InvalidOptions("grid_step must be smaller than grid_half_width"));
        }
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 {
            return Err(Error::InvalidOptions("iteration caps must be positive"));
        }
        Ok(())
    }
}

/// Output of a capacity computation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CapacityResult {
    /// Capacity (or best mutual information found), bits per channel use.
    pub capacity: f64,
    /// Input law achieving it.
    pub distribution: InputDistribution,
    /// Lagrange multiplier of the power constraint, bits per unit power.
    pub gamma: f64,
    /// `max_x d(x;F) + gamma (P - x^2) - I(F)` over the certification grid.
    pub kkt_slack: f64,
    /// `E[X^2]` under `distribution`.
    pub power_used: f64,
    /// Cutting-plane iterations used.
    pub outer_iters: usize,
    /// True when the KKT slack met the tolerance.
    pub converged: bool,
}

/// Region outside of which the KKT condition cannot hold with equality.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupportBound {
    /// Lower support bound `A1*`.
    pub lower: f64,
    /// Upper support bound `A2*`.
    pub upper: f64,
    /// `L = -log2 R(y_K;F)`, the limit of `d(x;F)` as `x -> +inf`.
    pub saturation_level: f64,
    /// `A0`: beyond it `d(x;F) < L` on the scan grid.
    pub onset: f64,
    /// `-log2 R(y_1;F)`, the limit as `x -> -inf`.
    pub lower_saturation_level: f64,
    /// Mirror of `onset` for the lower tail.
    pub lower_onset: f64,
}

/// KKT residuals of a candidate solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktCertificate {
    /// Largest value of the KKT function over the grid.
    pub max_slack: f64,
    /// Grid point attaining `max_slack`.
    pub argmax: f64,
    /// Largest `|g(x_j)|` over mass points with positive probability.
    pub support_residual: f64,
}

/// Capacity of the 1-bit quantizer with threshold at zero.
///
/// Antipodal signalling at `+-sqrt(P)` is optimal, giving
/// `C = 1 - h(Q(sqrt(SNR)))`. `gamma` makes `g'(sqrt(P)) = 0`.
pub fn one_bit_capacity(params: &ChannelParams) -> CapacityResult {
    let a = libm::sqrt(params.power());
    let sigma = params.noise_std();
    let crossover = qfunc(a / sigma);
    let capacity = 1.0 - binary_entropy(crossover);
    let gamma = if a > 0.0 {
        // d(x) = 1 - h(Q(x/sigma)), d'(x) = log2((1-w)/w) phi(x/sigma) / sigma
        let slope = libm::log2((1.0 - crossover) / crossover) * normal_pdf(a / sigma) / sigma;
        slope / (2.0 * a)
    } else {
        0.0
    };
    let distribution = if a > 0.0 {
        InputDistribution::uniform(vec![-a, a]).expect("antipodal points")
    } else {
        InputDistribution::point_mass(0.0)
    };
    let quantizer = QuantizerSpec::one_bit();
    let mut result = CapacityResult {
        capacity,
        power_used: distribution.avg_power(),
        distribution,
        gamma,
        kkt_slack: 0.0,
        outer_iters: 0,
        converged: true,
    };
    let grid = default_grid(params, &quantizer, &SolverOptions::default(), None);
    result.kkt_slack = kkt_certify(&result, params, &quantizer, &grid);
    result
}

/// Inner solver state for one fixed support.
struct FixedSupport {
    w: TransitionMatrix,
    wlogw: Vec<f64>,
    x2: Vec<f64>,
}

impl FixedSupport {
    fn new(points: &[f64], quantizer: &QuantizerSpec, sigma: f64) -> Self {
        let w = TransitionMatrix::new(points, quantizer, sigma);
        let wlogw = w.iter_rows().map(row_wlogw).collect();
        let x2 = points.iter().map(|x| x * x).collect();
        Self { w, wlogw, x2 }
    }

    fn len(&self) -> usize {
        self.x2.len()
    }

    fn power(&self, p: &[f64]) -> f64 {
        p.iter().zip(&self.x2).map(|(p, x2)| p * x2).sum()
    }

    /// Divergences `d(x_j;F)` and mutual information for weights `p`.
    fn divergences(&self, p: &[f64], r: &mut [f64], d: &mut [f64]) -> f64 {
        mix_rows(p, &self.w, r);
        let log_r: Vec<f64> = r.iter().map(|&ri| if ri > 0.0 { libm::log2(ri) } else { 0.0 }).collect();
        let mut info = 0.0;
        for (j, row) in self.w.iter_rows().enumerate() {
            let cross: f64 = row.iter().zip(&log_r).map(|(w, l)| w * l).sum();
            d[j] = self.wlogw[j] - cross;
            info += p[j] * d[j];
        }
        info
    }

    /// One multiplicative update `out = T(p)`. Returns the penalised
    /// objective at `p` and the duality gap bounding its distance to the
    /// optimum.
    fn update(&self, p: &[f64], gamma: f64, r: &mut [f64], d: &mut [f64], out: &mut [f64]) -> (f64, f64) {
        let info = self.divergences(p, r, d);
        let objective = info - gamma * self.power(p);
        let vmax = d
            .iter()
            .zip(&self.x2)
            .map(|(d, x2)| d - gamma * x2)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for j in 0..p.len() {
            out[j] = p[j] * libm::exp2(d[j] - gamma * self.x2[j] - vmax);
            total += out[j];
        }
        out.iter_mut().for_each(|v| *v /= total);
        (objective, vmax - objective)
    }

    /// Fixed point for `max I(F) - gamma E[X^2]` on this support, with
    /// squared extrapolation (SQUAREM) over pairs of updates. The plain
    /// update converges linearly and very slowly once a weight heads for a
    /// tiny value.
    ///
    /// Returns whether the duality gap or the weight change met its tolerance.
    fn solve(&self, p: &mut [f64], gamma: f64, tol: f64, max_iters: usize) -> bool {
        let n = self.len();
        let mut r = vec![0.0; self.w.bins()];
        let mut d = vec![0.0; n];
        let mut p1 = vec![0.0; n];
        let mut p2 = vec![0.0; n];
        let mut q = vec![0.0; n];
        let mut prev_objective = f64::NEG_INFINITY;
        let mut iters = 0;
        while iters < max_iters {
            let (objective, gap) = self.update(p, gamma, &mut r, &mut d, &mut p1);
            iters += 1;
            debug_assert!(
                objective >= prev_objective - 1e-11 * (1.0 + objective.abs()),
                "penalised objective decreased: {prev_objective} -> {objective}"
            );
            prev_objective = objective;
            if gap <= 1e-13 {
                return true;
            }
            let change = p.iter().zip(&p1).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            if change < tol {
                p.copy_from_slice(&p1);
                return true;
            }
            let (objective1, _) = self.update(&p1, gamma, &mut r, &mut d, &mut p2);
            iters += 1;

            let mut rn = 0.0;
            let mut vn = 0.0;
            for j in 0..n {
                let rj = p1[j] - p[j];
                let vj = p2[j] - 2.0 * p1[j] + p[j];
                rn += rj * rj;
                vn += vj * vj;
            }
            let mut alpha = if vn > 0.0 { -libm::sqrt(rn / vn) } else { -1.0 };
            let mut accepted = false;
            while alpha < -1.01 {
                let mut positive = true;
                for j in 0..n {
                    let rj = p1[j] - p[j];
                    let vj = p2[j] - 2.0 * p1[j] + p[j];
                    q[j] = p[j] - 2.0 * alpha * rj + alpha * alpha * vj;
                    positive &= q[j] > 0.0;
                }
                if positive {
                    let total: f64 = q.iter().sum();
                    q.iter_mut().for_each(|v| *v /= total);
                    let (objective_q, _) = self.update(&q, gamma, &mut r, &mut d, &mut p1);
                    iters += 1;
                    // T never decreases the objective, so T(q) beats p2
                    // whenever q already beats p1.
                    if objective_q >= objective1 {
                        p.copy_from_slice(&p1);
                        accepted = true;
                    }
                    break;
                }
                alpha = 0.5 * (alpha - 1.0);
            }
            if !accepted {
                p.copy_from_slice(&p2);
            }
        }
        false
    }
}

fn row_wlogw(row: &[f64]) -> f64 {
    row.iter().filter(|w| **w > 0.0).map(|w| w * libm::log2(*w)).sum()
}

/// Maximiser of `I(F) - gamma (E[X^2] - P)` on a fixed support.
///
/// Returns the weights and a flag that is false when the iteration cap hit
/// before the sup-norm change dropped below `opts.inner_tol`.
pub fn constrained_fixed_point(
    points: &[f64],
    params: &ChannelParams,
    quantizer: &QuantizerSpec,
    gamma: f64,
    opts: &SolverOptions,
) -> Result<(InputDistribution, bool)> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidArgument("gamma must be finite and non-negative"));
    }
    if points.is_empty() || points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidDistribution("points must be strictly increasing"));
    }
    let support = FixedSupport::new(points, quantizer, params.noise_std());
    let mut p = vec![1.0 / points.len() as f64; points.len()];
    let converged = support.solve(&mut p, gamma, opts.inner_tol, opts.max_inner_iters);
    let dist = InputDistribution::from_weighted(points.iter().copied().zip(p).collect());
    Ok((dist, converged))
}

struct PowerSolve {
    gamma: f64,
    power: f64,
    converged: bool,
}

/// Tunes `gamma` so that the penalised optimum meets `E[X^2] <= P`.
///
/// `gamma = 0` is kept when the unpenalised optimum already satisfies the
/// constraint. Otherwise the root of `power(gamma) = P` is bracketed by
/// doubling and then located with Illinois-type false position, which keeps
/// the bracket like bisection but converges much faster on this smooth
/// monotone curve.
fn solve_power_constrained(
    support: &FixedSupport,
    p: &mut Vec<f64>,
    target: f64,
    gamma_hint: f64,
    opts: &SolverOptions,
) -> Result<PowerSolve> {
    let limit = target * (1.0 + opts.power_tol);
    let min_x2 = support.x2.iter().copied().fold(f64::INFINITY, f64::min);
    if min_x2 > limit {
        return Err(Error::PowerInfeasible);
    }
    let eval = |gamma: f64, p: &mut Vec<f64>| -> (f64, bool) {
        let converged = support.solve(p, gamma, opts.inner_tol, opts.max_inner_iters);
        (support.power(p), converged)
    };

    // A weight that underflowed to zero can never come back under the
    // multiplicative update.
    let floor = 1e-300_f64.max(1e-15 / p.len() as f64);
    if p.iter().any(|v| *v < floor) {
        p.iter_mut().for_each(|v| *v = v.max(floor));
        renormalise(p);
    }
    let start = p.clone();
    let (power0, conv0) = eval(0.0, p);
    if power0 <= limit {
        return Ok(PowerSolve { gamma: 0.0, power: power0, converged: conv0 });
    }

    let mut lo = (0.0, power0 - target, p.clone());
    let mut gamma = gamma_hint.max(1e-6 / target.max(1e-300));
    let mut trial = start;
    let mut hi;
    let mut doublings = 0;
    loop {
        let (power, conv) = eval(gamma, &mut trial);
        if power <= limit {
            hi = (gamma, power - target, trial.clone(), conv);
            break;
        }
        lo = (gamma, power - target, trial.clone());
        gamma *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::PowerInfeasible);
        }
    }
    if hi.1 >= -opts.power_tol * target {
        *p = hi.2;
        return Ok(PowerSolve { gamma: hi.0, power: hi.1 + target, converged: hi.3 });
    }

    let mut side = 0i8;
    for _ in 0..200 {
        let (g_lo, f_lo, _) = (&lo.0, lo.1, ());
        let (g_hi, f_hi) = (hi.0, hi.1);
        let mut g = g_hi - f_hi * (g_hi - *g_lo) / (f_hi - f_lo);
        if !(g > *g_lo && g < g_hi) {
            g = 0.5 * (*g_lo + g_hi);
        }
        // Warm start from the endpoint nearer in gamma.
        let mut q = if g - *g_lo < g_hi - g { lo.2.clone() } else { hi.2.clone() };
        let (power, conv) = eval(g, &mut q);
        let f = power - target;
        if f > 0.0 {
            lo = (g, f, q);
            if side == -1 {
                hi.1 *= 0.5;
            }
            side = -1;
        } else {
            hi = (g, f, q, conv);
            if side == 1 {
                lo.1 *= 0.5;
            }
            side = 1;
        }
        let feasible = power <= limit;
        if (feasible && f.abs() <= opts.power_tol * target) || (hi.0 - lo.0) <= 1e-15 * hi.0 {
            break;
        }
    }
    // Rows of W can be linearly dependent on a fixed support, which makes
    // power(gamma) jump. Both bracket ends are then optimal for nearly the
    // same multiplier and the mixture hitting P exactly is at least as good.
    let p_hi = support.power(&hi.2);
    let p_lo = support.power(&lo.2);
    if p_hi < target * (1.0 - opts.power_tol) && p_lo > target {
        let t = (target - p_hi) / (p_lo - p_hi);
        for (h, l) in hi.2.iter_mut().zip(&lo.2) {
            *h = t * l + (1.0 - t) * *h;
        }
    }
    let power = support.power(&hi.2);
    *p = hi.2;
    Ok(PowerSolve { gamma: hi.0, power, converged: hi.3 })
}

/// Symmetric grid `k * step` covering `[lo, hi]`.
fn aligned_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k0 = libm::ceil(lo / step) as i64;
    let k1 = libm::floor(hi / step) as i64;
    (k0..=k1).map(|k| k as f64 * step).collect()
}

/// Distance past the outermost threshold, in `sigma`, after which the
/// extreme transition probability is 1 in double precision.
const SATURATION_SPAN: f64 = 40.0;

/// Default certification grid: step `grid_step * sigma`, covering the
/// thresholds plus `grid_half_width * sigma`, `+-3 sqrt(P)` and, when given,
/// a support bound.
pub fn default_grid(
    params: &ChannelParams,
    quantizer: &QuantizerSpec,
    opts: &SolverOptions,
    bound: Option<&SupportBound>,
) -> Vec<f64> {
    let sigma = params.noise_std();
    let (q_lo, q_hi) = quantizer.span();
    let reach = 3.0 * libm::sqrt(params.power());
    let mut lo = (q_lo - opts.grid_half_width * sigma).min(-reach);
    let mut hi = (q_hi + opts.grid_half_width * sigma).max(reach);
    if let Some(b) = bound {
        // Past the saturation onset d(x;F) sits at its limit and the KKT
        // function only falls with |x|, so a huge bound (tiny gamma) need not
        // be gridded beyond that.
        let cap = SATURATION_SPAN * sigma + reach;
        lo = lo.min(b.lower.max(q_lo - cap));
        hi = hi.max(b.upper.min(q_hi + cap));
    }
    aligned_grid(lo, hi, opts.grid_step * sigma)
}

/// Precomputed transition rows on the certification grid.
struct GridCache {
    xs: Vec<f64>,
    w: TransitionMatrix,
    wlogw: Vec<f64>,
}

impl GridCache {
    fn new(xs: Vec<f64>, quantizer: &QuantizerSpec, sigma: f64) -> Self {
        let w = TransitionMatrix::new(&xs, quantizer, sigma);
        let wlogw = w.iter_rows().map(row_wlogw).collect();
        Self { xs, w, wlogw }
    }

    fn covers(&self, lo: f64, hi: f64) -> bool {
        self.xs.first().is_some_and(|&a| a <= lo) && self.xs.last().is_some_and(|&b| b >= hi)
    }

    /// `d(x;F)` at every grid point.
    fn divergences(&self, kkt: &KktFunction) -> Vec<f64> {
        self.w
            .iter_rows()
            .zip(&self.wlogw)
            .map(|(row, wlogw)| kkt.divergence_from_row(row, *wlogw))
            .collect()
    }

    /// Max of the KKT function over the grid; ties go to the smallest `|x|`.
    fn scan(&self, kkt: &KktFunction) -> (f64, f64) {
        scan_divergences(&self.xs, &self.divergences(kkt), kkt.gamma, kkt.power, kkt.info)
    }

    /// Grid plus the mass points and close neighbours of each, sorted, with
    /// their divergences. The neighbours matter when `g` touches zero at a
    /// mass point for every `gamma` (symmetric pairs at `x^2 = P`): only its
    /// slope there then pins the multiplier.
    fn with_support(&self, kkt: &KktFunction, support: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let spacing = if self.xs.len() > 1 { self.xs[1] - self.xs[0] } else { 1e-2 };
        let mut pairs: Vec<(f64, f64)> = self.xs.iter().copied().zip(self.divergences(kkt)).collect();
        for &x in support {
            for dx in [0.0, spacing / 16.0, -spacing / 16.0, spacing / 256.0, -spacing / 256.0] {
                pairs.push((x + dx, kkt.divergence(x + dx)));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    }

    /// Max of the KKT function over the grid, the mass points and the
    /// continuous peaks next to the highest grid maxima. A peak between two
    /// grid points can sit a few `1e-6` above both of them.
    fn slack(&self, kkt: &KktFunction, support: &[f64], peaks: usize) -> (f64, f64) {
        let (xs, div) = self.with_support(kkt, support);
        let g: Vec<f64> = xs.iter().zip(&div).map(|(x, d)| d + kkt.gamma * (kkt.power - x * x) - kkt.info).collect();
        let (mut best, mut arg) = scan_divergences(&xs, &div, kkt.gamma, kkt.power, kkt.info);
        let n = g.len();
        let mut local: Vec<usize> = (0..n)
            .filter(|&i| (i == 0 || g[i] >= g[i - 1]) && (i + 1 == n || g[i] >= g[i + 1]))
            .filter(|&i| g[i].is_finite())
            .collect();
        local.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
        for &i in local.iter().take(peaks) {
            let lo = xs[i.saturating_sub(1)];
            let hi = xs[(i + 1).min(n - 1)];
            if hi > lo {
                let (x, v) = golden_max(|t| kkt.eval(t), lo, hi, 1e-7 * (hi - lo));
                if v > best {
                    best = v;
                    arg = x;
                }
            }
        }
        (best, arg)
    }

    /// Grid local maxima of the KKT function above `tol`, worst first, at
    /// most `limit` of them.
    fn violators(&self, kkt: &KktFunction, sigma: f64, tol: f64, limit: usize) -> Vec<f64> {
        let div = self.divergences(kkt);
        let g: Vec<f64> = self
            .xs
            .iter()
            .zip(&div)
            .map(|(x, d)| d + kkt.gamma * (kkt.power - x * x) - kkt.info)
            .collect();
        let n = g.len();
        // A peak has to stand clear of its neighbourhood; this keeps the
        // flat saturated tails from contributing a cut at every grid point.
        let spacing = if n > 1 { self.xs[1] - self.xs[0] } else { sigma };
        let reach = (libm::ceil(0.2 * sigma / spacing) as usize).max(1);
        let prominent = |i: usize| {
            let lo = i.saturating_sub(reach);
            let hi = (i + reach).min(n - 1);
            let floor = g[lo..=hi].iter().copied().fold(f64::INFINITY, f64::min);
            g[i] - floor > 1e-9
        };
        let mut peaks: Vec<(f64, f64)> = (0..n)
            .filter(|&i| g[i] > tol)
            .filter(|&i| (i == 0 || g[i] >= g[i - 1]) && (i + 1 == n || g[i] > g[i + 1]))
            .filter(|&i| prominent(i))
            .map(|i| (g[i], self.xs[i]))
            .collect();
        peaks.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.abs().total_cmp(&b.1.abs())));
        peaks.truncate(limit);
        peaks.into_iter().map(|(_, x)| x).collect()
    }
}

fn scan_divergences(xs: &[f64], div: &[f64], gamma: f64, power: f64, info: f64) -> (f64, f64) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0.0_f64;
    for (&x, &d) in xs.iter().zip(div) {
        let g = d + gamma * (power - x * x) - info;
        if g > best || (g == best && x.abs() < arg.abs()) {
            best = g;
            arg = x;
        }
    }
    (best, arg)
}

/// Multiplier minimising the grid KKT violation for a frozen `F`.
///
/// `max_x d(x;F) - I + gamma (P - x^2)` is convex in `gamma`; its subgradient
/// is `P - x*^2` at the maximiser, so bisection on the sign finds the minimum.
/// When several mass points share `|x|` the power constraint alone leaves
/// `gamma` undetermined, and this picks the certifying one.
fn calibrate_gamma(xs: &[f64], div: &[f64], power: f64, info: f64, hint: f64) -> f64 {
    let slope = |gamma: f64| {
        let (_, arg) = scan_divergences(xs, div, gamma, power, info);
        power - arg * arg
    };
    if slope(0.0) >= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = if hint > 0.0 { 2.0 * hint } else { 1e-3 / power.max(1e-300) };
    let mut tries = 0;
    while slope(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return hi;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let f = |gamma: f64| scan_divergences(xs, div, gamma, power, info).0;
    if f(lo) <= f(hi) {
        lo
    } else {
        hi
    }
}

/// `g(x) = d(x;F) + gamma (P - x^2) - I(F)` for a frozen `F`.
struct KktFunction<'a> {
    thresholds: &'a [f64],
    sigma: f64,
    r: Vec<f64>,
    log_r: Vec<f64>,
    gamma: f64,
    power: f64,
    info: f64,
}

impl<'a> KktFunction<'a> {
    fn new(
        dist: &InputDistribution,
        quantizer: &'a QuantizerSpec,
        sigma: f64,
        gamma: f64,
        power: f64,
    ) -> Self {
        let w = TransitionMatrix::new(dist.points(), quantizer, sigma);
        let mut r = vec![0.0; quantizer.bins()];
        mix_rows(dist.probs(), &w, &mut r);
        let info: f64 = dist
            .probs()
            .iter()
            .zip(w.iter_rows())
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, row)| p * kl_bits(row, &r))
            .sum();
        let log_r = r.iter().map(|&ri| if ri > 0.0 { libm::log2(ri) } else { f64::NEG_INFINITY }).collect();
        Self { thresholds: quantizer.thresholds(), sigma, r, log_r, gamma, power, info: info.max(0.0) }
    }

    fn divergence_from_row(&self, row: &[f64], wlogw: f64) -> f64 {
        let mut cross = 0.0;
        for (w, l) in row.iter().zip(&self.log_r) {
            if *w > 0.0 {
                if *l == f64::NEG_INFINITY {
                    return f64::INFINITY;
                }
                cross += w * l;
            }
        }
        wlogw - cross
    }

    fn divergence(&self, x: f64) -> f64 {
        let mut row = vec![0.0; self.r.len()];
        fill_transition_row(x, self.thresholds, self.sigma, &mut row);
        let wlogw = row_wlogw(&row);
        self.divergence_from_row(&row, wlogw)
    }

    fn eval(&self, x: f64) -> f64 {
        self.divergence(x) + self.gamma * (self.power - x * x) - self.info
    }
}

/// KKT residuals of `result` on `grid`.
pub fn kkt_certificate(
    result: &CapacityResult,
    params: &ChannelParams,
    quantizer: &QuantizerSpec,
    grid: &[f64],
) -> KktCertificate {
    let kkt = KktFunction::new(
        &result.distribution,
        quantizer,
        params.noise_std(),
        result.gamma,
        params.power(),
    );
    let cache = GridCache::new(grid.to_vec(), quantizer, params.noise_std());
    let (max_slack, argmax) = cache.scan(&kkt);
    let support_residual = result
        .distribution
        .points()
        .iter()
        .zip(result.distribution.probs())
        .filter(|(_, p)| **p > 0.0)
        .map(|(x, _)| kkt.eval(*x).abs())
        .fold(0.0, f64::max);
    KktCertificate { max_slack, argmax, support_residual }
}

/// Largest KKT violation `max_x d(x;F) + gamma (P - x^2) - I(F)` on `grid`.
pub fn kkt_certify(
    result: &CapacityResult,
    params: &ChannelParams,
    quantizer: &QuantizerSpec,
    grid: &[f64],
) -> f64 {
    kkt_certificate(result, params, quantizer, grid).max_slack
}

/// Support bound of the current iterate, default scan settings.
pub fn support_bound(
    input: &InputDistribution,
    params: &ChannelParams,
    quantizer: &QuantizerSpec,
    gamma: f64,
) -> Result<SupportBound> {
    support_bound_with(input, params, quantizer, gamma, &SolverOptions::default())
}

/// Numerical support bound `[A1*, A2*]`.
///
/// The divergence tail is scanned on the solver grid from the outermost
/// threshold until the extreme bin swallows all but `1e-15` of the mass. If
/// that does not happen within `grid_half_width` the range is doubled once.
pub fn support_bound_with(
    input: &InputDistribution,
    params: &ChannelParams,
    quantizer: &QuantizerSpec,
    gamma: f64,
    opts: &SolverOptions,
) -> Result<SupportBound> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidArgument("gamma must be finite and non-negative"));
    }
    let sigma = params.noise_std();
    let kkt = KktFunction::new(input, quantizer, sigma, gamma, params.power());
    let capacity = kkt.info;
    let k = quantizer.bins();
    let upper_level = -kkt.log_r[k - 1];
    let lower_level = -kkt.log_r[0];
    if !(upper_level.is_finite() && lower_level.is_finite()) {
        return Err(Error::InvalidArgument("input leaves an extreme output bin unreachable"));
    }
    let (q_lo, q_hi) = quantizer.span();
    let step = opts.grid_step * sigma;

    let scan = |start: f64, dir: f64, level: f64| -> Result<f64> {
        let mut width = opts.grid_half_width * sigma;
        for _ in 0..2 {
            let n = libm::ceil(width / step) as usize;
            let mut onset = start + dir * step;
            let mut saturated = false;
            let mut row = vec![0.0; k];
            for i in 1..=n {
                let x = start + dir * step * i as f64;
                fill_transition_row(x, quantizer.thresholds(), sigma, &mut row);
                let d = kkt.divergence_from_row(&row, row_wlogw(&row));
                if d - level > 1e-14 * (1.0 + level) {
                    onset = x + dir * step;
                }
                let extreme = if dir > 0.0 { row[k - 1] } else { row[0] };
                if extreme >= 1.0 - 1e-15 {
                    saturated = true;
                    break;
                }
            }
            if saturated {
                return Ok(onset);
            }
            width *= 2.0;
        }
        Err(Error::SupportBoundUnsaturated)
    };

    let onset = scan(q_hi, 1.0, upper_level)?;
    let lower_onset = scan(q_lo, -1.0, lower_level)?;
    let power = params.power();
    let reach = |level: f64| -> Option<f64> {
        if gamma > 0.0 && capacity <= level + gamma * power {
            Some(libm::sqrt((level + gamma * power - capacity) / gamma))
        } else {
            None
        }
    };
    let upper = reach(upper_level).map_or(onset, |a| a.max(onset));
    let lower = reach(lower_level).map_or(lower_onset, |a| (-a).min(lower_onset));
    Ok(SupportBound {
        lower,
        upper,
        saturation_level: upper_level,
        onset,
        lower_saturation_level: lower_level,
        lower_onset,
    })
}

/// Initial support: `+-sqrt(P)` and the midpoints of adjacent thresholds.
fn initial_support(params: &ChannelParams, quantizer: &QuantizerSpec, reach: f64) -> Vec<f64> {
    let a = libm::sqrt(params.power());
    let mut pts = vec![-a, a];
    for w in quantizer.thresholds().windows(2) {
        pts.push((0.5 * (w[0] + w[1])).clamp(-reach, reach));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// One point inside each bin with zero output probability: the finite edge
/// of an outer bin, the midpoint of an inner one.
fn dead_bin_seeds(r: &[f64], thresholds: &[f64]) -> Vec<f64> {
    let k = r.len();
    (0..k)
        .filter(|&i| r[i] <= 0.0)
        .map(|i| match i {
            0 => thresholds[0],
            _ if i == k - 1 => thresholds[k - 2],
            _ => 0.5 * (thresholds[i - 1] + thresholds[i]),
        })
        .collect()
}

/// Merges points closer than `dist` into their probability-weighted centroid.
fn merge_close(points: &mut Vec<f64>, probs: &mut Vec<f64>, dist: f64) {
    let mut out_x: Vec<f64> = Vec::with_capacity(points.len());
    let mut out_p: Vec<f64> = Vec::with_capacity(points.len());
    for (&x, &p) in points.iter().zip(probs.iter()) {
        match (out_x.last_mut(), out_p.last_mut()) {
            (Some(lx), Some(lp)) if x - *lx < dist => {
                let total = *lp + p;
                if total > 0.0 {
                    *lx = (*lx * *lp + x * p) / total;
                }
                *lp = total;
            }
            _ => {
                out_x.push(x);
                out_p.push(p);
            }
        }
    }
    *points = out_x;
    *probs = out_p;
}

struct Snapshot<'a> {
    dist: InputDistribution,
    kkt: KktFunction<'a>,
}

impl<'a> Snapshot<'a> {
    fn new(
        points: &[f64],
        probs: &[f64],
        quantizer: &'a QuantizerSpec,
        sigma: f64,
        gamma: f64,
        power: f64,
    ) -> Self {
        let dist = InputDistribution::from_weighted(points.iter().copied().zip(probs.iter().copied()).collect());
        let kkt = KktFunction::new(&dist, quantizer, sigma, gamma, power);
        Self { dist, kkt }
    }

    /// Replaces the inner-solver multiplier by the grid-calibrated one when
    /// the power constraint is active; an inactive constraint forces zero.
    ///
    /// The mass points join the grid: with the power constraint tight,
    /// `sum p_j g(x_j) = 0` for every `gamma`, which pins the minimiser to
    /// the multiplier that makes `g` vanish on the support.
    fn calibrate(&mut self, cache: &GridCache, active: bool) {
        self.kkt.gamma = if active {
            let (xs, div) = cache.with_support(&self.kkt, self.dist.points());
            calibrate_gamma(&xs, &div, self.kkt.power, self.kkt.info, self.kkt.gamma)
        } else {
            0.0
        };
    }
}

/// Capacity `sup I(F)` over `E[X^2] <= P` for a fixed quantizer.
pub fn capacity(
    params: &ChannelParams,
    quantizer: &QuantizerSpec,
    opts: &SolverOptions,
) -> Result<CapacityResult> {
    opts.validate()?;
    if quantizer.has_near_duplicates(1e-12) {
        return Err(Error::DegenerateQuantizer);
    }
    if params.power() <= 0.0 {
        return Err(Error::InvalidArgument("capacity needs positive power"));
    }
    let sigma = params.noise_std();
    let power = params.power();
    let step = opts.grid_step * sigma;
    let merge = opts.merge_dist * sigma;

    let mut cache = GridCache::new(default_grid(params, quantizer, opts, None), quantizer, sigma);
    let reach = cache.xs[cache.xs.len() - 1].max(-cache.xs[0]);
    let mut points = initial_support(params, quantizer, reach);
    let mut probs = vec![1.0 / points.len() as f64; points.len()];
    let mut gamma = 0.0;

    let mut best: Option<CapacityResult> = None;
    for iter in 1..=opts.max_outer_iters {
        // Pruning can leave only high-power points; the origin keeps the
        // fixed-support problem feasible.
        if points.iter().all(|x| x * x > power) {
            let at = points.partition_point(|&p| p < 0.0);
            points.insert(at, 0.0);
            probs.insert(at, 1.0 / points.len() as f64);
            renormalise(&mut probs);
        }
        let support = FixedSupport::new(&points, quantizer, sigma);
        let mut solved = solve_power_constrained(&support, &mut probs, power, gamma, opts)?;
        gamma = solved.gamma;

        let mut state = Snapshot::new(&points, &probs, quantizer, sigma, gamma, power);
        // A bin that no mass point reaches makes d(x;F) infinite wherever the
        // bin is reachable, and the cut would only creep towards it. Seed
        // such bins directly.
        let seeds = dead_bin_seeds(&state.kkt.r, quantizer.thresholds());
        if !seeds.is_empty() {
            for x in seeds {
                let at = points.partition_point(|&p| p < x);
                points.insert(at, x);
                probs.insert(at, 1.0 / points.len() as f64);
            }
            renormalise(&mut probs);
            merge_close(&mut points, &mut probs, merge);
            renormalise(&mut probs);
            continue;
        }
        let active = solved.power >= power * (1.0 - 1e-6);
        state.calibrate(&cache, active);

        if opts.polish {
            if let Some(p) = try_polish(&points, &probs, &state, quantizer, sigma, power, active, opts) {
                let polished = Snapshot::new(&p.points, &p.probs, quantizer, sigma, p.gamma, power);
                // Newton may drop a feather-weight point that alone keeps a
                // bin reachable; the certificate is then lost for good.
                let kills_bin = polished.kkt.r.iter().zip(&state.kkt.r).any(|(a, b)| *a <= 0.0 && *b > 0.0);
                if !kills_bin && polished.kkt.info >= state.kkt.info - 1e-12 {
                    points = p.points;
                    probs = p.probs;
                    gamma = p.gamma;
                    solved.power = polished.dist.avg_power();
                    solved.converged = true;
                    state = polished;
                    state.calibrate(&cache, active || solved.power >= power * (1.0 - 1e-6));
                }
            }
        }

        // Grow the grid if the support bound reaches past it.
        if let Ok(bound) = support_bound_with(&state.dist, params, quantizer, state.kkt.gamma, opts) {
            if !cache.covers(bound.lower, bound.upper) {
                cache = GridCache::new(default_grid(params, quantizer, opts, Some(&bound)), quantizer, sigma);
            }
        }
        let (slack, arg) = cache.slack(&state.kkt, state.dist.points(), 2 * quantizer.bins() + 2);
        let candidate = CapacityResult {
            capacity: state.kkt.info,
            power_used: solved.power,
            distribution: state.dist.clone(),
            gamma: state.kkt.gamma,
            kkt_slack: slack,
            outer_iters: iter,
            converged: false,
        };
        // The grid slack bounds the gap to capacity on its own, whatever the
        // inner iteration managed.
        if slack <= opts.kkt_tol && solved.power <= power * (1.0 + opts.power_tol) {
            return Ok(finish(CapacityResult { converged: true, ..candidate }, &state, &cache, quantizer, sigma, opts));
        }
        if best.as_ref().map_or(true, |b| candidate.capacity > b.capacity) {
            best = Some(candidate);
        }

        // Drop light points that the KKT function says do not belong.
        if points.len() > 1 {
            let keep: Vec<bool> = points
                .iter()
                .zip(&probs)
                .map(|(&x, &p)| p >= opts.prune_prob || state.kkt.eval(x) >= -opts.kkt_tol)
                .collect();
            if keep.iter().any(|k| !k) {
                retain_mask(&mut points, &keep);
                retain_mask(&mut probs, &keep);
                renormalise(&mut probs);
            }
        }

        if slack > opts.kkt_tol {
            // The worst violator always goes in; other separated local
            // maxima of the KKT function join it (mirror images for a
            // symmetric quantizer, typically).
            let mut cuts = cache.violators(&state.kkt, sigma, opts.kkt_tol, quantizer.bins() + 1);
            if cuts.is_empty() {
                cuts.push(arg);
            }
            for x in cuts {
                let (x_new, _) = golden_max(|t| state.kkt.eval(t), x - step, x + step, 1e-9 * sigma);
                let at = points.partition_point(|&p| p < x_new);
                points.insert(at, x_new);
                probs.insert(at, (1.0 / points.len() as f64).max(opts.prune_prob * 10.0));
            }
            renormalise(&mut probs);
            merge_close(&mut points, &mut probs, merge);
            renormalise(&mut probs);
        }
    }
    Ok(best.expect("at least one outer iteration"))
}

/// Tidies a certified result: drops feather-weight points that are off the
/// KKT equality set, merges near-duplicates, then trims the support to
/// `K + 1` points. Each step is kept only if the result still certifies.
fn finish(
    mut result: CapacityResult,
    state: &Snapshot,
    cache: &GridCache,
    quantizer: &QuantizerSpec,
    sigma: f64,
    opts: &SolverOptions,
) -> CapacityResult {
    let power = state.kkt.power;
    let peaks = 2 * quantizer.bins() + 2;
    let try_replace = |result: &mut CapacityResult, xs: &[f64], ps: &[f64]| {
        let next = Snapshot::new(xs, ps, quantizer, sigma, state.kkt.gamma, power);
        let (slack, _) = cache.slack(&next.kkt, next.dist.points(), peaks);
        let used = next.dist.avg_power();
        if slack <= opts.kkt_tol && used <= power * (1.0 + opts.power_tol) && next.kkt.info >= result.capacity - 1e-10 {
            result.capacity = next.kkt.info;
            result.power_used = used;
            result.kkt_slack = slack;
            result.distribution = next.dist;
        }
    };

    let keep: Vec<bool> = result
        .distribution
        .points()
        .iter()
        .zip(result.distribution.probs())
        .map(|(&x, &p)| p >= opts.prune_prob || state.kkt.eval(x) >= -opts.kkt_tol)
        .collect();
    if keep.iter().any(|k| !k) && keep.iter().any(|k| *k) {
        let mut xs = result.distribution.points().to_vec();
        let mut ps = result.distribution.probs().to_vec();
        retain_mask(&mut xs, &keep);
        retain_mask(&mut ps, &keep);
        renormalise(&mut ps);
        try_replace(&mut result, &xs, &ps);
    }

    // A cut landing next to an existing point leaves a near-duplicate.
    let mut xs = result.distribution.points().to_vec();
    let mut ps = result.distribution.probs().to_vec();
    merge_close(&mut xs, &mut ps, opts.cluster_dist * sigma);
    if xs.len() < result.distribution.len() {
        try_replace(&mut result, &xs, &ps);
    }

    if result.distribution.len() > quantizer.bins() + 1 {
        let mut xs = result.distribution.points().to_vec();
        let mut ps = result.distribution.probs().to_vec();
        reduce::reduce_support(&mut xs, &mut ps, quantizer, sigma);
        try_replace(&mut result, &xs, &ps);
    }
    result
}

/// Newton polish starting from the cluster centroids of the current support.
#[allow(clippy::too_many_arguments)]
fn try_polish(
    points: &[f64],
    probs: &[f64],
    state: &Snapshot,
    quantizer: &QuantizerSpec,
    sigma: f64,
    power: f64,
    active: bool,
    opts: &SolverOptions,
) -> Option<polish::Polished> {
    let mut xs = points.to_vec();
    let mut ps = probs.to_vec();
    merge_close(&mut xs, &mut ps, opts.cluster_dist * sigma);
    let feasible = |p: &polish::Polished| {
        let used: f64 = p.probs.iter().zip(&p.points).map(|(p, x)| p * x * x).sum();
        used <= power * (1.0 + opts.power_tol)
    };
    let attempt = |floor: f64, binding: bool| {
        // Newton needs every weight strictly inside (0, 1).
        let mut ps = ps.clone();
        ps.iter_mut().for_each(|p| *p = p.max(floor));
        renormalise(&mut ps);
        let gamma = if binding { state.kkt.gamma } else { 0.0 };
        let lambda = state.kkt.info - gamma * power;
        polish::polish(&xs, &ps, gamma, lambda, quantizer, sigma, power, binding, 1e-12)
            .filter(|p| feasible(p))
            .map(|p| {
                let info = mutual_information_with(&p.probs, &TransitionMatrix::new(&p.points, quantizer, sigma));
                (info, p)
            })
    };
    // Weights straight from the fixed point first; lifting small weights
    // helps when a point the solution needs has nearly died out.
    let lifted = 0.5 / xs.len() as f64;
    [(1e-9, active), (1e-9, !active), (lifted, active), (lifted, !active)]
        .into_iter()
        .filter_map(|(floor, binding)| attempt(floor, binding))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
}

fn retain_mask(v: &mut Vec<f64>, keep: &[bool]) {
    let mut i = 0;
    v.retain(|_| {
        let k = keep[i];
        i += 1;
        k
    });
}

fn renormalise(p: &mut [f64]) {
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
}
