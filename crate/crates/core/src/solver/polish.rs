//! Newton refinement of a finite-support solution.
//!
//! At a capacity-achieving law every mass point is a stationary point of the
//! KKT function where it touches zero. For `n` points the unknowns
//! `(x_1..x_n, p_1..p_n, gamma, lambda)` satisfy
//!
//! ```text
//! d'(x_j;F) - 2 gamma x_j          = 0
//! d(x_j;F) - gamma x_j^2 - lambda  = 0
//! sum p_j - 1                      = 0
//! sum p_j x_j^2 - P                = 0   (or gamma = 0 when slack)
//! ```
//!
//! `lambda` equals `I(F) - gamma P` at a solution. The Jacobian is taken by
//! central differences; systems are tiny (`n <= K + 1`).

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{fill_transition_row, QuantizerSpec};
use crate::special::normal_pdf;

pub(crate) struct Polished {
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
    pub gamma: f64,
}

struct System<'a> {
    thresholds: &'a [f64],
    sigma: f64,
    power: f64,
    active: bool,
    n: usize,
}

impl System<'_> {
    fn residual(&self, z: &[f64], out: &mut [f64]) -> bool {
        let n = self.n;
        let k = self.thresholds.len() + 1;
        let (xs, rest) = z.split_at(n);
        let (ps, tail) = rest.split_at(n);
        let (gamma, lambda) = (tail[0], tail[1]);
        if ps.iter().any(|p| *p <= 0.0) || xs.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        let mut rows = vec![0.0; n * k];
        for (x, row) in xs.iter().zip(rows.chunks_exact_mut(k)) {
            fill_transition_row(*x, self.thresholds, self.sigma, row);
        }
        let mut r = vec![0.0; k];
        for (p, row) in ps.iter().zip(rows.chunks_exact(k)) {
            for (ri, wi) in r.iter_mut().zip(row) {
                *ri += p * wi;
            }
        }
        for (j, row) in rows.chunks_exact(k).enumerate() {
            let x = xs[j];
            let mut d = 0.0;
            let mut slope = 0.0;
            let mut lo_pdf = 0.0;
            for (i, &w) in row.iter().enumerate() {
                let hi_pdf = self
                    .thresholds
                    .get(i)
                    .map_or(0.0, |q| normal_pdf((q - x) / self.sigma));
                let dw = (lo_pdf - hi_pdf) / self.sigma;
                lo_pdf = hi_pdf;
                if w > 0.0 {
                    if r[i] <= 0.0 {
                        return false;
                    }
                    let l = libm::log2(w) - libm::log2(r[i]);
                    d += w * l;
                    slope += dw * l;
                }
            }
            out[j] = slope - 2.0 * gamma * x;
            out[n + j] = d - gamma * x * x - lambda;
        }
        out[2 * n] = ps.iter().sum::<f64>() - 1.0;
        out[2 * n + 1] = if self.active {
            (ps.iter().zip(xs).map(|(p, x)| p * x * x).sum::<f64>() - self.power) / self.power.max(1.0)
        } else {
            gamma
        };
        out.iter().all(|v| v.is_finite())
    }
}

fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Gaussian elimination with partial pivoting; `a` is row-major `m x m`.
fn solve_dense(a: &mut [f64], b: &mut [f64], m: usize) -> bool {
    for c in 0..m {
        let piv = (c..m).max_by(|&i, &j| a[i * m + c].abs().total_cmp(&a[j * m + c].abs())).unwrap();
        if a[piv * m + c].abs() < 1e-300 {
            return false;
        }
        if piv != c {
            for k in 0..m {
                a.swap(c * m + k, piv * m + k);
            }
            b.swap(c, piv);
        }
        for i in c + 1..m {
            let f = a[i * m + c] / a[c * m + c];
            if f != 0.0 {
                for k in c..m {
                    a[i * m + k] -= f * a[c * m + k];
                }
                b[i] -= f * b[c];
            }
        }
    }
    for c in (0..m).rev() {
        let s: f64 = (c + 1..m).map(|k| a[c * m + k] * b[k]).sum();
        b[c] = (b[c] - s) / a[c * m + c];
    }
    b.iter().all(|v| v.is_finite())
}

/// Damped Newton on the stationarity system. `None` if it fails to reach
/// `tol` or leaves the feasible region (non-positive weight, reordered points).
#[allow(clippy::too_many_arguments)]
pub(crate) fn polish(
    points: &[f64],
    probs: &[f64],
    gamma: f64,
    lambda: f64,
    quantizer: &QuantizerSpec,
    sigma: f64,
    power: f64,
    active: bool,
    tol: f64,
) -> Option<Polished> {
    let n = points.len();
    let m = 2 * n + 2;
    let sys = System { thresholds: quantizer.thresholds(), sigma, power, active, n };
    let mut z: Vec<f64> = points.iter().chain(probs).copied().collect();
    z.push(gamma);
    z.push(lambda);
    let mut r = vec![0.0; m];
    if !sys.residual(&z, &mut r) {
        return None;
    }
    let mut jac = vec![0.0; m * m];
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut r_trial = vec![0.0; m];
    for _ in 0..100 {
        let res = norm_inf(&r);
        if res <= tol {
            let gamma = z[2 * n];
            if gamma < -1e-12 {
                return None;
            }
            return Some(Polished {
                points: z[..n].to_vec(),
                probs: z[n..2 * n].to_vec(),
                gamma: gamma.max(0.0),
            });
        }
        for c in 0..m {
            let h = 1e-7 * (1.0 + z[c].abs()) * if c < n { sigma } else { 1.0 };
            let h = if (n..2 * n).contains(&c) { h.min(0.5 * z[c]) } else { h };
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[c] += h;
            zm[c] -= h;
            if !(sys.residual(&zp, &mut rp) && sys.residual(&zm, &mut rm)) {
                return None;
            }
            for i in 0..m {
                jac[i * m + c] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let mut step: Vec<f64> = r.iter().map(|v| -v).collect();
        if !solve_dense(&mut jac, &mut step, m) {
            return None;
        }
        // Fraction-to-boundary rule keeps every weight positive. A weight that
        // blocks the step completely marks a point that does not belong in
        // the support: drop it and restart on the smaller set.
        let mut t_max: f64 = 1.0;
        let mut blocker = None;
        for j in 0..n {
            let (p, dp) = (z[n + j], step[n + j]);
            if dp < 0.0 && 0.9 * p / -dp < t_max {
                t_max = 0.9 * p / -dp;
                blocker = Some(j);
            }
        }
        if t_max < 1e-6 || z[n..2 * n].iter().any(|p| *p < 1e-12) {
            let j = blocker.unwrap_or_else(|| {
                (0..n).min_by(|&a, &b| z[n + a].total_cmp(&z[n + b])).unwrap()
            });
            if n == 1 {
                return None;
            }
            let mut xs = z[..n].to_vec();
            let mut ps = z[n..2 * n].to_vec();
            xs.remove(j);
            ps.remove(j);
            let total: f64 = ps.iter().sum();
            ps.iter_mut().for_each(|p| *p /= total);
            return polish(&xs, &ps, z[2 * n], z[2 * n + 1], quantizer, sigma, power, active, tol);
        }
        let merit = norm2(&r);
        let mut t = t_max;
        loop {
            for i in 0..m {
                trial[i] = z[i] + t * step[i];
            }
            if sys.residual(&trial, &mut r_trial) && norm2(&r_trial) < (1.0 - 1e-4 * t) * merit {
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return None;
            }
        }
        z.copy_from_slice(&trial);
        r.copy_from_slice(&r_trial);
    }
    None
}
