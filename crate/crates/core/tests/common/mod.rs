#![allow(dead_code)]

//! Test-side references built from first principles: Simpson quadrature of
//! the Gaussian density instead of the library's erfc path.

use std::f64::consts::PI;

fn pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `Q(x)` by integrating the density over `[x, x + 14]`.
pub fn q_quad(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - q_quad(-x);
    }
    simpson(pdf, x, x + 14.0, 40_000)
}

/// `P(a < Z < b)` for a standard normal, by quadrature.
pub fn interval_quad(a: f64, b: f64) -> f64 {
    let lo = a.max(-40.0);
    let hi = b.min(40.0);
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 || hi <= 0.0 {
        // Integrate tails directly, keeping their small magnitudes.
        let (lo, hi) = if lo >= 0.0 { (lo, hi) } else { (-hi, -lo) };
        let top = hi.min(lo + 14.0);
        return simpson(pdf, lo, top, 40_000);
    }
    1.0 - q_quad(-lo) - q_quad(hi)
}

/// Transition row `W(.|x)` by quadrature.
pub fn row_quad(x: f64, thresholds: &[f64], sigma: f64) -> Vec<f64> {
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend_from_slice(thresholds);
    edges.push(f64::INFINITY);
    edges.windows(2).map(|e| interval_quad((e[0] - x) / sigma, (e[1] - x) / sigma)).collect()
}

/// Mutual information in bits, straight from the definition.
pub fn mi_quad(points: &[f64], probs: &[f64], thresholds: &[f64], sigma: f64) -> f64 {
    let rows: Vec<Vec<f64>> = points.iter().map(|&x| row_quad(x, thresholds, sigma)).collect();
    let k = thresholds.len() + 1;
    let r: Vec<f64> = (0..k).map(|i| rows.iter().zip(probs).map(|(w, p)| p * w[i]).sum()).collect();
    let mut info = 0.0;
    for (w, p) in rows.iter().zip(probs) {
        for i in 0..k {
            if w[i] > 0.0 && r[i] > 0.0 {
                info += p * w[i] * (w[i] / r[i]).log2();
            }
        }
    }
    info
}

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Binary symmetric channel obtained by antipodal signalling into a sign
/// quantizer: `1 - h(Q(sqrt(SNR)))`.
pub fn bsc_capacity(snr_db: f64) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    1.0 - h2(q_quad(snr.sqrt()))
}

/// 4-PAM / 8-PAM mutual information by quadrature.
pub fn pam_mi(k: usize, snr_db: f64) -> f64 {
    let p = 10f64.powf(snr_db / 10.0);
    let a = (3.0 * p / ((k * k - 1) as f64)).sqrt();
    let half = k as i64 / 2;
    let points: Vec<f64> = (-half..half).map(|m| a * (2 * m + 1) as f64).collect();
    let thresholds: Vec<f64> = (1 - half..half).map(|m| 2.0 * a * m as f64).collect();
    mi_quad(&points, &vec![1.0 / k as f64; k], &thresholds, 1.0)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}
