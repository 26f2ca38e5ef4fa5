//! Scalar special functions and small numerical helpers.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// Gaussian tail probability `Q(x) = P(Z > x)` for standard normal `Z`.
///
/// Computed as `erfc(x / sqrt(2)) / 2`, which keeps full relative accuracy
/// in the upper tail. `Q(+inf) = 0` and `Q(-inf) = 1`.
pub fn qfunc(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Probability that a standard normal lands in `(a, b)`, `a <= b`.
///
/// The difference is taken on whichever side of zero keeps both tail values
/// small, so bins far from the mean do not lose digits to cancellation.
pub fn normal_interval(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if a >= 0.0 {
        qfunc(a) - qfunc(b)
    } else if b <= 0.0 {
        qfunc(-b) - qfunc(-a)
    } else {
        1.0 - qfunc(-a) - qfunc(b)
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

/// Binary entropy in bits. `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * libm::log2(p) - (1.0 - p) * libm::log2(1.0 - p)
}

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// `10 log10(x)`.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximiser of `f` on `[lo, hi]`.
///
/// Returns `(argmax, max)`. The endpoints are compared too, so a monotone
/// function returns the better endpoint.
pub(crate) fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (mut best_x, mut best) = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    (best_x, best)
}
