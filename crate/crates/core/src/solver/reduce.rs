//! Support reduction to at most `K + 1` mass points.
//!
//! The output PMF and the power are `K + 1` linear functionals of the
//! weights, so any support with more points leaves a direction `v` that
//! changes neither. Along `v` the mutual information `H(R) - sum p_j H(W_j)`
//! is linear, so stepping in its non-decreasing sense until a weight hits
//! zero drops a point without losing rate.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{QuantizerSpec, TransitionMatrix};

pub(crate) fn reduce_support(points: &mut Vec<f64>, probs: &mut Vec<f64>, quantizer: &QuantizerSpec, sigma: f64) {
    let limit = quantizer.bins() + 1;
    while points.len() > limit {
        let w = TransitionMatrix::new(points, quantizer, sigma);
        let n = points.len();
        let mut rows: Vec<Vec<f64>> = (0..w.bins()).map(|i| (0..n).map(|j| w.row(j)[i]).collect()).collect();
        rows.push(points.iter().map(|x| x * x).collect());
        let Some(mut v) = null_vector(rows, n) else { return };
        let slope: f64 = w.iter_rows().zip(&v).map(|(row, vj)| vj * super::row_wlogw(row)).sum();
        if slope < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        // Longest step that keeps every weight non-negative.
        let Some((drop, t)) = v
            .iter()
            .zip(probs.iter())
            .enumerate()
            .filter(|(_, (vj, _))| **vj < 0.0)
            .map(|(j, (vj, pj))| (j, pj / -vj))
            .min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            // All components share a sign, impossible for a null vector of
            // the row-sum constraint unless it is numerically zero.
            return;
        };
        for (p, vj) in probs.iter_mut().zip(&v) {
            *p = (*p + t * vj).max(0.0);
        }
        probs[drop] = 0.0;
        let keep: Vec<bool> = probs.iter().map(|p| *p > 0.0).collect();
        super::retain_mask(points, &keep);
        super::retain_mask(probs, &keep);
        super::renormalise(probs);
    }
}

/// A unit vector in the null space of `rows` (each of length `n`), by
/// Gauss-Jordan elimination with partial pivoting.
fn null_vector(mut rows: Vec<Vec<f64>>, n: usize) -> Option<Vec<f64>> {
    let scale = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        return Some(v);
    }
    let tol = 1e-12 * scale;
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == rows.len() {
            break;
        }
        let (best, mag) = (r..rows.len())
            .map(|i| (i, rows[i][c].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("rows left");
        if mag <= tol {
            continue;
        }
        rows.swap(r, best);
        let inv = 1.0 / rows[r][c];
        rows[r].iter_mut().for_each(|v| *v *= inv);
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0.0 {
                let f = rows[i][c];
                let (pivot_row, other) = if i < r {
                    let (a, b) = rows.split_at_mut(r);
                    (&b[0], &mut a[i])
                } else {
                    let (a, b) = rows.split_at_mut(i);
                    (&a[r], &mut b[0])
                };
                for (o, p) in other.iter_mut().zip(pivot_row) {
                    *o -= f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free = (0..n).find(|c| !pivots.contains(c))?;
    let mut v = vec![0.0; n];
    v[free] = 1.0;
    for (row, &c) in rows.iter().zip(&pivots) {
        v[c] = -row[free];
    }
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}
