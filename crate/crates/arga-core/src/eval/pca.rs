//! 2-D PCA projection of an embedding for visualization export.

use crate::error::{Error, Result};
use crate::Mat;

const POWER_TOL: f64 = 1e-9;
const MAX_POWER_ITERS: usize = 100_000;

/// Deterministic unit start vector that is never the zero vector and breaks
/// symmetry across coordinates.
fn start_vector(d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + (i as f64 + 1.0) * 1e-3).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    v
}

/// Largest eigenpair of a symmetric PSD matrix by power iteration.
fn top_eigenpair(c: &Mat) -> (f64, Vec<f64>) {
    let d = c.rows();
    let mut v = start_vector(d);
    let mut lambda = 0.0;
    for _ in 0..MAX_POWER_ITERS {
        let mut w = vec![0.0f64; d];
        for (i, wi) in w.iter_mut().enumerate() {
            let row = c.row(i);
            let mut s = 0.0;
            for j in 0..d {
                s += row[j] * v[j];
            }
            *wi = s;
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (0.0, v);
        }
        let mut delta = 0.0f64;
        for (wi, vi) in w.iter_mut().zip(v.iter()) {
            *wi /= norm;
            delta = delta.max((*wi - vi).abs());
        }
        lambda = norm;
        v = w;
        if delta < POWER_TOL {
            break;
        }
    }
    (lambda, v)
}

/// Sign convention: the largest-magnitude loading is positive (first index
/// wins magnitude ties).
fn fix_sign(v: &mut [f64]) {
    let mut arg = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[arg].abs() {
            arg = i;
        }
    }
    if v[arg] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Projects rows onto the top two principal directions of the
/// column-centered data. Returns the n×2 projection plus a degenerate flag:
/// true means the data had (numerically) zero variance and the projection is
/// all zeros.
///
/// The covariance is d×d (d = embedding width), decomposed by power
/// iteration with one deflation step, tolerance 1e-9. When the spectrum is
/// effectively rank-1 the second direction contributes only noise; its
/// eigenvalue is clamped to the computed value and the projection simply
/// carries near-zero variance in column 2.
pub fn pca_2d(z: &Mat) -> Result<(Mat, bool)> {
    let n = z.rows();
    let d = z.cols();
    if n < 2 {
        return Err(Error::Argument(format!(
            "pca_2d needs at least 2 rows, got {n}"
        )));
    }
    // Column centering.
    let means: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| z[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let centered = Mat::from_fn(n, d, |i, j| z[(i, j)] - means[j]);

    // Covariance (d×d): centeredᵀ·centered / (n−1).
    let cov = centered.matmul_tn(&centered)?.scale(1.0 / (n - 1) as f64);

    let (lambda1, mut v1) = top_eigenpair(&cov);
    if lambda1 <= 0.0 || !lambda1.is_finite() {
        return Ok((Mat::zeros(n, 2), true));
    }
    fix_sign(&mut v1);

    // Deflation: C − λ₁ v₁v₁ᵀ, then the same power iteration.
    let deflated = Mat::from_fn(d, d, |i, j| cov[(i, j)] - lambda1 * v1[i] * v1[j]);
    let (lambda2, mut v2) = top_eigenpair(&deflated);
    if d < 2 || lambda2 / lambda1 < 1e-12 {
        // Rank-1 spectrum: any unit vector orthogonal to v₁ works; build one
        // deterministically by orthogonalizing the axis least aligned with v₁.
        let mut axis = 0usize;
        for (i, x) in v1.iter().enumerate() {
            if x.abs() < v1[axis].abs() {
                axis = i;
            }
        }
        let mut w: Vec<f64> = (0..d).map(|i| if i == axis { 1.0 } else { 0.0 }).collect();
        let dot: f64 = w.iter().zip(&v1).map(|(a, b)| a * b).sum();
        for (wi, v1i) in w.iter_mut().zip(&v1) {
            *wi -= dot * v1i;
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in w.iter_mut() {
                *x /= norm;
            }
            v2 = w;
        } else {
            v2 = vec![0.0; d];
        }
    } else {
        // Re-orthogonalize against v₁; deflation leaves a small component.
        let dot: f64 = v2.iter().zip(&v1).map(|(a, b)| a * b).sum();
        for (v2i, v1i) in v2.iter_mut().zip(&v1) {
            *v2i -= dot * v1i;
        }
        let norm = v2.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in v2.iter_mut() {
                *x /= norm;
            }
        }
    }
    fix_sign(&mut v2);

    let mut out = Mat::zeros(n, 2);
    for i in 0..n {
        let row = centered.row(i);
        let mut x = 0.0;
        let mut y = 0.0;
        for j in 0..d {
            x += row[j] * v1[j];
            y += row[j] * v2[j];
        }
        out[(i, 0)] = x;
        out[(i, 1)] = y;
    }
    Ok((out, false))
}
