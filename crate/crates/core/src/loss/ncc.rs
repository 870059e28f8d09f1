//! Global normalised cross-correlation.

use crate::error::{input, Result};
use crate::grid::Volume;
use crate::par;

pub const NCC_EPS: f64 = 1e-6;

const CHUNK: usize = 8192;

fn mean(a: &[f64]) -> f64 {
    par::chunked_sum(a.len(), CHUNK, |r| a[r].iter().sum()) / a.len() as f64
}

struct Moments {
    cov: f64,
    sd_a: f64,
    sd_b: f64,
    mean_a: f64,
    mean_b: f64,
}

fn moments(a: &[f64], b: &[f64]) -> Moments {
    let (ma, mb) = (mean(a), mean(b));
    let n = a.len() as f64;
    let cov = par::chunked_sum(a.len(), CHUNK, |r| {
        r.map(|i| (a[i] - ma) * (b[i] - mb)).sum()
    });
    let va = par::chunked_sum(a.len(), CHUNK, |r| r.map(|i| (a[i] - ma).powi(2)).sum()) / n;
    let vb = par::chunked_sum(b.len(), CHUNK, |r| r.map(|i| (b[i] - mb).powi(2)).sum()) / n;
    Moments {
        cov,
        sd_a: va.sqrt(),
        sd_b: vb.sqrt(),
        mean_a: ma,
        mean_b: mb,
    }
}

/// `Σ(a−ā)(b−b̄) / (N σ_a σ_b + ε)` with population standard deviations.
/// A constant input gives 0.
pub fn ncc(a: &Volume, b: &Volume) -> Result<f64> {
    if a.grid != b.grid {
        return input("NCC volumes are on different grids");
    }
    Ok(ncc_values(&a.values, &b.values))
}

/// `1 − ncc(a, b)`.
pub fn ncc_loss(a: &Volume, b: &Volume) -> Result<f64> {
    Ok(1.0 - ncc(a, b)?)
}

pub(crate) fn ncc_values(a: &[f64], b: &[f64]) -> f64 {
    let m = moments(a, b);
    m.cov / (a.len() as f64 * m.sd_a * m.sd_b + NCC_EPS)
}

/// NCC and its gradient with respect to `b`.
pub(crate) fn ncc_with_grad_b(a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let m = moments(a, b);
    let n = a.len() as f64;
    let den = n * m.sd_a * m.sd_b + NCC_EPS;
    let value = m.cov / den;
    // ∂den/∂b_i = σ_a (b_i − b̄) / σ_b
    let coef = if m.sd_b > 0.0 {
        m.cov * m.sd_a / (m.sd_b * den * den)
    } else {
        0.0
    };
    let grad = a
        .iter()
        .zip(b)
        .map(|(ai, bi)| (ai - m.mean_a) / den - coef * (bi - m.mean_b))
        .collect();
    (value, grad)
}
