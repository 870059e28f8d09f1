use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// Midpoint of the two middle values for even lengths.
///
/// # Panics
/// On an empty slice.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

pub fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApproximation,
    /// Every paired difference was zero.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    /// Sum of ranks of positive differences `x − y`.
    pub statistic: f64,
    pub p_two_sided: f64,
    /// Alternative: `x` tends to be smaller than `y`.
    pub p_one_sided: f64,
    pub n_effective: usize,
    pub method: TestMethod,
}

/// Largest number of non-zero differences for which the null distribution is enumerated.
pub const EXACT_MAX_N: usize = 12;

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Average ranks (1-based) of `v`, ties sharing the mean of their positions.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Paired Wilcoxon signed-rank test of `x` against `y`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<StatTestResult> {
    if x.len() != y.len() {
        return input(format!("paired samples differ in length: {} vs {}", x.len(), y.len()));
    }
    if x.len() < 5 {
        return input(format!("need at least 5 pairs, got {}", x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return input("non-finite sample value");
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(StatTestResult {
            statistic: 0.0,
            p_two_sided: 1.0,
            p_one_sided: 1.0,
            n_effective: 0,
            method: TestMethod::Degenerate,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&abs);
    let w: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();

    let (lower, upper, method) = if n <= EXACT_MAX_N {
        // average ranks are multiples of 1/2, so doubled ranks are integers
        let r2: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let total: usize = r2.iter().sum();
        let mut counts = vec![0u64; total + 1];
        counts[0] = 1;
        for &r in &r2 {
            for s in (r..=total).rev() {
                counts[s] += counts[s - r];
            }
        }
        let w2 = (2.0 * w).round() as usize;
        let all = (1u64 << n) as f64;
        let le: u64 = counts[..=w2].iter().sum();
        let ge: u64 = counts[w2..].iter().sum();
        (le as f64 / all, ge as f64 / all, TestMethod::Exact)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut ties = 0.0;
        let mut sorted = abs.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < sorted.len() {
            let j = sorted[i..].iter().take_while(|v| **v == sorted[i]).count();
            let t = j as f64;
            ties += t * t * t - t;
            i += j;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        let sd = var.sqrt();
        let lower = normal_cdf((w - mean + 0.5) / sd);
        let upper = 1.0 - normal_cdf((w - mean - 0.5) / sd);
        (lower, upper, TestMethod::NormalApproximation)
    };
    Ok(StatTestResult {
        statistic: w,
        p_two_sided: (2.0 * lower.min(upper)).min(1.0),
        p_one_sided: lower.min(1.0),
        n_effective: n,
        method,
    })
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_bonferroni(p: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return input(format!("p-value {v} outside [0, 1]"));
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (i, &k) in order.iter().enumerate() {
        running = running.max(((m - i) as f64 * p[k]).min(1.0));
        out[k] = running;
    }
    Ok(out)
}
