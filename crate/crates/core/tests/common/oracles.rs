//! Brute-force reference implementations, written directly from the formulas.

use bireg::geom::Vec3;
use bireg::grid::{ProbMaskSet, Volume};

fn at(v: &Volume, i: usize, j: usize, k: usize) -> f64 {
    let [nx, ny, _] = v.grid.dims;
    v.values[i + nx * (j + ny * k)]
}

/// Trilinear value as a sum of tensor-product hat functions over every voxel.
pub fn trilinear(v: &Volume, p: Vec3) -> f64 {
    let g = &v.grid;
    let q: Vec<f64> = (0..3)
        .map(|a| ((p[a] - g.origin[a]) / g.spacing[a]).clamp(0.0, (g.dims[a] - 1) as f64))
        .collect();
    let hat = |x: f64| (1.0 - x.abs()).max(0.0);
    let mut s = 0.0;
    for k in 0..g.dims[2] {
        for j in 0..g.dims[1] {
            for i in 0..g.dims[0] {
                let w = hat(q[0] - i as f64) * hat(q[1] - j as f64) * hat(q[2] - k as f64);
                if w != 0.0 {
                    s += w * at(v, i, j, k);
                }
            }
        }
    }
    s
}

/// Full 3D Gaussian convolution (no separability), clamp-to-edge.
pub fn blur(values: &[f64], dims: [usize; 3], sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return values.to_vec();
    }
    let r = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-r..=r).map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = taps.iter().sum();
    let taps: Vec<f64> = taps.iter().map(|t| t / norm).collect();
    let [nx, ny, nz] = dims.map(|d| d as i64);
    let clamp = |x: i64, n: i64| x.clamp(0, n - 1) as usize;
    let mut out = vec![0.0; values.len()];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let mut s = 0.0;
                for (c, wc) in taps.iter().enumerate() {
                    for (b, wb) in taps.iter().enumerate() {
                        for (a, wa) in taps.iter().enumerate() {
                            let (x, y, z) = (
                                clamp(i + a as i64 - r, nx),
                                clamp(j + b as i64 - r, ny),
                                clamp(k + c as i64 - r, nz),
                            );
                            s += wa * wb * wc * values[x + dims[0] * (y + dims[1] * z)];
                        }
                    }
                }
                out[(i + nx * (j + ny * k)) as usize] = s;
            }
        }
    }
    out
}

/// `1 − mean` soft Dice over classes and scales; `squared` selects Σa²+Σb² in the denominator.
pub fn mspdice(a: &ProbMaskSet, b: &ProbMaskSet, scales: &[f64], squared: bool) -> f64 {
    let eps = 1e-6;
    let mut total = 0.0;
    for c in 0..3 {
        for &s in scales {
            let x = blur(&a.channels[c], a.grid.dims, s);
            let y = blur(&b.channels[c], b.grid.dims, s);
            let mut num = 0.0;
            let mut den = 0.0;
            for (p, q) in x.iter().zip(&y) {
                num += p * q;
                den += if squared { p * p + q * q } else { p + q };
            }
            total += (2.0 * num + eps) / (den + eps);
        }
    }
    1.0 - total / (3 * scales.len()) as f64
}

pub fn ncc(a: &Volume, b: &Volume) -> f64 {
    let n = a.values.len() as f64;
    let ma = a.values.iter().sum::<f64>() / n;
    let mb = b.values.iter().sum::<f64>() / n;
    let sa = (a.values.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / n).sqrt();
    let sb = (b.values.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / n).sqrt();
    let cov: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - ma) * (y - mb)).sum();
    cov / (n * sa * sb + 1e-6)
}

pub fn mean_fre(p: &[Vec3], q: &[Vec3]) -> f64 {
    let mut s = 0.0;
    for (a, b) in p.iter().zip(q) {
        s += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    }
    s / p.len() as f64
}

/// Bending energy with explicit second-difference stencils, averaged over interior voxels.
pub fn bending(u: &[Vec3], dims: [usize; 3], h: Vec3) -> f64 {
    let f = |i: usize, j: usize, k: usize, c: usize| u[i + dims[0] * (j + dims[1] * k)][c];
    let mut total = 0.0;
    let mut count = 0usize;
    for k in 1..dims[2] - 1 {
        for j in 1..dims[1] - 1 {
            for i in 1..dims[0] - 1 {
                count += 1;
                for c in 0..3 {
                    let mid = f(i, j, k, c);
                    let uxx = (f(i + 1, j, k, c) - 2.0 * mid + f(i - 1, j, k, c)) / (h[0] * h[0]);
                    let uyy = (f(i, j + 1, k, c) - 2.0 * mid + f(i, j - 1, k, c)) / (h[1] * h[1]);
                    let uzz = (f(i, j, k + 1, c) - 2.0 * mid + f(i, j, k - 1, c)) / (h[2] * h[2]);
                    let uxy = (f(i + 1, j + 1, k, c) - f(i + 1, j - 1, k, c) - f(i - 1, j + 1, k, c)
                        + f(i - 1, j - 1, k, c))
                        / (4.0 * h[0] * h[1]);
                    let uxz = (f(i + 1, j, k + 1, c) - f(i + 1, j, k - 1, c) - f(i - 1, j, k + 1, c)
                        + f(i - 1, j, k - 1, c))
                        / (4.0 * h[0] * h[2]);
                    let uyz = (f(i, j + 1, k + 1, c) - f(i, j + 1, k - 1, c) - f(i, j - 1, k + 1, c)
                        + f(i, j - 1, k - 1, c))
                        / (4.0 * h[1] * h[2]);
                    total += uxx * uxx + uyy * uyy + uzz * uzz + 2.0 * (uxy * uxy + uxz * uxz + uyz * uyz);
                }
            }
        }
    }
    total / count as f64
}

/// Signed-rank p-values by walking all 2ⁿ sign assignments of the observed
/// ranks. Returns (lower tail `P(W+ ≤ w)`, two-sided).
pub fn wilcoxon_enumerate(x: &[f64], y: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    // average ranks of |d| by counting smaller and equal values
    let ranks: Vec<f64> = d
        .iter()
        .map(|v| {
            let less = d.iter().filter(|w| w.abs() < v.abs()).count() as f64;
            let eq = d.iter().filter(|w| w.abs() == v.abs()).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| ranks[b]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let all = (1u64 << n) as f64;
    let (lo, hi) = (le as f64 / all, ge as f64 / all);
    (lo, (2.0 * lo.min(hi)).min(1.0))
}
