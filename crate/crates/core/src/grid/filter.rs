//! Separable Gaussian filtering with clamp-to-edge boundaries, and its adjoint.

use super::Volume;
use crate::error::{input, Result};
use crate::par;

/// Normalised 1D Gaussian taps for standard deviation `sigma` (voxels),
/// truncated at radius `ceil(3 sigma)`. Index `r` is the centre tap.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|t| (-(t * t) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// A linear operator acting along one grid axis, stored as sparse rows:
/// `out[j] = Σ w · in[m]` over `rows[j]`.
#[derive(Clone, Debug)]
pub struct AxisOperator {
    rows: Vec<Vec<(usize, f64)>>,
}

impl AxisOperator {
    /// Clamp-to-edge correlation with `kernel` (odd length, centred) on `n` samples.
    pub fn clamped_convolution(kernel: &[f64], n: usize) -> Self {
        let r = (kernel.len() / 2) as i64;
        let rows = (0..n as i64)
            .map(|j| {
                let mut row: Vec<(usize, f64)> = Vec::with_capacity(kernel.len());
                for (t, &w) in kernel.iter().enumerate() {
                    let m = (j + t as i64 - r).clamp(0, n as i64 - 1) as usize;
                    match row.iter_mut().find(|(idx, _)| *idx == m) {
                        Some(e) => e.1 += w,
                        None => row.push((m, w)),
                    }
                }
                row
            })
            .collect();
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn transpose(&self) -> Self {
        let n = self.rows.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (j, row) in self.rows.iter().enumerate() {
            for &(m, w) in row {
                rows[m].push((j, w));
            }
        }
        Self { rows }
    }

    /// Applies the operator along `axis` of an x-fastest field with `dims`.
    pub fn apply_along(&self, dims: [usize; 3], axis: usize, input: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows.len(), dims[axis]);
        let [nx, ny, _] = dims;
        let slice = nx * ny;
        let mut out = vec![0.0; input.len()];
        par::for_each_chunk(&mut out, slice, |k, dst| match axis {
            0 => {
                for j in 0..ny {
                    let line = &input[k * slice + j * nx..k * slice + (j + 1) * nx];
                    let o = &mut dst[j * nx..(j + 1) * nx];
                    for (i, row) in self.rows.iter().enumerate() {
                        o[i] = row.iter().map(|&(m, w)| w * line[m]).sum();
                    }
                }
            }
            1 => {
                let src = &input[k * slice..(k + 1) * slice];
                for (j, row) in self.rows.iter().enumerate() {
                    let o = &mut dst[j * nx..(j + 1) * nx];
                    for &(m, w) in row {
                        let s = &src[m * nx..(m + 1) * nx];
                        for (a, b) in o.iter_mut().zip(s) {
                            *a += w * b;
                        }
                    }
                }
            }
            _ => {
                for &(m, w) in &self.rows[k] {
                    let s = &input[m * slice..(m + 1) * slice];
                    for (a, b) in dst.iter_mut().zip(s) {
                        *a += w * b;
                    }
                }
            }
        });
        out
    }
}

/// A separable filter on a fixed grid shape, with its exact adjoint.
#[derive(Clone, Debug)]
pub struct SeparableBlur {
    dims: [usize; 3],
    forward: Option<[AxisOperator; 3]>,
    adjoint: Option<[AxisOperator; 3]>,
}

impl SeparableBlur {
    /// Gaussian of standard deviation `sigma` voxels; `sigma == 0` is the identity.
    pub fn gaussian(dims: [usize; 3], sigma: f64) -> Self {
        if sigma <= 0.0 {
            return Self {
                dims,
                forward: None,
                adjoint: None,
            };
        }
        let k = gaussian_kernel(sigma);
        let fwd = dims.map(|n| AxisOperator::clamped_convolution(&k, n));
        let adj = [fwd[0].transpose(), fwd[1].transpose(), fwd[2].transpose()];
        Self {
            dims,
            forward: Some(fwd),
            adjoint: Some(adj),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.is_none()
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        match &self.forward {
            None => values.to_vec(),
            Some(ops) => {
                let a = ops[0].apply_along(self.dims, 0, values);
                let b = ops[1].apply_along(self.dims, 1, &a);
                ops[2].apply_along(self.dims, 2, &b)
            }
        }
    }

    /// Transpose of [`apply`](Self::apply): maps output-space gradients to input space.
    pub fn apply_adjoint(&self, values: &[f64]) -> Vec<f64> {
        match &self.adjoint {
            None => values.to_vec(),
            Some(ops) => {
                let a = ops[2].apply_along(self.dims, 2, values);
                let b = ops[1].apply_along(self.dims, 1, &a);
                ops[0].apply_along(self.dims, 0, &b)
            }
        }
    }
}

/// Separable Gaussian blur with `sigma` in voxels. `sigma == 0` returns the input.
pub fn gaussian_blur(vol: &Volume, sigma: f64) -> Result<Volume> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return input(format!("blur sigma must be >= 0, got {sigma}"));
    }
    if sigma == 0.0 {
        return Ok(vol.clone());
    }
    let blur = SeparableBlur::gaussian(vol.grid.dims, sigma);
    Ok(Volume {
        grid: vol.grid,
        values: blur.apply(&vol.values),
    })
}
