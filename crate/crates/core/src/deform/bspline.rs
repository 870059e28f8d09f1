//! Cubic B-spline free-form deformation lattice.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::geom::Vec3;
use crate::grid::VoxelGrid;

/// Uniform cubic B-spline basis at local coordinate `t ∈ [0, 1)`.
#[inline]
pub fn cubic_bspline_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let s = 1.0 - t;
    [
        s * s * s / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

/// Control-point displacements (mm) on a lattice aligned with a voxel grid.
///
/// Control point `l` along an axis sits at voxel coordinate
/// `(l - 1) * control_spacing`: one margin point below the grid and two above
/// so every voxel has full cubic support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FfdLattice {
    pub control_spacing: usize,
    pub control_dims: [usize; 3],
    pub displacements: Vec<Vec3>,
}

impl FfdLattice {
    /// Number of control points needed along an axis of `n` voxels.
    pub fn points_for(n: usize, control_spacing: usize) -> usize {
        (n - 1) / control_spacing + 4
    }

    /// Zero lattice covering `grid`.
    pub fn zeros(grid: &VoxelGrid, control_spacing: usize) -> Result<Self> {
        if control_spacing < 2 {
            return config(format!(
                "control spacing must be >= 2 voxels, got {control_spacing}"
            ));
        }
        let control_dims = grid.dims.map(|n| Self::points_for(n, control_spacing));
        Ok(Self {
            control_spacing,
            control_dims,
            displacements: vec![[0.0; 3]; control_dims.iter().product()],
        })
    }

    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize, c: usize) -> usize {
        a + self.control_dims[0] * (b + self.control_dims[1] * c)
    }

    pub fn covers(&self, grid: &VoxelGrid) -> bool {
        self.control_spacing >= 2
            && self.displacements.len() == self.control_dims.iter().product::<usize>()
            && (0..3).all(|a| {
                self.control_dims[a] >= Self::points_for(grid.dims[a], self.control_spacing)
            })
    }

    pub fn is_zero(&self) -> bool {
        self.displacements.iter().all(|d| *d == [0.0; 3])
    }
}

/// Per-axis basis tables: first control index and four weights for every voxel.
#[derive(Clone, Debug)]
pub(crate) struct AxisBasis {
    pub base: Vec<usize>,
    pub weights: Vec<[f64; 4]>,
}

impl AxisBasis {
    pub fn new(n: usize, control_spacing: usize) -> Self {
        let (base, weights) = (0..n)
            .map(|i| {
                let cell = i / control_spacing;
                let t = (i % control_spacing) as f64 / control_spacing as f64;
                (cell, cubic_bspline_weights(t))
            })
            .unzip();
        Self { base, weights }
    }
}

/// Dense evaluation of an [`FfdLattice`] at the voxel centres of a grid,
/// separable along the three axes, with its adjoint.
#[derive(Clone, Debug)]
pub(crate) struct LatticeSampler {
    dims: [usize; 3],
    cdims: [usize; 3],
    axes: [AxisBasis; 3],
}

impl LatticeSampler {
    pub fn new(grid: &VoxelGrid, lattice: &FfdLattice) -> Result<Self> {
        if !lattice.covers(grid) {
            return config(format!(
                "lattice {:?} (spacing {}) does not cover grid {:?}",
                lattice.control_dims, lattice.control_spacing, grid.dims
            ));
        }
        Ok(Self {
            dims: grid.dims,
            cdims: lattice.control_dims,
            axes: grid.dims.map(|n| AxisBasis::new(n, lattice.control_spacing)),
        })
    }

    /// Dense displacement at every voxel, x-fastest.
    pub fn evaluate(&self, ctrl: &[Vec3]) -> Vec<Vec3> {
        let [nx, ny, nz] = self.dims;
        let [cx, cy, _] = self.cdims;
        let [ax, ay, az] = &self.axes;
        // contract z
        let mut t1 = vec![[0.0; 3]; cx * cy * nz];
        for k in 0..nz {
            let (b, w) = (az.base[k], az.weights[k]);
            for q in 0..cx * cy {
                let mut acc = [0.0; 3];
                for (c, wc) in w.iter().enumerate() {
                    let d = ctrl[q + cx * cy * (b + c)];
                    acc[0] += wc * d[0];
                    acc[1] += wc * d[1];
                    acc[2] += wc * d[2];
                }
                t1[q + cx * cy * k] = acc;
            }
        }
        // contract y
        let mut t2 = vec![[0.0; 3]; cx * ny * nz];
        for k in 0..nz {
            for j in 0..ny {
                let (b, w) = (ay.base[j], ay.weights[j]);
                for a in 0..cx {
                    let mut acc = [0.0; 3];
                    for (c, wc) in w.iter().enumerate() {
                        let d = t1[a + cx * ((b + c) + cy * k)];
                        acc[0] += wc * d[0];
                        acc[1] += wc * d[1];
                        acc[2] += wc * d[2];
                    }
                    t2[a + cx * (j + ny * k)] = acc;
                }
            }
        }
        // contract x
        let mut out = vec![[0.0; 3]; nx * ny * nz];
        crate::par::for_each_chunk(&mut out, nx, |line, dst| {
            let src = &t2[cx * line..cx * (line + 1)];
            for (i, o) in dst.iter_mut().enumerate() {
                let (b, w) = (ax.base[i], ax.weights[i]);
                let mut acc = [0.0; 3];
                for (c, wc) in w.iter().enumerate() {
                    let d = src[b + c];
                    acc[0] += wc * d[0];
                    acc[1] += wc * d[1];
                    acc[2] += wc * d[2];
                }
                *o = acc;
            }
        });
        out
    }

    /// Transpose of [`evaluate`](Self::evaluate).
    pub fn adjoint(&self, dense: &[Vec3]) -> Vec<Vec3> {
        let [nx, ny, nz] = self.dims;
        let [cx, cy, cz] = self.cdims;
        let [ax, ay, az] = &self.axes;
        let mut t2 = vec![[0.0; 3]; cx * ny * nz];
        for line in 0..ny * nz {
            let src = &dense[nx * line..nx * (line + 1)];
            let dst = &mut t2[cx * line..cx * (line + 1)];
            for (i, g) in src.iter().enumerate() {
                let (b, w) = (ax.base[i], ax.weights[i]);
                for (c, wc) in w.iter().enumerate() {
                    let d = &mut dst[b + c];
                    d[0] += wc * g[0];
                    d[1] += wc * g[1];
                    d[2] += wc * g[2];
                }
            }
        }
        let mut t1 = vec![[0.0; 3]; cx * cy * nz];
        for k in 0..nz {
            for j in 0..ny {
                let (b, w) = (ay.base[j], ay.weights[j]);
                for a in 0..cx {
                    let g = t2[a + cx * (j + ny * k)];
                    for (c, wc) in w.iter().enumerate() {
                        let d = &mut t1[a + cx * ((b + c) + cy * k)];
                        d[0] += wc * g[0];
                        d[1] += wc * g[1];
                        d[2] += wc * g[2];
                    }
                }
            }
        }
        let mut ctrl = vec![[0.0; 3]; cx * cy * cz];
        for k in 0..nz {
            let (b, w) = (az.base[k], az.weights[k]);
            for q in 0..cx * cy {
                let g = t1[q + cx * cy * k];
                for (c, wc) in w.iter().enumerate() {
                    let d = &mut ctrl[q + cx * cy * (b + c)];
                    d[0] += wc * g[0];
                    d[1] += wc * g[1];
                    d[2] += wc * g[2];
                }
            }
        }
        ctrl
    }
}
