use serde::{Deserialize, Serialize};

use super::{Ddf, FfdLattice, LatticeSampler, Space};
use crate::error::Result;
use crate::geom::{self, Mat3, Vec3};
use crate::grid::VoxelGrid;

/// Global stage: `A(y) = linear · (y − c) + c + translation`, where `c` is the
/// centre of the grid the transform is realised on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub linear: Mat3,
    pub translation: Vec3,
}

impl Default for AffineParams {
    fn default() -> Self {
        Self {
            linear: geom::IDENTITY,
            translation: [0.0; 3],
        }
    }
}

impl AffineParams {
    pub fn is_finite(&self) -> bool {
        self.linear.iter().all(|r| geom::is_finite(*r)) && geom::is_finite(self.translation)
    }

    /// `linear − I`.
    pub fn deviation(&self) -> Mat3 {
        let mut m = self.linear;
        for (a, row) in m.iter_mut().enumerate() {
            row[a] -= 1.0;
        }
        m
    }
}

/// `T(x) = A(x + u_ffd(x))`: a local free-form stage refined by a global affine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStageTransform {
    pub affine: AffineParams,
    pub ffd: FfdLattice,
    pub domain: Space,
    pub codomain: Space,
}

impl TwoStageTransform {
    /// The identity transform from `domain` to `codomain` with a zero lattice covering `grid`.
    pub fn identity(
        grid: &VoxelGrid,
        control_spacing: usize,
        domain: Space,
        codomain: Space,
    ) -> Result<Self> {
        Ok(Self {
            affine: AffineParams::default(),
            ffd: FfdLattice::zeros(grid, control_spacing)?,
            domain,
            codomain,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.affine == AffineParams::default() && self.ffd.is_zero()
    }

    /// Number of scalar parameters (12 affine + 3 per control point).
    pub fn num_params(&self) -> usize {
        12 + 3 * self.ffd.len()
    }
}

/// Gradient of a scalar objective with respect to a [`TwoStageTransform`].
#[derive(Clone, Debug, PartialEq)]
pub struct TransformGrad {
    pub linear: Mat3,
    pub translation: Vec3,
    pub lattice: Vec<Vec3>,
}

impl TransformGrad {
    pub fn zeros(t: &TwoStageTransform) -> Self {
        Self {
            linear: [[0.0; 3]; 3],
            translation: [0.0; 3],
            lattice: vec![[0.0; 3]; t.ffd.len()],
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.linear.iter().flatten().map(|v| v * v).sum::<f64>()
            + self.translation.iter().map(|v| v * v).sum::<f64>()
            + self.lattice.iter().flatten().map(|v| v * v).sum::<f64>()
    }

    pub fn add_assign(&mut self, other: &TransformGrad) {
        for a in 0..3 {
            for b in 0..3 {
                self.linear[a][b] += other.linear[a][b];
            }
            self.translation[a] += other.translation[a];
        }
        for (x, y) in self.lattice.iter_mut().zip(&other.lattice) {
            for a in 0..3 {
                x[a] += y[a];
            }
        }
    }

    /// Flattened in the parameter order used by [`TwoStageTransform`] accessors:
    /// linear (row-major), translation, lattice.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.linear.iter().flatten().copied().collect();
        v.extend_from_slice(&self.translation);
        v.extend(self.lattice.iter().flatten());
        v
    }
}

impl TwoStageTransform {
    /// Reads parameter `i` in [`TransformGrad::to_flat`] order.
    pub fn param(&self, i: usize) -> f64 {
        match i {
            0..=8 => self.affine.linear[i / 3][i % 3],
            9..=11 => self.affine.translation[i - 9],
            _ => self.ffd.displacements[(i - 12) / 3][(i - 12) % 3],
        }
    }

    pub fn param_mut(&mut self, i: usize) -> &mut f64 {
        match i {
            0..=8 => &mut self.affine.linear[i / 3][i % 3],
            9..=11 => &mut self.affine.translation[i - 9],
            _ => &mut self.ffd.displacements[(i - 12) / 3][(i - 12) % 3],
        }
    }
}

/// Realises a transform on a fixed grid and back-propagates displacement
/// gradients to its parameters. Holds the basis tables so repeated calls
/// during optimisation avoid rebuilding them.
#[derive(Clone, Debug)]
pub struct TransformRealizer {
    grid: VoxelGrid,
    sampler: LatticeSampler,
}

impl TransformRealizer {
    pub fn new(grid: &VoxelGrid, lattice: &FfdLattice) -> Result<Self> {
        Ok(Self {
            grid: *grid,
            sampler: LatticeSampler::new(grid, lattice)?,
        })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    /// Local-stage displacement at every voxel.
    pub fn local_field(&self, t: &TwoStageTransform) -> Vec<Vec3> {
        self.sampler.evaluate(&t.ffd.displacements)
    }

    pub fn realize(&self, t: &TwoStageTransform) -> Ddf {
        let local = self.local_field(t);
        self.realize_with_local(t, &local)
    }

    /// `T(x) − x = (L − I)(x + u − c) + u + t`, written so that zero
    /// parameters give exactly zero displacement.
    pub fn realize_with_local(&self, t: &TwoStageTransform, local: &[Vec3]) -> Ddf {
        let grid = self.grid;
        let c = grid.center();
        let m = t.affine.deviation();
        let tr = t.affine.translation;
        let affine_free = m == [[0.0; 3]; 3];
        let mut disp = vec![[0.0; 3]; grid.len()];
        crate::par::for_each_chunk(&mut disp, grid.dims[0], |line, dst| {
            let base = line * grid.dims[0];
            for (o, d) in dst.iter_mut().enumerate() {
                let u = local[base + o];
                let lin = if affine_free {
                    [0.0; 3]
                } else {
                    let x = grid.world_of_index(base + o);
                    geom::mat_vec(&m, geom::sub(geom::add(x, u), c))
                };
                *d = [
                    lin[0] + u[0] + tr[0],
                    lin[1] + u[1] + tr[1],
                    lin[2] + u[2] + tr[2],
                ];
            }
        });
        Ddf {
            grid,
            displacement: disp,
            domain: t.domain,
            codomain: t.codomain,
        }
    }

    /// Maps `∂L/∂displacement` at every voxel to `∂L/∂parameters`.
    pub fn backprop(&self, t: &TwoStageTransform, local: &[Vec3], gdisp: &[Vec3]) -> TransformGrad {
        let grid = self.grid;
        let c = grid.center();
        let nx = grid.dims[0];
        let nlines = grid.len() / nx;
        // per-line partial sums of the affine gradients, combined in order
        let partials = crate::par::map_range(nlines, |line| {
            let mut gl = [[0.0; 3]; 3];
            let mut gt = [0.0; 3];
            for o in 0..nx {
                let idx = line * nx + o;
                let g = gdisp[idx];
                let y = geom::sub(geom::add(grid.world_of_index(idx), local[idx]), c);
                for a in 0..3 {
                    gt[a] += g[a];
                    for b in 0..3 {
                        gl[a][b] += g[a] * y[b];
                    }
                }
            }
            (gl, gt)
        });
        let mut linear = [[0.0; 3]; 3];
        let mut translation = [0.0; 3];
        for (gl, gt) in partials {
            for a in 0..3 {
                translation[a] += gt[a];
                for b in 0..3 {
                    linear[a][b] += gl[a][b];
                }
            }
        }
        let l = t.affine.linear;
        let glocal: Vec<Vec3> = gdisp.iter().map(|g| geom::mat_t_vec(&l, *g)).collect();
        TransformGrad {
            linear,
            translation,
            lattice: self.sampler.adjoint(&glocal),
        }
    }
}

/// Dense displacement field of `t` sampled at the voxel centres of `grid`.
pub fn realize_ddf(t: &TwoStageTransform, grid: &VoxelGrid) -> Result<Ddf> {
    Ok(TransformRealizer::new(grid, &t.ffd)?.realize(t))
}
