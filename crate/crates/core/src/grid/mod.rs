//! Regular voxel grids, scalar volumes and probabilistic mask sets.

mod filter;
mod intensity;
mod interp;
mod rotate;

pub use filter::{gaussian_blur, gaussian_kernel, AxisOperator, SeparableBlur};
pub use intensity::{percentile, preprocess_intensity};
pub use interp::{trilinear_gradient, trilinear_sample, Stencil};
pub use rotate::{rotate_volume, Rotation, MAX_ROTATION_DEG};

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::geom::Vec3;

/// Default crop edge length in voxels.
pub const DEFAULT_DIM: usize = 64;
/// Default isotropic voxel spacing in millimetres.
pub const DEFAULT_SPACING: f64 = 0.2;

/// Geometry of a regular 3D grid. Voxel `(0,0,0)` sits at `origin`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl Default for VoxelGrid {
    fn default() -> Self {
        Self::cube(DEFAULT_DIM, DEFAULT_SPACING).expect("default grid is valid")
    }
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return input(format!("grid dims must be >= 2, got {dims:?}"));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return input(format!("grid spacing must be positive, got {spacing:?}"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return input(format!("grid origin must be finite, got {origin:?}"));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    /// `n³` voxels of isotropic `spacing` with the origin at zero.
    pub fn cube(n: usize, spacing: f64) -> Result<Self> {
        Self::new([n; 3], [spacing; 3], [0.0; 3])
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> [usize; 3] {
        [1, self.dims[0], self.dims[0] * self.dims[1]]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let r = idx / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    #[inline]
    pub fn world_of(&self, v: Vec3) -> Vec3 {
        [
            self.origin[0] + v[0] * self.spacing[0],
            self.origin[1] + v[1] * self.spacing[1],
            self.origin[2] + v[2] * self.spacing[2],
        ]
    }

    #[inline]
    pub fn voxel_of(&self, p: Vec3) -> Vec3 {
        [
            (p[0] - self.origin[0]) / self.spacing[0],
            (p[1] - self.origin[1]) / self.spacing[1],
            (p[2] - self.origin[2]) / self.spacing[2],
        ]
    }

    /// World position of the voxel with linear index `idx`.
    #[inline]
    pub fn world_of_index(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.coords(idx);
        self.world_of([i as f64, j as f64, k as f64])
    }

    /// World-space centre of the voxel lattice.
    pub fn center(&self) -> Vec3 {
        self.world_of([
            (self.dims[0] - 1) as f64 / 2.0,
            (self.dims[1] - 1) as f64 / 2.0,
            (self.dims[2] - 1) as f64 / 2.0,
        ])
    }

    /// Physical extent (mm) between the first and last voxel centres.
    pub fn extent(&self) -> Vec3 {
        [
            (self.dims[0] - 1) as f64 * self.spacing[0],
            (self.dims[1] - 1) as f64 * self.spacing[1],
            (self.dims[2] - 1) as f64 * self.spacing[2],
        ]
    }

    pub fn is_interior(&self, i: usize, j: usize, k: usize) -> bool {
        i > 0
            && j > 0
            && k > 0
            && i + 1 < self.dims[0]
            && j + 1 < self.dims[1]
            && k + 1 < self.dims[2]
    }
}

/// A scalar field on a grid, x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    pub grid: VoxelGrid,
    pub values: Vec<f64>,
}

impl Volume {
    pub fn new(grid: VoxelGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return input(format!(
                "volume has {} values for a grid of {}",
                values.len(),
                grid.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return input("volume contains non-finite values");
        }
        Ok(Self { grid, values })
    }

    pub fn filled(grid: VoxelGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Builds a volume by evaluating `f` at every voxel's world position.
    pub fn from_fn(grid: VoxelGrid, f: impl Fn(Vec3) -> f64 + Sync + Send) -> Self {
        let values = crate::par::map_range(grid.len(), |idx| f(grid.world_of_index(idx)));
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Segmentation classes, in channel order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Structure {
    /// Scala tympani.
    St,
    /// Scala vestibuli.
    Sv,
    /// Modiolus.
    Md,
}

impl Structure {
    pub const ALL: [Structure; 3] = [Structure::St, Structure::Sv, Structure::Md];

    pub fn name(self) -> &'static str {
        match self {
            Structure::St => "ST",
            Structure::Sv => "SV",
            Structure::Md => "MD",
        }
    }
}

/// One probabilistic mask per [`Structure`], sharing a grid. Values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMaskSet {
    pub grid: VoxelGrid,
    pub channels: [Vec<f64>; 3],
}

impl ProbMaskSet {
    pub fn new(grid: VoxelGrid, channels: [Vec<f64>; 3]) -> Result<Self> {
        for (c, ch) in channels.iter().enumerate() {
            if ch.len() != grid.len() {
                return input(format!("mask channel {c} has wrong length {}", ch.len()));
            }
            if ch.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return input(format!("mask channel {c} has values outside [0, 1]"));
            }
        }
        Ok(Self { grid, channels })
    }

    pub fn zeros(grid: VoxelGrid) -> Self {
        let z = vec![0.0; grid.len()];
        Self {
            grid,
            channels: [z.clone(), z.clone(), z],
        }
    }

    pub fn channel(&self, s: Structure) -> Volume {
        Volume {
            grid: self.grid,
            values: self.channels[s as usize].clone(),
        }
    }
}
