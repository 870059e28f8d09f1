use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::format::{read_json, write_json};
use crate::engine::{Arm, RegistrationConfig};
use crate::error::{config, Result};
use crate::grid::{VoxelGrid, DEFAULT_DIM, DEFAULT_SPACING};
use crate::phantom::{ArtifactParams, SpiralParams};

/// Phantom generation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomConfig {
    /// Voxels per axis of the cubic grid.
    pub grid_dim: usize,
    /// mm.
    pub spacing: f64,
    pub spiral: SpiralParams,
    /// Bound on truth-warp control displacements, mm.
    pub deform_magnitude: f64,
    pub artifacts: ArtifactParams,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            grid_dim: DEFAULT_DIM,
            spacing: DEFAULT_SPACING,
            spiral: SpiralParams::default(),
            deform_magnitude: 0.8,
            artifacts: ArtifactParams::default(),
        }
    }
}

impl PhantomConfig {
    pub fn grid(&self) -> Result<VoxelGrid> {
        VoxelGrid::cube(self.grid_dim, self.spacing)
    }
}

/// Everything a run depends on. A stored config re-executes to identical outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Subject seeds are `derive_seed(master_seed, i)`.
    pub master_seed: u64,
    pub phantom: PhantomConfig,
    pub registration: RegistrationConfig,
    pub arms: Vec<Arm>,
    pub suite_size: usize,
    pub out_dir: PathBuf,
    /// Artefact strength; 0 leaves only noise.
    pub severity: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            phantom: PhantomConfig::default(),
            registration: RegistrationConfig::default(),
            arms: Arm::ALL.to_vec(),
            suite_size: 20,
            out_dir: PathBuf::from("out"),
            severity: 1.0,
        }
    }
}

impl RunConfig {
    /// Reduced-cost profile: the same physical field of view and anatomy on a
    /// 32³ grid at 0.4 mm, a 4-voxel lattice, a shorter schedule and the
    /// step scaled with the voxel size.
    pub fn desk() -> Self {
        let mut c = Self::default();
        c.phantom.grid_dim = 32;
        c.phantom.spacing = 0.4;
        c.registration.control_spacing = 4;
        c.registration.step_size = 0.02;
        c.registration.iters_global = DESK_ITERS.0;
        c.registration.iters_joint = DESK_ITERS.1;
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.phantom.grid()?;
        self.phantom.spiral.validate()?;
        self.phantom.artifacts.validate()?;
        self.registration.validate()?;
        if !(self.phantom.deform_magnitude.is_finite() && self.phantom.deform_magnitude >= 0.0) {
            return config("deform_magnitude must be >= 0");
        }
        if !(self.severity.is_finite() && self.severity >= 0.0) {
            return config("severity must be >= 0");
        }
        if self.suite_size == 0 {
            return config("suite_size must be at least 1");
        }
        if self.arms.is_empty() {
            return config("at least one arm is required");
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Self = read_json(path)?;
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Global and joint step counts of [`RunConfig::desk`].
pub const DESK_ITERS: (usize, usize) = (20, 180);

/// Parses a comma-separated arm list.
pub fn parse_arms(list: &str) -> Result<Vec<Arm>> {
    let arms: Vec<Arm> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Arm::parse)
        .collect::<Result<_>>()?;
    if arms.is_empty() {
        return config("empty arm list");
    }
    Ok(arms)
}
