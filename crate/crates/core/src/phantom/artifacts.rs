//! Metal-artefact corruption: saturated electrode blobs, streaks and noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::geometry::{RINGS, STATIONS};
use super::mesh::CorrespondenceMesh;
use crate::error::{config, Result};
use crate::geom::{self, Vec3};
use crate::grid::{Volume, VoxelGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArtifactParams {
    pub electrodes: usize,
    /// mm.
    pub electrode_radius: f64,
    pub streak_amplitude: f64,
    /// Flat-top streak width range in voxels; each side ramps to zero over one more voxel.
    pub streak_width: [f64; 2],
    pub noise_sigma: f64,
}

impl Default for ArtifactParams {
    fn default() -> Self {
        Self {
            electrodes: 12,
            electrode_radius: 0.3,
            streak_amplitude: 0.7,
            streak_width: [2.0, 3.0],
            noise_sigma: 0.05,
        }
    }
}

impl ArtifactParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.electrode_radius >= 0.0
            && self.streak_amplitude.is_finite()
            && self.streak_width[0] > 0.0
            && self.streak_width[1] >= self.streak_width[0]
            && self.noise_sigma.is_finite()
            && self.noise_sigma >= 0.0;
        if !ok {
            return config(format!("invalid artifact parameters {self:?}"));
        }
        Ok(())
    }
}

/// Electrode positions: centroids of evenly spaced ST rings over the basal half of the duct.
pub fn electrode_centers(mesh: &CorrespondenceMesh, count: usize) -> Vec<Vec3> {
    let ring = RINGS[0];
    let stations = STATIONS[0].min(mesh.class_counts[0] / ring);
    // Skip the cap ring, whose centroid sits on the duct's end face.
    let first = 2.min(stations.saturating_sub(1));
    let last = (stations / 2).saturating_sub(1).max(first);
    (0..count)
        .map(|e| {
            let s = if count > 1 { first + (e * (last - first) + (count - 1) / 2) / (count - 1) } else { first };
            let pts = &mesh.vertices[s * ring..(s + 1) * ring];
            let sum = pts.iter().fold([0.0; 3], |a, p| geom::add(a, *p));
            geom::scale(sum, 1.0 / ring as f64)
        })
        .collect()
}

/// Voxels belonging to an electrode blob: all within `radius` of `c`, plus the nearest voxel.
pub fn electrode_voxels(grid: &VoxelGrid, c: Vec3, radius: f64) -> Vec<usize> {
    let v = grid.voxel_of(c);
    let mut out = Vec::new();
    let reach = radius / grid.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let lo = v.map(|x| (x - reach).floor().max(0.0) as usize);
    let nearest = v.map(|x| x.round());
    for k in lo[2]..grid.dims[2] {
        if k as f64 > v[2] + reach + 1.0 {
            break;
        }
        for j in lo[1]..grid.dims[1] {
            if j as f64 > v[1] + reach + 1.0 {
                break;
            }
            for i in lo[0]..grid.dims[0] {
                if i as f64 > v[0] + reach + 1.0 {
                    break;
                }
                let idx = grid.index(i, j, k);
                let near = [i as f64, j as f64, k as f64] == nearest;
                if near || geom::dist(grid.world_of_index(idx), c) <= radius {
                    out.push(idx);
                }
            }
        }
    }
    out
}

/// Corrupts `clean` with electrode blobs, streaks through them, and Gaussian
/// noise, then clamps to `[-1, 1]`. Electrode voxels end at exactly `+1`.
/// `severity` scales streak amplitude; 0 leaves only the noise.
pub fn simulate_artifacts(
    clean: &Volume,
    mesh: &CorrespondenceMesh,
    seed: u64,
    severity: f64,
    p: &ArtifactParams,
) -> Result<Volume> {
    p.validate()?;
    if !(severity.is_finite() && severity >= 0.0) {
        return config(format!("severity {severity} must be >= 0"));
    }
    mesh.validate()?;
    let grid = clean.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = clean.values.clone();
    let electrodes = if severity > 0.0 {
        electrode_centers(mesh, p.electrodes)
    } else {
        Vec::new()
    };
    let h = grid.spacing[0];
    for &e in &electrodes {
        let psi = rng.random_range(0.0..std::f64::consts::PI);
        let normal = [-psi.sin(), psi.cos(), 0.0];
        let half = 0.5 * h * rng.random_range(p.streak_width[0]..=p.streak_width[1]);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let amp = sign * p.streak_amplitude * severity;
        for (idx, v) in values.iter_mut().enumerate() {
            let r = geom::dot(geom::sub(grid.world_of_index(idx), e), normal).abs();
            let w = if r <= half { 1.0 } else { 1.0 - (r - half) / h };
            if w > 0.0 {
                *v += amp * w;
            }
        }
    }
    if p.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, p.noise_sigma).expect("validated sigma");
        for v in values.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    for v in values.iter_mut() {
        *v = v.clamp(-1.0, 1.0);
    }
    for &e in &electrodes {
        for idx in electrode_voxels(&grid, e, p.electrode_radius) {
            values[idx] = 1.0;
        }
    }
    Volume::new(grid, values)
}
