//! Synthetic cochlea-like atlases and subjects with metal-artefact renderings.

mod artifacts;
mod augment;
mod geometry;
mod mesh;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use artifacts::{simulate_artifacts, ArtifactParams};
pub use augment::{augment, augment_with, Augmentation, AUGMENT_BLURS, AUGMENT_COPIES};
pub use mesh::{CorrespondenceMesh, CLASS_COUNTS, TOTAL_VERTICES};

use geometry::Spiral;

use crate::deform::{jacobian_determinant, push_points, realize_ddf, Ddf, Space, TwoStageTransform};
use crate::engine::{AtlasObjects, PairBundle, SubjectObjects};
use crate::error::{config, Result};
use crate::geom::{self, Vec3};
use crate::grid::{preprocess_intensity, ProbMaskSet, Volume, VoxelGrid};

/// Shape of the synthetic cochlea, in mm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpiralParams {
    pub turns: f64,
    /// Centreline radius at the base.
    pub base_radius: f64,
    /// Centreline radius lost per turn.
    pub taper: f64,
    pub duct_radius_st: f64,
    pub duct_radius_sv: f64,
    /// Rise of the centreline per turn.
    pub pitch: f64,
    pub core_base_radius: f64,
    pub core_apex_radius: f64,
}

impl Default for SpiralParams {
    fn default() -> Self {
        Self {
            turns: 2.5,
            base_radius: 3.2,
            taper: 0.8,
            duct_radius_st: 0.5,
            duct_radius_sv: 0.45,
            pitch: 0.8,
            core_base_radius: 0.5,
            core_apex_radius: 0.2,
        }
    }
}

/// Background, per-structure offsets (ST, SV, MD) and gradient strength of the raw image.
const BACKGROUND: f64 = -0.3;
const OFFSETS: [f64; 3] = [0.6, 0.45, -0.45];
const GRADIENT: f64 = 0.15;
const GRADIENT_DIR: Vec3 = [0.666_666_666_666_666_6, 0.333_333_333_333_333_3, -0.666_666_666_666_666_6];

/// Truth-warp lattice spacing in mm (12 voxels at 0.2 mm).
const TRUTH_SPACING_MM: f64 = 2.4;
const JACOBIAN_FLOOR: f64 = 0.1;
const MAX_ATTEMPTS: u64 = 100;
/// Sub-seed index for artefact noise, disjoint from warp attempts.
const ARTIFACT_STREAM: u64 = 1 << 32;

impl SpiralParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.turns,
            self.base_radius,
            self.taper,
            self.duct_radius_st,
            self.duct_radius_sv,
            self.pitch,
            self.core_base_radius,
            self.core_apex_radius,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return config(format!("spiral parameters must be positive: {self:?}"));
        }
        let apex = self.base_radius - self.taper * self.turns;
        let duct = self.duct_radius_st.max(self.duct_radius_sv);
        if apex - duct <= self.core_base_radius.max(self.core_apex_radius) {
            return config("spiral apex collides with the core");
        }
        if self.pitch.hypot(self.taper) <= self.duct_radius_st + self.duct_radius_sv {
            return config("adjacent spiral turns overlap");
        }
        Ok(())
    }

    fn fits(&self, grid: &VoxelGrid, spiral: &Spiral) -> Result<()> {
        let half = spiral.half_extent();
        let ext = grid.extent();
        for a in 0..3 {
            let room = 0.5 * ext[a] - 2.0 * grid.spacing[a];
            if half[a] > room {
                return config(format!(
                    "spiral needs ±{:.3} mm on axis {a} but the grid offers ±{room:.3} mm inside a 2-voxel margin",
                    half[a]
                ));
            }
        }
        Ok(())
    }
}

/// The canonical atlas: image, masks and correspondence mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct PhantomAtlas {
    pub params: SpiralParams,
    pub image: Volume,
    pub masks: ProbMaskSet,
    pub mesh: CorrespondenceMesh,
}

impl PhantomAtlas {
    pub fn grid(&self) -> VoxelGrid {
        self.image.grid
    }

    pub fn objects(&self) -> AtlasObjects {
        AtlasObjects {
            image: self.image.clone(),
            masks: self.masks.clone(),
            mesh: self.mesh.clone(),
        }
    }
}

/// One synthetic subject. `truth_warp` maps atlas points into subject space.
#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSubject {
    pub seed: u64,
    pub clean_image: Volume,
    pub artifact_image: Volume,
    pub masks: ProbMaskSet,
    pub mesh: CorrespondenceMesh,
    pub truth_warp: Ddf,
}

impl PhantomSubject {
    pub fn objects(&self) -> SubjectObjects {
        SubjectObjects {
            artifact_image: self.artifact_image.clone(),
            clean_image: self.clean_image.clone(),
            masks: self.masks.clone(),
            mesh: self.mesh.clone(),
        }
    }

    pub fn bundle(&self, atlas: &PhantomAtlas) -> PairBundle {
        PairBundle {
            atlas: atlas.objects(),
            subject: self.objects(),
        }
    }
}

fn spiral_for(params: &SpiralParams, grid: &VoxelGrid) -> Result<Spiral> {
    params.validate()?;
    let spiral = Spiral::new(params, grid.center());
    params.fits(grid, &spiral)?;
    Ok(spiral)
}

/// Renders masks and image of the atlas geometry seen through `to_atlas`.
fn render(spiral: &Spiral, grid: &VoxelGrid, to_atlas: impl Fn(Vec3) -> Vec3 + Sync) -> Result<(Volume, ProbMaskSet)> {
    let channels = geometry::coverage(spiral, grid, &to_atlas);
    let c = grid.center();
    let half = 0.5 * grid.extent()[0];
    let raw = crate::par::map_range(grid.len(), |i| {
        let x = to_atlas(grid.world_of_index(i));
        let mut v = BACKGROUND + GRADIENT * geom::dot(GRADIENT_DIR, geom::sub(x, c)) / half;
        for (k, off) in OFFSETS.iter().enumerate() {
            v += off * channels[k][i];
        }
        v
    });
    let image = preprocess_intensity(&Volume::new(*grid, raw)?);
    Ok((image, ProbMaskSet::new(*grid, channels)?))
}

/// Builds the deterministic atlas for `params` on `grid`.
pub fn make_atlas(params: &SpiralParams, grid: VoxelGrid) -> Result<PhantomAtlas> {
    let spiral = spiral_for(params, &grid)?;
    let (image, masks) = render(&spiral, &grid, |x| x)?;
    Ok(PhantomAtlas {
        params: params.clone(),
        image,
        masks,
        mesh: spiral.mesh(),
    })
}

/// Lattice spacing in voxels used for truth warps on `grid`.
pub fn truth_control_spacing(grid: &VoxelGrid) -> usize {
    ((TRUTH_SPACING_MM / grid.spacing[0]).round() as usize).max(2)
}

fn random_truth(grid: &VoxelGrid, magnitude: f64, rng: &mut ChaCha8Rng) -> Result<Ddf> {
    let mut t = TwoStageTransform::identity(grid, truth_control_spacing(grid), Space::Atlas, Space::Subject)?;
    if magnitude > 0.0 {
        for d in t.ffd.displacements.iter_mut() {
            *d = [0; 3].map(|_| rng.random_range(-magnitude..=magnitude));
        }
    }
    realize_ddf(&t, grid)
}

fn min_interior_det(ddf: &Ddf) -> f64 {
    let det = jacobian_determinant(ddf);
    let g = ddf.grid;
    (0..g.len())
        .filter(|&i| {
            let [a, b, c] = g.coords(i);
            g.is_interior(a, b, c)
        })
        .map(|i| det.values[i])
        .fold(f64::INFINITY, f64::min)
}

/// Preimage of `y` under `x ↦ x + u(x)` by fixed-point iteration.
fn invert_point(ddf: &Ddf, y: Vec3) -> Vec3 {
    let mut x = y;
    for _ in 0..40 {
        let next = geom::sub(y, ddf.displacement_at(x));
        let step = geom::dist(next, x);
        x = next;
        if step < 1e-12 {
            break;
        }
    }
    x
}

/// Generates a subject: random smooth truth warp of the atlas, clean
/// rendering, and artefact rendering. Deterministic in `seed`.
pub fn make_subject(
    atlas: &PhantomAtlas,
    seed: u64,
    deform_magnitude: f64,
    severity: f64,
    artifacts: &ArtifactParams,
) -> Result<PhantomSubject> {
    if !(deform_magnitude.is_finite() && deform_magnitude >= 0.0) {
        return config(format!("deform_magnitude {deform_magnitude} must be >= 0"));
    }
    let grid = atlas.grid();
    let spiral = spiral_for(&atlas.params, &grid)?;
    let mut truth = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::engine::derive_seed(seed, attempt));
        let ddf = random_truth(&grid, deform_magnitude, &mut rng)?;
        if min_interior_det(&ddf) > JACOBIAN_FLOOR {
            truth = Some(ddf);
            break;
        }
    }
    let Some(truth_warp) = truth else {
        return config(format!(
            "no non-folding truth warp in {MAX_ATTEMPTS} draws; deform_magnitude {deform_magnitude} is too large"
        ));
    };
    let mesh = atlas.mesh.with_vertices(push_points(&truth_warp, &atlas.mesh.vertices)?)?;
    let (clean_image, masks) = if truth_warp.displacement.iter().all(|d| *d == [0.0; 3]) {
        (atlas.image.clone(), atlas.masks.clone())
    } else {
        render(&spiral, &grid, |y| invert_point(&truth_warp, y))?
    };
    let artifact_image = simulate_artifacts(&clean_image, &mesh, crate::engine::derive_seed(seed, ARTIFACT_STREAM), severity, artifacts)?;
    Ok(PhantomSubject {
        seed,
        clean_image,
        artifact_image,
        masks,
        mesh,
        truth_warp,
    })
}
