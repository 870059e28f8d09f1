//! Per-pair co-optimisation of the two opposing transforms, and mesh propagation.

mod adam;
mod suite;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use suite::{derive_seed, run_ablation_suite, Arm, SuiteOptions};

use crate::deform::{push_points, realize_ddf, Space, TransformGrad, TwoStageTransform};
use crate::error::{config, input, Error, Result};
use crate::grid::{ProbMaskSet, Volume, VoxelGrid};
use crate::loss::{
    DiceDenominator, Directions, LossReport, LossWeights, ObjectSet, Objective, ObjectiveConfig, DEFAULT_SCALES,
};
use crate::phantom::CorrespondenceMesh;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrationConfig {
    pub weights: LossWeights,
    pub fiducial_fraction: f64,
    /// Affine-only steps.
    pub iters_global: usize,
    /// Joint affine + lattice steps.
    pub iters_joint: usize,
    /// Base step, in mm of induced displacement per update.
    pub step_size: f64,
    pub schedule: StepSchedule,
    /// Lattice spacing in voxels.
    pub control_spacing: usize,
    pub seed: u64,
    pub mspdice_scales: Vec<f64>,
    pub dice_denominator: DiceDenominator,
    pub directions: Directions,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            fiducial_fraction: 0.30,
            iters_global: 200,
            iters_joint: 800,
            step_size: 0.01,
            schedule: StepSchedule::default(),
            control_spacing: 8,
            seed: 0,
            mspdice_scales: DEFAULT_SCALES.to_vec(),
            dice_denominator: DiceDenominator::default(),
            directions: Directions::Both,
        }
    }
}

/// How the base step evolves within each optimisation phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    Constant,
    /// Half-cosine decay from the base step towards zero over both phases.
    #[default]
    Cosine,
}

impl StepSchedule {
    /// Step for update `k` of `len`.
    pub fn step(self, base: f64, k: usize, len: usize) -> f64 {
        match self {
            StepSchedule::Constant => base,
            StepSchedule::Cosine => base * 0.5 * (1.0 + (std::f64::consts::PI * k as f64 / len as f64).cos()),
        }
    }
}

impl RegistrationConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.fiducial_fraction > 0.0 && self.fiducial_fraction <= 1.0) {
            return config(format!("fiducial_fraction {} not in (0, 1]", self.fiducial_fraction));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return config(format!("step_size {} must be positive", self.step_size));
        }
        if self.control_spacing < 2 {
            return config("control_spacing must be at least 2 voxels");
        }
        if self.mspdice_scales.is_empty() || self.mspdice_scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return config(format!("invalid mspdice_scales {:?}", self.mspdice_scales));
        }
        Ok(())
    }

    fn objective_config(&self) -> ObjectiveConfig {
        ObjectiveConfig {
            weights: self.weights,
            mspdice_scales: self.mspdice_scales.clone(),
            dice_denominator: self.dice_denominator,
            directions: self.directions,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtlasObjects {
    pub image: Volume,
    pub masks: ProbMaskSet,
    pub mesh: CorrespondenceMesh,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubjectObjects {
    /// Corrupted target image. Carried for completeness; no loss term reads it.
    pub artifact_image: Volume,
    pub clean_image: Volume,
    pub masks: ProbMaskSet,
    pub mesh: CorrespondenceMesh,
}

/// Everything needed to register one subject to the atlas.
#[derive(Clone, Debug, PartialEq)]
pub struct PairBundle {
    pub atlas: AtlasObjects,
    pub subject: SubjectObjects,
}

impl PairBundle {
    pub fn grid(&self) -> VoxelGrid {
        self.atlas.image.grid
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.grid();
        let grids = [
            self.atlas.masks.grid,
            self.subject.artifact_image.grid,
            self.subject.clean_image.grid,
            self.subject.masks.grid,
        ];
        if grids.iter().any(|x| *x != g) {
            return input("bundle volumes are not on one grid");
        }
        self.atlas.mesh.validate()?;
        self.subject.mesh.validate()?;
        if !self.atlas.mesh.same_topology(&self.subject.mesh) {
            return input("atlas and subject meshes differ in vertex count, class ranges or faces");
        }
        Ok(())
    }

    fn objects(&self) -> (ObjectSet<'_>, ObjectSet<'_>) {
        (
            ObjectSet {
                image: &self.atlas.image,
                masks: &self.atlas.masks,
                vertices: &self.atlas.mesh.vertices,
            },
            ObjectSet {
                image: &self.subject.clean_image,
                masks: &self.subject.masks,
                vertices: &self.subject.mesh.vertices,
            },
        )
    }

    /// Objective over this bundle's clean objects.
    pub fn objective(&self, cfg: &RegistrationConfig) -> Result<Objective<'_>> {
        self.validate()?;
        let (a, s) = self.objects();
        Objective::new(a, s, cfg.control_spacing, cfg.objective_config())
    }
}

/// The atlas→subject and subject→atlas transforms, with the grid they are realised on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidirectionalModel {
    pub grid: VoxelGrid,
    pub fwd: TwoStageTransform,
    pub rev: TwoStageTransform,
}

impl BidirectionalModel {
    pub fn identity(grid: VoxelGrid, control_spacing: usize) -> Result<Self> {
        Ok(Self {
            grid,
            fwd: TwoStageTransform::identity(&grid, control_spacing, Space::Atlas, Space::Subject)?,
            rev: TwoStageTransform::identity(&grid, control_spacing, Space::Subject, Space::Atlas)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.fwd.domain != Space::Atlas || self.fwd.codomain != Space::Subject {
            return input("fwd must map atlas to subject");
        }
        if self.rev.domain != Space::Subject || self.rev.codomain != Space::Atlas {
            return input("rev must map subject to atlas");
        }
        if !(self.fwd.ffd.covers(&self.grid) && self.rev.ffd.covers(&self.grid)) {
            return input("model lattices do not cover the model grid");
        }
        Ok(())
    }
}

/// `round(fraction · n)` distinct vertex indices, ascending, applied to both meshes.
pub fn sample_fiducials(mesh: &CorrespondenceMesh, fraction: f64, rng: &mut impl Rng) -> Result<Vec<usize>> {
    let n = mesh.len();
    if n == 0 {
        return input("cannot sample fiducials from an empty mesh");
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return config(format!("fiducial fraction {fraction} not in (0, 1]"));
    }
    let k = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut idx = sample(rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Characteristic lever arm (mm) turning linear-part steps into displacement.
fn lever_arm(grid: &VoxelGrid) -> f64 {
    let e = grid.extent();
    0.5 * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt() / 3f64.sqrt()
}

/// Separate adaptive states for the affine and lattice groups of one transform.
struct TransformOptimizer {
    linear: Adam,
    translation: Adam,
    lattice: Adam,
}

impl TransformOptimizer {
    fn new(t: &TwoStageTransform) -> Self {
        Self {
            linear: Adam::new(9),
            translation: Adam::new(3),
            lattice: Adam::new(3 * t.ffd.len()),
        }
    }

    fn step(&mut self, t: &mut TwoStageTransform, g: &TransformGrad, step: f64, lever: f64, joint: bool) {
        let mut lin: Vec<f64> = t.affine.linear.iter().flatten().copied().collect();
        let glin: Vec<f64> = g.linear.iter().flatten().copied().collect();
        self.linear.step(&mut lin, &glin, step / lever);
        for (a, row) in t.affine.linear.iter_mut().enumerate() {
            row.copy_from_slice(&lin[3 * a..3 * a + 3]);
        }
        self.translation.step(&mut t.affine.translation, &g.translation, step);
        if joint {
            let flat = t.ffd.displacements.as_flattened_mut();
            self.lattice.step(flat, g.lattice.as_flattened(), step);
        }
    }
}

fn check_finite(report: &LossReport, non_finite_grad: Option<&'static str>, step: usize) -> Result<()> {
    if let Some(term) = report.first_non_finite() {
        return Err(Error::NonFinite {
            term: format!("{term} loss"),
            step,
        });
    }
    if let Some(term) = non_finite_grad {
        return Err(Error::NonFinite {
            term: format!("{term} gradient"),
            step,
        });
    }
    Ok(())
}

/// Optimises both transforms for `bundle`, calling `on_step` with each
/// step's report (evaluated before that step's update).
pub fn register_pair_with(
    bundle: &PairBundle,
    cfg: &RegistrationConfig,
    mut on_step: impl FnMut(usize, &LossReport),
) -> Result<BidirectionalModel> {
    cfg.validate()?;
    let obj = bundle.objective(cfg)?;
    let mut model = BidirectionalModel::identity(bundle.grid(), cfg.control_spacing)?;
    let mut opt = [
        TransformOptimizer::new(&model.fwd),
        TransformOptimizer::new(&model.rev),
    ];
    let lever = lever_arm(&bundle.grid());
    let both = cfg.directions == Directions::Both;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for step in 0..cfg.iters_global + cfg.iters_joint {
        let joint = step >= cfg.iters_global;
        let lr = cfg.schedule.step(cfg.step_size, step, cfg.iters_global + cfg.iters_joint);
        let fid = sample_fiducials(&bundle.atlas.mesh, cfg.fiducial_fraction, &mut rng)?;
        let eval = obj.evaluate(&model.fwd, &model.rev, &fid, true)?;
        check_finite(&eval.report, eval.non_finite_grad, step)?;
        on_step(step, &eval.report);
        let [gf, gr] = eval.grad.expect("gradient requested");
        opt[0].step(&mut model.fwd, &gf, lr, lever, joint);
        if both {
            opt[1].step(&mut model.rev, &gr, lr, lever, joint);
        }
        if !(model.fwd.affine.is_finite() && model.rev.affine.is_finite()) {
            return Err(Error::NonFinite {
                term: "affine parameters".into(),
                step,
            });
        }
    }
    Ok(model)
}

/// [`register_pair_with`] collecting the per-step trace.
pub fn register_pair(bundle: &PairBundle, cfg: &RegistrationConfig) -> Result<(BidirectionalModel, Vec<LossReport>)> {
    let mut trace = Vec::with_capacity(cfg.iters_global + cfg.iters_joint);
    let model = register_pair_with(bundle, cfg, |_, r| trace.push(r.clone()))?;
    Ok((model, trace))
}

/// Atlas mesh pushed into subject space through the atlas→subject field;
/// faces and class ranges are copied.
pub fn infer_segmentation(model: &BidirectionalModel, atlas_mesh: &CorrespondenceMesh) -> Result<CorrespondenceMesh> {
    model.validate()?;
    let ddf = realize_ddf(&model.fwd, &model.grid)?;
    atlas_mesh.with_vertices(push_points(&ddf, &atlas_mesh.vertices)?)
}
