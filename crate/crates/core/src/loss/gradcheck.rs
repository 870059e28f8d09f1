//! Finite-difference verification of the analytic gradients on random small bundles.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::objective::{Directions, ObjectSet, Objective, ObjectiveConfig};
use super::{LossReport, LossWeights};
use crate::deform::{Space, TwoStageTransform};
use crate::error::Result;
use crate::geom::Vec3;
use crate::grid::{ProbMaskSet, Volume, VoxelGrid};

/// Owned atlas/subject objects for a synthetic gradient check.
#[derive(Clone, Debug)]
pub struct RandomBundle {
    pub atlas_image: Volume,
    pub atlas_masks: ProbMaskSet,
    pub atlas_vertices: Vec<Vec3>,
    pub subject_image: Volume,
    pub subject_masks: ProbMaskSet,
    pub subject_vertices: Vec<Vec3>,
}

impl RandomBundle {
    pub fn atlas(&self) -> ObjectSet<'_> {
        ObjectSet {
            image: &self.atlas_image,
            masks: &self.atlas_masks,
            vertices: &self.atlas_vertices,
        }
    }

    pub fn subject(&self) -> ObjectSet<'_> {
        ObjectSet {
            image: &self.subject_image,
            masks: &self.subject_masks,
            vertices: &self.subject_vertices,
        }
    }
}

/// Sum of a few random plane waves, so the field is smooth at voxel scale.
fn smooth_field(grid: VoxelGrid, rng: &mut ChaCha8Rng) -> Volume {
    let ext = grid.extent();
    let waves: Vec<(Vec3, f64, f64)> = (0..4)
        .map(|_| {
            let k = [0, 1, 2].map(|a| rng.random_range(-2.0..2.0) * std::f64::consts::PI / ext[a]);
            (k, rng.random_range(0.0..6.3), rng.random_range(0.3..1.0))
        })
        .collect();
    Volume::from_fn(grid, move |p| {
        waves
            .iter()
            .map(|(k, ph, amp)| amp * (k[0] * p[0] + k[1] * p[1] + k[2] * p[2] + ph).cos())
            .sum()
    })
}

fn smooth_masks(grid: VoxelGrid, rng: &mut ChaCha8Rng) -> ProbMaskSet {
    let channels = [0, 1, 2].map(|_| {
        smooth_field(grid, rng)
            .values
            .iter()
            .map(|v| 1.0 / (1.0 + (-2.0 * v).exp()))
            .collect()
    });
    ProbMaskSet { grid, channels }
}

/// Smooth random images and masks on an `n³` grid of 0.5 mm voxels and
/// `n_vertices` random interior points per space.
pub fn random_bundle(n: usize, n_vertices: usize, seed: u64) -> Result<RandomBundle> {
    let grid = VoxelGrid::cube(n, 0.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ext = grid.extent();
    let points = |rng: &mut ChaCha8Rng| -> Vec<Vec3> {
        (0..n_vertices)
            .map(|_| [0, 1, 2].map(|a| grid.origin[a] + rng.random_range(0.2..0.8) * ext[a]))
            .collect()
    };
    Ok(RandomBundle {
        atlas_image: smooth_field(grid, &mut rng),
        atlas_masks: smooth_masks(grid, &mut rng),
        atlas_vertices: points(&mut rng),
        subject_image: smooth_field(grid, &mut rng),
        subject_masks: smooth_masks(grid, &mut rng),
        subject_vertices: points(&mut rng),
    })
}

/// A random non-identity transform: small affine deviation and lattice displacements.
pub fn random_transform(
    grid: &VoxelGrid,
    control_spacing: usize,
    domain: Space,
    rng: &mut impl Rng,
) -> Result<TwoStageTransform> {
    let mut t = TwoStageTransform::identity(grid, control_spacing, domain, domain.other())?;
    for row in t.affine.linear.iter_mut() {
        for v in row.iter_mut() {
            *v += rng.random_range(-0.03..0.03);
        }
    }
    for v in t.affine.translation.iter_mut() {
        *v = rng.random_range(-0.2..0.2);
    }
    for d in t.ffd.displacements.iter_mut() {
        *d = [0, 1, 2].map(|_| rng.random_range(-0.15..0.15));
    }
    Ok(t)
}

/// Worst finite-difference disagreement for one term.
#[derive(Clone, Debug, Serialize)]
pub struct TermCheck {
    pub term: String,
    pub checked: usize,
    /// Worst `|a − f| / max(|a|, |f|)`, excluding noise-limited parameters.
    pub worst_rel_err: f64,
    /// Parameters above tolerance whose absolute discrepancy is still within
    /// the rounding bound of the difference quotient (tiny gradients).
    pub noise_limited: usize,
    /// Parameters whose difference window still crossed an interpolation
    /// cell face at the smallest step.
    pub straddled: usize,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct GradcheckOptions {
    pub n: usize,
    pub n_vertices: usize,
    pub control_spacing: usize,
    pub params_per_term: usize,
    pub step: f64,
    /// Smallest step tried when the window crosses a cell face.
    pub min_step: f64,
    pub tolerance: f64,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            n: 16,
            n_vertices: 300,
            control_spacing: 8,
            params_per_term: 32,
            step: 1e-4,
            min_step: 1e-7,
            tolerance: 1e-4,
        }
    }
}

fn single_term(i: usize) -> LossWeights {
    let mut w = [0.0; 6];
    w[i] = 1.0;
    LossWeights {
        mspdice: w[0],
        fre: w[1],
        ncc: w[2],
        cyc: w[3],
        bend: w[4],
        l2: w[5],
    }
}

/// `|a − f| / max(|a|, |f|)`, and 0 when both vanish.
pub fn relative_error(analytic: f64, fd: f64) -> f64 {
    let scale = analytic.abs().max(fd.abs());
    if scale == 0.0 {
        0.0
    } else {
        (analytic - fd).abs() / scale
    }
}

/// Checks each of the six terms alone and the default-weighted total.
pub fn run_gradcheck(seed: u64, opts: &GradcheckOptions) -> Result<Vec<TermCheck>> {
    let bundle = random_bundle(opts.n, opts.n_vertices, seed)?;
    let grid = bundle.atlas_image.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let fwd = random_transform(&grid, opts.control_spacing, Space::Atlas, &mut rng)?;
    let rev = random_transform(&grid, opts.control_spacing, Space::Subject, &mut rng)?;
    let fid: Vec<usize> = (0..opts.n_vertices).collect();
    let np = fwd.num_params();

    let mut cases: Vec<(String, LossWeights)> = LossWeights::TERMS
        .iter()
        .enumerate()
        .map(|(i, t)| (t.to_string(), single_term(i)))
        .collect();
    cases.push(("total".into(), LossWeights::default()));

    let mut out = Vec::new();
    for (name, weights) in cases {
        let cfg = ObjectiveConfig {
            weights,
            directions: Directions::Both,
            ..ObjectiveConfig::default()
        };
        let obj = Objective::new(bundle.atlas(), bundle.subject(), opts.control_spacing, cfg)?;
        let eval = obj.evaluate(&fwd, &rev, &fid, true)?;
        let [gf, gr] = eval.grad.expect("requested");
        let flat = [gf.to_flat(), gr.to_flat()];
        let value = |f: &TwoStageTransform, r: &TwoStageTransform| -> Result<f64> {
            Ok(obj.evaluate(f, r, &fid, false)?.report.total)
        };
        // rounding in the two loss sums, divided by 2h
        let noise_per_h = (grid.len() as f64).sqrt() * f64::EPSILON * eval.report.total.abs().max(1.0);
        let base_sig = obj.piece_signature(&fwd, &rev, &fid);
        let mut worst: f64 = 0.0;
        let mut noise_limited = 0;
        let mut straddled = 0;
        for k in sample(&mut rng, 2 * np, opts.params_per_term) {
            let (dir, i) = (k / np, k % np);
            // shrink the step until neither side leaves the current interpolation piece
            let mut step = opts.step;
            let (plus, minus) = loop {
                let mut plus = [fwd.clone(), rev.clone()];
                let mut minus = [fwd.clone(), rev.clone()];
                *plus[dir].param_mut(i) += step;
                *minus[dir].param_mut(i) -= step;
                let smooth = obj.piece_signature(&plus[0], &plus[1], &fid) == base_sig
                    && obj.piece_signature(&minus[0], &minus[1], &fid) == base_sig;
                if smooth || step <= opts.min_step {
                    if !smooth {
                        straddled += 1;
                    }
                    break (plus, minus);
                }
                step *= 0.5;
            };
            let fd = (value(&plus[0], &plus[1])? - value(&minus[0], &minus[1])?) / (2.0 * step);
            let noise = noise_per_h / step;
            let rel = relative_error(flat[dir][i], fd);
            if rel > opts.tolerance && (flat[dir][i] - fd).abs() <= noise {
                noise_limited += 1;
            } else {
                worst = worst.max(rel);
            }
        }
        out.push(TermCheck {
            term: name,
            checked: opts.params_per_term,
            worst_rel_err: worst,
            noise_limited,
            straddled,
            passed: worst <= opts.tolerance,
        });
    }
    Ok(out)
}

/// Report of `evaluate` for a bundle whose subject objects equal the atlas ones.
pub fn self_pair_report(bundle: &RandomBundle, control_spacing: usize) -> Result<LossReport> {
    let obj = Objective::new(bundle.atlas(), bundle.atlas(), control_spacing, ObjectiveConfig::default())?;
    let (f, r) = obj.identity_pair()?;
    let fid: Vec<usize> = (0..bundle.atlas_vertices.len()).collect();
    Ok(obj.evaluate(&f, &r, &fid, false)?.report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        for seed in [11, 16] {
            let res = run_gradcheck(seed, &GradcheckOptions::default()).unwrap();
            assert_eq!(res.len(), 7);
            for r in &res {
                assert!(r.passed, "{r:?}");
                assert_eq!(r.straddled, 0);
            }
        }
    }

    #[test]
    fn relative_error_cases() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(2.0, 1.0), 0.5);
        assert_eq!(relative_error(-1.0, 1.0), 2.0);
    }
}
