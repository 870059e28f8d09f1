//! The weighted total objective over both transforms and its gradient.

use serde::{Deserialize, Serialize};

use super::bending::bending_energy_with_grad;
use super::dice::{DiceDenominator, MsDiceTarget, DEFAULT_SCALES};
use super::fre::mean_fre_with_grad_q;
use super::l2::{l2_single, l2_single_with_grad};
use super::ncc::ncc_with_grad_b;
use super::{LossReport, LossWeights};
use crate::deform::{
    Ddf, FfdLattice, PointPush, Space, TransformGrad, TransformRealizer, TwoStageTransform, Warp,
};
use crate::error::{input, Result};
use crate::geom::Vec3;
use crate::grid::{ProbMaskSet, Volume, VoxelGrid};

/// Clean image, probabilistic masks and mesh vertices living in one space.
#[derive(Clone, Copy, Debug)]
pub struct ObjectSet<'a> {
    pub image: &'a Volume,
    pub masks: &'a ProbMaskSet,
    pub vertices: &'a [Vec3],
}

/// Which transforms are trained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directions {
    #[default]
    Both,
    /// Only atlas→subject; reverse and cycle terms are neither evaluated nor
    /// reported, and the subject→atlas gradient is zero.
    ForwardOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveConfig {
    pub weights: LossWeights,
    pub mspdice_scales: Vec<f64>,
    pub dice_denominator: DiceDenominator,
    pub directions: Directions,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            mspdice_scales: DEFAULT_SCALES.to_vec(),
            dice_denominator: DiceDenominator::default(),
            directions: Directions::Both,
        }
    }
}

/// Result of one evaluation.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: LossReport,
    /// `[∂/∂fwd, ∂/∂rev]` when gradients were requested.
    pub grad: Option<[TransformGrad; 2]>,
    /// First term whose gradient contribution was non-finite.
    pub non_finite_grad: Option<&'static str>,
}

/// Atlas and subject objects prepared for repeated evaluation: target masks
/// are pre-smoothed and B-spline tables built once.
pub struct Objective<'a> {
    atlas: ObjectSet<'a>,
    subject: ObjectSet<'a>,
    cfg: ObjectiveConfig,
    grid: VoxelGrid,
    realizer: TransformRealizer,
    control_spacing: usize,
    control_dims: [usize; 3],
    target_a: MsDiceTarget,
    target_s: MsDiceTarget,
}

fn pull3(w: &Warp, m: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
    [w.pull(&m[0]), w.pull(&m[1]), w.pull(&m[2])]
}

fn scale_in_place(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

fn all_finite(f: &[Vec3]) -> bool {
    f.iter().all(|v| v.iter().all(|x| x.is_finite()))
}

impl<'a> Objective<'a> {
    pub fn new(
        atlas: ObjectSet<'a>,
        subject: ObjectSet<'a>,
        control_spacing: usize,
        cfg: ObjectiveConfig,
    ) -> Result<Self> {
        cfg.weights.validate()?;
        let grid = atlas.image.grid;
        for (name, g) in [
            ("atlas masks", atlas.masks.grid),
            ("subject image", subject.image.grid),
            ("subject masks", subject.masks.grid),
        ] {
            if g != grid {
                return input(format!("{name} grid differs from the atlas image grid"));
            }
        }
        if atlas.vertices.is_empty() || atlas.vertices.len() != subject.vertices.len() {
            return input(format!(
                "meshes must be non-empty with equal vertex counts ({} vs {})",
                atlas.vertices.len(),
                subject.vertices.len()
            ));
        }
        let lattice = FfdLattice::zeros(&grid, control_spacing)?;
        Ok(Self {
            realizer: TransformRealizer::new(&grid, &lattice)?,
            control_spacing,
            control_dims: lattice.control_dims,
            target_a: MsDiceTarget::new(atlas.masks, &cfg.mspdice_scales, cfg.dice_denominator)?,
            target_s: MsDiceTarget::new(subject.masks, &cfg.mspdice_scales, cfg.dice_denominator)?,
            atlas,
            subject,
            cfg,
            grid,
        })
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn num_vertices(&self) -> usize {
        self.atlas.vertices.len()
    }

    /// Identity transforms with lattices matching this objective.
    pub fn identity_pair(&self) -> Result<(TwoStageTransform, TwoStageTransform)> {
        let cs = self.control_spacing;
        Ok((
            TwoStageTransform::identity(&self.grid, cs, Space::Atlas, Space::Subject)?,
            TwoStageTransform::identity(&self.grid, cs, Space::Subject, Space::Atlas)?,
        ))
    }

    fn check(&self, t: &TwoStageTransform, domain: Space) -> Result<()> {
        if t.domain != domain || t.codomain != domain.other() {
            return input(format!(
                "expected a {}→{} transform, got {}→{}",
                domain.name(),
                domain.other().name(),
                t.domain.name(),
                t.codomain.name()
            ));
        }
        if t.ffd.control_dims != self.control_dims {
            return input("transform lattice does not match the objective");
        }
        Ok(())
    }

    /// Realised displacement field of `t` on the shared grid.
    pub fn realize(&self, t: &TwoStageTransform) -> Ddf {
        self.realizer.realize(t)
    }

    /// Hash of the interpolation pieces visited by every warp and point push
    /// in [`Objective::evaluate`]. The objective is smooth in the parameters
    /// along any path that keeps this value fixed.
    pub fn piece_signature(
        &self,
        fwd: &TwoStageTransform,
        rev: &TwoStageTransform,
        fid: &[usize],
    ) -> u64 {
        use std::hash::Hasher;
        let mut h = std::collections::hash_map::DefaultHasher::new();
        let df = self.realizer.realize(fwd);
        let dr = self.realizer.realize(rev);
        Warp::new(&df, &self.grid).hash_pieces(&mut h);
        Warp::new(&dr, &self.grid).hash_pieces(&mut h);
        let fa: Vec<Vec3> = fid.iter().map(|&i| self.atlas.vertices[i]).collect();
        let fs: Vec<Vec3> = fid.iter().map(|&i| self.subject.vertices[i]).collect();
        let pf = PointPush::new(&df, &fa);
        let pr = PointPush::new(&dr, &fs);
        PointPush::new(&dr, &pf.out).hash_pieces(&mut h);
        PointPush::new(&df, &pr.out).hash_pieces(&mut h);
        h.finish()
    }

    /// Values of every term for `fwd` (atlas→subject) and `rev`
    /// (subject→atlas) using the fiducial subset `fid`, plus the parameter
    /// gradient of the weighted total if `with_grad`.
    pub fn evaluate(
        &self,
        fwd: &TwoStageTransform,
        rev: &TwoStageTransform,
        fid: &[usize],
        with_grad: bool,
    ) -> Result<Evaluation> {
        self.check(fwd, Space::Atlas)?;
        self.check(rev, Space::Subject)?;
        let nv = self.num_vertices();
        if fid.is_empty() || fid.iter().any(|&i| i >= nv) {
            return input(format!("fiducial indices must be non-empty and < {nv}"));
        }
        let w = self.cfg.weights;
        let both = self.cfg.directions == Directions::Both;
        let on = |wt: f64| with_grad && wt != 0.0;
        let n = self.grid.len();
        let (ma, ms) = (&self.atlas.masks.channels, &self.subject.masks.channels);
        let (ia, is) = (&self.atlas.image.values, &self.subject.image.values);
        let fa: Vec<Vec3> = fid.iter().map(|&i| self.atlas.vertices[i]).collect();
        let fs: Vec<Vec3> = fid.iter().map(|&i| self.subject.vertices[i]).collect();

        let lf = self.realizer.local_field(fwd);
        let df = self.realizer.realize_with_local(fwd, &lf);
        let lr = self.realizer.local_field(rev);
        let dr = self.realizer.realize_with_local(rev, &lr);
        let wf = Warp::new(&df, &self.grid);
        let wr = Warp::new(&dr, &self.grid);

        let mut rep = LossReport::zeros(w);
        let mut gf = if with_grad { vec![[0.0; 3]; n] } else { Vec::new() };
        let mut gr = if with_grad && both { vec![[0.0; 3]; n] } else { Vec::new() };
        let mut bad = None;
        let mut mark = |name: &'static str, gf: &[Vec3], gr: &[Vec3]| {
            if with_grad && bad.is_none() && !(all_finite(gf) && all_finite(gr)) {
                bad = Some(name);
            }
        };

        // labels
        let ms_on_a = pull3(&wf, ms);
        let (v, g) = self.target_a.evaluate(&ms_on_a, on(w.mspdice));
        rep.mspdice[0] = v;
        if let Some(mut g) = g {
            for c in 0..3 {
                scale_in_place(&mut g[c], w.mspdice);
                wf.backprop_displacement(&ms[c], &g[c], &mut gf);
            }
        }
        let ma_on_s = both.then(|| pull3(&wr, ma));
        if let Some(m) = &ma_on_s {
            let (v, g) = self.target_s.evaluate(m, on(w.mspdice));
            rep.mspdice[1] = v;
            if let Some(mut g) = g {
                for c in 0..3 {
                    scale_in_place(&mut g[c], w.mspdice);
                    wr.backprop_displacement(&ma[c], &g[c], &mut gr);
                }
            }
        }
        mark("mspdice", &gf, &gr);

        // fiducials
        let pf = PointPush::new(&df, &fa);
        let (v, mut gq) = mean_fre_with_grad_q(&fs, &pf.out);
        rep.fre[0] = v;
        if on(w.fre) {
            gq.iter_mut().for_each(|g| *g = crate::geom::scale(*g, w.fre));
            pf.backprop(&gq, &mut gf, None);
        }
        let pr = both.then(|| PointPush::new(&dr, &fs));
        if let Some(pr) = &pr {
            let (v, mut gq) = mean_fre_with_grad_q(&fa, &pr.out);
            rep.fre[1] = v;
            if on(w.fre) {
                gq.iter_mut().for_each(|g| *g = crate::geom::scale(*g, w.fre));
                pr.backprop(&gq, &mut gr, None);
            }
        }
        mark("fre", &gf, &gr);

        // intensities (clean images only)
        let is_on_a = wf.pull(is);
        let (v, mut g) = ncc_with_grad_b(ia, &is_on_a);
        rep.ncc[0] = 1.0 - v;
        if on(w.ncc) {
            scale_in_place(&mut g, -w.ncc);
            wf.backprop_displacement(is, &g, &mut gf);
        }
        let ia_on_s = both.then(|| wr.pull(ia));
        if let Some(b) = &ia_on_s {
            let (v, mut g) = ncc_with_grad_b(is, b);
            rep.ncc[1] = 1.0 - v;
            if on(w.ncc) {
                scale_in_place(&mut g, -w.ncc);
                wr.backprop_displacement(ia, &g, &mut gr);
            }
        }
        mark("ncc", &gf, &gr);

        // round trips
        if both {
            let ma_on_s = ma_on_s.as_ref().expect("computed above");
            let ia_on_s = ia_on_s.as_ref().expect("computed above");
            let pr = pr.as_ref().expect("computed above");
            let ctx_a = RoundTrip {
                target: &self.target_a,
                there: (&wf, &pf),
                back: (&wr, &dr),
                masks: ma,
                masks_mid: ma_on_s,
                image: ia,
                image_mid: ia_on_s,
                points: &fa,
            };
            rep.cyc[0] = ctx_a.run(on(w.cyc).then_some(w.cyc), &mut gf, &mut gr);
            let ctx_s = RoundTrip {
                target: &self.target_s,
                there: (&wr, pr),
                back: (&wf, &df),
                masks: ms,
                masks_mid: &ms_on_a,
                image: is,
                image_mid: &is_on_a,
                points: &fs,
            };
            rep.cyc[1] = ctx_s.run(on(w.cyc).then_some(w.cyc), &mut gr, &mut gf);
            mark("cyc", &gf, &gr);
        }

        // regularisers
        let (v, g) = bending_energy_with_grad(&df, on(w.bend));
        rep.bend[0] = v;
        if let Some(g) = g {
            add_scaled(&mut gf, &g, w.bend);
        }
        if both {
            let (v, g) = bending_energy_with_grad(&dr, on(w.bend));
            rep.bend[1] = v;
            if let Some(g) = g {
                add_scaled(&mut gr, &g, w.bend);
            }
        }
        mark("bend", &gf, &gr);

        rep.l2[0] = l2_single(fwd);
        if both {
            rep.l2[1] = l2_single(rev);
        }
        rep.recompute_total();

        let grad = with_grad.then(|| {
            let mut g_fwd = self.realizer.backprop(fwd, &lf, &gf);
            g_fwd.add_assign(&l2_single_with_grad(fwd, w.l2).1);
            let g_rev = if both {
                let mut g = self.realizer.backprop(rev, &lr, &gr);
                g.add_assign(&l2_single_with_grad(rev, w.l2).1);
                g
            } else {
                TransformGrad::zeros(rev)
            };
            [g_fwd, g_rev]
        });
        if let Some([a, b]) = &grad {
            if bad.is_none() && !(a.norm_sq() + b.norm_sq()).is_finite() {
                bad = Some("l2");
            }
        }
        Ok(Evaluation {
            report: rep,
            grad,
            non_finite_grad: bad,
        })
    }
}

/// One-shot report for a transform pair using every fiducial.
pub fn total_objective(
    atlas: ObjectSet,
    subject: ObjectSet,
    fwd: &TwoStageTransform,
    rev: &TwoStageTransform,
    cfg: ObjectiveConfig,
) -> Result<LossReport> {
    let cs = fwd.ffd.control_spacing;
    let obj = Objective::new(atlas, subject, cs, cfg)?;
    let all: Vec<usize> = (0..obj.num_vertices()).collect();
    Ok(obj.evaluate(fwd, rev, &all, false)?.report)
}

fn add_scaled(dst: &mut [Vec3], src: &[Vec3], s: f64) {
    for (d, v) in dst.iter_mut().zip(src) {
        d[0] += s * v[0];
        d[1] += s * v[1];
        d[2] += s * v[2];
    }
}

/// One cycle term. `there` is the warp whose domain holds the objects plus
/// the push of `points` through its field; `back` is the opposing warp and field. `masks_mid`/`image_mid` are the objects already pulled
/// through `back`.
struct RoundTrip<'r> {
    target: &'r MsDiceTarget,
    there: (&'r Warp, &'r PointPush),
    back: (&'r Warp, &'r Ddf),
    masks: &'r [Vec<f64>; 3],
    masks_mid: &'r [Vec<f64>; 3],
    image: &'r [f64],
    image_mid: &'r [f64],
    points: &'r [Vec3],
}

impl RoundTrip<'_> {
    /// Returns the term value; with `Some(weight)` adds its weighted gradient
    /// into `g_there` / `g_back`.
    fn run(&self, weight: Option<f64>, g_there: &mut [Vec3], g_back: &mut [Vec3]) -> f64 {
        let (w_there, push_there) = self.there;
        let (w_back, d_back) = self.back;
        let n = self.image.len();
        let chain_pull = |src: &[f64], mid: &[f64], g: &[f64], g_there: &mut [Vec3], g_back: &mut [Vec3]| {
            w_there.backprop_displacement(mid, g, g_there);
            let mut gmid = vec![0.0; n];
            w_there.backprop_source(g, &mut gmid);
            w_back.backprop_displacement(src, &gmid, g_back);
        };

        let round = pull3(w_there, self.masks_mid);
        let (v_m, g) = self.target.evaluate(&round, weight.is_some());
        if let (Some(mut g), Some(wt)) = (g, weight) {
            for c in 0..3 {
                scale_in_place(&mut g[c], wt);
                chain_pull(&self.masks[c], &self.masks_mid[c], &g[c], g_there, g_back);
            }
        }

        let push_back = PointPush::new(d_back, &push_there.out);
        let (v_f, mut gq) = mean_fre_with_grad_q(self.points, &push_back.out);
        if let Some(wt) = weight {
            gq.iter_mut().for_each(|g| *g = crate::geom::scale(*g, 2.0 * wt));
            let gp = push_back
                .backprop(&gq, g_back, Some(d_back))
                .expect("field supplied");
            push_there.backprop(&gp, g_there, None);
        }

        let img = w_there.pull(self.image_mid);
        let (v_n, mut g) = ncc_with_grad_b(self.image, &img);
        if let Some(wt) = weight {
            scale_in_place(&mut g, -0.5 * wt);
            chain_pull(self.image, self.image_mid, &g, g_there, g_back);
        }
        v_m + 2.0 * v_f + 0.5 * (1.0 - v_n)
    }
}


#[cfg(test)]
mod tests {
    use super::super::cycle_consistency;
    use super::super::gradcheck::{random_bundle, random_transform, self_pair_report};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    #[test]
    fn self_pair_is_zero_and_stationary() {
        let b = random_bundle(12, 50, 1).unwrap();
        let rep = self_pair_report(&b, 4).unwrap();
        for t in rep.term_sums() {
            assert!(t.abs() <= 1e-6, "{rep:?}");
        }
        let cfg = ObjectiveConfig {
            weights: LossWeights { l2: 0.0, ..LossWeights::default() },
            ..ObjectiveConfig::default()
        };
        let obj = Objective::new(b.atlas(), b.atlas(), 4, cfg).unwrap();
        let (f, r) = obj.identity_pair().unwrap();
        let e = obj.evaluate(&f, &r, &all(50), true).unwrap();
        let [gf, gr] = e.grad.unwrap();
        let norm = (gf.norm_sq() + gr.norm_sq()).sqrt();
        assert!(norm <= 1e-8, "gradient norm {norm}");
    }

    #[test]
    fn cycle_term_matches_composed_oracles() {
        let b = random_bundle(12, 60, 2).unwrap();
        let grid = b.atlas_image.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_transform(&grid, 4, Space::Atlas, &mut rng).unwrap();
        let r = random_transform(&grid, 4, Space::Subject, &mut rng).unwrap();
        let obj = Objective::new(b.atlas(), b.subject(), 4, ObjectiveConfig::default()).unwrap();
        let rep = obj.evaluate(&f, &r, &all(60), false).unwrap().report;
        let (df, dr) = (obj.realize(&f), obj.realize(&r));
        let scales = &DEFAULT_SCALES;
        let den = DiceDenominator::default();
        let ca = cycle_consistency(&b.atlas(), &df, &dr, scales, den).unwrap();
        let cs = cycle_consistency(&b.subject(), &dr, &df, scales, den).unwrap();
        assert!((rep.cyc[0] - ca).abs() <= 1e-10, "{} vs {ca}", rep.cyc[0]);
        assert!((rep.cyc[1] - cs).abs() <= 1e-10, "{} vs {cs}", rep.cyc[1]);
        assert!(cycle_consistency(&b.atlas(), &df, &df, scales, den).is_err());
    }

    #[test]
    fn constant_inverse_pair_has_zero_fiducial_cycle() {
        let b = random_bundle(12, 40, 4).unwrap();
        let grid = b.atlas_image.grid;
        // dyadic offsets and coordinates keep every addition exact
        let d = [0.375, -0.25, 0.125];
        let f = Ddf::from_fn(grid, Space::Atlas, Space::Subject, |_| d);
        let r = Ddf::from_fn(grid, Space::Subject, Space::Atlas, |_| d.map(|v| -v));
        let p: Vec<Vec3> = b.atlas_vertices.iter().map(|v| v.map(|c| (c * 1024.0).round() / 1024.0)).collect();
        let there = crate::deform::push_points(&f, &p).unwrap();
        let back = crate::deform::push_points(&r, &there).unwrap();
        assert_eq!(super::super::mean_fre(&p, &back).unwrap(), 0.0);
        let z = Ddf::zeros(grid, Space::Atlas, Space::Subject);
        let zr = Ddf::zeros(grid, Space::Subject, Space::Atlas);
        let c = cycle_consistency(&b.atlas(), &z, &zr, &DEFAULT_SCALES, DiceDenominator::default()).unwrap();
        assert!(c.abs() <= 1e-6);
    }

    #[test]
    fn gradient_is_linear_in_ncc_weight() {
        let b = random_bundle(12, 40, 5).unwrap();
        let grid = b.atlas_image.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = random_transform(&grid, 4, Space::Atlas, &mut rng).unwrap();
        let r = random_transform(&grid, 4, Space::Subject, &mut rng).unwrap();
        let grad = |ncc: f64| {
            let cfg = ObjectiveConfig {
                weights: LossWeights { ncc, ..LossWeights::default() },
                ..ObjectiveConfig::default()
            };
            let obj = Objective::new(b.atlas(), b.subject(), 4, cfg).unwrap();
            let [a, c] = obj.evaluate(&f, &r, &all(40), true).unwrap().grad.unwrap();
            [a.to_flat(), c.to_flat()].concat()
        };
        let (g0, g1, g2) = (grad(0.0), grad(0.5), grad(1.0));
        for i in 0..g0.len() {
            let (d1, d2) = (g1[i] - g0[i], g2[i] - g0[i]);
            assert!((d2 - 2.0 * d1).abs() <= 1e-9 * d2.abs().max(1e-9), "param {i}: {d1} {d2}");
        }
    }

    #[test]
    fn zero_weight_drops_term_from_total() {
        let b = random_bundle(10, 30, 7).unwrap();
        let grid = b.atlas_image.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_transform(&grid, 4, Space::Atlas, &mut rng).unwrap();
        let r = random_transform(&grid, 4, Space::Subject, &mut rng).unwrap();
        let report = |w: LossWeights| {
            let cfg = ObjectiveConfig { weights: w, ..ObjectiveConfig::default() };
            total_objective(b.atlas(), b.subject(), &f, &r, cfg).unwrap()
        };
        let full = report(LossWeights::default());
        let nofre = report(LossWeights { fre: 0.0, ..LossWeights::default() });
        assert_eq!(full.fre, nofre.fre);
        let expect = full.total - 2.0 * (full.fre[0] + full.fre[1]);
        assert!((nofre.total - expect).abs() <= 1e-12);
        assert!((full.total - full.weighted_total()).abs() <= 1e-12);
    }

    #[test]
    fn forward_only_reports_forward_terms() {
        let b = random_bundle(10, 30, 9).unwrap();
        let grid = b.atlas_image.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f = random_transform(&grid, 4, Space::Atlas, &mut rng).unwrap();
        let r = TwoStageTransform::identity(&grid, 4, Space::Subject, Space::Atlas).unwrap();
        let cfg = ObjectiveConfig { directions: Directions::ForwardOnly, ..ObjectiveConfig::default() };
        let obj = Objective::new(b.atlas(), b.subject(), 4, cfg).unwrap();
        let e = obj.evaluate(&f, &r, &all(30), true).unwrap();
        let rep = e.report;
        assert!(rep.mspdice[0] > 0.0 && rep.bend[0] > 0.0);
        for t in rep.terms() {
            assert_eq!(t[1], 0.0);
        }
        assert_eq!(rep.cyc, [0.0, 0.0]);
        let [_, gr] = e.grad.unwrap();
        assert_eq!(gr.norm_sq(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let b = random_bundle(10, 30, 11).unwrap();
        let obj = Objective::new(b.atlas(), b.subject(), 4, ObjectiveConfig::default()).unwrap();
        let (f, r) = obj.identity_pair().unwrap();
        assert!(obj.evaluate(&r, &f, &all(30), false).is_err());
        assert!(obj.evaluate(&f, &r, &[], false).is_err());
        assert!(obj.evaluate(&f, &r, &[30], false).is_err());
        let short = &b.subject_vertices[..10];
        let s = ObjectSet { vertices: short, ..b.subject() };
        assert!(Objective::new(b.atlas(), s, 4, ObjectiveConfig::default()).is_err());
    }
}
