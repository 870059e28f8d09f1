//! Multiscale soft probabilistic Dice.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::grid::{ProbMaskSet, SeparableBlur, VoxelGrid};
use crate::par;

/// Smoothing term in the Dice numerator and denominator.
pub const DICE_EPS: f64 = 1e-6;
/// Default Gaussian scales (voxels) at which Dice is averaged.
pub const DEFAULT_SCALES: [f64; 4] = [0.0, 1.0, 2.0, 4.0];

/// Form of the soft Dice denominator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiceDenominator {
    /// `Σa² + Σb²`: equals the numerator when `a == b`, so identical masks
    /// score exactly 1 at every scale.
    #[default]
    Squared,
    /// `Σa + Σb`.
    Linear,
}

const CHUNK: usize = 8192;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::chunked_sum(a.len(), CHUNK, |r| r.map(|i| a[i] * b[i]).sum())
}

fn total(a: &[f64]) -> f64 {
    par::chunked_sum(a.len(), CHUNK, |r| a[r].iter().sum())
}

fn self_term(a: &[f64], denom: DiceDenominator) -> f64 {
    match denom {
        DiceDenominator::Squared => dot(a, a),
        DiceDenominator::Linear => total(a),
    }
}

/// `1 − mean over classes and scales` of the soft Dice between `a` and `b`
/// after Gaussian smoothing of both at each scale (`0` means unsmoothed).
pub fn mspdice_loss(a: &ProbMaskSet, b: &ProbMaskSet, scales: &[f64]) -> Result<f64> {
    mspdice_loss_with(a, b, scales, DiceDenominator::default())
}

pub fn mspdice_loss_with(
    a: &ProbMaskSet,
    b: &ProbMaskSet,
    scales: &[f64],
    denom: DiceDenominator,
) -> Result<f64> {
    if a.grid != b.grid {
        return input("mask sets are on different grids");
    }
    check_scales(scales)?;
    let mut acc = 0.0;
    for &s in scales {
        let blur = SeparableBlur::gaussian(a.grid.dims, s);
        for c in 0..3 {
            let (pa, pb) = (blur.apply(&a.channels[c]), blur.apply(&b.channels[c]));
            let num = 2.0 * dot(&pa, &pb) + DICE_EPS;
            let den = self_term(&pa, denom) + self_term(&pb, denom) + DICE_EPS;
            acc += num / den;
        }
    }
    Ok(1.0 - acc / (3 * scales.len()) as f64)
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() || scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return input(format!("invalid Dice scales {scales:?}"));
    }
    Ok(())
}

struct ScaleCache {
    blur: SeparableBlur,
    target: [Vec<f64>; 3],
    target_self: [f64; 3],
}

/// Multiscale Dice against a fixed target mask set, with the target's
/// smoothed channels cached so repeated evaluations only smooth the moving side.
pub struct MsDiceTarget {
    grid: VoxelGrid,
    denom: DiceDenominator,
    scales: Vec<ScaleCache>,
}

impl MsDiceTarget {
    pub fn new(target: &ProbMaskSet, scales: &[f64], denom: DiceDenominator) -> Result<Self> {
        check_scales(scales)?;
        let scales = scales
            .iter()
            .map(|&s| {
                let blur = SeparableBlur::gaussian(target.grid.dims, s);
                let t = [0, 1, 2].map(|c| blur.apply(&target.channels[c]));
                let target_self = [0, 1, 2].map(|c| self_term(&t[c], denom));
                ScaleCache {
                    blur,
                    target: t,
                    target_self,
                }
            })
            .collect();
        Ok(Self {
            grid: target.grid,
            denom,
            scales,
        })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    /// Loss `1 − mean Dice` of `moving` against the target, and, if requested,
    /// its gradient with respect to each moving channel.
    pub fn evaluate(&self, moving: &[Vec<f64>; 3], with_grad: bool) -> (f64, Option<[Vec<f64>; 3]>) {
        let n = self.grid.len();
        let norm = 1.0 / (3 * self.scales.len()) as f64;
        let mut acc = 0.0;
        let mut grads = with_grad.then(|| [vec![0.0; n], vec![0.0; n], vec![0.0; n]]);
        for sc in &self.scales {
            for c in 0..3 {
                let m = sc.blur.apply(&moving[c]);
                let t = &sc.target[c];
                let inter = dot(&m, t);
                let num = 2.0 * inter + DICE_EPS;
                let den = self_term(&m, self.denom) + sc.target_self[c] + DICE_EPS;
                acc += num / den;
                if let Some(g) = grads.as_mut() {
                    // ∂(num/den)/∂m_i, scaled by −norm for the loss
                    let k = num / (den * den);
                    let gm: Vec<f64> = match self.denom {
                        DiceDenominator::Squared => m
                            .iter()
                            .zip(t)
                            .map(|(mi, ti)| -norm * (2.0 * ti / den - 2.0 * k * mi))
                            .collect(),
                        DiceDenominator::Linear => {
                            t.iter().map(|ti| -norm * (2.0 * ti / den - k)).collect()
                        }
                    };
                    let back = sc.blur.apply_adjoint(&gm);
                    for (gi, bi) in g[c].iter_mut().zip(back) {
                        *gi += bi;
                    }
                }
            }
        }
        (1.0 - acc * norm, grads)
    }
}
