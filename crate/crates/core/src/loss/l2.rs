//! Quadratic penalty on transform parameters (affine translation excluded).

use crate::deform::{TransformGrad, TwoStageTransform};

fn single(t: &TwoStageTransform) -> f64 {
    let aff: f64 = t.affine.deviation().iter().flatten().map(|v| v * v).sum();
    let lat: f64 = t.ffd.displacements.iter().flatten().map(|v| v * v).sum();
    aff + lat
}

/// `‖L − I‖² + ‖lattice‖²`, summed over both transforms.
pub fn l2_penalty(t_fwd: &TwoStageTransform, t_rev: &TwoStageTransform) -> f64 {
    single(t_fwd) + single(t_rev)
}

pub(crate) fn l2_single_with_grad(t: &TwoStageTransform, scale: f64) -> (f64, TransformGrad) {
    let dev = t.affine.deviation();
    let mut g = TransformGrad::zeros(t);
    for a in 0..3 {
        for b in 0..3 {
            g.linear[a][b] = scale * 2.0 * dev[a][b];
        }
    }
    for (gl, d) in g.lattice.iter_mut().zip(&t.ffd.displacements) {
        *gl = [scale * 2.0 * d[0], scale * 2.0 * d[1], scale * 2.0 * d[2]];
    }
    (single(t), g)
}

pub(crate) fn l2_single(t: &TwoStageTransform) -> f64 {
    single(t)
}
