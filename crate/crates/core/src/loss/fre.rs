//! Mean fiducial registration error.

use crate::error::{input, Result};
use crate::geom::{self, Vec3};

/// Mean Euclidean distance between index-corresponding points.
pub fn mean_fre(p: &[Vec3], q: &[Vec3]) -> Result<f64> {
    if p.len() != q.len() {
        return input(format!("point lists differ in length: {} vs {}", p.len(), q.len()));
    }
    if p.is_empty() {
        return input("point lists are empty");
    }
    let sum: f64 = p.iter().zip(q).map(|(a, b)| geom::dist(*a, *b)).sum();
    Ok(sum / p.len() as f64)
}

/// Mean FRE and its gradient with respect to `q`; zero-length pairs contribute no gradient.
pub(crate) fn mean_fre_with_grad_q(p: &[Vec3], q: &[Vec3]) -> (f64, Vec<Vec3>) {
    let n = p.len() as f64;
    let mut sum = 0.0;
    let grad = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let d = geom::sub(*b, *a);
            let len = geom::norm(d);
            sum += len;
            if len > 0.0 {
                geom::scale(d, 1.0 / (n * len))
            } else {
                [0.0; 3]
            }
        })
        .collect();
    (sum / n, grad)
}
