//! Bending energy of a displacement field by central differences.

use crate::deform::Ddf;
use crate::geom::Vec3;

/// One second-derivative stencil: `(offset, coefficient)` pairs plus the
/// multiplicity of the term in the energy (1 for pure, 2 for mixed).
struct Term {
    taps: Vec<(isize, f64)>,
    weight: f64,
}

fn terms(ddf: &Ddf) -> Vec<Term> {
    let st = ddf.grid.strides().map(|s| s as isize);
    let h = ddf.grid.spacing;
    let mut out = Vec::with_capacity(6);
    for a in 0..3 {
        let c = 1.0 / (h[a] * h[a]);
        out.push(Term {
            taps: vec![(st[a], c), (0, -2.0 * c), (-st[a], c)],
            weight: 1.0,
        });
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let c = 1.0 / (4.0 * h[a] * h[b]);
        out.push(Term {
            taps: vec![
                (st[a] + st[b], c),
                (st[a] - st[b], -c),
                (-st[a] + st[b], -c),
                (-st[a] - st[b], c),
            ],
            weight: 2.0,
        });
    }
    out
}

fn interior_indices(ddf: &Ddf) -> Vec<usize> {
    let g = ddf.grid;
    let [nx, ny, nz] = g.dims;
    let mut v = Vec::with_capacity((nx - 2) * (ny - 2) * (nz - 2));
    for k in 1..nz - 1 {
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                v.push(g.index(i, j, k));
            }
        }
    }
    v
}

/// Mean over interior voxels of `u_xx² + u_yy² + u_zz² + 2u_xy² + 2u_xz² + 2u_yz²`,
/// summed over the three displacement components.
///
/// # Panics
/// If any grid dimension is below 3.
pub fn bending_energy(ddf: &Ddf) -> f64 {
    bending_energy_with_grad(ddf, false).0
}

pub(crate) fn bending_energy_with_grad(ddf: &Ddf, with_grad: bool) -> (f64, Option<Vec<Vec3>>) {
    assert!(
        ddf.grid.dims.iter().all(|&d| d >= 3),
        "bending energy needs dims >= 3"
    );
    let u = &ddf.displacement;
    let terms = terms(ddf);
    let interior = interior_indices(ddf);
    let norm = 1.0 / interior.len() as f64;
    let chunk = 4096;
    let partial = crate::par::map_range(interior.len().div_ceil(chunk), |c| {
        let mut acc = 0.0;
        for &idx in &interior[c * chunk..((c + 1) * chunk).min(interior.len())] {
            for t in &terms {
                let mut d = [0.0; 3];
                for &(o, w) in &t.taps {
                    let v = u[(idx as isize + o) as usize];
                    d[0] += w * v[0];
                    d[1] += w * v[1];
                    d[2] += w * v[2];
                }
                acc += t.weight * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
            }
        }
        acc
    });
    let value = partial.iter().sum::<f64>() * norm;
    if !with_grad {
        return (value, None);
    }
    let mut grad = vec![[0.0; 3]; u.len()];
    for &idx in &interior {
        for t in &terms {
            let mut d = [0.0; 3];
            for &(o, w) in &t.taps {
                let v = u[(idx as isize + o) as usize];
                d[0] += w * v[0];
                d[1] += w * v[1];
                d[2] += w * v[2];
            }
            let s = 2.0 * t.weight * norm;
            for &(o, w) in &t.taps {
                let g = &mut grad[(idx as isize + o) as usize];
                g[0] += s * w * d[0];
                g[1] += s * w * d[1];
                g[2] += s * w * d[2];
            }
        }
    }
    (value, Some(grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::Space;
    use crate::grid::VoxelGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> VoxelGrid {
        VoxelGrid::new([7, 6, 8], [0.2, 0.3, 0.25], [0.0, 1.0, -1.0]).unwrap()
    }

    #[test]
    fn zero_and_affine_vanish() {
        let g = grid();
        assert_eq!(bending_energy(&Ddf::zeros(g, Space::Atlas, Space::Subject)), 0.0);
        let aff = Ddf::from_fn(g, Space::Atlas, Space::Subject, |p| {
            [
                0.1 * p[0] - 0.3 * p[1] + 2.0,
                0.05 * p[2] + 1.0,
                0.2 * p[0] + 0.2 * p[1] - 0.1 * p[2],
            ]
        });
        assert!(bending_energy(&aff).abs() < 1e-18 * 1e6);
    }

    #[test]
    fn quadratic_in_x() {
        // u_x = α i² in voxel units: u_xx = 2α / h_x² at every interior voxel
        let g = grid();
        let alpha = 0.03;
        let mut d = Ddf::zeros(g, Space::Atlas, Space::Subject);
        for idx in 0..g.len() {
            let i = g.coords(idx)[0] as f64;
            d.displacement[idx][0] = alpha * i * i;
        }
        let expect = (2.0 * alpha / (0.2 * 0.2)).powi(2);
        assert!((bending_energy(&d) - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn gradient_matches_fd() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut d = Ddf::zeros(g, Space::Atlas, Space::Subject);
        for v in d.displacement.iter_mut() {
            *v = [rng.random(), rng.random(), rng.random()];
        }
        let (_, grad) = bending_energy_with_grad(&d, true);
        let grad = grad.unwrap();
        for _ in 0..20 {
            let idx = rng.random_range(0..g.len());
            let a = rng.random_range(0..3);
            let h = 1e-5;
            let mut p = d.clone();
            p.displacement[idx][a] += h;
            let mut m = d.clone();
            m.displacement[idx][a] -= h;
            let fd = (bending_energy(&p) - bending_energy(&m)) / (2.0 * h);
            assert!((fd - grad[idx][a]).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }
}
