use super::Ddf;
use crate::geom;
use crate::grid::Volume;

/// Determinant of `∂T/∂x` by central differences on interior voxels; each
/// boundary voxel copies the value of its nearest interior voxel.
///
/// # Panics
/// If any grid dimension is below 3.
pub fn jacobian_determinant(ddf: &Ddf) -> Volume {
    let grid = ddf.grid;
    let [nx, ny, nz] = grid.dims;
    assert!(nx >= 3 && ny >= 3 && nz >= 3, "jacobian needs dims >= 3");
    let u = &ddf.displacement;
    let st = grid.strides();
    let h = grid.spacing;
    let det_at = |i: usize, j: usize, k: usize| {
        let c = grid.index(i, j, k);
        let mut m = geom::IDENTITY;
        for b in 0..3 {
            let (p, q) = (u[c + st[b]], u[c - st[b]]);
            for a in 0..3 {
                m[a][b] += (p[a] - q[a]) / (2.0 * h[b]);
            }
        }
        geom::det(&m)
    };
    let values = crate::par::map_range(grid.len(), |idx| {
        let [i, j, k] = grid.coords(idx);
        det_at(i.clamp(1, nx - 2), j.clamp(1, ny - 2), k.clamp(1, nz - 2))
    });
    Volume { grid, values }
}

/// Fraction of interior voxels whose Jacobian determinant is `<= 0`.
pub fn folding_fraction(ddf: &Ddf) -> f64 {
    let jac = jacobian_determinant(ddf);
    let grid = ddf.grid;
    let (mut folded, mut total) = (0usize, 0usize);
    for (idx, &d) in jac.values.iter().enumerate() {
        let [i, j, k] = grid.coords(idx);
        if grid.is_interior(i, j, k) {
            total += 1;
            if d <= 0.0 {
                folded += 1;
            }
        }
    }
    folded as f64 / total as f64
}
