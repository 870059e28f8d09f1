//! Trilinear interpolation with clamp-to-edge boundary handling.

use super::{Volume, VoxelGrid};
use crate::error::{input, Result};
use crate::geom::{self, Vec3};

/// Interpolation stencil for one sample position: the low corner of the
/// enclosing cell, fractional offsets, and which axes were clamped.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub base: usize,
    pub frac: [f64; 3],
    /// `false` on axes where the coordinate lay strictly outside the grid;
    /// the interpolant is constant along such axes.
    pub active: [bool; 3],
    strides: [usize; 3],
}

/// Exact at both endpoints and for `a == b`.
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if a == b {
        a
    } else {
        a * (1.0 - t) + b * t
    }
}

#[inline]
fn axis(c: f64, n: usize) -> (usize, f64, bool) {
    let last = (n - 1) as f64;
    if c < 0.0 {
        (0, 0.0, false)
    } else if c >= last {
        (n - 2, 1.0, c <= last)
    } else {
        let i = c.floor();
        (i as usize, c - i, true)
    }
}

impl Stencil {
    /// Stencil at continuous voxel coordinate `v`.
    #[inline]
    pub fn at_voxel(grid: &VoxelGrid, v: Vec3) -> Self {
        let (i, fx, ax) = axis(v[0], grid.dims[0]);
        let (j, fy, ay) = axis(v[1], grid.dims[1]);
        let (k, fz, az) = axis(v[2], grid.dims[2]);
        let strides = grid.strides();
        Stencil {
            base: i + strides[1] * j + strides[2] * k,
            frac: [fx, fy, fz],
            active: [ax, ay, az],
            strides,
        }
    }

    #[inline]
    pub fn at_world(grid: &VoxelGrid, p: Vec3) -> Self {
        Self::at_voxel(grid, grid.voxel_of(p))
    }

    /// Identifies the polynomial piece of the interpolant the sample lies in:
    /// two positions with equal keys are joined by a smooth path.
    pub fn piece_key(&self) -> (usize, u8) {
        let mut bits = 0u8;
        for a in 0..3 {
            bits |= (self.active[a] as u8) << (2 * a);
            bits |= ((!self.active[a] && self.frac[a] == 1.0) as u8) << (2 * a + 1);
        }
        (self.base, bits)
    }

    /// The eight corner indices and weights, ordered `(dx, dy, dz)` with x fastest.
    #[inline]
    pub fn corners(&self) -> [(usize, f64); 8] {
        let [fx, fy, fz] = self.frac;
        let [_, sy, sz] = self.strides;
        let b = self.base;
        let (gx, gy, gz) = (1.0 - fx, 1.0 - fy, 1.0 - fz);
        [
            (b, gx * gy * gz),
            (b + 1, fx * gy * gz),
            (b + sy, gx * fy * gz),
            (b + 1 + sy, fx * fy * gz),
            (b + sz, gx * gy * fz),
            (b + 1 + sz, fx * gy * fz),
            (b + sy + sz, gx * fy * fz),
            (b + 1 + sy + sz, fx * fy * fz),
        ]
    }

    /// Corner indices with their weights and the weights' derivatives with
    /// respect to the voxel coordinate (zero on clamped axes).
    #[inline]
    pub fn corners_with_derivatives(&self) -> [(usize, f64, [f64; 3]); 8] {
        let [fx, fy, fz] = self.frac;
        let [_, sy, sz] = self.strides;
        let act = self.active.map(|a| if a { 1.0 } else { 0.0 });
        let mut out = [(0usize, 0.0, [0.0; 3]); 8];
        for (n, o) in out.iter_mut().enumerate() {
            let (dx, dy, dz) = (n & 1, (n >> 1) & 1, (n >> 2) & 1);
            let (wx, sx) = if dx == 1 { (fx, 1.0) } else { (1.0 - fx, -1.0) };
            let (wy, syg) = if dy == 1 { (fy, 1.0) } else { (1.0 - fy, -1.0) };
            let (wz, szg) = if dz == 1 { (fz, 1.0) } else { (1.0 - fz, -1.0) };
            *o = (
                self.base + dx + dy * sy + dz * sz,
                wx * wy * wz,
                [
                    act[0] * sx * wy * wz,
                    act[1] * syg * wx * wz,
                    act[2] * szg * wx * wy,
                ],
            );
        }
        out
    }

    #[inline]
    fn fetch(&self, values: &[f64]) -> [f64; 8] {
        let [_, sy, sz] = self.strides;
        let b = self.base;
        [
            values[b],
            values[b + 1],
            values[b + sy],
            values[b + 1 + sy],
            values[b + sz],
            values[b + 1 + sz],
            values[b + sy + sz],
            values[b + 1 + sy + sz],
        ]
    }

    #[inline]
    pub fn sample(&self, values: &[f64]) -> f64 {
        let c = self.fetch(values);
        let [fx, fy, fz] = self.frac;
        let x00 = lerp(c[0], c[1], fx);
        let x10 = lerp(c[2], c[3], fx);
        let x01 = lerp(c[4], c[5], fx);
        let x11 = lerp(c[6], c[7], fx);
        lerp(lerp(x00, x10, fy), lerp(x01, x11, fy), fz)
    }

    /// [`Stencil::sample`] applied to each component of a vector field.
    #[inline]
    pub fn sample_vec(&self, field: &[Vec3]) -> Vec3 {
        let [_, sy, sz] = self.strides;
        let b = self.base;
        let c = [b, b + 1, b + sy, b + 1 + sy, b + sz, b + 1 + sz, b + sy + sz, b + 1 + sy + sz]
            .map(|i| field[i]);
        let [fx, fy, fz] = self.frac;
        [0, 1, 2].map(|a| {
            let x00 = lerp(c[0][a], c[1][a], fx);
            let x10 = lerp(c[2][a], c[3][a], fx);
            let x01 = lerp(c[4][a], c[5][a], fx);
            let x11 = lerp(c[6][a], c[7][a], fx);
            lerp(lerp(x00, x10, fy), lerp(x01, x11, fy), fz)
        })
    }

    /// Value and gradient with respect to the continuous voxel coordinate.
    #[inline]
    pub fn sample_with_gradient(&self, values: &[f64]) -> (f64, Vec3) {
        let c = self.fetch(values);
        let [fx, fy, fz] = self.frac;
        let (_, gy, gz) = (1.0 - fx, 1.0 - fy, 1.0 - fz);
        let x00 = lerp(c[0], c[1], fx);
        let x10 = lerp(c[2], c[3], fx);
        let x01 = lerp(c[4], c[5], fx);
        let x11 = lerp(c[6], c[7], fx);
        let y0 = lerp(x00, x10, fy);
        let y1 = lerp(x01, x11, fy);
        let v = lerp(y0, y1, fz);
        let dx = gy * gz * (c[1] - c[0])
            + fy * gz * (c[3] - c[2])
            + gy * fz * (c[5] - c[4])
            + fy * fz * (c[7] - c[6]);
        let dy = gz * (x10 - x00) + fz * (x11 - x01);
        let dz = y1 - y0;
        let mut g = [dx, dy, dz];
        for (gi, a) in g.iter_mut().zip(self.active) {
            if !a {
                *gi = 0.0;
            }
        }
        (v, g)
    }

    /// Adds `w * grad_out` into the eight corners of `target`.
    #[inline]
    pub fn scatter(&self, target: &mut [f64], value: f64) {
        for (idx, w) in self.corners() {
            target[idx] += w * value;
        }
    }
}

/// Interpolated value of `vol` at world point `p` (mm).
pub fn trilinear_sample(vol: &Volume, p: Vec3) -> Result<f64> {
    if !geom::is_finite(p) {
        return input(format!("non-finite sample point {p:?}"));
    }
    Ok(Stencil::at_world(&vol.grid, p).sample(&vol.values))
}

/// Gradient (per mm) of the trilinear interpolant of `vol` at world point `p`.
pub fn trilinear_gradient(vol: &Volume, p: Vec3) -> Result<Vec3> {
    if !geom::is_finite(p) {
        return input(format!("non-finite sample point {p:?}"));
    }
    let (_, g) = Stencil::at_world(&vol.grid, p).sample_with_gradient(&vol.values);
    let s = vol.grid.spacing;
    Ok([g[0] / s[0], g[1] / s[1], g[2] / s[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ramp8() -> Volume {
        let g = VoxelGrid::cube(2, 1.0).unwrap();
        Volume::new(g, (0..8).map(|v| v as f64).collect()).unwrap()
    }

    fn random_volume(n: usize, spacing: f64, seed: u64) -> Volume {
        let g = VoxelGrid::new([n; 3], [spacing, spacing * 1.5, spacing * 0.5], [0.3, -1.0, 2.0])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Volume::new(g, (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Direct weighted sum over the eight corners, independent of `Stencil`.
    fn oracle(vol: &Volume, v: Vec3) -> f64 {
        let i = v.map(|c| c.floor() as usize);
        let t = [v[0] - i[0] as f64, v[1] - i[1] as f64, v[2] - i[2] as f64];
        let mut acc = 0.0;
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    let w = (if dx == 1 { t[0] } else { 1.0 - t[0] })
                        * (if dy == 1 { t[1] } else { 1.0 - t[1] })
                        * (if dz == 1 { t[2] } else { 1.0 - t[2] });
                    acc += w * vol.at(i[0] + dx, i[1] + dy, i[2] + dz);
                }
            }
        }
        acc
    }

    #[test]
    fn on_grid_and_center() {
        let v = ramp8();
        assert_eq!(trilinear_sample(&v, [0.0; 3]).unwrap(), 0.0);
        assert_eq!(trilinear_sample(&v, [1.0, 1.0, 1.0]).unwrap(), 7.0);
        assert!((trilinear_sample(&v, [0.5; 3]).unwrap() - 3.5).abs() < 1e-15);
    }

    #[test]
    fn clamps_outside() {
        let v = ramp8();
        assert_eq!(trilinear_sample(&v, [-3.0, -3.0, -3.0]).unwrap(), 0.0);
        assert_eq!(trilinear_sample(&v, [9.0, 9.0, 9.0]).unwrap(), 7.0);
        assert_eq!(trilinear_gradient(&v, [-3.0, 0.5, 0.5]).unwrap()[0], 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        let v = ramp8();
        assert!(trilinear_sample(&v, [f64::NAN, 0.0, 0.0]).is_err());
        assert!(trilinear_gradient(&v, [0.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn matches_corner_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..5 {
            let vol = random_volume(4, 0.7, seed);
            for _ in 0..20 {
                let v = [
                    rng.random_range(0.0..3.0),
                    rng.random_range(0.0..3.0),
                    rng.random_range(0.0..3.0),
                ];
                let p = vol.grid.world_of(v);
                let got = trilinear_sample(&vol, p).unwrap();
                assert!((got - oracle(&vol, v)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_of_ramp() {
        let g = VoxelGrid::new([5, 5, 5], [0.4, 0.2, 0.3], [0.0; 3]).unwrap();
        let vol = Volume::from_fn(g, |p| p[0] / 0.4);
        let grad = trilinear_gradient(&vol, [0.5, 0.33, 0.71]).unwrap();
        assert!((grad[0] - 1.0 / 0.4).abs() < 1e-12);
        assert!(grad[1].abs() < 1e-12 && grad[2].abs() < 1e-12);
        let c = Volume::filled(g, 3.0);
        assert_eq!(trilinear_gradient(&c, [0.5, 0.5, 0.5]).unwrap(), [0.0; 3]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vol = random_volume(4, 0.5, 99);
        let h = 1e-4;
        for _ in 0..50 {
            let v: Vec3 = [
                rng.random_range(0.1..2.9),
                rng.random_range(0.1..2.9),
                rng.random_range(0.1..2.9),
            ];
            // keep the finite-difference stencil inside a single cell
            if v.iter().any(|c| (c - c.round()).abs() < 2.0 * h) {
                continue;
            }
            let p = vol.grid.world_of(v);
            let g = trilinear_gradient(&vol, p).unwrap();
            for a in 0..3 {
                let mut vp = v;
                let mut vm = v;
                vp[a] += h;
                vm[a] -= h;
                let fd = (trilinear_sample(&vol, vol.grid.world_of(vp)).unwrap()
                    - trilinear_sample(&vol, vol.grid.world_of(vm)).unwrap())
                    / (2.0 * h * vol.grid.spacing[a]);
                let rel = (fd - g[a]).abs() / g[a].abs().max(1e-8);
                assert!(rel < 1e-5, "axis {a}: fd {fd} analytic {}", g[a]);
            }
        }
    }
}
