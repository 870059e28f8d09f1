//! Rigid rotation of volumes and point sets about the grid centre.

use super::{interp::Stencil, Volume};
use crate::error::{input, Result};
use crate::geom::{self, Mat3, Vec3};

/// Largest rotation, in degrees, accepted per axis.
pub const MAX_ROTATION_DEG: f64 = 25.0;

/// A rotation about a fixed centre, composed x first, then y, then z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub matrix: Mat3,
    pub center: Vec3,
}

impl Rotation {
    /// `angles` in degrees about x, y and z; applied in that order.
    pub fn from_degrees(angles: Vec3, center: Vec3) -> Result<Self> {
        if angles
            .iter()
            .any(|a| !a.is_finite() || a.abs() > MAX_ROTATION_DEG)
        {
            return input(format!(
                "rotation angles must lie within ±{MAX_ROTATION_DEG}°, got {angles:?}"
            ));
        }
        let [ax, ay, az] = angles.map(f64::to_radians);
        let rx = [
            [1.0, 0.0, 0.0],
            [0.0, ax.cos(), -ax.sin()],
            [0.0, ax.sin(), ax.cos()],
        ];
        let ry = [
            [ay.cos(), 0.0, ay.sin()],
            [0.0, 1.0, 0.0],
            [-ay.sin(), 0.0, ay.cos()],
        ];
        let rz = [
            [az.cos(), -az.sin(), 0.0],
            [az.sin(), az.cos(), 0.0],
            [0.0, 0.0, 1.0],
        ];
        Ok(Self {
            matrix: geom::mat_mul(&rz, &geom::mat_mul(&ry, &rx)),
            center,
        })
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: geom::transpose(&self.matrix),
            center: self.center,
        }
    }

    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        geom::add(
            geom::mat_vec(&self.matrix, geom::sub(p, self.center)),
            self.center,
        )
    }
}

/// Rotates `vol` about its world-space centre by pulling back every output
/// voxel through the inverse rotation. Zero angles return an exact copy.
pub fn rotate_volume(vol: &Volume, angles: Vec3) -> Result<Volume> {
    let rot = Rotation::from_degrees(angles, vol.grid.center())?;
    if angles == [0.0; 3] {
        return Ok(vol.clone());
    }
    let inv = rot.inverse();
    let grid = vol.grid;
    Ok(Volume::from_fn(grid, |y| {
        Stencil::at_world(&grid, inv.apply(y)).sample(&vol.values)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{trilinear_sample, VoxelGrid};

    #[test]
    fn zero_angles_identity() {
        let g = VoxelGrid::cube(7, 0.2).unwrap();
        let v = Volume::from_fn(g, |p| (p[0] * 9.0).sin() + p[2]);
        assert_eq!(rotate_volume(&v, [0.0; 3]).unwrap(), v);
    }

    #[test]
    fn out_of_range_rejected() {
        let v = Volume::filled(VoxelGrid::cube(4, 0.2).unwrap(), 0.0);
        assert!(rotate_volume(&v, [0.0, 26.0, 0.0]).is_err());
        assert!(rotate_volume(&v, [f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn inverse_roundtrip_points() {
        let r = Rotation::from_degrees([12.0, -20.0, 7.5], [1.0, 2.0, 3.0]).unwrap();
        let inv = r.inverse();
        for p in [[0.0, 0.0, 0.0], [3.3, -1.0, 9.0], [12.8, 12.8, 0.1]] {
            let q = inv.apply(r.apply(p));
            assert!(geom::dist(p, q) < 1e-9);
        }
    }

    #[test]
    fn impulse_moves_to_rotated_location() {
        let g = VoxelGrid::cube(21, 1.0).unwrap();
        let mut v = Volume::filled(g, 0.0);
        let src = [10.0, 14.0, 10.0];
        v.values[g.index(10, 14, 10)] = 1.0;
        let out = rotate_volume(&v, [10.0, 0.0, 0.0]).unwrap();
        let r = Rotation::from_degrees([10.0, 0.0, 0.0], g.center()).unwrap();
        let moved = r.apply(src);
        // oracle: value at each output voxel near the moved impulse is the
        // trilinear weight of the source voxel at the pulled-back position
        let inv = r.inverse();
        for k in 8..13 {
            for j in 12..17 {
                let y = [10.0, j as f64, k as f64];
                let x = inv.apply(y);
                let w = (1.0 - (x[0] - src[0]).abs()).max(0.0)
                    * (1.0 - (x[1] - src[1]).abs()).max(0.0)
                    * (1.0 - (x[2] - src[2]).abs()).max(0.0);
                assert!((out.at(10, j, k) - w).abs() < 1e-12);
            }
        }
        let peak = trilinear_sample(&out, moved).unwrap();
        assert!(peak > 0.0);
    }
}
