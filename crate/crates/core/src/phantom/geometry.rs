//! Tapering-helix cochlea: duct split into two half-tubes around a conical core.

use std::f64::consts::TAU;

use super::mesh::{CorrespondenceMesh, CLASS_COUNTS};
use super::SpiralParams;
use crate::geom::Vec3;
use crate::grid::VoxelGrid;

/// Cross-section ring sizes; `ring × stations` equals each class's vertex count.
pub(crate) const RINGS: [usize; 3] = [22, 27, 31];
pub(crate) const STATIONS: [usize; 3] = [152, 116, 92];

/// Which structure a point lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Region {
    St,
    Sv,
    Md,
    Outside,
}

/// Concrete geometry of a [`SpiralParams`] placed at a centre point.
#[derive(Clone, Debug)]
pub(crate) struct Spiral {
    p: SpiralParams,
    center: Vec3,
    theta_max: f64,
    /// Cumulative centreline arc length at uniform θ samples.
    arc: Vec<f64>,
}

impl Spiral {
    pub fn new(p: &SpiralParams, center: Vec3) -> Self {
        let theta_max = TAU * p.turns;
        let n = 20_000;
        let mut arc = Vec::with_capacity(n + 1);
        arc.push(0.0);
        let mut prev = Self::centerline_of(p, center, 0.0);
        for i in 1..=n {
            let c = Self::centerline_of(p, center, theta_max * i as f64 / n as f64);
            let last = *arc.last().expect("non-empty");
            arc.push(last + crate::geom::dist(prev, c));
            prev = c;
        }
        Self {
            p: p.clone(),
            center,
            theta_max,
            arc,
        }
    }

    fn radius_of(p: &SpiralParams, theta: f64) -> f64 {
        p.base_radius - p.taper * theta / TAU
    }

    /// Height of the centreline relative to the centre.
    fn height_of(p: &SpiralParams, theta: f64) -> f64 {
        p.pitch * (theta / TAU - 0.5 * p.turns)
    }

    fn centerline_of(p: &SpiralParams, c: Vec3, theta: f64) -> Vec3 {
        let r = Self::radius_of(p, theta);
        [
            c[0] + r * theta.cos(),
            c[1] + r * theta.sin(),
            c[2] + Self::height_of(p, theta),
        ]
    }

    fn radius(&self, theta: f64) -> f64 {
        Self::radius_of(&self.p, theta)
    }

    fn height(&self, theta: f64) -> f64 {
        Self::height_of(&self.p, theta)
    }

    /// Height range of the core.
    fn core_span(&self) -> (f64, f64) {
        let m = self.p.duct_radius_st.max(self.p.duct_radius_sv);
        (self.height(0.0) - m, self.height(self.theta_max) + m)
    }

    fn core_radius(&self, z: f64) -> f64 {
        let (lo, hi) = self.core_span();
        let t = ((z - lo) / (hi - lo)).clamp(0.0, 1.0);
        self.p.core_base_radius + t * (self.p.core_apex_radius - self.p.core_base_radius)
    }

    /// Largest distance of any structure point from the centre, per axis.
    pub fn half_extent(&self) -> Vec3 {
        let m = self.p.duct_radius_st.max(self.p.duct_radius_sv);
        let r = self.p.base_radius + m;
        let (lo, hi) = self.core_span();
        [r, r, lo.abs().max(hi.abs())]
    }

    pub fn classify(&self, q: Vec3) -> Region {
        let (dx, dy, z) = (q[0] - self.center[0], q[1] - self.center[1], q[2] - self.center[2]);
        let rho = dx.hypot(dy);
        let (lo, hi) = self.core_span();
        if z >= lo && z <= hi && rho <= self.core_radius(z) {
            return Region::Md;
        }
        let phi = dy.atan2(dx).rem_euclid(TAU);
        let mut theta = phi;
        while theta <= self.theta_max {
            let dr = rho - self.radius(theta);
            let dz = z - self.height(theta);
            let d2 = dr * dr + dz * dz;
            if dz < 0.0 && d2 <= self.p.duct_radius_st.powi(2) {
                return Region::St;
            }
            if dz >= 0.0 && d2 <= self.p.duct_radius_sv.powi(2) {
                return Region::Sv;
            }
            theta += TAU;
        }
        Region::Outside
    }

    /// θ at `n` stations equally spaced in centreline arc length.
    fn stations(&self, n: usize) -> Vec<f64> {
        let total = *self.arc.last().expect("non-empty");
        let m = self.arc.len() - 1;
        (0..n)
            .map(|s| {
                let target = total * s as f64 / (n - 1) as f64;
                let i = self.arc.partition_point(|&a| a < target).clamp(1, m);
                let (a0, a1) = (self.arc[i - 1], self.arc[i]);
                let f = if a1 > a0 { (target - a0) / (a1 - a0) } else { 0.0 };
                self.theta_max * ((i - 1) as f64 + f) / m as f64
            })
            .collect()
    }

    /// Closed half-disc contour in meridional coordinates `(dρ, dz)`:
    /// the semicircle on the `sign` side, then the flat chord.
    fn half_disc_ring(r: f64, sign: f64, n: usize) -> Vec<(f64, f64)> {
        let arc = std::f64::consts::PI * r;
        let per = arc + 2.0 * r;
        (0..n)
            .map(|j| {
                let s = per * j as f64 / n as f64;
                if s < arc {
                    let a = sign * s / r;
                    (r * a.cos(), r * a.sin())
                } else {
                    (-r + (s - arc), 0.0)
                }
            })
            .collect()
    }

    fn meridional_point(&self, theta: f64, dr: f64, dz: f64) -> Vec3 {
        let r = self.radius(theta) + dr;
        [
            self.center[0] + r * theta.cos(),
            self.center[1] + r * theta.sin(),
            self.center[2] + self.height(theta) + dz,
        ]
    }

    pub fn mesh(&self) -> CorrespondenceMesh {
        let mut vertices = Vec::with_capacity(CLASS_COUNTS.iter().sum());
        let mut faces = Vec::new();
        for (c, sign, r) in [(0, -1.0, self.p.duct_radius_st), (1, 1.0, self.p.duct_radius_sv)] {
            let ring = Self::half_disc_ring(r, sign, RINGS[c]);
            let base = vertices.len();
            for th in self.stations(STATIONS[c]) {
                vertices.extend(ring.iter().map(|&(dr, dz)| self.meridional_point(th, dr, dz)));
            }
            tube_faces(base, RINGS[c], STATIONS[c], &mut faces);
        }
        let (lo, hi) = self.core_span();
        let base = vertices.len();
        let (nr, ns) = (RINGS[2], STATIONS[2]);
        for s in 0..ns {
            let z = lo + (hi - lo) * s as f64 / (ns - 1) as f64;
            let r = self.core_radius(z);
            vertices.extend((0..nr).map(|j| {
                let a = TAU * j as f64 / nr as f64;
                [
                    self.center[0] + r * a.cos(),
                    self.center[1] + r * a.sin(),
                    self.center[2] + z,
                ]
            }));
        }
        tube_faces(base, nr, ns, &mut faces);
        CorrespondenceMesh::new(vertices, faces, CLASS_COUNTS).expect("consistent by construction")
    }
}

/// Quads between consecutive rings split into triangles, plus a fan over
/// each end ring (convex contours, so no extra vertices are needed).
fn tube_faces(base: usize, ring: usize, stations: usize, faces: &mut Vec<[usize; 3]>) {
    for s in 0..stations - 1 {
        for j in 0..ring {
            let a = base + s * ring + j;
            let b = base + s * ring + (j + 1) % ring;
            faces.push([a, b, b + ring]);
            faces.push([a, b + ring, a + ring]);
        }
    }
    for s in [0, stations - 1] {
        let o = base + s * ring;
        for j in 1..ring - 1 {
            if s == 0 {
                faces.push([o, o + j + 1, o + j]);
            } else {
                faces.push([o, o + j, o + j + 1]);
            }
        }
    }
}

/// Offsets of the 2×2×2 supersampling points, in voxels.
pub(crate) const SUBSAMPLES: [Vec3; 8] = [
    [-0.25, -0.25, -0.25],
    [0.25, -0.25, -0.25],
    [-0.25, 0.25, -0.25],
    [0.25, 0.25, -0.25],
    [-0.25, -0.25, 0.25],
    [0.25, -0.25, 0.25],
    [-0.25, 0.25, 0.25],
    [0.25, 0.25, 0.25],
];

/// Fractional coverage of each structure in every voxel, sampling the atlas
/// geometry at `to_atlas(y)` for each supersample point `y`.
pub(crate) fn coverage(
    spiral: &Spiral,
    grid: &VoxelGrid,
    to_atlas: impl Fn(Vec3) -> Vec3 + Sync,
) -> [Vec<f64>; 3] {
    let per_voxel = crate::par::map_range(grid.len(), |idx| {
        let [i, j, k] = grid.coords(idx);
        let mut c = [0.0; 3];
        for o in SUBSAMPLES {
            let y = grid.world_of([i as f64 + o[0], j as f64 + o[1], k as f64 + o[2]]);
            match spiral.classify(to_atlas(y)) {
                Region::St => c[0] += 0.125,
                Region::Sv => c[1] += 0.125,
                Region::Md => c[2] += 0.125,
                Region::Outside => {}
            }
        }
        c
    });
    [0, 1, 2].map(|a| per_voxel.iter().map(|c| c[a]).collect())
}
