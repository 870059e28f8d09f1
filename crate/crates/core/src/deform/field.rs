use super::Space;
use crate::error::{input, Result};
use crate::geom::{self, Vec3};
use crate::grid::{ProbMaskSet, Stencil, Volume, VoxelGrid};
use crate::par;

/// Dense displacement field sampled on the domain grid: `T(x) = x + u(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ddf {
    pub grid: VoxelGrid,
    pub displacement: Vec<Vec3>,
    pub domain: Space,
    pub codomain: Space,
}

impl Ddf {
    pub fn zeros(grid: VoxelGrid, domain: Space, codomain: Space) -> Self {
        Self {
            grid,
            displacement: vec![[0.0; 3]; grid.len()],
            domain,
            codomain,
        }
    }

    /// Field with `u(x) = f(x)` at every voxel centre.
    pub fn from_fn(
        grid: VoxelGrid,
        domain: Space,
        codomain: Space,
        f: impl Fn(Vec3) -> Vec3 + Sync + Send,
    ) -> Self {
        Self {
            grid,
            displacement: par::map_range(grid.len(), |i| f(grid.world_of_index(i))),
            domain,
            codomain,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.displacement.iter().all(|d| geom::is_finite(*d))
    }

    pub fn max_magnitude(&self) -> f64 {
        self.displacement
            .iter()
            .map(|d| geom::norm(*d))
            .fold(0.0, f64::max)
    }

    /// Interpolated displacement at a domain-space world point.
    #[inline]
    pub fn displacement_at(&self, p: Vec3) -> Vec3 {
        sample_vec(&Stencil::at_world(&self.grid, p), &self.displacement)
    }
}

#[inline]
fn sample_vec(s: &Stencil, field: &[Vec3]) -> Vec3 {
    s.sample_vec(field)
}

/// Maps domain-space points into the codomain: `p + u(p)`.
pub fn push_points(ddf: &Ddf, pts: &[Vec3]) -> Result<Vec<Vec3>> {
    if let Some(p) = pts.iter().find(|p| !geom::is_finite(**p)) {
        return input(format!("non-finite point {p:?}"));
    }
    Ok(pts
        .iter()
        .map(|&p| geom::add(p, ddf.displacement_at(p)))
        .collect())
}

/// Resamples a codomain-space volume onto the domain grid: `out(x) = vol(T(x))`.
pub fn pull_volume(ddf: &Ddf, vol: &Volume) -> Volume {
    let warp = Warp::new(ddf, &vol.grid);
    Volume {
        grid: ddf.grid,
        values: warp.pull(&vol.values),
    }
}

/// Channel-wise [`pull_volume`]; probabilities are interpolated, not thresholded.
pub fn pull_masks(ddf: &Ddf, masks: &ProbMaskSet) -> ProbMaskSet {
    let warp = Warp::new(ddf, &masks.grid);
    ProbMaskSet {
        grid: ddf.grid,
        channels: [
            warp.pull(&masks.channels[0]),
            warp.pull(&masks.channels[1]),
            warp.pull(&masks.channels[2]),
        ],
    }
}

/// Precomputed pull-back of a source grid through a field, with the two
/// vector-Jacobian products needed for back-propagation.
#[derive(Clone, Debug)]
pub struct Warp {
    stencils: Vec<Stencil>,
    inv_spacing: Vec3,
    source_len: usize,
}

impl Warp {
    pub fn new(ddf: &Ddf, source: &VoxelGrid) -> Self {
        let grid = ddf.grid;
        let same = grid == *source;
        let stencils = par::map_range(grid.len(), |idx| {
            let u = ddf.displacement[idx];
            if same {
                // stay in index space so a zero field lands exactly on the nodes
                let [i, j, k] = grid.coords(idx);
                let s = grid.spacing;
                Stencil::at_voxel(
                    source,
                    [
                        i as f64 + u[0] / s[0],
                        j as f64 + u[1] / s[1],
                        k as f64 + u[2] / s[2],
                    ],
                )
            } else {
                Stencil::at_world(source, geom::add(grid.world_of_index(idx), u))
            }
        });
        Self {
            stencils,
            inv_spacing: source.spacing.map(|s| 1.0 / s),
            source_len: source.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    /// Feeds every sample's interpolation piece into `h`.
    pub fn hash_pieces(&self, h: &mut impl std::hash::Hasher) {
        for s in &self.stencils {
            std::hash::Hash::hash(&s.piece_key(), h);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.stencils.is_empty()
    }

    pub fn pull(&self, src: &[f64]) -> Vec<f64> {
        debug_assert_eq!(src.len(), self.source_len);
        par::map_range(self.stencils.len(), |i| self.stencils[i].sample(src))
    }

    /// Adds `gout(x) · ∇src(T(x))` (per mm) into `gdisp`.
    pub fn backprop_displacement(&self, src: &[f64], gout: &[f64], gdisp: &mut [Vec3]) {
        let inv = self.inv_spacing;
        let chunk = 4096;
        par::for_each_chunk(gdisp, chunk, |c, dst| {
            let off = c * chunk;
            for (o, d) in dst.iter_mut().enumerate() {
                let g = gout[off + o];
                if g == 0.0 {
                    continue;
                }
                let (_, grad) = self.stencils[off + o].sample_with_gradient(src);
                d[0] += g * grad[0] * inv[0];
                d[1] += g * grad[1] * inv[1];
                d[2] += g * grad[2] * inv[2];
            }
        });
    }

    /// `∂L/∂src` given `∂L/∂out`, accumulated into `gsrc`.
    pub fn backprop_source(&self, gout: &[f64], gsrc: &mut [f64]) {
        debug_assert_eq!(gsrc.len(), self.source_len);
        for (s, &g) in self.stencils.iter().zip(gout) {
            if g != 0.0 {
                s.scatter(gsrc, g);
            }
        }
    }
}

/// Points pushed through a field, remembering the stencils for back-propagation.
#[derive(Clone, Debug)]
pub(crate) struct PointPush {
    stencils: Vec<Stencil>,
    inv_spacing: Vec3,
    pub out: Vec<Vec3>,
}

impl PointPush {
    pub fn new(ddf: &Ddf, pts: &[Vec3]) -> Self {
        let stencils: Vec<Stencil> = pts
            .iter()
            .map(|&p| Stencil::at_world(&ddf.grid, p))
            .collect();
        let out = pts
            .iter()
            .zip(&stencils)
            .map(|(&p, s)| geom::add(p, sample_vec(s, &ddf.displacement)))
            .collect();
        Self {
            stencils,
            inv_spacing: ddf.grid.spacing.map(|s| 1.0 / s),
            out,
        }
    }

    pub fn hash_pieces(&self, h: &mut impl std::hash::Hasher) {
        for s in &self.stencils {
            std::hash::Hash::hash(&s.piece_key(), h);
        }
    }

    /// Scatters `gq` into the displacement gradient and, when `ddf` is given,
    /// returns `∂L/∂p = (I + ∇u(p))ᵀ gq` for chaining through an earlier push.
    pub fn backprop(
        &self,
        gq: &[Vec3],
        gdisp: &mut [Vec3],
        ddf_for_points: Option<&Ddf>,
    ) -> Option<Vec<Vec3>> {
        for (s, g) in self.stencils.iter().zip(gq) {
            for (idx, w) in s.corners() {
                let d = &mut gdisp[idx];
                d[0] += w * g[0];
                d[1] += w * g[1];
                d[2] += w * g[2];
            }
        }
        let ddf = ddf_for_points?;
        let inv = self.inv_spacing;
        Some(
            self.stencils
                .iter()
                .zip(gq)
                .map(|(s, g)| {
                    // J[a][b] = ∂u_a/∂x_b
                    let mut j = [[0.0; 3]; 3];
                    for (idx, _, dw) in s.corners_with_derivatives() {
                        let u = ddf.displacement[idx];
                        for a in 0..3 {
                            for b in 0..3 {
                                j[a][b] += u[a] * dw[b] * inv[b];
                            }
                        }
                    }
                    geom::add(*g, geom::mat_t_vec(&j, *g))
                })
                .collect(),
        )
    }
}
