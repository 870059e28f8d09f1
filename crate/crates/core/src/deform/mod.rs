//! Two-stage (affine then free-form) transforms, dense displacement fields,
//! object transfer between spaces, and Jacobian analysis.
//!
//! A [`Ddf`] with domain `s` and codomain `t` maps `s`-space world points
//! into `t`: it *pushes* `s`-space points (mesh vertices, fiducials) into
//! `t`, and *pulls* `t`-space images and masks back onto the `s` grid.
//! Moving atlas vertices into subject space therefore uses the
//! atlas→subject field, while moving atlas images into subject space uses
//! the subject→atlas field.

mod bspline;
mod field;
mod jacobian;
mod transform;

pub use bspline::{cubic_bspline_weights, FfdLattice};
pub(crate) use bspline::LatticeSampler;
pub(crate) use field::PointPush;
pub use field::{pull_masks, pull_volume, push_points, Ddf, Warp};
pub use jacobian::{folding_fraction, jacobian_determinant};
pub use transform::{realize_ddf, AffineParams, TransformGrad, TransformRealizer, TwoStageTransform};

use serde::{Deserialize, Serialize};

/// Which image space a field or transform lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    Atlas,
    Subject,
}

impl Space {
    pub fn other(self) -> Space {
        match self {
            Space::Atlas => Space::Subject,
            Space::Subject => Space::Atlas,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Space::Atlas => "atlas",
            Space::Subject => "subject",
        }
    }
}
