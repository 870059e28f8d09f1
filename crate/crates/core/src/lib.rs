//! Bidirectional atlas-to-image deformable registration.
//!
//! Two opposing two-stage transforms (affine + cubic B-spline lattice) are
//! co-optimised under a label, fiducial, intensity, cycle-consistency,
//! bending-energy and L2 objective. Atlas meshes are then propagated into
//! subject space with their vertex order, and therefore their point-to-point
//! correspondence, intact.
//!
//! Modules follow the pipeline: [`grid`] (volumes and resampling),
//! [`deform`] (transforms and fields), [`loss`] (objective and gradients),
//! [`engine`] (optimisation and inference), [`phantom`] (synthetic cochleae
//! with metal artefacts), [`eval`] (error statistics and significance tests)
//! and [`run`] (configuration and on-disk formats).

pub mod deform;
pub mod engine;
pub mod error;
pub mod eval;
pub mod geom;
pub mod grid;
pub mod loss;
pub mod par;
pub mod phantom;
pub mod run;

pub use error::{Error, Result};
