//! Rotation and blur augmentation of a subject.

use rand::Rng;

use super::PhantomSubject;
use crate::deform::Ddf;
use crate::error::Result;
use crate::geom;
use crate::grid::{gaussian_blur, rotate_volume, ProbMaskSet, Rotation, Volume, MAX_ROTATION_DEG};

pub const AUGMENT_COPIES: usize = 6;
/// Blur widths in voxels.
pub const AUGMENT_BLURS: [f64; 4] = [0.0, 0.5, 1.0, 1.5];

/// One augmentation draw: rotation angles in degrees about x, y, z, and a blur width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Augmentation {
    pub angles: [f64; 3],
    pub blur: f64,
}

impl Augmentation {
    pub fn random(rng: &mut impl Rng) -> Self {
        Self {
            angles: [0; 3].map(|_| rng.random_range(-MAX_ROTATION_DEG..=MAX_ROTATION_DEG)),
            blur: AUGMENT_BLURS[rng.random_range(0..AUGMENT_BLURS.len())],
        }
    }
}

/// Six randomly rotated and blurred copies of `subject`.
pub fn augment(subject: &PhantomSubject, rng: &mut impl Rng) -> Result<Vec<PhantomSubject>> {
    (0..AUGMENT_COPIES)
        .map(|_| augment_with(subject, &Augmentation::random(rng)))
        .collect()
}

fn blur(vol: Volume, sigma: f64) -> Result<Volume> {
    if sigma == 0.0 {
        Ok(vol)
    } else {
        gaussian_blur(&vol, sigma)
    }
}

/// Applies one augmentation. Images and masks are resampled; the mesh and
/// the truth warp are rotated exactly.
pub fn augment_with(subject: &PhantomSubject, aug: &Augmentation) -> Result<PhantomSubject> {
    let grid = subject.clean_image.grid;
    let rot = Rotation::from_degrees(aug.angles, grid.center())?;
    let identity = aug.angles == [0.0; 3];
    let rotate_masks = |m: &ProbMaskSet| -> Result<ProbMaskSet> {
        let channels = m.channels.clone().map(|values| Volume { grid: m.grid, values });
        let mut out = Vec::with_capacity(3);
        for ch in &channels {
            // Trilinear weights can overshoot [0, 1] by an ulp.
            out.push(rotate_volume(ch, aug.angles)?.values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect());
        }
        let [a, b, c]: [Vec<f64>; 3] = out.try_into().expect("three channels");
        ProbMaskSet::new(m.grid, [a, b, c])
    };
    let mesh = if identity {
        subject.mesh.clone()
    } else {
        subject.mesh.with_vertices(subject.mesh.vertices.iter().map(|&p| rot.apply(p)).collect())?
    };
    let truth_warp = if identity {
        subject.truth_warp.clone()
    } else {
        let t = &subject.truth_warp;
        Ddf {
            displacement: t
                .displacement
                .iter()
                .enumerate()
                .map(|(i, &u)| {
                    let x = t.grid.world_of_index(i);
                    geom::sub(rot.apply(geom::add(x, u)), x)
                })
                .collect(),
            ..t.clone()
        }
    };
    Ok(PhantomSubject {
        seed: subject.seed,
        clean_image: blur(rotate_volume(&subject.clean_image, aug.angles)?, aug.blur)?,
        artifact_image: blur(rotate_volume(&subject.artifact_image, aug.angles)?, aug.blur)?,
        masks: if identity { subject.masks.clone() } else { rotate_masks(&subject.masks)? },
        mesh,
        truth_warp,
    })
}
