#![allow(dead_code)]

use bireg::deform::{pull_masks, pull_volume, Ddf, Space};
use bireg::engine::{PairBundle, RegistrationConfig, SubjectObjects};
use bireg::geom::{self, Vec3};
use bireg::grid::VoxelGrid;
use bireg::phantom::{make_atlas, PhantomAtlas, SpiralParams};
use bireg::run::RunConfig;

pub mod oracles;

/// 32³ grid at 0.4 mm: the full default field of view at half resolution.
pub fn desk_grid() -> VoxelGrid {
    VoxelGrid::cube(32, 0.4).unwrap()
}

pub fn desk_atlas() -> PhantomAtlas {
    make_atlas(&SpiralParams::default(), desk_grid()).unwrap()
}

pub fn desk_registration() -> RegistrationConfig {
    RunConfig::desk().registration
}

/// The atlas paired with itself, clean image standing in for the artefact image.
pub fn self_bundle(atlas: &PhantomAtlas) -> PairBundle {
    PairBundle {
        atlas: atlas.objects(),
        subject: SubjectObjects {
            artifact_image: atlas.image.clone(),
            clean_image: atlas.image.clone(),
            masks: atlas.masks.clone(),
            mesh: atlas.mesh.clone(),
        },
    }
}

/// Subject = atlas moved rigidly by `t` mm: resampled volumes, exactly shifted mesh.
pub fn shifted_bundle(atlas: &PhantomAtlas, t: Vec3) -> PairBundle {
    let back = Ddf::from_fn(atlas.grid(), Space::Subject, Space::Atlas, |_| geom::scale(t, -1.0));
    let image = pull_volume(&back, &atlas.image);
    let verts = atlas.mesh.vertices.iter().map(|&p| geom::add(p, t)).collect();
    PairBundle {
        atlas: atlas.objects(),
        subject: SubjectObjects {
            artifact_image: image.clone(),
            clean_image: image,
            masks: pull_masks(&back, &atlas.masks),
            mesh: atlas.mesh.with_vertices(verts).unwrap(),
        },
    }
}
