//! Run configuration, on-disk formats and the commands built on them.

mod commands;
mod config;
mod format;

pub use commands::*;
pub use config::{parse_arms, PhantomConfig, RunConfig, DESK_ITERS};
pub use format::{
    decode_mesh, decode_vreg, encode_mesh, encode_vreg, read_ddf, read_json, read_masks, read_mesh, read_volume,
    write_ddf, write_json, write_masks, write_mesh, write_volume, RawVolume,
};
