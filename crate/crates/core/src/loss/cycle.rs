//! Round-trip (cycle) consistency of objects sent out through one field and back through the other.

use super::dice::{mspdice_loss_with, DiceDenominator};
use super::fre::mean_fre;
use super::ncc::ncc_loss;
use super::objective::ObjectSet;
use crate::deform::{pull_masks, pull_volume, push_points, Ddf};
use crate::error::{input, Result};

/// `MSPDice + 2·FRE + 0.5·(1 − NCC)` between the objects in `src` and their
/// round trips. `there` has the objects' space as its domain and `back`
/// returns from the other space: masks and images are pulled through `back`
/// then `there`, fiducials pushed through `there` then `back`.
pub fn cycle_consistency(
    src: &ObjectSet,
    there: &Ddf,
    back: &Ddf,
    scales: &[f64],
    denom: DiceDenominator,
) -> Result<f64> {
    if there.domain != back.codomain || there.codomain != back.domain || there.domain == there.codomain {
        return input(format!(
            "fields {}→{} and {}→{} are not an opposing pair",
            there.domain.name(),
            there.codomain.name(),
            back.domain.name(),
            back.codomain.name()
        ));
    }
    if there.grid != src.masks.grid || back.grid != src.masks.grid || src.image.grid != src.masks.grid {
        return input("cycle objects and fields must share one grid");
    }
    let masks = pull_masks(there, &pull_masks(back, src.masks));
    let image = pull_volume(there, &pull_volume(back, src.image));
    let pts = push_points(back, &push_points(there, src.vertices)?)?;
    Ok(mspdice_loss_with(src.masks, &masks, scales, denom)?
        + 2.0 * mean_fre(src.vertices, &pts)?
        + 0.5 * ncc_loss(src.image, &image)?)
}
