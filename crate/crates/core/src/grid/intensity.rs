//! Percentile clipping and rescaling of CT intensities.

use super::Volume;

const CLIP_LOW: f64 = 0.05;
const CLIP_HIGH: f64 = 0.95;

/// Percentile `q ∈ [0, 1]` of `sorted` by linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let t = rank - lo as f64;
    sorted[lo] + t * (sorted[hi] - sorted[lo])
}

/// Clips to the 5th/95th percentiles and rescales linearly onto `[-1, 1]`.
/// A constant volume maps to all zeros.
pub fn preprocess_intensity(vol: &Volume) -> Volume {
    let mut sorted = vol.values.clone();
    sorted.sort_by(f64::total_cmp);
    let lo = percentile(&sorted, CLIP_LOW);
    let hi = percentile(&sorted, CLIP_HIGH);
    let values = if hi > lo {
        let span = hi - lo;
        vol.values
            .iter()
            .map(|&v| (2.0 * ((v.clamp(lo, hi) - lo) / span) - 1.0).clamp(-1.0, 1.0))
            .collect()
    } else {
        vec![0.0; vol.values.len()]
    };
    Volume {
        grid: vol.grid,
        values,
    }
}
