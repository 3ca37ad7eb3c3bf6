//! Dense SIFT-style gradient orientation histogram over a whole region.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::imaging::Region;

pub const SIFT_CELLS: usize = 4;
pub const SIFT_BINS: usize = 8;
pub const SIFT_DIM: usize = SIFT_CELLS * SIFT_CELLS * SIFT_BINS;
const CLAMP: f64 = 0.2;

/// Orientation bin for a gradient angle in radians.
pub fn orientation_bin(angle: f64) -> usize {
    let a = angle.rem_euclid(2.0 * PI);
    ((a / (2.0 * PI) * SIFT_BINS as f64) as usize).min(SIFT_BINS - 1)
}

/// 4x4 cells of 8-bin magnitude-weighted orientation histograms.
///
/// Gradients use central differences with replicate padding; binning is
/// hard. The 128-vector is L2-normalized, clamped at 0.2 and renormalized.
pub fn sift_feat(region: &Region) -> Result<Vec<f64>> {
    let (w, h) = (region.width(), region.height());
    if w < 8 || h < 8 {
        return Err(Error::Dimension(format!("sift needs at least 8x8, got {w}x{h}")));
    }
    let mut desc = raw_histogram(region);
    if normalize(&mut desc) {
        desc.iter_mut().for_each(|v| *v = v.min(CLAMP));
        normalize(&mut desc);
    }
    Ok(desc)
}

fn raw_histogram(region: &Region) -> Vec<f64> {
    let (w, h) = (region.width(), region.height());
    let cell_of = |pos: usize, len: usize| -> usize { (pos / (len / SIFT_CELLS)).min(SIFT_CELLS - 1) };

    let mut desc = vec![0.0; SIFT_DIM];
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            let dx = region.get_clamped(xi + 1, yi) - region.get_clamped(xi - 1, yi);
            let dy = region.get_clamped(xi, yi + 1) - region.get_clamped(xi, yi - 1);
            let mag = dx.hypot(dy);
            if mag == 0.0 {
                continue;
            }
            let cell = cell_of(y, h) * SIFT_CELLS + cell_of(x, w);
            desc[cell * SIFT_BINS + orientation_bin(dy.atan2(dx))] += mag;
        }
    }
    desc
}

/// Scales to unit L2 norm; returns false (and leaves zeros) for the zero vector.
fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= f64::EPSILON {
        v.iter_mut().for_each(|x| *x = 0.0);
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}
