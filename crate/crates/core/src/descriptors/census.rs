//! Census-transform histogram (CENTRIST).

use crate::error::{Error, Result};
use crate::imaging::Region;

pub const CENTRIST_DIM: usize = 256;

// neighbors in raster order; the first one lands in the most significant bit
const NEIGHBORS: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// 8-bit census code of the pixel at `(x, y)`; bit set iff center >= neighbor.
pub fn census_code(region: &Region, x: usize, y: usize) -> u8 {
    let center = region.get(x, y);
    NEIGHBORS.iter().fold(0u8, |code, &(dx, dy)| {
        let n = region.get((x as isize + dx) as usize, (y as isize + dy) as usize);
        (code << 1) | u8::from(center >= n)
    })
}

/// L1-normalized histogram of census codes over the interior pixels.
pub fn centrist(region: &Region) -> Result<Vec<f64>> {
    let (w, h) = (region.width(), region.height());
    if w < 3 || h < 3 {
        return Err(Error::Dimension(format!("centrist needs at least 3x3, got {w}x{h}")));
    }
    let mut hist = vec![0.0; CENTRIST_DIM];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            hist[census_code(region, x, y) as usize] += 1.0;
        }
    }
    let total = ((w - 2) * (h - 2)) as f64;
    hist.iter_mut().for_each(|v| *v /= total);
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_region_maps_to_bin_255() {
        let r = Region::from_fn(6, 5, |_, _| 42.0);
        let h = centrist(&r).unwrap();
        assert_eq!(h[255], 1.0);
        assert_eq!(h.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn local_minimum_has_code_zero() {
        let r = Region::from_fn(3, 3, |x, y| if (x, y) == (1, 1) { 0.0 } else { 10.0 });
        assert_eq!(census_code(&r, 1, 1), 0);
        assert_eq!(centrist(&r).unwrap()[0], 1.0);
    }

    #[test]
    fn bit_order_is_msb_first() {
        // only the top-left neighbor is larger than the center
        let r = Region::from_fn(3, 3, |x, y| if (x, y) == (0, 0) { 9.0 } else { 5.0 });
        assert_eq!(census_code(&r, 1, 1), 0b0111_1111);
        // only the bottom-right neighbor is larger
        let r = Region::from_fn(3, 3, |x, y| if (x, y) == (2, 2) { 9.0 } else { 5.0 });
        assert_eq!(census_code(&r, 1, 1), 0b1111_1110);
    }

    #[test]
    fn pseudo_random_region_sums_to_one() {
        let r = Region::from_fn(8, 8, |x, y| ((x * 37 + y * 91 + x * y * 13) % 251) as f64);
        let h = centrist(&r).unwrap();
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(h.len(), 256);
    }

    #[test]
    fn too_small() {
        let r = Region::from_fn(2, 5, |_, _| 0.0);
        assert!(matches!(centrist(&r), Err(Error::Dimension(_))));
    }
}
