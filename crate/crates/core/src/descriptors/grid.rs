use crate::error::{Error, Result};
use crate::imaging::{GrayImage, Rect};

/// Splits an image into `g * g` non-overlapping rectangles in raster order.
///
/// Cells are `floor(W / g)` by `floor(H / g)`; the last column and row take
/// up the remainder.
pub fn partition(image: &GrayImage, g: usize) -> Result<Vec<Rect>> {
    partition_dims(image.width(), image.height(), g)
}

/// [`partition`] for a bare `w x h` extent.
pub fn partition_dims(w: usize, h: usize, g: usize) -> Result<Vec<Rect>> {
    if g == 0 {
        return Err(Error::Parameter("grid count must be positive".into()));
    }
    if w < 2 * g || h < 2 * g {
        return Err(Error::Dimension(format!(
            "{w}x{h} image is too small for a {g}x{g} grid"
        )));
    }
    let spans = |len: usize| -> Vec<(usize, usize)> {
        let step = len / g;
        (0..g)
            .map(|i| {
                let start = i * step;
                let size = if i + 1 == g { len - start } else { step };
                (start, size)
            })
            .collect()
    };
    let cols = spans(w);
    let rows = spans(h);
    let mut rects = Vec::with_capacity(g * g);
    for &(y, height) in &rows {
        for &(x, width) in &cols {
            rects.push(Rect { x, y, width, height });
        }
    }
    Ok(rects)
}

/// JPEG zigzag traversal of a `g x g` lattice, as raster indices.
pub fn zigzag(g: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(g * g);
    if g == 0 {
        return order;
    }
    for diag in 0..(2 * g - 1) {
        let r_min = diag.saturating_sub(g - 1);
        let r_max = diag.min(g - 1);
        if diag % 2 == 0 {
            // bottom-left to top-right
            for r in (r_min..=r_max).rev() {
                order.push(r * g + (diag - r));
            }
        } else {
            for r in r_min..=r_max {
                order.push(r * g + (diag - r));
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blank(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |_, _| 0).unwrap()
    }

    #[test]
    fn exact_division() {
        let rects = partition_dims(9, 9, 3).unwrap();
        assert_eq!(rects.len(), 9);
        assert!(rects.iter().all(|r| r.width == 3 && r.height == 3));
        assert_eq!(
            rects[4],
            Rect {
                x: 3,
                y: 3,
                width: 3,
                height: 3
            }
        );

        let rects = partition(&blank(18, 18), 3).unwrap();
        assert!(rects.iter().all(|r| r.width == 6 && r.height == 6));
    }

    #[test]
    fn ten_by_ten_into_three() {
        let rects = partition_dims(10, 10, 3).unwrap();
        assert_eq!(rects[2].width, 4);
        assert_eq!(rects[6].height, 4);
        assert_eq!(rects[0].width, 3);
        assert_eq!(
            rects[8],
            Rect {
                x: 6,
                y: 6,
                width: 4,
                height: 4
            }
        );
    }

    #[test]
    fn remainder_goes_to_last_row_and_column() {
        let img = GrayImage::from_fn(17, 16, |_, _| 0).unwrap();
        let rects = partition(&img, 3).unwrap();
        // 17 = 5 + 5 + 7, 16 = 5 + 5 + 6
        assert_eq!(rects[2].width, 7);
        assert_eq!(rects[0].width, 5);
        assert_eq!(rects[8].height, 6);
        let area: usize = rects.iter().map(|r| r.width * r.height).sum();
        assert_eq!(area, 17 * 16);
    }

    #[test]
    fn too_small_for_grid() {
        assert!(matches!(partition_dims(4, 4, 3), Err(Error::Dimension(_))));
        assert!(matches!(partition(&blank(16, 16), 9), Err(Error::Dimension(_))));
        assert!(partition(&blank(16, 16), 8).is_ok());
    }

    #[test]
    fn zigzag_small_cases() {
        assert_eq!(zigzag(1), vec![0]);
        assert_eq!(zigzag(2), vec![0, 1, 2, 3]);
        assert_eq!(zigzag(3), vec![0, 1, 3, 6, 4, 2, 5, 7, 8]);
        assert_eq!(zigzag(4), vec![0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15]);
    }
}
