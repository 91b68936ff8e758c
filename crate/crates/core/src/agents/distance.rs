use super::{AgentError, NormBox, PixelBox};
use crate::providers::{DepthProvider, DepthResult, ImageRef};

/// Scales a 0..1000 box to pixels (rounding half away from zero), clamps it
/// into the frame, and widens any axis that collapsed to zero by one pixel.
pub fn transform_bbox(bbox: NormBox, width: u32, height: u32) -> PixelBox {
    let (x0, x1) = scale_axis(bbox.xmin, bbox.xmax, width);
    let (y0, y1) = scale_axis(bbox.ymin, bbox.ymax, height);
    PixelBox { x0, y0, x1, y1 }
}

fn scale_axis(lo: u32, hi: u32, extent: u32) -> (u32, u32) {
    let scale = |v: u32| {
        let px = (v as f64 * extent as f64 / NormBox::SCALE as f64).round();
        (px.max(0.0) as u32).min(extent)
    };
    let (mut a, mut b) = (scale(lo), scale(hi));
    if b <= a {
        if a < extent {
            b = a + 1;
        } else {
            a = extent - 1;
            b = extent;
        }
    }
    (a, b)
}

/// Frame size from the manifest, or from the image header.
pub fn image_dimensions(image: &ImageRef) -> Result<(u32, u32), AgentError> {
    if let (Some(w), Some(h)) = (image.width, image.height) {
        return Ok((w, h));
    }
    let size = imagesize::size(&image.path).map_err(|e| AgentError::ImageSize {
        path: image.path.display().to_string(),
        detail: e.to_string(),
    })?;
    Ok((size.width as u32, size.height as u32))
}

/// Median of the finite depths under `pixel_box`. The box is given in image
/// pixels and mapped onto the depth grid when their resolutions differ.
pub fn median_depth_in_box(
    depth: &DepthResult,
    image_width: u32,
    image_height: u32,
    pixel_box: PixelBox,
) -> Result<f64, AgentError> {
    let (gx0, gx1) = map_axis(pixel_box.x0, pixel_box.x1, image_width, depth.width);
    let (gy0, gy1) = map_axis(pixel_box.y0, pixel_box.y1, image_height, depth.height);
    let mut values: Vec<f64> = (gy0..gy1)
        .flat_map(|y| (gx0..gx1).map(move |x| (x, y)))
        .map(|(x, y)| depth.at(x, y))
        .filter(|v| v.is_finite())
        .collect();
    if values.is_empty() {
        return Err(AgentError::EmptyDepth);
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    let median = if values.len().is_multiple_of(2) {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    };
    Ok(median)
}

fn map_axis(lo: u32, hi: u32, image_extent: u32, grid_extent: usize) -> (usize, usize) {
    if image_extent as usize == grid_extent {
        return (lo as usize, (hi as usize).min(grid_extent));
    }
    let ratio = grid_extent as f64 / image_extent.max(1) as f64;
    let a = ((lo as f64 * ratio).floor() as usize).min(grid_extent.saturating_sub(1));
    let b = ((hi as f64 * ratio).ceil() as usize).clamp(a + 1, grid_extent);
    (a, b)
}

/// Queries the depth provider and returns the median metric depth inside the
/// box.
pub fn estimate_distance(
    image: &ImageRef,
    image_size: (u32, u32),
    pixel_box: PixelBox,
    depth: &dyn DepthProvider,
) -> Result<f64, AgentError> {
    let map = depth.depth(image)?;
    median_depth_in_box(&map, image_size.0, image_size.1, pixel_box)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nb(ymin: u32, xmin: u32, ymax: u32, xmax: u32) -> NormBox {
        NormBox { ymin, xmin, ymax, xmax }
    }

    #[test]
    fn transform_examples() {
        assert_eq!(
            transform_bbox(nb(0, 0, 1000, 1000), 1920, 1080),
            PixelBox {
                x0: 0,
                y0: 0,
                x1: 1920,
                y1: 1080
            }
        );
        assert_eq!(
            transform_bbox(nb(250, 500, 750, 1000), 1000, 1000),
            PixelBox {
                x0: 500,
                y0: 250,
                x1: 1000,
                y1: 750
            }
        );
        // 10 -> 1.0 and 11 -> 1.1 both round to 1, so each axis is widened
        assert_eq!(
            transform_bbox(nb(10, 10, 11, 11), 100, 100),
            PixelBox {
                x0: 1,
                y0: 1,
                x1: 2,
                y1: 2
            }
        );
        assert_eq!(
            transform_bbox(nb(998, 998, 1000, 1000), 100, 100),
            PixelBox {
                x0: 99,
                y0: 99,
                x1: 100,
                y1: 100
            }
        );
    }

    #[test]
    fn median_examples() {
        let constant = DepthResult::constant(8, 6, 12.5);
        let any = PixelBox {
            x0: 1,
            y0: 2,
            x1: 5,
            y1: 6,
        };
        assert_eq!(median_depth_in_box(&constant, 8, 6, any).unwrap(), 12.5);

        // left half 10 m, right half 30 m; box covers two columns of each
        let mut values = Vec::new();
        for _ in 0..4 {
            values.extend([10.0, 10.0, 30.0, 30.0]);
        }
        let split = DepthResult::new(4, 4, values).unwrap();
        let whole = PixelBox {
            x0: 0,
            y0: 0,
            x1: 4,
            y1: 4,
        };
        assert_eq!(median_depth_in_box(&split, 4, 4, whole).unwrap(), 20.0);

        let nan = DepthResult::constant(4, 4, f64::NAN);
        assert!(matches!(
            median_depth_in_box(&nan, 4, 4, whole),
            Err(AgentError::EmptyDepth)
        ));
    }

    #[test]
    fn box_maps_onto_coarser_grid() {
        let mut values = vec![50.0; 16 * 9];
        // grid cell (4, 3) covers image pixels x 480..600, y 360..480 at 1920x1080
        values[3 * 16 + 4] = 7.0;
        let grid = DepthResult::new(16, 9, values).unwrap();
        let pb = PixelBox {
            x0: 490,
            y0: 370,
            x1: 590,
            y1: 470,
        };
        assert_eq!(median_depth_in_box(&grid, 1920, 1080, pb).unwrap(), 7.0);
    }

    fn norm_box() -> impl Strategy<Value = NormBox> {
        (0u32..1000, 0u32..1000)
            .prop_flat_map(|(ymin, xmin)| (Just(ymin), Just(xmin), ymin + 1..=1000, xmin + 1..=1000))
            .prop_map(|(ymin, xmin, ymax, xmax)| nb(ymin, xmin, ymax, xmax))
    }

    proptest! {
        #[test]
        fn transform_stays_in_bounds(b in norm_box(), w in 1u32..4000, h in 1u32..4000) {
            let p = transform_bbox(b, w, h);
            prop_assert!(p.x0 < p.x1 && p.x1 <= w);
            prop_assert!(p.y0 < p.y1 && p.y1 <= h);
        }

        #[test]
        fn enlarging_never_shrinks(b in norm_box(), grow in (0u32..200, 0u32..200, 0u32..200, 0u32..200),
                                   w in 1u32..4000, h in 1u32..4000) {
            let big = nb(
                b.ymin.saturating_sub(grow.0),
                b.xmin.saturating_sub(grow.1),
                (b.ymax + grow.2).min(1000),
                (b.xmax + grow.3).min(1000),
            );
            let small = transform_bbox(b, w, h);
            let large = transform_bbox(big, w, h);
            prop_assert!(large.width() >= small.width());
            prop_assert!(large.height() >= small.height());
        }

        #[test]
        fn median_is_permutation_invariant(values in prop::collection::vec(0.1f64..500.0, 36),
                                           seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let whole = PixelBox { x0: 0, y0: 0, x1: 6, y1: 6 };
            let a = DepthResult::new(6, 6, values.clone()).unwrap();
            let mut shuffled = values;
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = DepthResult::new(6, 6, shuffled).unwrap();
            prop_assert_eq!(
                median_depth_in_box(&a, 6, 6, whole).unwrap(),
                median_depth_in_box(&b, 6, 6, whole).unwrap()
            );
        }
    }
}
