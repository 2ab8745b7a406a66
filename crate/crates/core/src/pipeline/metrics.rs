//! Region overlap between predicted and annotated tile grids.

use serde::{Deserialize, Serialize};

use super::tiling::SlideTiling;
use crate::error::{Error, Result};
use crate::imaging::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMetrics {
    pub iou: f64,
    pub dice: f64,
    pub intersection: usize,
    pub predicted: usize,
    pub truth: usize,
}

/// IoU and Dice in percent. Both are 100 when both masks are empty and 0
/// when exactly one is.
pub fn region_metrics(pred: &BinaryMask, truth: &BinaryMask) -> Result<RegionMetrics> {
    if (pred.width(), pred.height()) != (truth.width(), truth.height()) {
        return Err(Error::Dimensions {
            width: truth.width(),
            height: truth.height(),
            reason: format!("prediction grid is {}x{}", pred.width(), pred.height()),
        });
    }
    let inter = pred.bits().iter().zip(truth.bits()).filter(|(a, b)| **a && **b).count();
    let (u, v) = (pred.count(), truth.count());
    let union = u + v - inter;
    let (iou, dice) = if union == 0 {
        (100.0, 100.0)
    } else {
        (
            100.0 * inter as f64 / union as f64,
            100.0 * 2.0 * inter as f64 / (u + v) as f64,
        )
    };
    Ok(RegionMetrics {
        iou,
        dice,
        intersection: inter,
        predicted: u,
        truth: v,
    })
}

/// Brings a ground-truth mask to grid resolution. A mask already at grid
/// size passes through; a slide-size mask is reduced by strict majority over
/// each tile footprint, ignoring the dropped remainders.
pub fn truth_to_grid(truth: &BinaryMask, tiling: &SlideTiling) -> Result<BinaryMask> {
    let (w, h) = (truth.width(), truth.height());
    if (w, h) == (tiling.cols, tiling.rows) {
        return Ok(truth.clone());
    }
    if (w, h) != (tiling.slide_width, tiling.slide_height) {
        return Err(Error::Dimensions {
            width: w,
            height: h,
            reason: format!(
                "ground truth matches neither the {}x{} slide nor the {}x{} grid",
                tiling.slide_width, tiling.slide_height, tiling.cols, tiling.rows
            ),
        });
    }
    let t = tiling.tile_size;
    BinaryMask::from_fn(tiling.cols, tiling.rows, |c, r| {
        let (x0, y0) = tiling.origin(r, c);
        let mut n = 0usize;
        for y in y0..y0 + t {
            for x in x0..x0 + t {
                n += usize::from(truth.get(x, y));
            }
        }
        2 * n > t * t
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_with(n: usize, on: impl Fn(usize) -> bool) -> BinaryMask {
        BinaryMask::from_fn(n, 1, |x, _| on(x)).unwrap()
    }

    #[test]
    fn hand_set_arithmetic() {
        // |U| = |V| = 100, overlap 50
        let u = mask_with(200, |x| x < 100);
        let v = mask_with(200, |x| (50..150).contains(&x));
        let m = region_metrics(&u, &v).unwrap();
        assert!((m.iou - 100.0 / 3.0).abs() < 1e-12);
        assert!((m.dice - 50.0).abs() < 1e-12);
    }

    #[test]
    fn conventions() {
        let u = mask_with(10, |x| x < 4);
        assert_eq!(region_metrics(&u, &u).unwrap().iou, 100.0);
        let empty = mask_with(10, |_| false);
        let m = region_metrics(&empty, &empty).unwrap();
        assert_eq!((m.iou, m.dice), (100.0, 100.0));
        let m = region_metrics(&u, &empty).unwrap();
        assert_eq!((m.iou, m.dice), (0.0, 0.0));
        let disjoint = mask_with(10, |x| x >= 4);
        assert_eq!(region_metrics(&u, &disjoint).unwrap().dice, 0.0);
        assert!(region_metrics(&u, &mask_with(9, |_| true)).is_err());
    }

    #[test]
    fn majority_resampling() {
        let tiling = SlideTiling::new(25, 10, 10).unwrap();
        // tile (0,0) half covered -> not a majority, tile (0,1) 51 pixels -> ROI
        let truth = BinaryMask::from_fn(25, 10, |x, y| {
            (x < 10 && y < 5) || ((10..20).contains(&x) && (y < 5 || (y == 5 && x == 10)))
        })
        .unwrap();
        let grid = truth_to_grid(&truth, &tiling).unwrap();
        assert_eq!((grid.width(), grid.height()), (2, 1));
        assert!(!grid.get(0, 0));
        assert!(grid.get(1, 0));
        let direct = BinaryMask::filled(2, 1, true).unwrap();
        assert_eq!(truth_to_grid(&direct, &tiling).unwrap(), direct);
        assert!(truth_to_grid(&BinaryMask::filled(3, 3, true).unwrap(), &tiling).is_err());
    }

    proptest! {
        #[test]
        fn dice_iou_identity(a in proptest::collection::vec(any::<bool>(), 64), b in proptest::collection::vec(any::<bool>(), 64)) {
            let u = BinaryMask::new(8, 8, a).unwrap();
            let v = BinaryMask::new(8, 8, b).unwrap();
            let m = region_metrics(&u, &v).unwrap();
            if u.count() + v.count() > 0 {
                let j = m.iou / 100.0;
                prop_assert!((m.dice / 100.0 - 2.0 * j / (1.0 + j)).abs() < 1e-9);
            }
            prop_assert!(m.dice >= m.iou);
        }
    }
}
