//! Escape-time rasters: filled-set masks and Julia boundary cells.
//!
//! This path only uses forward iteration and the escape bound, so it serves
//! as an independent cross-check for the preimage-based X approximation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cubic::CubicMap;
use crate::raster::{dilate, Grid, Rect};

/// Mask of cells whose center stays bounded for `budget` iterations.
pub fn bounded_mask(map: &CubicMap, rect: Rect, res: usize, budget: u32, conv_tol: f64) -> Grid<bool> {
    let proto = Grid::<bool>::new(rect, res);
    let data: Vec<bool> = (0..res * res)
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = (i % res, i / res);
            let z = proto.cell_center(ix, iy);
            !map.orbit_fate(z, budget, conv_tol).escaped()
        })
        .collect();
    Grid::from_vec(rect, res, data)
}

/// Bounded cells with an escaping 8-neighbor. Window-edge contact does not
/// count: the outside of the window is unknown, not escaping.
pub fn julia_boundary(bounded: &Grid<bool>) -> Grid<bool> {
    let n = bounded.res as i64;
    let mut out = Grid::<bool>::new(bounded.rect, bounded.res);
    for iy in 0..bounded.res {
        for ix in 0..bounded.res {
            if !*bounded.get(ix, iy) {
                continue;
            }
            let mut edge = false;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (ix as i64 + dx, iy as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= n || ny >= n {
                        continue;
                    }
                    if !*bounded.get(nx as usize, ny as usize) {
                        edge = true;
                    }
                }
            }
            if edge {
                out.set(ix, iy, true);
            }
        }
    }
    out
}

/// Fraction of `points` lying within `cells` cells of a set cell of `mask`.
pub fn fraction_within(points: &[Complex64], mask: &Grid<bool>, cells: usize) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let halo = dilate(mask, cells);
    let hits = points
        .iter()
        .filter(|&&p| matches!(halo.locate(p), Some((ix, iy)) if *halo.get(ix, iy)))
        .count();
    hits as f64 / points.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubing_map_fills_unit_disk() {
        let map = CubicMap::from_re(0.0, 0.0);
        let rect = Rect::square(Complex64::new(0.0, 0.0), 1.5);
        let mask = bounded_mask(&map, rect, 128, 256, 1e-8);
        for iy in 0..128 {
            for ix in 0..128 {
                let z = mask.cell_center(ix, iy);
                if z.norm() < 0.95 {
                    assert!(*mask.get(ix, iy), "cell at {z} should be bounded");
                }
                if z.norm() > 1.05 {
                    assert!(!*mask.get(ix, iy), "cell at {z} should escape");
                }
            }
        }
        let boundary = julia_boundary(&mask);
        let mut worst: f64 = 0.0;
        for iy in 0..128 {
            for ix in 0..128 {
                if *boundary.get(ix, iy) {
                    worst = worst.max((boundary.cell_center(ix, iy).norm() - 1.0).abs());
                }
            }
        }
        assert!(worst < 0.05, "boundary cells hug the unit circle, worst {worst}");
    }

    #[test]
    fn fraction_within_counts_halo() {
        let rect = Rect::new(0.0, 8.0, 0.0, 8.0);
        let mut mask = Grid::<bool>::new(rect, 8);
        mask.set(4, 4, true);
        let pts = vec![
            Complex64::new(4.5, 4.5), // in the set cell
            Complex64::new(6.5, 4.5), // two cells away
            Complex64::new(0.5, 0.5), // far
        ];
        let f = fraction_within(&pts, &mask, 2);
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
    }
}
