//! Renormalizability verdicts, explicit quadratic-like domain pairs, the
//! preimage-count continuity probe, the branched-cover degree bound, the
//! straightening-target parameter, and capture detection.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::cubic::CubicMap;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::raster::{
    components8, dilate, fill_holes, inner_ring, trace_outer_contour, Grid, Rect,
};
use crate::xset::{
    forward_invariance_defect, is_connected, preimage_count_on_x, Connectivity, XApprox,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenormStatus {
    ImmediatelyRenormalizable,
    NotRenormalizable,
    Undetermined,
}

/// The raw numbers a verdict was made from.
#[derive(Clone, Copy, Debug)]
pub struct Evidence {
    pub connectivity: Connectivity,
    pub two_preimage_fraction: f64,
    pub defect: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct RenormVerdict {
    pub status: RenormStatus,
    pub evidence: Evidence,
}

/// Decide immediate renormalizability from the X approximation.
///
/// `ImmediatelyRenormalizable` needs a connected raster, a two-preimage
/// fraction of at least `two_preimage_min` and a forward-invariance defect
/// of at most `defect_max`. `NotRenormalizable` needs a disconnection that
/// survived the two-resolution check inside [`is_connected`]; everything
/// else is `Undetermined` — a wrong verdict is worse than no verdict.
pub fn verdict(map: &CubicMap, x: &XApprox, params: &Params) -> RenormVerdict {
    let connectivity = is_connected(x);
    let samples = params.verdict_samples.max(1000);
    let stats = preimage_count_on_x(map, x, samples, params.seed);
    let defect = forward_invariance_defect(map, x);
    let evidence = Evidence {
        connectivity,
        two_preimage_fraction: stats.exactly_two_fraction,
        defect,
    };
    let status = if connectivity == Connectivity::Connected
        && stats.exactly_two_fraction >= params.two_preimage_min
        && defect <= params.defect_max
    {
        RenormStatus::ImmediatelyRenormalizable
    } else if connectivity == Connectivity::Disconnected {
        RenormStatus::NotRenormalizable
    } else {
        RenormStatus::Undetermined
    };
    RenormVerdict { status, evidence }
}

/// Two nested Jordan contours with the restriction degree between them.
#[derive(Clone, Debug)]
pub struct QlDomainPair {
    /// Outer contour, a closed polyline of cell centers.
    pub v_star: Vec<Complex64>,
    /// Inner contour; the map restricted to its interior is proper onto the
    /// interior of `v_star`.
    pub u_star: Vec<Complex64>,
    pub degree: u32,
    /// Dilation radius (cells) that produced the accepted outer domain.
    pub dilation_cells: usize,
    /// Raster the checks ran on.
    pub rect: Rect,
    pub resolution: usize,
}

/// Ring sample count for the degree check.
const DEGREE_SAMPLES: usize = 64;

/// Construct explicit domains U* ⊂ V* with f: U* → V* proper of degree 2.
///
/// V* is the contour of an r-cell dilation of the topological hull of the
/// X raster, r walking down the schedule; U* is the component of
/// {z : f(z) ∈ V*} containing X, hole-filled. A pair is accepted when
/// closure(U*) sits inside V* with at least a one-cell margin, X sits inside
/// U* the same way, and all 64 boundary-ring samples have exactly two
/// preimages in U*.
pub fn build_ql_domains(map: &CubicMap, x: &XApprox, params: &Params) -> Result<QlDomainPair> {
    let resolution = x.raster.res.max(params.x_resolution);
    // The X raster window is already twice the cloud's bounding box, which
    // leaves the dilations room to breathe.
    let rect = x.raster.rect;
    let xr = if resolution == x.raster.res {
        x.raster.clone()
    } else {
        let mut g = Grid::<bool>::new(rect, resolution);
        for p in &x.cloud.points {
            if let Some((ix, iy)) = g.locate(p.z) {
                g.set(ix, iy, true);
            }
        }
        crate::raster::close(&g, 1)
    };
    let hull = fill_holes(&xr);
    let x_halo = dilate(&xr, 1);

    let mut last_failure = String::from("schedule empty");
    for &r in &params.dilation_schedule {
        let v_region = dilate(&hull, r);
        if v_region.touches_border(1) {
            last_failure = format!("dilation by {r} cells hit the window border");
            continue;
        }

        // Preimage raster of the open region bounded by V*.
        let pre: Vec<bool> = {
            use rayon::prelude::*;
            (0..resolution * resolution)
                .into_par_iter()
                .map(|i| {
                    let (ix, iy) = (i % resolution, i / resolution);
                    let w = map.eval(v_region.cell_center(ix, iy));
                    matches!(v_region.locate(w), Some((jx, jy)) if *v_region.get(jx, jy))
                })
                .collect()
        };
        let pre_mask = Grid::from_vec(rect, resolution, pre);
        let (labels, _) = components8(&pre_mask);

        // The component containing X. Every X cell must agree.
        let mut u_id = 0u32;
        let mut consistent = true;
        'outer: for iy in 0..resolution {
            for ix in 0..resolution {
                if !*xr.get(ix, iy) {
                    continue;
                }
                let l = *labels.get(ix, iy);
                if l == 0 {
                    consistent = false;
                    break 'outer;
                }
                if u_id == 0 {
                    u_id = l;
                } else if l != u_id {
                    consistent = false;
                    break 'outer;
                }
            }
        }
        if !consistent || u_id == 0 {
            last_failure = format!("X raster not contained in one preimage component at r = {r}");
            continue;
        }
        let u_raw = Grid::from_vec(
            rect,
            resolution,
            labels.as_slice().iter().map(|&l| l == u_id).collect(),
        );
        let u_region = fill_holes(&u_raw);

        // closure(U*) inside V* with a one-cell margin, X inside U* likewise.
        if !dilate(&u_region, 1).is_subset_of(&v_region) {
            last_failure = format!("U not compactly inside V at r = {r}");
            continue;
        }
        if !x_halo.is_subset_of(&u_region) {
            last_failure = format!("X raster not strictly inside U at r = {r}");
            continue;
        }

        // Degree check on the inner boundary ring of V*.
        let ring = inner_ring(&v_region);
        let ring_cells: Vec<(usize, usize)> = (0..resolution)
            .flat_map(|iy| (0..resolution).map(move |ix| (ix, iy)))
            .filter(|&(ix, iy)| *ring.get(ix, iy))
            .collect();
        if ring_cells.len() < DEGREE_SAMPLES {
            last_failure = format!("boundary ring too small at r = {r}");
            continue;
        }
        let u_halo = dilate(&u_region, 1);
        let stride = ring_cells.len() / DEGREE_SAMPLES;
        let mut all_two = true;
        for k in 0..DEGREE_SAMPLES {
            let (ix, iy) = ring_cells[k * stride];
            let w = ring.cell_center(ix, iy);
            let count = match map.preimages(w) {
                Err(_) => 0,
                Ok(roots) => roots
                    .iter()
                    .filter(|&&z| matches!(u_halo.locate(z), Some((jx, jy)) if *u_halo.get(jx, jy)))
                    .count(),
            };
            if count != 2 {
                all_two = false;
                break;
            }
        }
        if !all_two {
            last_failure = format!("degree count differs from 2 at r = {r}");
            continue;
        }

        return Ok(QlDomainPair {
            v_star: trace_outer_contour(&v_region),
            u_star: trace_outer_contour(&u_region),
            degree: 2,
            dilation_cells: r,
            rect,
            resolution,
        });
    }
    Err(Error::ConstructionFailure(last_failure))
}

/// Continuity probe for the preimage-count function around a compact raster:
/// points just off the set must not map onto the image of the set.
///
/// Samples `samples` cells from the 1–3-cell annulus around `y`; passes iff
/// no sampled image lands within one cell of the image raster of `y`. Cells
/// within the one-cell membership tolerance count as "on" the raster and
/// are not sampled.
pub fn nu_continuity_check(map: &CubicMap, y: &Grid<bool>, samples: usize, seed: u64) -> bool {
    let res = y.res;
    let annulus = {
        let near = dilate(y, 3);
        let on = dilate(y, 1);
        let mut a = Grid::<bool>::new(y.rect, res);
        for i in 0..a.cells() {
            a.as_mut_slice()[i] = near.as_slice()[i] && !on.as_slice()[i];
        }
        a
    };
    let mut image = Grid::<bool>::new(y.rect, res);
    for iy in 0..res {
        for ix in 0..res {
            if *y.get(ix, iy) {
                if let Some((jx, jy)) = image.locate(map.eval(y.cell_center(ix, iy))) {
                    image.set(jx, jy, true);
                }
            }
        }
    }
    let image_halo = dilate(&image, 1);

    let candidates: Vec<(usize, usize)> = (0..res)
        .flat_map(|iy| (0..res).map(move |ix| (ix, iy)))
        .filter(|&(ix, iy)| *annulus.get(ix, iy))
        .collect();
    if candidates.is_empty() {
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let (ix, iy) = candidates[rng.gen_range(0..candidates.len())];
        let w = map.eval(annulus.cell_center(ix, iy));
        if matches!(image_halo.locate(w), Some((jx, jy)) if *image_halo.get(jx, jy)) {
            return false;
        }
    }
    true
}

/// Riemann–Hurwitz degree bound 1 + Σ(d_c − 1) over critical points of the
/// cubic inside the topological hull of `y`.
pub fn riemann_hurwitz_bound(map: &CubicMap, y: &Grid<bool>) -> u32 {
    let hull = fill_holes(y);
    let inside = |z: Complex64| -> bool {
        matches!(hull.locate(z), Some((ix, iy)) if *hull.get(ix, iy))
    };
    let pair = map.critical_points();
    let mut m = 1;
    if pair.degenerate {
        if inside(pair.first) {
            m += 2; // one critical point of multiplicity 3
        }
    } else {
        if inside(pair.first) {
            m += 1;
        }
        if inside(pair.second) {
            m += 1;
        }
    }
    m
}

/// Parameter of the quadratic z² + c with a fixed point of multiplier λ.
pub fn cardioid_parameter(lambda: Complex64) -> Result<Complex64> {
    crate::params::check_multiplier(lambda)?;
    Ok(lambda * 0.5 - lambda * lambda * 0.25)
}

/// Whether (and when) the free critical orbit enters the hull of X.
#[derive(Clone, Copy, Debug)]
pub struct CaptureReport {
    pub captured: bool,
    /// Smallest n ≥ 0 with f^n(ω₂) inside the hull; present iff captured.
    pub entry_time: Option<u32>,
}

/// Iterate the free critical point ω₂ and report the first entry into the
/// topological hull of the X raster. Entry at n ≤ 1 is impossible for a
/// degree-2 restriction and is reported as an error (it means the raster is
/// wrong). `omega1` identifies the principal critical point so the other
/// one is iterated.
pub fn capture_detect(
    map: &CubicMap,
    omega1: Complex64,
    x: &XApprox,
    budget: u32,
) -> Result<CaptureReport> {
    let hull = fill_holes(&x.raster);
    let pair = map.critical_points();
    if pair.degenerate {
        return Err(Error::DegenerateCriticalPair);
    }
    let omega2 = if (pair.first - omega1).norm() <= (pair.second - omega1).norm() {
        pair.second
    } else {
        pair.first
    };
    let r2 = {
        let r = map.escape_radius();
        r * r
    };
    let mut z = omega2;
    for n in 0..=budget {
        let m2 = z.norm_sqr();
        if !m2.is_finite() || m2 > r2 {
            return Ok(CaptureReport {
                captured: false,
                entry_time: None,
            });
        }
        if matches!(hull.locate(z), Some((ix, iy)) if *hull.get(ix, iy)) {
            if n <= 1 {
                return Err(Error::CaptureInvariantViolation { n });
            }
            return Ok(CaptureReport {
                captured: true,
                entry_time: Some(n),
            });
        }
        z = map.eval(z);
    }
    Ok(CaptureReport {
        captured: false,
        entry_time: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::julia::bounded_mask;
    use crate::xset::x_approx_from_points;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cardioid_spot_values() {
        assert_eq!(cardioid_parameter(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert_eq!(cardioid_parameter(c(1.0, 0.0)).unwrap(), c(0.25, 0.0));
        assert_eq!(cardioid_parameter(c(-1.0, 0.0)).unwrap(), c(-0.75, 0.0));
        assert!(cardioid_parameter(c(1.5, 0.0)).is_err());
    }

    #[test]
    fn verdict_rule_on_synthetic_disconnection() {
        // Two far-apart blobs: robustly disconnected.
        let map = CubicMap::from_re(0.5, 10.0);
        let rect = Rect::new(-8.0, 8.0, -8.0, 8.0);
        let mut pts = Vec::new();
        for k in 0..200 {
            let t = k as f64 / 200.0;
            pts.push((6u16, c(-6.0 + t, -6.0)));
            pts.push((6u16, c(5.0 + t, 5.0)));
        }
        let x = x_approx_from_points(map, pts, rect, 64);
        let v = verdict(&map, &x, &Params::desk_small());
        assert_eq!(v.status, RenormStatus::NotRenormalizable);
        assert_eq!(v.evidence.connectivity, Connectivity::Disconnected);
    }

    #[test]
    fn verdict_undetermined_when_thresholds_straddle() {
        // A connected blob nowhere near the map's dynamics: the preimage
        // fraction fails while connectivity holds.
        let map = CubicMap::from_re(0.5, 10.0);
        let rect = Rect::new(-2.0, 2.0, -2.0, 2.0);
        let pts: Vec<(u16, Complex64)> = (0..100)
            .map(|k| (6u16, c(1.0 + 0.001 * k as f64, 1.0)))
            .collect();
        let x = x_approx_from_points(map, pts, rect, 64);
        let v = verdict(&map, &x, &Params::desk_small());
        assert_eq!(v.status, RenormStatus::Undetermined);
    }

    #[test]
    fn nu_continuity_on_cubing_disk() {
        let map = CubicMap::from_re(0.0, 0.0);
        let rect = Rect::square(c(0.0, 0.0), 1.5);
        let y = bounded_mask(&map, rect, 192, 256, 1e-8);
        assert!(nu_continuity_check(&map, &y, 1000, 7));
    }

    #[test]
    fn nu_continuity_fails_on_half_disk() {
        let map = CubicMap::from_re(0.0, 0.0);
        let rect = Rect::square(c(0.0, 0.0), 1.5);
        let full = bounded_mask(&map, rect, 192, 256, 1e-8);
        let mut half = Grid::<bool>::new(rect, 192);
        for iy in 0..192 {
            for ix in 0..192 {
                if *full.get(ix, iy) && full.cell_center(ix, iy).im > 0.0 {
                    half.set(ix, iy, true);
                }
            }
        }
        assert!(!nu_continuity_check(&map, &half, 1000, 7));
    }

    #[test]
    fn riemann_hurwitz_cases() {
        let rect = Rect::square(c(0.0, 0.0), 4.0);
        let mut y = Grid::<bool>::new(rect, 64);
        // Empty region: no critical points inside.
        let map = CubicMap::from_re(0.0, 3.0); // critical points 0 and −2
        assert_eq!(riemann_hurwitz_bound(&map, &y), 1);
        // Mark the region around 0 only.
        for iy in 0..64 {
            for ix in 0..64 {
                if y.cell_center(ix, iy).norm() < 0.5 {
                    y.set(ix, iy, true);
                }
            }
        }
        assert_eq!(riemann_hurwitz_bound(&map, &y), 2);
        // Degenerate critical point (multiplicity 3) inside.
        let deg = CubicMap::from_re(0.0, 0.0);
        assert_eq!(riemann_hurwitz_bound(&deg, &y), 3);
    }

    #[test]
    fn capture_entry_at_step_three() {
        // Odd map with both critical orbits bounded, so the free orbit can
        // actually reach step 3 before any escape check fires.
        let map = CubicMap::from_re(0.5, 0.0);
        let pair = map.critical_points();
        let (omega1, omega2) = if pair.first.im > 0.0 {
            (pair.first, pair.second)
        } else {
            (pair.second, pair.first)
        };
        // Seed the raster with a blob exactly at f^3(ω₂).
        let mut z = omega2;
        for _ in 0..3 {
            z = map.eval(z);
        }
        let rect = Rect::square(z, 0.05);
        let pts: Vec<(u16, Complex64)> = (0..50)
            .map(|k| {
                let t = k as f64 / 50.0 * std::f64::consts::TAU;
                (6u16, z + Complex64::from_polar(0.005, t))
            })
            .collect();
        let x = x_approx_from_points(map, pts, rect, 64);
        let report = capture_detect(&map, omega1, &x, 100).unwrap();
        assert!(report.captured);
        assert_eq!(report.entry_time, Some(3));
    }

    #[test]
    fn capture_at_step_zero_is_an_invariant_violation() {
        let map = CubicMap::from_re(0.5, 10.0);
        let pair = map.critical_points();
        let (omega1, omega2) = if pair.first.norm() < pair.second.norm() {
            (pair.first, pair.second)
        } else {
            (pair.second, pair.first)
        };
        let rect = Rect::square(omega2, 0.5);
        let pts: Vec<(u16, Complex64)> = (0..50)
            .map(|k| {
                let t = k as f64 / 50.0 * std::f64::consts::TAU;
                (6u16, omega2 + Complex64::from_polar(0.05, t))
            })
            .collect();
        let x = x_approx_from_points(map, pts, rect, 64);
        assert!(matches!(
            capture_detect(&map, omega1, &x, 100),
            Err(Error::CaptureInvariantViolation { n: 0 })
        ));
    }

    #[test]
    fn escaping_free_point_is_not_captured() {
        let map = CubicMap::from_re(0.5, 10.0);
        let pair = map.critical_points();
        let omega1 = if pair.first.norm() < pair.second.norm() {
            pair.first
        } else {
            pair.second
        };
        let rect = Rect::square(c(0.0, 0.0), 0.1);
        let x = x_approx_from_points(map, vec![(6, c(0.0, 0.0))], rect, 32);
        let report = capture_detect(&map, omega1, &x, 2000).unwrap();
        assert!(!report.captured);
    }
}
