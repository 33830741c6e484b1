//! Per-map dynamical classification: connectedness proxy, hyperbolic-domain
//! proxy, the principal critical point, and the immediate-basin raster.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cubic::{CubicMap, OrbitFate};
use crate::error::{Error, Result};
use crate::params::{check_multiplier, is_neutral, Params};
use crate::raster::{Grid, Rect};

/// Verdict for one map.
///
/// A map with an escaping critical orbit has a disconnected Julia set *and*
/// is certainly outside the closure of the principal hyperbolic domain; the
/// label prefers `PotentiallyRenormalizable` in that case because that is
/// the property the rest of the pipeline consumes. `JuliaDisconnected` is
/// only emitted when both critical orbits escape, which cannot happen for a
/// genuinely non-repelling fixed point and therefore flags numerical trouble.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MapLabel {
    JuliaDisconnected,
    Phd3Proxy,
    PotentiallyRenormalizable,
    #[default]
    Unresolved,
}

#[derive(Clone, Copy, Debug)]
pub struct MapClass {
    pub label: MapLabel,
    /// Fates of the two critical orbits, in `CriticalPair` order.
    pub fates: (OrbitFate, OrbitFate),
}

/// Perturbation factors used to probe |λ| = 1 maps from inside the disk.
pub const NEUTRAL_EPS_SCHEDULE: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Classify a map by the fates of its two critical orbits.
///
/// For |λ| = 1 with bounded orbits, membership in the hyperbolic-domain
/// closure has no finite test; the map is probed at λ(1−ε) over the ε
/// schedule. Only a unanimous "not in the domain" answer yields
/// `PotentiallyRenormalizable`; anything else stays `Unresolved` rather
/// than guessing a boundary case.
pub fn classify(map: &CubicMap, params: &Params) -> Result<MapClass> {
    let modulus = check_multiplier(map.lambda)?;
    let pair = map.critical_points();
    let fate1 = map.orbit_fate(pair.first, params.orbit_budget, params.conv_tol);
    let fate2 = map.orbit_fate(pair.second, params.orbit_budget, params.conv_tol);
    let fates = (fate1, fate2);

    let label = if !is_neutral(map.lambda) && modulus < 1.0 {
        match (fate1, fate2) {
            (OrbitFate::ConvergedToZeroAt(_), OrbitFate::ConvergedToZeroAt(_)) => MapLabel::Phd3Proxy,
            (OrbitFate::EscapedAt(_), OrbitFate::EscapedAt(_)) => MapLabel::JuliaDisconnected,
            (f1, f2) if f1.escaped() || f2.escaped() => MapLabel::PotentiallyRenormalizable,
            (OrbitFate::BoundedUnresolved, OrbitFate::BoundedUnresolved) => MapLabel::Unresolved,
            _ => MapLabel::PotentiallyRenormalizable,
        }
    } else {
        // |λ| = 1.
        if fate1.escaped() && fate2.escaped() {
            MapLabel::JuliaDisconnected
        } else if fate1.escaped() || fate2.escaped() {
            MapLabel::PotentiallyRenormalizable
        } else {
            let mut in_domain = 0;
            let mut outside = 0;
            for eps in NEUTRAL_EPS_SCHEDULE {
                let probe = CubicMap::new(map.lambda * (1.0 - eps), map.b);
                let sub = classify(&probe, params)?;
                if sub.label == MapLabel::Phd3Proxy {
                    in_domain += 1;
                } else if sub.label == MapLabel::PotentiallyRenormalizable
                    || sub.label == MapLabel::JuliaDisconnected
                {
                    outside += 1;
                }
            }
            if outside == NEUTRAL_EPS_SCHEDULE.len() {
                MapLabel::PotentiallyRenormalizable
            } else {
                // Includes the unanimous in-domain case: boundary membership
                // is reported Unresolved, never silently labeled.
                let _ = in_domain;
                MapLabel::Unresolved
            }
        }
    };

    Ok(MapClass { label, fates })
}

/// Cell label in an immediate-basin raster.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BasinCell {
    InImmediateBasin,
    #[default]
    NotInImmediateBasin,
    BoundaryUndetermined,
}

/// Raster of the immediate attracting basin of 0.
#[derive(Clone, Debug)]
pub struct BasinRaster {
    pub map: CubicMap,
    pub grid: Grid<BasinCell>,
    pub conv_tol: f64,
    pub budget: u32,
}

impl BasinRaster {
    pub fn is_in(&self, ix: usize, iy: usize) -> bool {
        *self.grid.get(ix, iy) == BasinCell::InImmediateBasin
    }

    /// Mask of `InImmediateBasin` cells.
    pub fn in_mask(&self) -> Grid<bool> {
        let data = self
            .grid
            .as_slice()
            .iter()
            .map(|&c| c == BasinCell::InImmediateBasin)
            .collect();
        Grid::from_vec(self.grid.rect, self.grid.res, data)
    }
}

/// Rasterize the immediate basin of 0 over `rect`.
///
/// Cells whose center orbit converges to 0 are candidates; the immediate
/// basin is the 4-connected component of candidates around the cell of 0.
/// Converging cells not reached from 0 sit in preimage components of the
/// basin and stay `NotInImmediateBasin`.
pub fn immediate_basin(
    map: &CubicMap,
    rect: Rect,
    resolution: usize,
    params: &Params,
) -> Result<BasinRaster> {
    if is_neutral(map.lambda) || map.lambda.norm() >= 1.0 {
        return Err(Error::ParabolicBasinUnsupported);
    }
    const CONVERGED: u8 = 0;
    const ESCAPED: u8 = 1;
    const BOUNDED: u8 = 2;
    let proto = Grid::<bool>::new(rect, resolution);
    let fates: Vec<u8> = (0..resolution * resolution)
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = (i % resolution, i / resolution);
            let z = proto.cell_center(ix, iy);
            match map.orbit_fate(z, params.orbit_budget, params.conv_tol) {
                OrbitFate::ConvergedToZeroAt(_) => CONVERGED,
                OrbitFate::EscapedAt(_) => ESCAPED,
                OrbitFate::BoundedUnresolved => BOUNDED,
            }
        })
        .collect();
    let conv_grid = Grid::from_vec(
        rect,
        resolution,
        fates.iter().map(|&f| f == CONVERGED).collect(),
    );

    let Some(seed) = conv_grid.locate(Complex64::new(0.0, 0.0)) else {
        return Err(Error::WindowError(
            "basin window does not contain the fixed point 0".into(),
        ));
    };
    if !*conv_grid.get(seed.0, seed.1) {
        return Err(Error::BudgetExhausted(
            "the cell of 0 did not converge within the orbit budget".into(),
        ));
    }

    // Flood the 4-connected converging region from the cell of 0.
    let mut reached = Grid::<bool>::new(rect, resolution);
    let mut stack = vec![seed];
    reached.set(seed.0, seed.1, true);
    while let Some((x, y)) = stack.pop() {
        let candidates = [
            (x.wrapping_sub(1), y),
            (x + 1, y),
            (x, y.wrapping_sub(1)),
            (x, y + 1),
        ];
        for (nx, ny) in candidates {
            if nx < resolution
                && ny < resolution
                && *conv_grid.get(nx, ny)
                && !*reached.get(nx, ny)
            {
                reached.set(nx, ny, true);
                stack.push((nx, ny));
            }
        }
    }

    // Bounded-but-unresolved cells are boundary-undetermined, not "outside".
    let mut grid = Grid::<BasinCell>::new(rect, resolution);
    for iy in 0..resolution {
        for ix in 0..resolution {
            let label = if *reached.get(ix, iy) {
                BasinCell::InImmediateBasin
            } else if fates[grid.idx(ix, iy)] == BOUNDED {
                BasinCell::BoundaryUndetermined
            } else {
                BasinCell::NotInImmediateBasin
            };
            grid.set(ix, iy, label);
        }
    }

    Ok(BasinRaster {
        map: *map,
        grid,
        conv_tol: params.conv_tol,
        budget: params.orbit_budget,
    })
}

/// Pick a window for the immediate basin automatically.
///
/// Coarse probes grow a square window by doubling until the flooded region
/// clears the border, then the window is refitted to the region's bounding
/// box. The final raster is computed at `params.basin_resolution`.
pub fn auto_basin(map: &CubicMap, params: &Params) -> Result<BasinRaster> {
    const PROBE_RES: usize = 256;
    let cap = 1.05 * map.escape_radius();
    let mut half = 1e-2;

    // The seed cell must converge; shrink if even the probe window is too big.
    let mut probe = loop {
        let rect = Rect::square(Complex64::new(0.0, 0.0), half);
        match immediate_basin(map, rect, PROBE_RES, params) {
            Ok(b) => break b,
            Err(Error::BudgetExhausted(_)) if half > 1e-9 => half /= 16.0,
            Err(e) => return Err(e),
        }
    };
    while probe.in_mask().touches_border(2) && half < cap {
        half = (half * 2.0).min(cap);
        let rect = Rect::square(Complex64::new(0.0, 0.0), half);
        probe = immediate_basin(map, rect, PROBE_RES, params)?;
    }

    // Refit to the basin's bounding box with a 30% margin.
    let mask = probe.in_mask();
    let rect = match mask.bbox() {
        Some((x0, y0, x1, y1)) => {
            let a = mask.cell_center(x0, y0);
            let b = mask.cell_center(x1, y1);
            Rect::square_around([a, b], 1.3, 1e-6).unwrap()
        }
        None => probe.grid.rect,
    };

    let mut rect = rect;
    for _ in 0..4 {
        let basin = immediate_basin(map, rect, params.basin_resolution, params)?;
        if !basin.in_mask().touches_border(2) {
            return Ok(basin);
        }
        rect = rect.scaled(1.5);
    }
    immediate_basin(map, rect, params.basin_resolution, params)
}

/// The principal critical point ω₁.
///
/// For |λ| < 1 this is the unique critical point whose orbit converges to 0
/// and whose cell lies in the immediate-basin raster. For |λ| = 1 the choice
/// is made on the perturbed maps λ(1−ε) over the ε schedule and must agree
/// across all three.
pub fn principal_critical_point(
    map: &CubicMap,
    basin: Option<&BasinRaster>,
    params: &Params,
) -> Result<Complex64> {
    check_multiplier(map.lambda)?;
    let pair = map.critical_points();
    if pair.degenerate {
        return Err(Error::DegenerateCriticalPair);
    }

    if !is_neutral(map.lambda) && map.lambda.norm() < 1.0 {
        let owned;
        let basin = match basin {
            Some(b) => b,
            None => {
                owned = auto_basin(map, params)?;
                &owned
            }
        };
        let qualifies = |c: Complex64| -> bool {
            if !map.orbit_fate(c, params.orbit_budget, params.conv_tol).converged() {
                return false;
            }
            matches!(basin.grid.locate(c), Some((ix, iy)) if basin.is_in(ix, iy))
        };
        match (qualifies(pair.first), qualifies(pair.second)) {
            (true, false) => Ok(pair.first),
            (false, true) => Ok(pair.second),
            (true, true) => Err(Error::PrincipalContradiction(
                "both critical points converge inside the immediate basin".into(),
            )),
            (false, false) => Err(Error::PrincipalContradiction(
                "no critical point qualifies; the basin raster may be too coarse".into(),
            )),
        }
    } else {
        // |λ| = 1: perturb inward and require agreement across the schedule.
        let mut picks = Vec::new();
        for eps in NEUTRAL_EPS_SCHEDULE {
            let probe = CubicMap::new(map.lambda * (1.0 - eps), map.b);
            let w = principal_critical_point(&probe, None, params)?;
            let d1 = (w - pair.first).norm();
            let d2 = (w - pair.second).norm();
            picks.push(if d1 <= d2 { 0usize } else { 1usize });
        }
        if picks.iter().all(|&p| p == picks[0]) {
            Ok(if picks[0] == 0 { pair.first } else { pair.second })
        } else {
            Err(Error::PrincipalUndetermined(
                "perturbation schedule disagrees on the principal critical point".into(),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pure_cubing_is_domain_proxy() {
        let class = classify(&CubicMap::from_re(0.0, 0.0), &Params::default()).unwrap();
        assert_eq!(class.label, MapLabel::Phd3Proxy);
    }

    #[test]
    fn small_perturbation_stays_in_domain() {
        let class = classify(&CubicMap::from_re(0.5, 0.05), &Params::default()).unwrap();
        assert_eq!(class.label, MapLabel::Phd3Proxy);
    }

    #[test]
    fn escaping_free_critical_point_is_potentially_renormalizable() {
        let class = classify(&CubicMap::from_re(0.5, 10.0), &Params::default()).unwrap();
        assert_eq!(class.label, MapLabel::PotentiallyRenormalizable);
        let (f1, f2) = class.fates;
        assert!(f1.escaped() ^ f2.escaped());
    }

    #[test]
    fn repelling_fixed_point_is_out_of_scope() {
        assert!(matches!(
            classify(&CubicMap::from_re(2.0, 0.0), &Params::default()),
            Err(Error::OutOfScope { .. })
        ));
    }

    #[test]
    fn neutral_classify_runs() {
        let params = Params { orbit_budget: 2000, ..Params::default() };
        let class = classify(&CubicMap::from_re(1.0, 6.0), &params).unwrap();
        assert_eq!(class.label, MapLabel::PotentiallyRenormalizable);
    }

    #[test]
    fn cubing_basin_contains_inner_disk() {
        let map = CubicMap::from_re(0.0, 0.0);
        let rect = Rect::square(c(0.0, 0.0), 1.2);
        let basin = immediate_basin(&map, rect, 256, &Params::default()).unwrap();
        for iy in 0..256 {
            for ix in 0..256 {
                if basin.grid.cell_center(ix, iy).norm() <= 0.9 {
                    assert!(basin.is_in(ix, iy));
                }
            }
        }
    }

    #[test]
    fn odd_map_basin_is_symmetric() {
        let map = CubicMap::from_re(0.5, 0.0);
        let rect = Rect::square(c(0.0, 0.0), 1.5);
        let basin = immediate_basin(&map, rect, 128, &Params::default()).unwrap();
        for iy in 0..128 {
            for ix in 0..128 {
                assert_eq!(
                    basin.is_in(ix, iy),
                    basin.is_in(127 - ix, 127 - iy),
                    "basin of an odd map must be symmetric under z -> -z"
                );
            }
        }
    }

    #[test]
    fn basin_requires_window_around_zero() {
        let map = CubicMap::from_re(0.5, 0.0);
        let rect = Rect::new(2.0, 3.0, 2.0, 3.0);
        assert!(matches!(
            immediate_basin(&map, rect, 64, &Params::default()),
            Err(Error::WindowError(_))
        ));
    }

    #[test]
    fn parabolic_basin_unsupported() {
        let map = CubicMap::from_re(1.0, 3.0);
        let rect = Rect::square(c(0.0, 0.0), 1.0);
        assert!(matches!(
            immediate_basin(&map, rect, 64, &Params::default()),
            Err(Error::ParabolicBasinUnsupported)
        ));
    }

    #[test]
    fn principal_point_for_escaping_partner() {
        let params = Params::desk_small();
        let map = CubicMap::from_re(0.5, 10.0);
        let w = principal_critical_point(&map, None, &params).unwrap();
        let pair = map.critical_points();
        let near = if pair.first.norm() < pair.second.norm() {
            pair.first
        } else {
            pair.second
        };
        assert_eq!(w, near);
        assert!(map.orbit_fate(w, 10_000, 1e-8).converged());
    }

    #[test]
    fn principal_point_flood_filled_case() {
        let params = Params::desk_small();
        let map = CubicMap::from_re(0.5, 2.0);
        let w = principal_critical_point(&map, None, &params).unwrap();
        assert!((w - c(-0.139620, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn degenerate_pair_is_an_error() {
        // b² = 3λ with |λ| < 1.
        let map = CubicMap::from_re(1.0 / 3.0, 1.0);
        assert!(matches!(
            principal_critical_point(&map, None, &Params::desk_small()),
            Err(Error::DegenerateCriticalPair)
        ));
    }
}
