//! Parameter-slice exploration: classification rasters over b for a fixed
//! multiplier, component decomposition of the potentially renormalizable
//! region, and the desk-scale check that unbounded-component maps are
//! immediately renormalizable.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;

use crate::classify::{classify, MapLabel};
use crate::cubic::CubicMap;
use crate::error::{Error, Result};
use crate::params::{check_multiplier, Params};
use crate::pipeline::{analyze, Analysis};
use crate::raster::{Grid, Rect};
use crate::renorm::RenormStatus;

/// Default half-width of the b-window: 2 plus twice the escape-radius scale
/// heuristic of 5, which keeps the escape-dominated sea inside the window.
pub const DEFAULT_SLICE_HALF_WIDTH: f64 = 12.0;

/// Classification raster over a window in the b-plane.
#[derive(Clone, Debug)]
pub struct SliceRaster {
    pub lambda: Complex64,
    pub labels: Grid<MapLabel>,
    /// 4-connected component ids over PotentiallyRenormalizable cells
    /// (1-based; 0 elsewhere).
    pub components: Grid<u32>,
    /// Ids of components touching the window boundary.
    pub unbounded: BTreeSet<u32>,
    pub counts: LabelCounts,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LabelCounts {
    pub julia_disconnected: usize,
    pub phd3_proxy: usize,
    pub potentially_renormalizable: usize,
    pub unresolved: usize,
}

/// Where a parameter sits in the component decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentRef {
    Unbounded,
    BoundedId(u32),
    NotApplicable,
}

/// Classify the slice map f_{λ,b} at every cell center, then label the
/// 4-connected components of the potentially renormalizable cells. All
/// components touching the window boundary are tagged unbounded (on a
/// raster the true unbounded component may meet the border in several
/// pieces). Unresolved cells never join a component.
pub fn render_slice(
    lambda: Complex64,
    rect: Rect,
    resolution: usize,
    params: &Params,
) -> Result<SliceRaster> {
    check_multiplier(lambda)?;
    let proto = Grid::<MapLabel>::new(rect, resolution);
    let labels_vec: Vec<MapLabel> = (0..resolution * resolution)
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = (i % resolution, i / resolution);
            let map = CubicMap::new(lambda, proto.cell_center(ix, iy));
            // The multiplier guard ran above; per-cell classification
            // cannot fail.
            classify(&map, params).map(|c| c.label).unwrap_or(MapLabel::Unresolved)
        })
        .collect();
    let labels = Grid::from_vec(rect, resolution, labels_vec);

    let pr_mask = Grid::from_vec(
        rect,
        resolution,
        labels
            .as_slice()
            .iter()
            .map(|&l| l == MapLabel::PotentiallyRenormalizable)
            .collect(),
    );
    let (components, _count) = crate::raster::components4(&pr_mask);

    let mut unbounded = BTreeSet::new();
    let n = resolution;
    for i in 0..n {
        for &(ix, iy) in &[(i, 0), (i, n - 1), (0, i), (n - 1, i)] {
            let id = *components.get(ix, iy);
            if id != 0 {
                unbounded.insert(id);
            }
        }
    }

    let mut counts = LabelCounts::default();
    for &l in labels.as_slice() {
        match l {
            MapLabel::JuliaDisconnected => counts.julia_disconnected += 1,
            MapLabel::Phd3Proxy => counts.phd3_proxy += 1,
            MapLabel::PotentiallyRenormalizable => counts.potentially_renormalizable += 1,
            MapLabel::Unresolved => counts.unresolved += 1,
        }
    }

    Ok(SliceRaster {
        lambda,
        labels,
        components,
        unbounded,
        counts,
    })
}

/// Look up the component of the cell containing b.
pub fn component_of(slice: &SliceRaster, b: Complex64) -> Result<ComponentRef> {
    let Some((ix, iy)) = slice.labels.locate(b) else {
        return Err(Error::WindowError(format!("{b} outside the slice window")));
    };
    match slice.labels.get(ix, iy) {
        MapLabel::PotentiallyRenormalizable => {
            let id = *slice.components.get(ix, iy);
            if slice.unbounded.contains(&id) {
                Ok(ComponentRef::Unbounded)
            } else {
                Ok(ComponentRef::BoundedId(id))
            }
        }
        _ => Ok(ComponentRef::NotApplicable),
    }
}

/// Outcome of running the full pipeline on one sampled parameter.
#[derive(Clone, Debug)]
pub struct SampleOutcome {
    pub b: Complex64,
    pub status: RenormStatus,
    /// Set when the pipeline errored out before producing a verdict.
    pub note: Option<String>,
    pub captured: Option<bool>,
}

/// Report of the unbounded-component verification run.
#[derive(Clone, Debug)]
pub struct TheoremAReport {
    pub lambda: Complex64,
    pub samples: Vec<SampleOutcome>,
    pub immediately_renormalizable: usize,
    pub undetermined: usize,
    pub not_renormalizable: usize,
}

/// Sample cells of the unbounded component and run the preimage-tree and
/// verdict pipeline on each. Any `NotRenormalizable` outcome is an
/// implementation bug, not mathematics, and comes back as an error.
pub fn verify_theorem_a(
    slice: &SliceRaster,
    n_samples: usize,
    params: &Params,
) -> Result<TheoremAReport> {
    let res = slice.labels.res;
    let cells: Vec<(usize, usize)> = (0..res)
        .flat_map(|iy| (0..res).map(move |ix| (ix, iy)))
        .filter(|&(ix, iy)| slice.unbounded.contains(slice.components.get(ix, iy)))
        .collect();
    if cells.is_empty() {
        return Err(Error::EmptyUnboundedComponent);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let take = n_samples.min(cells.len());
    let picked = rand::seq::index::sample(&mut rng, cells.len(), take);
    let chosen: Vec<Complex64> = picked
        .iter()
        .map(|i| {
            let (ix, iy) = cells[i];
            slice.labels.cell_center(ix, iy)
        })
        .collect();

    let outcomes: Vec<SampleOutcome> = chosen
        .par_iter()
        .map(|&b| {
            let map = CubicMap::new(slice.lambda, b);
            match analyze(&map, params) {
                Ok(a) => SampleOutcome {
                    b,
                    status: a.reported_status(),
                    note: a.domain_failure.clone(),
                    captured: a.capture.map(|c| c.captured),
                },
                Err(e) => SampleOutcome {
                    b,
                    status: RenormStatus::Undetermined,
                    note: Some(e.to_string()),
                    captured: None,
                },
            }
        })
        .collect();

    let mut report = TheoremAReport {
        lambda: slice.lambda,
        immediately_renormalizable: 0,
        undetermined: 0,
        not_renormalizable: 0,
        samples: outcomes,
    };
    for s in &report.samples {
        match s.status {
            RenormStatus::ImmediatelyRenormalizable => report.immediately_renormalizable += 1,
            RenormStatus::Undetermined => report.undetermined += 1,
            RenormStatus::NotRenormalizable => report.not_renormalizable += 1,
        }
    }
    if report.not_renormalizable > 0 {
        return Err(Error::TheoremViolation(format!(
            "{} unbounded-component samples came back NotRenormalizable at lambda = {}",
            report.not_renormalizable, slice.lambda
        )));
    }
    Ok(report)
}

/// Convenience wrapper returning the analysis for a single map; used by the
/// command-line front end.
pub fn analyze_map(map: &CubicMap, params: &Params) -> Result<Analysis> {
    analyze(map, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tiny_params() -> Params {
        Params {
            orbit_budget: 2000,
            ..Params::desk_small()
        }
    }

    #[test]
    fn slice_center_label_for_cubing_family() {
        let params = tiny_params();
        let rect = Rect::square(c(0.0, 0.0), 3.0);
        let slice = render_slice(c(0.0, 0.0), rect, 33, &params).unwrap();
        // Odd resolution puts a cell center exactly at b = 0 (pure cubing).
        let (ix, iy) = slice.labels.locate(c(0.0, 0.0)).unwrap();
        assert_eq!(*slice.labels.get(ix, iy), MapLabel::Phd3Proxy);
    }

    #[test]
    fn slice_is_exactly_symmetric() {
        let params = tiny_params();
        let rect = Rect::square(c(0.0, 0.0), 6.0);
        let slice = render_slice(c(0.5, 0.0), rect, 64, &params).unwrap();
        let n = 64;
        for iy in 0..n {
            for ix in 0..n {
                assert_eq!(
                    slice.labels.get(ix, iy),
                    slice.labels.get(n - 1 - ix, n - 1 - iy),
                    "labels must be symmetric under b -> -b"
                );
            }
        }
    }

    #[test]
    fn boundary_cells_are_unbounded() {
        let params = tiny_params();
        let rect = Rect::square(c(0.0, 0.0), 8.0);
        let slice = render_slice(c(0.5, 0.0), rect, 64, &params).unwrap();
        // A far-out b is escape-dominated, potentially renormalizable, and
        // connected to the border.
        let b = slice.labels.cell_center(1, 1);
        assert_eq!(*slice.labels.get(1, 1), MapLabel::PotentiallyRenormalizable);
        assert_eq!(component_of(&slice, b).unwrap(), ComponentRef::Unbounded);
        // The center region is the hyperbolic-domain proxy.
        let mid = slice.labels.locate(c(0.0, 0.0)).unwrap();
        let b0 = slice.labels.cell_center(mid.0, mid.1);
        assert_eq!(component_of(&slice, b0).unwrap(), ComponentRef::NotApplicable);
    }

    #[test]
    fn component_lookup_outside_window_errors() {
        let params = tiny_params();
        let rect = Rect::square(c(0.0, 0.0), 2.0);
        let slice = render_slice(c(0.0, 0.0), rect, 16, &params).unwrap();
        assert!(component_of(&slice, c(10.0, 0.0)).is_err());
    }
}
