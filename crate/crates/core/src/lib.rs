//! Numerical toolkit for quadratic-like dynamics of the cubic family
//! f(z) = λz + bz² + z³.
//!
//! The pieces, bottom up:
//!
//! * [`cubic`] — exact family arithmetic: evaluation, derivatives, critical
//!   points, closed-form preimages, escape bounds, orbit iteration.
//! * [`classify`] — per-map verdicts from critical-orbit fates, the
//!   principal critical point, and the immediate-basin raster.
//! * [`xset`] — backward-orbit levels Z_n of the principal critical point
//!   and the limiting set X they approximate, with its raster diagnostics.
//! * [`renorm`] — the renormalizability verdict, explicit quadratic-like
//!   domain pairs, and capture detection.
//! * [`atlas`] — parameter-slice rasters over b and the unbounded-component
//!   verification run.
//! * [`julia`] — escape-time rasters, used as an independent cross-check.
//! * [`records`] — deterministic text and pixmap output formats.

pub mod atlas;
pub mod classify;
pub mod cubic;
pub mod error;
pub mod julia;
pub mod params;
pub mod pipeline;
pub mod raster;
pub mod records;
pub mod renorm;
pub mod xset;

pub use atlas::{component_of, render_slice, verify_theorem_a, ComponentRef, SliceRaster};
pub use classify::{
    auto_basin, classify, immediate_basin, principal_critical_point, BasinCell, BasinRaster,
    MapClass, MapLabel,
};
pub use cubic::{CriticalPair, CubicMap, OrbitFate, OrbitRecord};
pub use error::{Error, Result};
pub use julia::{bounded_mask, fraction_within, julia_boundary};
pub use params::Params;
pub use pipeline::{analyze, Analysis};
pub use raster::{Grid, Rect};
pub use renorm::{
    build_ql_domains, capture_detect, cardioid_parameter, nu_continuity_check,
    riemann_hurwitz_bound, verdict, CaptureReport, QlDomainPair, RenormStatus, RenormVerdict,
};
pub use xset::{
    build_tree, continuation_map, forward_invariance_defect, is_connected, preimage_count_on_x,
    x_approx, Connectivity, PointCloud, PreimageTree, XApprox,
};

pub use num_complex::Complex64;
