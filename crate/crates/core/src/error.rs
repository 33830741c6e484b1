//! Error type shared across the toolkit.

use crate::classify::MapLabel;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The fixed point 0 is repelling; the toolkit only handles |λ| ≤ 1.
    #[error("multiplier out of scope: |lambda| = {modulus} > 1 (0 must be non-repelling)")]
    OutOfScope { modulus: f64 },

    /// Cubic root solver could not reach the requested residual.
    #[error("preimage solver failed: residual {residual:e} above tolerance {tolerance:e}")]
    SolverFailure { residual: f64, tolerance: f64 },

    /// The map has a double critical point (b² = 3λ).
    #[error("degenerate critical pair: b^2 = 3 lambda")]
    DegenerateCriticalPair,

    /// Both critical points qualify as principal, contradicting the classification.
    #[error("principal critical point contradiction: {0}")]
    PrincipalContradiction(String),

    /// The multiplier-perturbation schedule did not agree on a principal point.
    #[error("principal critical point undetermined: {0}")]
    PrincipalUndetermined(String),

    /// An orbit or raster computation ran out of its iteration budget.
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    /// Parabolic multiplier: the basin raster is not defined (0 sits on the boundary).
    #[error("immediate basin rasterization requires |lambda| < 1")]
    ParabolicBasinUnsupported,

    /// The requested window does not contain the data it must cover.
    #[error("window error: {0}")]
    WindowError(String),

    /// A preimage-tree parent accepted three children; the basin raster is
    /// too coarse or the map is not potentially renormalizable.
    #[error("preimage tree inconsistency: {0}")]
    TreeInconsistency(String),

    /// The map is not potentially renormalizable, so the pipeline does not apply.
    #[error("map is not potentially renormalizable (classified {0:?})")]
    NotPotentiallyRenormalizable(MapLabel),

    /// Depth cutoff leaves too few levels.
    #[error("tree depth {depth} too shallow for cutoff {cutoff} (need depth >= cutoff + 4)")]
    DepthTooShallow { depth: u16, cutoff: u16 },

    #[error("empty point cloud")]
    EmptyCloud,

    /// No nested domain pair satisfied the containment and degree checks.
    #[error("quadratic-like domain construction failed: {0}")]
    ConstructionFailure(String),

    /// The free critical point entered the hull at step n ≤ 1, which the
    /// raster construction forbids.
    #[error("capture invariant violation: entry time n = {n} <= 1")]
    CaptureInvariantViolation { n: u32 },

    /// A sampled unbounded-component map came back NotRenormalizable;
    /// this signals an implementation bug.
    #[error("theorem violation: {0}")]
    TheoremViolation(String),

    #[error("unbounded component is empty in this window; enlarge the window")]
    EmptyUnboundedComponent,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
