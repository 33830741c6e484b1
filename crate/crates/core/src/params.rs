//! Shared pipeline parameters and their defaults.

/// Knobs for the classification / preimage-tree / verdict pipeline.
///
/// The defaults are the desk-scale operating point: orbit convergence at
/// 1e-8, a 10⁴-iteration budget, 1024-cell rasters, tree depth 14 with the
/// shallow levels below 8 discarded, and verdict thresholds of 0.99 on the
/// two-preimage fraction and 0.01 on the forward-invariance defect.
#[derive(Clone, Copy, Debug)]
pub struct Params {
    /// Orbit convergence tolerance toward the fixed point 0.
    pub conv_tol: f64,
    /// Iteration budget per orbit.
    pub orbit_budget: u32,
    /// Cells per axis for immediate-basin rasters.
    pub basin_resolution: usize,
    /// Cells per axis for X-set and domain rasters.
    pub x_resolution: usize,
    /// Preimage tree depth M.
    pub depth: u16,
    /// Lower depth cutoff m for the X approximation.
    pub cutoff: u16,
    /// Sample count for the two-preimage statistic inside a verdict.
    pub verdict_samples: usize,
    /// Minimum fraction of samples with exactly two preimages on X.
    pub two_preimage_min: f64,
    /// Maximum tolerated forward-invariance defect.
    pub defect_max: f64,
    /// Dilation radii (in cells) tried when constructing the outer domain.
    pub dilation_schedule: [usize; 5],
    /// Iteration budget for escape-time rasters.
    pub julia_budget: u32,
    /// Seed for every sampling step; part of the configuration so runs are
    /// reproducible byte for byte.
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            conv_tol: 1e-8,
            orbit_budget: 10_000,
            basin_resolution: 1024,
            x_resolution: 1024,
            depth: 14,
            cutoff: 8,
            verdict_samples: 1000,
            two_preimage_min: 0.99,
            defect_max: 0.01,
            dilation_schedule: [8, 6, 4, 3, 2],
            julia_budget: 2048,
            seed: 0,
        }
    }
}

impl Params {
    /// Reduced-resolution variant for quick tests.
    pub fn desk_small() -> Self {
        Params {
            basin_resolution: 256,
            x_resolution: 256,
            depth: 10,
            cutoff: 6,
            ..Params::default()
        }
    }
}

/// Multipliers within this band of 1 are treated as neutral (|λ| = 1).
pub const NEUTRAL_BAND: f64 = 1e-12;

/// Multipliers below this modulus make ω₁ collide with the fixed point;
/// the pipeline switches to a perturbed-multiplier surrogate.
pub const SUPERATTRACTING_BAND: f64 = 1e-12;

/// Returns an error if |λ| > 1 beyond the neutral band.
pub fn check_multiplier(lambda: num_complex::Complex64) -> crate::error::Result<f64> {
    let modulus = lambda.norm();
    if modulus > 1.0 + NEUTRAL_BAND {
        return Err(crate::error::Error::OutOfScope { modulus });
    }
    Ok(modulus)
}

/// True when λ lies on the unit circle up to the neutral band.
pub fn is_neutral(lambda: num_complex::Complex64) -> bool {
    (lambda.norm() - 1.0).abs() <= NEUTRAL_BAND
}
