//! Error taxonomy for the simulation crate.

use crate::math::Vec3;
use thiserror::Error;

/// Errors produced by the simulation modules.
///
/// Boundary exits during integration are *events*, not errors, and are
/// reported through flow results; `OutOfDomain` appears only when a caller
/// evaluates the medium (or launches a ray) outside its bounding box.
#[derive(Debug, Clone, Error)]
pub enum HeliosError {
    #[error("position ({0:?}) is outside the medium domain")]
    OutOfDomain(Vec3),

    #[error("refractive index not positive: sampled n = {n} at {q:?} (minimum allowed {min})")]
    NonPositiveIndex { q: Vec3, n: f64, min: f64 },

    #[error("zero momentum: ‖p‖ = {norm} is below the admissible floor {floor}")]
    ZeroMomentum { norm: f64, floor: f64 },

    #[error("direction is not unit length: ‖s̄‖ = {0}")]
    NonUnitDirection(f64),

    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),

    #[error("implicit solve diverged after {iters} Newton iterations (residual {residual:.3e})")]
    NewtonDiverged { iters: usize, residual: f64 },

    #[error("a finite-difference probe trajectory left the domain; flow Jacobian undefined here")]
    BoundaryHit,

    #[error("surface is degenerate: {0}")]
    DegenerateSurface(String),

    #[error(
        "ambiguous surface crossing: {count} sign changes within one step at t ≈ {t:.6}; \
         reduce the integrator step"
    )]
    AmbiguousCrossing { t: f64, count: usize },

    #[error("grid length {0} is not a power of two")]
    NonPowerOfTwo(usize),

    #[error("grid too coarse for the requested field: {0}")]
    ResolutionError(String),

    #[error("refractive-index profile not supported by the semiclassical propagator: {0}")]
    UnsupportedProfile(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
