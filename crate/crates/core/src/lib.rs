//! Structure-preserving simulation of light transport in media with a
//! spatially varying refractive index.
//!
//! Light in a gradient-index medium is modeled as a Hamiltonian system on
//! phase space: a ray is a trajectory of H(q, p) = c‖p‖/n(q), the light
//! energy density 𝓛(q, p) is transported by the flow (Liouville), and
//! classical radiometric quantities (irradiance, radiance, flux through a
//! surface) arise as integrals of 𝓛 against the geometry of the measurement
//! surface. Because H is homogeneous of degree one in p, the dynamics
//! descend to the cosphere bundle (positions × directions) and the
//! frequency ω = H is conserved along rays.
//!
//! The crate keeps the structure of the continuous theory visible in the
//! numerics:
//!
//! * [`medium`] — refractive-index fields n(q) (analytic families and
//!   sampled grids) and their derivatives.
//! * [`hamiltonian`] — H, its vector field, the wave-vector convention
//!   p = (n/c)·ω·s̄, and the equivalent Fermat-metric geodesic form.
//! * [`integrate`] — symplectic implicit-midpoint stepping (plus RK4 and a
//!   high-order reference), flow maps, finite-difference flow Jacobians,
//!   and symplecticity diagnostics.
//! * [`cosphere`] — reduction to (position, direction, frequency) and the
//!   momentum-scaling symmetry.
//! * [`transport`] — Liouville transport of 𝓛 by pullback, particle
//!   ensembles, fiber integration over momentum, and the field Hamiltonian.
//! * [`measure`] — energy through surfaces over time windows, irradiance,
//!   radiance, and both quadrature and particle-crossing estimators.
//! * [`wigner`] — a 1-D discrete Wigner transform used to validate the
//!   phase-space picture against wave propagation in the short-wavelength
//!   regime.
//! * [`scenario`] — the versioned JSON scenario schema shared by the CLI
//!   and the browser demo.
//! * [`validate`] — the named invariant suites behind `helios validate`.
//!
//! Conventions: SI units with a configurable speed of light (tests use
//! c = 1), angular frequency ω internally (ν = ω/2π only at measurement
//! interfaces), and the positive Hamiltonian branch (the negative branch is
//! time reversal and available as a flag on the vector field).

pub mod cosphere;
pub mod error;
pub mod hamiltonian;
pub mod integrate;
pub mod math;
pub mod medium;
pub mod measure;
pub mod scenario;
pub mod transport;
pub mod validate;
pub mod wigner;

pub use error::HeliosError;
pub use hamiltonian::PhasePoint;
pub use math::Vec3;
pub use medium::RefractiveIndexField;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, HeliosError>;

/// Resolve the worker-thread count for parallel sections: an explicit
/// request wins, then the `HELIOS_THREADS` environment variable, then the
/// machine's available parallelism.
pub fn resolve_threads(requested: Option<usize>) -> usize {
    if let Some(n) = requested {
        return n.max(1);
    }
    if let Ok(v) = std::env::var("HELIOS_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
