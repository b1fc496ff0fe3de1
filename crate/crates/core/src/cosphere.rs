//! Reduction to the cosphere bundle: the 5-dimensional space of positions
//! and unit directions that classical radiometry calls "ray space".
//!
//! The Hamiltonian is homogeneous of degree one in p, so the dynamics
//! descends to the quotient by positive rescalings p ↦ αp. We keep the
//! conserved frequency ω as a label on each reduced point — measurements
//! need it — and integrate on the full phase space at a canonical lift,
//! projecting samples back down. Scaling equivariance of the integrator
//! (tested separately) guarantees the result does not depend on the lift.

use crate::error::HeliosError;
use crate::hamiltonian::{hamiltonian, PhasePoint};
use crate::integrate::{flow, ExitEvent, IntegratorConfig};
use crate::math::Vec3;
use crate::medium::RefractiveIndexField;
use crate::Result;
use serde::{Deserialize, Serialize};

/// A point of the reduced ray space: position, unit direction, and the
/// conserved angular frequency of the underlying wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CospherePoint {
    pub q: Vec3,
    /// Unit propagation direction.
    pub s: Vec3,
    /// Angular frequency (rad/s); strictly positive.
    pub omega: f64,
}

impl CospherePoint {
    pub fn new(q: Vec3, s: Vec3, omega: f64) -> Result<Self> {
        let sn = s.norm();
        if (sn - 1.0).abs() > 1e-12 {
            return Err(HeliosError::NonUnitDirection(sn));
        }
        if !(omega > 0.0) {
            return Err(HeliosError::NonPositiveFrequency(omega));
        }
        Ok(CospherePoint { q, s, omega })
    }
}

/// Project a phase point: s̄ = p/‖p‖, ω = H(q, p).
pub fn project(field: &RefractiveIndexField, z: &PhasePoint) -> Result<CospherePoint> {
    let pn = z.p.norm();
    if !(pn > 0.0) || !pn.is_finite() {
        return Err(HeliosError::ZeroMomentum {
            norm: pn,
            floor: 0.0,
        });
    }
    Ok(CospherePoint {
        q: z.q,
        s: z.p / pn,
        omega: hamiltonian(field, z)?,
    })
}

/// Lift back to phase space on the dispersion surface: p = (n(q) ω / c) s̄.
pub fn lift(field: &RefractiveIndexField, x: &CospherePoint) -> Result<PhasePoint> {
    let n = field.eval_n(x.q)?;
    Ok(PhasePoint {
        q: x.q,
        p: x.s * (n * x.omega / field.c),
    })
}

/// One sample of a reduced trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReducedSample {
    pub t: f64,
    pub x: CospherePoint,
}

/// Result of integrating a reduced ray.
#[derive(Debug, Clone)]
pub struct ReducedFlowResult {
    pub samples: Vec<ReducedSample>,
    pub exit_event: Option<ExitEvent>,
}

/// Integrate the reduced dynamics: lift x0 canonically, run the full flow,
/// project every sample. By scaling equivariance the output is independent
/// of the lift's momentum scale.
pub fn reduced_flow(
    field: &RefractiveIndexField,
    cfg: &IntegratorConfig,
    x0: &CospherePoint,
    t_end: f64,
) -> Result<ReducedFlowResult> {
    let z0 = lift(field, x0)?;
    let full = flow(field, cfg, &z0, t_end)?;
    let mut samples = Vec::with_capacity(full.samples.len());
    for s in &full.samples {
        samples.push(ReducedSample {
            t: s.t,
            x: project(field, &s.z)?,
        });
    }
    Ok(ReducedFlowResult {
        samples,
        exit_event: full.exit_event,
    })
}
