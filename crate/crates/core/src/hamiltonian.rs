//! Phase-space formulation of ray propagation.
//!
//! A ray is a point z = (q, p) in T*ℝ³ evolving under the Hamiltonian
//!
//!   H(q, p) = c ‖p‖ / n(q),
//!
//! whose flow reproduces geometrical optics: q̇ points along p with speed
//! c/n, and ṗ bends the ray toward higher index. H is homogeneous of
//! degree one in p, so the dynamics is frequency-independent (all spectral
//! components of a beam follow the same path) and H itself equals the
//! angular frequency ω of the wave the ray belongs to.

use crate::error::HeliosError;
use crate::math::{Mat3, Mat6, Vec3};
use crate::medium::RefractiveIndexField;
use crate::Result;
use serde::{Deserialize, Serialize};

/// A point of ray phase space: position q and wave-vector-like momentum p
/// (units rad/m; ‖p‖ = n ω / c on the dispersion surface for angular
/// frequency ω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec3,
    pub p: Vec3,
}

impl PhasePoint {
    pub fn new(q: Vec3, p: Vec3) -> Self {
        PhasePoint { q, p }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.q.0[0], self.q.0[1], self.q.0[2], self.p.0[0], self.p.0[1], self.p.0[2],
        ]
    }

    pub fn from_array(z: [f64; 6]) -> Self {
        PhasePoint {
            q: Vec3([z[0], z[1], z[2]]),
            p: Vec3([z[3], z[4], z[5]]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite()
    }
}

/// One record along an integrated trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RaySample {
    pub t: f64,
    pub z: PhasePoint,
    /// Hamiltonian value at this sample (conserved along exact flow).
    pub h: f64,
}

/// Which sign of the dispersion relation the ray lives on. The positive
/// branch (ω = +c‖p‖/n) is forward-propagating light; the negative branch
/// is its time reverse and is exposed only for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    #[default]
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// H(q, p) = c ‖p‖ / n(q).
pub fn hamiltonian(field: &RefractiveIndexField, z: &PhasePoint) -> Result<f64> {
    let n = field.eval_n(z.q)?;
    Ok(field.c * z.p.norm() / n)
}

/// Momentum floor: below this fraction of a reference ‖p‖ the direction
/// p/‖p‖ is numerically meaningless and the dynamics must stop.
pub const MOMENTUM_FLOOR_REL: f64 = 1e-12;

fn checked_momentum_norm(p: Vec3) -> Result<f64> {
    let norm = p.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(HeliosError::ZeroMomentum { norm, floor: 0.0 });
    }
    Ok(norm)
}

/// Hamiltonian vector field X_H(q, p):
///
///   q̇ = (c/n) p/‖p‖,
///   ṗ = (c ‖p‖ / n²) ∇n.
///
/// The `branch` sign multiplies the whole field (time reversal).
pub fn vector_field(
    field: &RefractiveIndexField,
    z: &PhasePoint,
    branch: Branch,
) -> Result<PhasePoint> {
    let n = field.eval_n(z.q)?;
    let grad = field.grad_n(z.q)?;
    let pn = checked_momentum_norm(z.p)?;
    let s = branch.sign();
    Ok(PhasePoint {
        q: z.p * (s * field.c / (n * pn)),
        p: grad * (s * field.c * pn / (n * n)),
    })
}

/// Jacobian DX_H as a 6×6 block matrix (row order q, p):
///
///   ∂q̇/∂q = −(c/n²) p̂ ⊗ ∇n            ∂q̇/∂p = (c/n)(I − p̂p̂ᵀ)/‖p‖
///   ∂ṗ/∂q = c‖p‖(Hess n/n² − 2∇n⊗∇n/n³) ∂ṗ/∂p = (c/n²) ∇n ⊗ p̂
pub fn vector_field_jacobian(
    field: &RefractiveIndexField,
    z: &PhasePoint,
    branch: Branch,
) -> Result<Mat6> {
    let n = field.eval_n(z.q)?;
    let grad = field.grad_n(z.q)?;
    let hess = field.hessian_n(z.q)?;
    let pn = checked_momentum_norm(z.p)?;
    let phat = z.p / pn;
    let c = field.c * branch.sign();

    let dqdq = Mat3::outer(phat, grad).scale(-c / (n * n));
    let dqdp = Mat3::identity()
        .add(&Mat3::outer(phat, phat).scale(-1.0))
        .scale(c / (n * pn));
    let dpdq = hess
        .scale(c * pn / (n * n))
        .add(&Mat3::outer(grad, grad).scale(-2.0 * c * pn / (n * n * n)));
    let dpdp = Mat3::outer(grad, phat).scale(c / (n * n));

    Ok(Mat6::from_blocks(&dqdq, &dqdp, &dpdq, &dpdp))
}

/// Momentum on the positive dispersion branch for a unit direction and a
/// temporal frequency ν (Hz): p = (2πν n(q)/c) s̄.
pub fn wave_vector_from_direction(
    field: &RefractiveIndexField,
    q: Vec3,
    direction: Vec3,
    frequency: f64,
) -> Result<Vec3> {
    let dn = direction.norm();
    if (dn - 1.0).abs() > 1e-9 {
        return Err(HeliosError::NonUnitDirection(dn));
    }
    if !(frequency > 0.0) {
        return Err(HeliosError::NonPositiveFrequency(frequency));
    }
    let n = field.eval_n(q)?;
    Ok(direction * (2.0 * std::f64::consts::PI * frequency * n / field.c))
}

/// Temporal frequency ν (Hz) of a phase point: ν = c‖p‖/(2πn) = H/2π.
pub fn frequency_from_momentum(field: &RefractiveIndexField, z: &PhasePoint) -> Result<f64> {
    Ok(hamiltonian(field, z)? / (2.0 * std::f64::consts::PI))
}

/// Right-hand side of the Fermat geodesic equation in time parametrization:
///
///   q̈ = (‖q̇‖²/n) ∇n − (2/n) (q̇·∇n) q̇.
///
/// With initial speed ‖q̇₀‖ = c/n(q₀) this traces the same path as the
/// Hamiltonian ray, which is what the fermat validation suite checks.
pub fn fermat_geodesic_rhs(field: &RefractiveIndexField, q: Vec3, v: Vec3) -> Result<Vec3> {
    let n = field.eval_n(q)?;
    let grad = field.grad_n(q)?;
    Ok(grad * (v.norm_sq() / n) - v * (2.0 * v.dot(grad) / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{Domain, MediumKind};
    use approx::assert_relative_eq;

    fn fisheye() -> RefractiveIndexField {
        RefractiveIndexField::new(
            MediumKind::Fisheye { n0: 2.0, a: 1.0 },
            Domain::new(Vec3::new(-4.0, -4.0, -4.0), Vec3::new(4.0, 4.0, 4.0)).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let f = fisheye();
        let z = PhasePoint::new(Vec3::new(0.3, -0.2, 0.5), Vec3::new(0.8, 1.1, -0.4));
        let jac = vector_field_jacobian(&f, &z, Branch::Positive).unwrap();
        let h = 1e-6;
        let za = z.to_array();
        for col in 0..6 {
            let mut zp = za;
            let mut zm = za;
            zp[col] += h;
            zm[col] -= h;
            let xp = vector_field(&f, &PhasePoint::from_array(zp), Branch::Positive)
                .unwrap()
                .to_array();
            let xm = vector_field(&f, &PhasePoint::from_array(zm), Branch::Positive)
                .unwrap()
                .to_array();
            for row in 0..6 {
                let fd = (xp[row] - xm[row]) / (2.0 * h);
                assert_relative_eq!(jac.0[row][col], fd, epsilon = 1e-6, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn negative_branch_reverses_the_field() {
        let f = fisheye();
        let z = PhasePoint::new(Vec3::new(0.1, 0.2, 0.0), Vec3::new(1.0, 0.5, 0.25));
        let fwd = vector_field(&f, &z, Branch::Positive).unwrap();
        let rev = vector_field(&f, &z, Branch::Negative).unwrap();
        assert_eq!(fwd.q * -1.0, rev.q);
        assert_eq!(fwd.p * -1.0, rev.p);
    }

    #[test]
    fn zero_momentum_is_rejected() {
        let f = fisheye();
        let z = PhasePoint::new(Vec3::ZERO, Vec3::ZERO);
        assert!(matches!(
            vector_field(&f, &z, Branch::Positive),
            Err(HeliosError::ZeroMomentum { .. })
        ));
    }
}
