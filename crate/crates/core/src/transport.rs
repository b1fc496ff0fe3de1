//! Liouville transport of the phase-space light energy density.
//!
//! The flow is canonical, hence volume-preserving, so a density's
//! coefficient function 𝓛(q, p) transports by plain composition with the
//! backward flow (method of characteristics):
//!
//!   𝓛_t(z) = 𝓛₀(η₋ₜ(z)).
//!
//! Equivalently, 𝓛 is constant along every ray — the phase-space statement
//! that the classical literature knows as "conservation of radiance along
//! a ray". Two representations are supported: closures for analytic
//! densities and weighted particle ensembles, which advect by the same
//! flow with weights untouched.

use crate::error::HeliosError;
use crate::hamiltonian::{hamiltonian, PhasePoint};
use crate::integrate::{flow, IntegratorConfig};
use crate::math::{equal_area_directions, gauss_legendre_on, pairwise_sum, Vec3};
use crate::medium::RefractiveIndexField;
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// An analytic phase-space energy density 𝓛(q, p) ≥ 0 (J·s³/m⁶).
#[derive(Clone)]
pub struct AnalyticDensity {
    f: Arc<dyn Fn(Vec3, Vec3) -> f64 + Send + Sync>,
}

impl AnalyticDensity {
    pub fn new(f: impl Fn(Vec3, Vec3) -> f64 + Send + Sync + 'static) -> Self {
        AnalyticDensity { f: Arc::new(f) }
    }

    pub fn eval(&self, q: Vec3, p: Vec3) -> f64 {
        (self.f)(q, p)
    }

    pub fn eval_z(&self, z: &PhasePoint) -> f64 {
        (self.f)(z.q, z.p)
    }
}

impl std::fmt::Debug for AnalyticDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AnalyticDensity(closure)")
    }
}

/// One energy-carrying sample of an ensemble.
#[derive(Debug, Clone, Copy)]
pub struct Particle {
    pub z: PhasePoint,
    /// Energy weight (J); never mutated by transport.
    pub w: f64,
    /// Set when the particle has left the domain; its phase point is then
    /// frozen at the exit.
    pub exited: bool,
}

/// A weighted particle representation of ℓ.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub particles: Vec<Particle>,
    pub seed: u64,
}

impl Ensemble {
    pub fn total_energy(&self) -> f64 {
        let w: Vec<f64> = self.particles.iter().map(|p| p.w).collect();
        pairwise_sum(&w)
    }

    pub fn escaped_energy(&self) -> f64 {
        let w: Vec<f64> = self
            .particles
            .iter()
            .map(|p| if p.exited { p.w } else { 0.0 })
            .collect();
        pairwise_sum(&w)
    }
}

/// Independent RNG stream for one particle: results do not depend on how
/// particles are batched across threads.
pub fn particle_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard normal via Box–Muller.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Uniform direction on S².
pub fn uniform_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    let z = 1.0 - 2.0 * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Isotropic monochromatic point burst: n equal-weight particles at q0
/// with uniformly random directions and ‖p‖ = n(q0)·ω/c.
pub fn sample_isotropic_burst(
    field: &RefractiveIndexField,
    q0: Vec3,
    omega: f64,
    n_particles: usize,
    seed: u64,
    total_energy: f64,
) -> Result<Ensemble> {
    if !(omega > 0.0) {
        return Err(HeliosError::NonPositiveFrequency(omega));
    }
    let pnorm = field.eval_n(q0)? * omega / field.c;
    let w = total_energy / n_particles as f64;
    let particles = (0..n_particles)
        .map(|i| {
            let mut rng = particle_rng(seed, i as u64);
            Particle {
                z: PhasePoint::new(q0, uniform_direction(&mut rng) * pnorm),
                w,
                exited: false,
            }
        })
        .collect();
    Ok(Ensemble {
        particles,
        seed,
    })
}

/// Gaussian phase-space cloud: q ~ N(q0, σ_q²I), p ~ N(p0, σ_p²I),
/// equal weights. Positions falling outside the domain are resampled.
pub fn sample_gaussian_cloud(
    field: &RefractiveIndexField,
    q0: Vec3,
    sigma_q: f64,
    p0: Vec3,
    sigma_p: f64,
    n_particles: usize,
    seed: u64,
    total_energy: f64,
) -> Result<Ensemble> {
    let w = total_energy / n_particles as f64;
    let mut particles = Vec::with_capacity(n_particles);
    for i in 0..n_particles {
        let mut rng = particle_rng(seed, i as u64);
        let mut q;
        loop {
            q = q0
                + Vec3::new(
                    sigma_q * normal(&mut rng),
                    sigma_q * normal(&mut rng),
                    sigma_q * normal(&mut rng),
                );
            if field.domain().contains(q) {
                break;
            }
        }
        let p = p0
            + Vec3::new(
                sigma_p * normal(&mut rng),
                sigma_p * normal(&mut rng),
                sigma_p * normal(&mut rng),
            );
        particles.push(Particle {
            z: PhasePoint::new(q, p),
            w,
            exited: false,
        });
    }
    Ok(Ensemble { particles, seed })
}

/// Value of the transported density at (t, z), with the vacuum-boundary
/// flag: characteristics that leave the domain before reaching t = 0
/// carry no energy.
#[derive(Debug, Clone, Copy)]
pub struct Transported {
    pub value: f64,
    /// True when the backward characteristic exited the domain and the
    /// vacuum convention (value 0) was applied.
    pub escaped: bool,
}

/// Evaluate 𝓛_t(z) = 𝓛₀(η₋ₜ(z)) by integrating the characteristic
/// backward. The integrator is time-symmetric, so evaluating along a
/// forward-computed trajectory reverses its steps almost exactly.
pub fn evaluate_transported(
    field: &RefractiveIndexField,
    cfg: &IntegratorConfig,
    initial: &AnalyticDensity,
    t: f64,
    z: &PhasePoint,
) -> Result<Transported> {
    if t < 0.0 {
        return Err(HeliosError::Config(format!(
            "transported-density time must be nonnegative, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(Transported {
            value: initial.eval_z(z),
            escaped: false,
        });
    }
    if !field.domain().contains(z.q) {
        return Ok(Transported {
            value: 0.0,
            escaped: true,
        });
    }
    let back = flow_on_negative_branch(field, cfg, z, t)?;
    match back {
        Some(z_src) => Ok(Transported {
            value: initial.eval_z(&z_src),
            escaped: false,
        }),
        None => Ok(Transported {
            value: 0.0,
            escaped: true,
        }),
    }
}

/// Backward flow endpoint, or None if the characteristic exits the domain.
fn flow_on_negative_branch(
    field: &RefractiveIndexField,
    cfg: &IntegratorConfig,
    z: &PhasePoint,
    t: f64,
) -> Result<Option<PhasePoint>> {
    use crate::hamiltonian::Branch;
    let r = crate::integrate::flow_on_branch(field, cfg, z, t, Branch::Negative)?;
    if r.exit_event.is_some() {
        return Ok(None);
    }
    Ok(Some(r.final_sample().z))
}

/// 𝓛 sampled along one trajectory for the conservation report.
#[derive(Debug, Clone, Copy)]
pub struct CasimirSample {
    pub z0: PhasePoint,
    /// 𝓛₀ at the launch point.
    pub before: f64,
    /// Transported density at the advected point — equal to `before` up to
    /// integrator tolerance.
    pub after: f64,
}

/// Bookkeeping produced by `transport_ensemble`.
#[derive(Debug, Clone)]
pub struct TransportReport {
    pub total_energy_before: f64,
    pub total_energy_after: f64,
    pub escaped_energy: f64,
    pub casimir_samples: Vec<CasimirSample>,
    /// max |after − before| / max(before, floor) over the samples.
    pub max_casimir_drift: f64,
}

/// Advect every particle by the flow over [0, T]. Weights are never
/// touched (each particle carries a fixed parcel of energy); particles
/// that reach the boundary are frozen at the exit point and flagged, with
/// their energy bookkept as escaped. When `reference` is given, 𝓛 is
/// sampled along up to 100 non-exited trajectories and the report records
/// the largest relative drift.
pub fn transport_ensemble(
    field: &RefractiveIndexField,
    cfg: &IntegratorConfig,
    ensemble: &Ensemble,
    t_end: f64,
    reference: Option<&AnalyticDensity>,
) -> Result<(Ensemble, TransportReport)> {
    let total_before = ensemble.total_energy();
    let advected: Vec<Result<Particle>> = advect_particles(field, cfg, &ensemble.particles, t_end);
    let mut particles = Vec::with_capacity(advected.len());
    for p in advected {
        particles.push(p?);
    }
    let out = Ensemble {
        particles,
        seed: ensemble.seed,
    };
    let total_after = out.total_energy();
    let escaped = out.escaped_energy();

    let mut casimir_samples = Vec::new();
    let mut max_drift = 0.0_f64;
    if let Some(dens) = reference {
        let floor = 1e-300;
        for (p0, p1) in ensemble
            .particles
            .iter()
            .zip(out.particles.iter())
            .filter(|(p0, p1)| !p0.exited && !p1.exited)
            .take(100)
        {
            let before = dens.eval_z(&p0.z);
            let after = evaluate_transported(field, cfg, dens, t_end, &p1.z)?.value;
            let drift = (after - before).abs() / before.abs().max(floor);
            max_drift = max_drift.max(drift);
            casimir_samples.push(CasimirSample {
                z0: p0.z,
                before,
                after,
            });
        }
    }
    Ok((
        out,
        TransportReport {
            total_energy_before: total_before,
            total_energy_after: total_after,
            escaped_energy: escaped,
            casimir_samples,
            max_casimir_drift: max_drift,
        },
    ))
}

fn advect_one(
    field: &RefractiveIndexField,
    cfg: &IntegratorConfig,
    p: &Particle,
    t_end: f64,
) -> Result<Particle> {
    if p.exited {
        return Ok(*p);
    }
    let r = flow(field, cfg, &p.z, t_end)?;
    Ok(Particle {
        z: r.final_sample().z,
        w: p.w,
        exited: r.exit_event.is_some(),
    })
}

#[cfg(feature = "parallel")]
fn advect_particles(
    field: &RefractiveIndexField,
    cfg: &IntegratorConfig,
    particles: &[Particle],
    t_end: f64,
) -> Vec<Result<Particle>> {
    particles
        .par_iter()
        .map(|p| advect_one(field, cfg, p, t_end))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn advect_particles(
    field: &RefractiveIndexField,
    cfg: &IntegratorConfig,
    particles: &[Particle],
    t_end: f64,
) -> Vec<Result<Particle>> {
    particles
        .iter()
        .map(|p| advect_one(field, cfg, p, t_end))
        .collect()
}

/// Product quadrature over one momentum fiber: equal-area directions ×
/// Gauss–Legendre in the radial coordinate ‖p‖ on [0, p_max].
#[derive(Debug, Clone, Copy)]
pub struct FiberQuadrature {
    /// Polar bands of the direction grid; 2·n_dir azimuth cells are used.
    pub n_dir: usize,
    /// Radial Gauss–Legendre nodes.
    pub n_rad: usize,
    /// Truncation radius of the fiber integral.
    pub p_max: f64,
}

impl FiberQuadrature {
    pub fn new(n_dir: usize, n_rad: usize, p_max: f64) -> Result<Self> {
        if n_dir == 0 || n_rad == 0 || !(p_max > 0.0) {
            return Err(HeliosError::Config(
                "fiber quadrature needs n_dir ≥ 1, n_rad ≥ 1, p_max > 0".into(),
            ));
        }
        Ok(FiberQuadrature { n_dir, n_rad, p_max })
    }
}

/// Fiber integral with its truncation diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct FiberIntegral {
    pub value: f64,
    /// Fraction of |value| contributed by the outermost radial node — a
    /// proxy for mass at the truncation shell.
    pub boundary_fraction: f64,
    /// Set when boundary_fraction > 1e-6: p_max is too small for this
    /// density and the result is untrustworthy.
    pub truncated: bool,
}

/// Electromagnetic energy density 𝓔(q) = ∫ 𝓛(q, p) dp (J/m³) by product
/// quadrature in spherical momentum coordinates.
pub fn fiber_integrate_energy(
    density: &AnalyticDensity,
    q: Vec3,
    spec: &FiberQuadrature,
) -> Result<FiberIntegral> {
    fiber_integral_weighted(density, q, spec, |_p| 1.0)
}

/// As `fiber_integrate_energy` with an extra scalar factor g(p) in the
/// integrand — shared by the field-Hamiltonian quadrature.
fn fiber_integral_weighted(
    density: &AnalyticDensity,
    q: Vec3,
    spec: &FiberQuadrature,
    g: impl Fn(Vec3) -> f64,
) -> Result<FiberIntegral> {
    let dirs = equal_area_directions(spec.n_dir, 2 * spec.n_dir);
    let (nodes, weights) = gauss_legendre_on(spec.n_rad, 0.0, spec.p_max);
    let mut terms = Vec::with_capacity(dirs.len() * nodes.len());
    let mut shell_terms = Vec::with_capacity(dirs.len());
    let last = nodes.len() - 1;
    for (s, w_dir) in &dirs {
        for (k, (&r, &w_r)) in nodes.iter().zip(weights.iter()).enumerate() {
            let p = *s * r;
            let term = w_dir * w_r * r * r * density.eval(q, p) * g(p);
            terms.push(term);
            if k == last {
                shell_terms.push(term);
            }
        }
    }
    let value = pairwise_sum(&terms);
    let shell = pairwise_sum(&shell_terms);
    let boundary_fraction = if value.abs() > 0.0 {
        (shell / value).abs()
    } else {
        0.0
    };
    Ok(FiberIntegral {
        value,
        boundary_fraction,
        truncated: boundary_fraction > 1e-6,
    })
}

/// Phase-space quadrature spec for analytic field-Hamiltonian evaluation:
/// Gauss–Legendre per position axis over a box, times a fiber quadrature.
#[derive(Debug, Clone, Copy)]
pub struct PhaseSpaceQuadrature {
    pub q_min: Vec3,
    pub q_max: Vec3,
    pub n_q: usize,
    pub fiber: FiberQuadrature,
}

/// Total field energy functional 𝓗[ℓ] = ∫ 𝓛(q,p)·H(q,p) dq dp.
///
/// H is an angular frequency, so with 𝓛 in J·s³/m⁶ the value carries
/// J·rad/s; we report the bare number (no ℏ is introduced). For an
/// ensemble this is Σᵢ wᵢ·H(zᵢ), conserved by the transport because each
/// particle conserves H and weights never change.
pub fn field_hamiltonian_ensemble(
    field: &RefractiveIndexField,
    ensemble: &Ensemble,
) -> Result<f64> {
    let mut terms = Vec::with_capacity(ensemble.particles.len());
    for p in &ensemble.particles {
        terms.push(p.w * hamiltonian(field, &p.z)?);
    }
    Ok(pairwise_sum(&terms))
}

/// Analytic-density counterpart of `field_hamiltonian_ensemble`.
pub fn field_hamiltonian_analytic(
    field: &RefractiveIndexField,
    density: &AnalyticDensity,
    spec: &PhaseSpaceQuadrature,
) -> Result<f64> {
    let gx = gauss_legendre_on(spec.n_q, spec.q_min.0[0], spec.q_max.0[0]);
    let gy = gauss_legendre_on(spec.n_q, spec.q_min.0[1], spec.q_max.0[1]);
    let gz = gauss_legendre_on(spec.n_q, spec.q_min.0[2], spec.q_max.0[2]);
    let mut terms = Vec::with_capacity(spec.n_q * spec.n_q * spec.n_q);
    for (&x, &wx) in gx.0.iter().zip(gx.1.iter()) {
        for (&y, &wy) in gy.0.iter().zip(gy.1.iter()) {
            for (&z, &wz) in gz.0.iter().zip(gz.1.iter()) {
                let q = Vec3::new(x, y, z);
                let n = field.eval_n(q)?;
                let c = field.c;
                let fiber = fiber_integral_weighted(density, q, &spec.fiber, |p| {
                    c * p.norm() / n
                })?;
                terms.push(wx * wy * wz * fiber.value);
            }
        }
    }
    Ok(pairwise_sum(&terms))
}

/// Monte Carlo mass of the transported density over a phase-space box:
/// mean of 𝓛_t at uniform samples times the box volume. Returns the
/// estimate and its standard error. Deterministic for a fixed seed,
/// independent of thread count.
pub fn monte_carlo_transported_mass(
    field: &RefractiveIndexField,
    cfg: &IntegratorConfig,
    density: &AnalyticDensity,
    q_bounds: (Vec3, Vec3),
    p_bounds: (Vec3, Vec3),
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut volume = 1.0;
    for i in 0..3 {
        volume *= q_bounds.1 .0[i] - q_bounds.0 .0[i];
        volume *= p_bounds.1 .0[i] - p_bounds.0 .0[i];
    }
    if !(volume > 0.0) {
        return Err(HeliosError::Config("sampling box must have positive volume".into()));
    }
    let sample_value = |i: usize| -> Result<f64> {
        let mut rng = particle_rng(seed, i as u64);
        let mut coord = [0.0; 6];
        for (axis, c) in coord.iter_mut().enumerate().take(3) {
            *c = q_bounds.0 .0[axis]
                + (q_bounds.1 .0[axis] - q_bounds.0 .0[axis]) * rng.random::<f64>();
        }
        for axis in 0..3 {
            coord[3 + axis] = p_bounds.0 .0[axis]
                + (p_bounds.1 .0[axis] - p_bounds.0 .0[axis]) * rng.random::<f64>();
        }
        let z = PhasePoint::from_array(coord);
        Ok(evaluate_transported(field, cfg, density, t, &z)?.value)
    };
    let values = collect_samples(n_samples, sample_value)?;
    let mean = pairwise_sum(&values) / n_samples as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n_samples as f64 - 1.0);
    let stderr = (var / n_samples as f64).sqrt() * volume;
    Ok((mean * volume, stderr))
}

#[cfg(feature = "parallel")]
fn collect_samples(
    n: usize,
    f: impl Fn(usize) -> Result<f64> + Send + Sync,
) -> Result<Vec<f64>> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn collect_samples(n: usize, f: impl Fn(usize) -> Result<f64>) -> Result<Vec<f64>> {
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::Scheme;
    use crate::medium::{Domain, MediumKind};

    fn vacuum() -> RefractiveIndexField {
        RefractiveIndexField::new(
            MediumKind::Homogeneous { n0: 1.0 },
            Domain::new(Vec3::new(-10.0, -10.0, -10.0), Vec3::new(10.0, 10.0, 10.0)).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn transported_value_at_t0_is_the_initial_density() {
        let f = vacuum();
        let cfg = IntegratorConfig::new(Scheme::ImplicitMidpoint, 0.1).unwrap();
        let dens = AnalyticDensity::new(|q, p| (-q.norm_sq() - p.norm_sq()).exp());
        let z = PhasePoint::new(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0));
        let got = evaluate_transported(&f, &cfg, &dens, 0.0, &z).unwrap();
        assert_eq!(got.value, dens.eval_z(&z));
        assert!(!got.escaped);
    }

    #[test]
    fn escaped_characteristics_carry_zero() {
        let f = vacuum();
        let cfg = IntegratorConfig::new(Scheme::ImplicitMidpoint, 0.5).unwrap();
        let dens = AnalyticDensity::new(|_, _| 1.0);
        // Backward characteristic from x = -9.5 moving in +x leaves
        // through x_min within one time unit.
        let z = PhasePoint::new(Vec3::new(-9.5, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0));
        let got = evaluate_transported(&f, &cfg, &dens, 3.0, &z).unwrap();
        assert_eq!(got.value, 0.0);
        assert!(got.escaped);
    }

    #[test]
    fn empty_ensemble_transports_to_empty() {
        let f = vacuum();
        let cfg = IntegratorConfig::new(Scheme::ImplicitMidpoint, 0.1).unwrap();
        let e = Ensemble {
            particles: vec![],
            seed: 7,
        };
        let (out, report) = transport_ensemble(&f, &cfg, &e, 1.0, None).unwrap();
        assert!(out.particles.is_empty());
        assert_eq!(report.total_energy_before, 0.0);
        assert_eq!(report.total_energy_after, 0.0);
        assert_eq!(report.escaped_energy, 0.0);
    }

    #[test]
    fn single_particle_advects_with_weight_untouched() {
        let f = vacuum();
        let cfg = IntegratorConfig::new(Scheme::ImplicitMidpoint, 0.25).unwrap();
        let e = Ensemble {
            particles: vec![Particle {
                z: PhasePoint::new(Vec3::ZERO, Vec3::new(2.0, 0.0, 0.0)),
                w: 0.125,
                exited: false,
            }],
            seed: 1,
        };
        let (out, report) = transport_ensemble(&f, &cfg, &e, 1.0, None).unwrap();
        let p = &out.particles[0];
        assert!((p.z.q - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert_eq!(p.w, 0.125);
        assert!(!p.exited);
        assert_eq!(report.total_energy_before, report.total_energy_after);
    }

    #[test]
    fn fiber_integral_of_unit_ball_is_its_volume() {
        let dens = AnalyticDensity::new(|_, p| if p.norm() <= 1.0 { 1.0 } else { 0.0 });
        let spec = FiberQuadrature::new(16, 8, 1.0).unwrap();
        let got = fiber_integrate_energy(&dens, Vec3::ZERO, &spec).unwrap();
        let ball = 4.0 * std::f64::consts::PI / 3.0;
        assert!(
            (got.value - ball).abs() < 1e-12,
            "got {} want {}",
            got.value,
            ball
        );
    }

    #[test]
    fn zero_density_integrates_to_zero() {
        let dens = AnalyticDensity::new(|_, _| 0.0);
        let spec = FiberQuadrature::new(8, 8, 2.0).unwrap();
        assert_eq!(
            fiber_integrate_energy(&dens, Vec3::ZERO, &spec).unwrap().value,
            0.0
        );
    }

    #[test]
    fn field_hamiltonian_of_single_particle() {
        let f = vacuum();
        // H = c‖p‖/n = 3 at p = (3,0,0); w = 2 → 𝓗 = 6.
        let e = Ensemble {
            particles: vec![Particle {
                z: PhasePoint::new(Vec3::ZERO, Vec3::new(3.0, 0.0, 0.0)),
                w: 2.0,
                exited: false,
            }],
            seed: 0,
        };
        assert_eq!(field_hamiltonian_ensemble(&f, &e).unwrap(), 6.0);
    }
}
