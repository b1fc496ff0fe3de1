use helios_core::cosphere::{lift, project, reduced_flow, CospherePoint};
use helios_core::hamiltonian::{hamiltonian, PhasePoint};
use helios_core::integrate::{flow, IntegratorConfig, Scheme};
use helios_core::math::Vec3;
use helios_core::medium::{Domain, MediumKind, RefractiveIndexField};
use helios_core::transport::particle_rng;
use rand::Rng;

fn fisheye() -> RefractiveIndexField {
    RefractiveIndexField::new(
        MediumKind::Fisheye { n0: 2.0, a: 1.0 },
        Domain::new(Vec3::new(-4.0, -4.0, -4.0), Vec3::new(4.0, 4.0, 4.0)).unwrap(),
        1.0,
    )
    .unwrap()
}

const PERIOD: f64 = 2.0 * std::f64::consts::PI;

fn midpoint(dt: f64) -> IntegratorConfig {
    IntegratorConfig::new(Scheme::ImplicitMidpoint, dt).unwrap()
}

fn random_phase_point(seed: u64) -> PhasePoint {
    let mut rng = particle_rng(31, seed);
    let q = Vec3::new(
        2.0 * rng.random::<f64>() - 1.0,
        2.0 * rng.random::<f64>() - 1.0,
        2.0 * rng.random::<f64>() - 1.0,
    );
    let p = Vec3::new(
        rng.random::<f64>() - 0.5,
        rng.random::<f64>() - 0.5,
        rng.random::<f64>() + 0.5,
    );
    PhasePoint::new(q, p)
}

#[test]
fn projection_is_constant_on_momentum_rays() {
    // The quotient coordinates (q, s̄) are unchanged under p → αp; the
    // frequency label scales with the representative (H is homogeneous of
    // degree one), which is why reduced_flow pins it at the canonical lift.
    let f = fisheye();
    for i in 0..100u64 {
        let z = random_phase_point(i);
        let mut rng = particle_rng(32, i);
        let alpha = 0.1 + 9.9 * rng.random::<f64>();
        let a = project(&f, &z).unwrap();
        let b = project(&f, &PhasePoint::new(z.q, z.p * alpha)).unwrap();
        assert_eq!(a.q, b.q);
        assert!((a.s - b.s).norm() <= 1e-12);
        assert!((b.omega - alpha * a.omega).abs() <= 1e-12 * alpha * a.omega);
    }
}

#[test]
fn lift_and_project_are_inverse() {
    let f = fisheye();
    for i in 0..100u64 {
        let z = random_phase_point(i);
        // lift ∘ project recovers the phase point only up to the canonical
        // momentum scale; project ∘ lift is exactly the identity on the
        // reduced space.
        let x = project(&f, &z).unwrap();
        let zl = lift(&f, &x).unwrap();
        let back = project(&f, &zl).unwrap();
        assert_eq!(back.q, x.q);
        assert!((back.s - x.s).norm() <= 1e-12);
        assert!((back.omega - x.omega).abs() <= 1e-12 * x.omega);
        // The lift lands on the dispersion surface: H(lift(x)) = ω.
        assert!((hamiltonian(&f, &zl).unwrap() - x.omega).abs() <= 1e-12 * x.omega);
        // And lifting the projection of a dispersion-surface point is the
        // identity there.
        let on_shell = lift(&f, &project(&f, &zl).unwrap()).unwrap();
        assert!((on_shell.p - zl.p).norm() <= 1e-12 * zl.p.norm());
        assert_eq!(on_shell.q, zl.q);
    }
}

#[test]
fn reduced_path_matches_projected_full_flow() {
    let f = fisheye();
    let x0 = CospherePoint::new(
        Vec3::new(0.5, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        1.0,
    )
    .unwrap();
    let cfg = midpoint(1e-3 * PERIOD);
    let red = reduced_flow(&f, &cfg, &x0, 2.0).unwrap();

    let z0 = lift(&f, &x0).unwrap();
    let full = flow(&f, &cfg, &z0, 2.0).unwrap();
    assert_eq!(red.samples.len(), full.samples.len());
    for (r, s) in red.samples.iter().zip(&full.samples) {
        assert!((r.x.q - s.z.q).norm() <= 1e-10);
        assert!((r.x.s - s.z.p.normalized()).norm() <= 1e-10);
    }
}

#[test]
fn reduced_flow_is_independent_of_the_lift_representative() {
    // Integrate the full dynamics from lifts at three momentum scales and
    // compare the projected paths pointwise.
    let f = fisheye();
    let x0 = CospherePoint::new(
        Vec3::new(0.5, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        1.0,
    )
    .unwrap();
    let cfg = midpoint(1e-3 * PERIOD);
    let base = reduced_flow(&f, &cfg, &x0, 2.0).unwrap();

    let z0 = lift(&f, &x0).unwrap();
    for alpha in [0.5, 7.0] {
        let scaled = PhasePoint::new(z0.q, z0.p * alpha);
        let full = flow(&f, &cfg, &scaled, 2.0).unwrap();
        assert_eq!(full.samples.len(), base.samples.len());
        for (s, b) in full.samples.iter().zip(&base.samples) {
            assert!(
                (s.z.q - b.x.q).norm() <= 1e-9,
                "α = {alpha}: q deviates by {:.3e}",
                (s.z.q - b.x.q).norm()
            );
            assert!(
                (s.z.p.normalized() - b.x.s).norm() <= 1e-9,
                "α = {alpha}: direction deviates"
            );
        }
    }
}

#[test]
fn fisheye_reduced_orbit_closes() {
    let f = fisheye();
    let x0 = CospherePoint::new(
        Vec3::new(0.5, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        2.0,
    )
    .unwrap();
    let res = reduced_flow(&f, &midpoint(5e-5 * PERIOD), &x0, PERIOD).unwrap();
    let last = res.samples.last().unwrap().x;
    let closure = (last.q - x0.q).norm().max((last.s - x0.s).norm());
    assert!(closure <= 1e-6, "reduced closure {closure:.3e}");
}

#[test]
fn frequency_is_conserved_along_the_reduced_flow() {
    // ω is the Casimir of the reduction; at a fine step the midpoint
    // oscillation sits well below the 1e-8 conservation bound.
    let f = fisheye();
    let x0 = CospherePoint::new(
        Vec3::new(0.5, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        3.5,
    )
    .unwrap();
    let res = reduced_flow(&f, &midpoint(1e-5 * PERIOD), &x0, 0.2 * PERIOD).unwrap();
    let mut worst: f64 = 0.0;
    for s in &res.samples {
        worst = worst.max((s.x.omega - x0.omega).abs() / x0.omega);
    }
    assert!(worst <= 1e-8, "max relative ω drift {worst:.3e}");
}

#[test]
fn homogeneous_reduced_flow_keeps_the_direction_fixed() {
    let f = RefractiveIndexField::new(
        MediumKind::Homogeneous { n0: 1.0 },
        Domain::new(Vec3::new(-10.0, -10.0, -10.0), Vec3::new(10.0, 10.0, 10.0)).unwrap(),
        1.0,
    )
    .unwrap();
    let s = Vec3::new(0.6, 0.0, 0.8);
    let x0 = CospherePoint::new(Vec3::ZERO, s, 1.7).unwrap();
    let res = reduced_flow(&f, &midpoint(0.05), &x0, 3.0).unwrap();
    for sample in &res.samples {
        assert!((sample.x.s - s).norm() <= 1e-13);
        assert!((sample.x.q - s * sample.t).norm() <= 1e-12);
        assert!((sample.x.omega - 1.7).abs() <= 1e-13);
    }
}

#[test]
fn invalid_cosphere_points_are_rejected() {
    assert!(CospherePoint::new(Vec3::ZERO, Vec3::new(0.0, 0.0, 0.9), 1.0).is_err());
    assert!(CospherePoint::new(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), 0.0).is_err());
    assert!(CospherePoint::new(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), -2.0).is_err());
}
