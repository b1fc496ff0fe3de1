use std::f64::consts::PI;

use helios_core::error::HeliosError;
use helios_core::hamiltonian::PhasePoint;
use helios_core::integrate::{IntegratorConfig, Scheme};
use helios_core::math::Vec3;
use helios_core::measure::{
    irradiance, measure_energy, measure_ensemble_crossings, radiance_sample, HemisphereQuadrature,
    MomentumSpec, QuadratureSpec, Surface, TimeDensity,
};
use helios_core::medium::{Domain, MediumKind, RefractiveIndexField};
use helios_core::transport::{
    sample_gaussian_cloud, sample_isotropic_burst, AnalyticDensity, Ensemble, Particle,
};

fn cube(half: f64) -> Domain {
    Domain::new(
        Vec3::new(-half, -half, -half),
        Vec3::new(half, half, half),
    )
    .unwrap()
}

fn homogeneous(n0: f64, c: f64, half: f64) -> RefractiveIndexField {
    RefractiveIndexField::new(MediumKind::Homogeneous { n0 }, cube(half), c).unwrap()
}

fn midpoint(dt: f64) -> IntegratorConfig {
    IntegratorConfig::new(Scheme::ImplicitMidpoint, dt).unwrap()
}

/// Square patch of side `w` centered at the origin, tilted by `theta`
/// about the x-axis so its normal is (0, −sinθ, cosθ).
fn tilted_patch(w: f64, theta: f64) -> Surface {
    let e1 = Vec3::new(w, 0.0, 0.0);
    let e2 = Vec3::new(0.0, w * theta.cos(), w * theta.sin());
    Surface::Rectangle {
        origin: (e1 + e2) * -0.5,
        edge1: e1,
        edge2: e2,
    }
}

#[test]
fn collimated_beam_through_a_tilted_patch_obeys_the_cosine_law() {
    let field = homogeneous(1.0, 1.0, 2.0);
    // Tight momentum Gaussian around p0 = 10 ẑ: a collimated beam along z,
    // uniform across the patch.
    let p0 = Vec3::new(0.0, 0.0, 10.0);
    let sigma_p = 0.1;
    let density = TimeDensity::stationary(AnalyticDensity::new(move |_q, p| {
        (-(p - p0).norm_sq() / (2.0 * sigma_p * sigma_p)).exp()
    }));
    let spec = QuadratureSpec {
        n_time: 2,
        n_area: (8, 8),
        momentum: MomentumSpec::Box {
            center: p0,
            half_width: Vec3::new(0.6, 0.6, 0.6),
            n_nodes: 20,
        },
    };
    let e0 = measure_energy(&field, &density, &tilted_patch(0.8, 0.0), 0.0, 1.0, &spec)
        .unwrap()
        .e;
    assert!(e0 > 0.0);
    for deg in [30.0f64, 60.0, 75.0] {
        let theta = deg.to_radians();
        let e = measure_energy(&field, &density, &tilted_patch(0.8, theta), 0.0, 1.0, &spec)
            .unwrap()
            .e;
        assert!(
            (e / e0 - theta.cos()).abs() <= 1e-3,
            "flux ratio at {deg}°: {} vs cos = {}",
            e / e0,
            theta.cos()
        );
    }
}

#[test]
fn zero_density_measures_zero_everywhere() {
    let field = homogeneous(1.3, 1.0, 5.0);
    let zero = AnalyticDensity::new(|_, _| 0.0);
    let disc = Surface::Disc {
        center: Vec3::ZERO,
        normal: Vec3::new(0.0, 0.0, 1.0),
        radius: 1.0,
    };
    let spec = QuadratureSpec {
        n_time: 3,
        n_area: (4, 6),
        momentum: MomentumSpec::Hemisphere {
            n_polar: 4,
            n_azimuth: 6,
            n_rad: 3,
            p_min: 0.5,
            p_max: 2.0,
        },
    };
    let r = measure_energy(
        &field,
        &TimeDensity::stationary(zero.clone()),
        &disc,
        0.0,
        2.0,
        &spec,
    )
    .unwrap();
    assert_eq!(r.e, 0.0);

    let hemi = HemisphereQuadrature {
        n_polar: 4,
        n_azimuth: 6,
        n_rad: 3,
        p_min: 0.5,
        p_max: 2.0,
    };
    let e = irradiance(&field, &zero, Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), &hemi).unwrap();
    assert_eq!(e, 0.0);

    let r = radiance_sample(&field, &zero, Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), 1.0).unwrap();
    assert_eq!(r, 0.0);
}

#[test]
fn isotropic_shell_irradiance_matches_the_closed_form() {
    // 𝓛 = L on the momentum shell ‖p‖ ∈ [p1, p2]:
    //   irradiance = (c/n) L ∫(s̄·n⃗)⁺ dΩ ∫ r² dr = (c/n) L π (p2³ − p1³)/3.
    // The radial Gauss–Legendre rule is exact for r² and the azimuth ×
    // midpoint-μ grid integrates the cosine exactly, so the quadrature
    // reproduces the closed form to roundoff.
    let (n0, c, level) = (1.3, 1.0, 0.7);
    let field = homogeneous(n0, c, 5.0);
    let (p1, p2) = (1.0, 1.2);
    let shell = AnalyticDensity::new(move |_q, p| {
        let r = p.norm();
        if (p1..=p2).contains(&r) {
            level
        } else {
            0.0
        }
    });
    let hemi = HemisphereQuadrature {
        n_polar: 8,
        n_azimuth: 16,
        n_rad: 4,
        p_min: p1,
        p_max: p2,
    };
    let expect = (c / n0) * level * PI * (p2.powi(3) - p1.powi(3)) / 3.0;
    let got = irradiance(
        &field,
        &shell,
        Vec3::new(0.3, -0.2, 0.1),
        Vec3::new(0.0, 0.0, 1.0),
        &hemi,
    )
    .unwrap();
    assert!(
        (got - expect).abs() <= 1e-12 * expect,
        "shell irradiance {got} vs closed form {expect}"
    );
}

#[test]
fn irradiance_of_an_isotropic_density_is_rotation_invariant() {
    let field = homogeneous(1.2, 1.0, 5.0);
    let dens = AnalyticDensity::new(|_q, p| {
        let r = p.norm();
        (-(r - 1.0) * (r - 1.0) / (2.0 * 0.15 * 0.15)).exp()
    });
    let hemi = HemisphereQuadrature {
        n_polar: 12,
        n_azimuth: 24,
        n_rad: 32,
        p_min: 0.2,
        p_max: 1.8,
    };
    let q = Vec3::new(0.1, 0.4, -0.3);
    let normals = [
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, -1.0, 0.0),
        Vec3::new(1.0, 2.0, -2.0).normalized(),
        Vec3::new(-0.3, 0.7, 0.2).normalized(),
    ];
    let base = irradiance(&field, &dens, q, normals[0], &hemi).unwrap();
    assert!(base > 0.0);
    for n in &normals[1..] {
        let e = irradiance(&field, &dens, q, *n, &hemi).unwrap();
        assert!(
            (e - base).abs() <= 1e-8 * base,
            "irradiance {e} along {n:?} vs {base}"
        );
    }
}

#[test]
fn radiance_integrated_over_solid_angle_and_frequency_reproduces_irradiance() {
    // For isotropic 𝓛 the cosine-weighted hemisphere integral is π, so
    //   ∫ R (s̄·n⃗) dΩ dν = π ∫ R(ν) dν,
    // and the frequency integral maps onto the radial momentum integral
    // through ‖p‖ = 2πν n/c.
    for (n0, c) in [(1.0, 1.0), (1.7, 2.0)] {
        let field = homogeneous(n0, c, 5.0);
        let dens = AnalyticDensity::new(|_q, p| {
            let r = p.norm();
            (-(r - 1.1) * (r - 1.1) / (2.0 * 0.12 * 0.12)).exp()
        });
        let (p1, p2) = (0.5, 1.7);
        let q = Vec3::new(0.2, -0.1, 0.3);

        let hemi = HemisphereQuadrature {
            n_polar: 6,
            n_azimuth: 8,
            n_rad: 48,
            p_min: p1,
            p_max: p2,
        };
        let e_irr = irradiance(&field, &dens, q, Vec3::new(0.0, 0.0, 1.0), &hemi).unwrap();

        let (nu1, nu2) = (c * p1 / (2.0 * PI * n0), c * p2 / (2.0 * PI * n0));
        let (nodes, weights) = helios_core::math::gauss_legendre_on(64, nu1, nu2);
        let dir = Vec3::new(0.6, 0.0, 0.8);
        let mut e_rad = 0.0;
        for (&nu, &w) in nodes.iter().zip(weights.iter()) {
            e_rad += w * radiance_sample(&field, &dens, q, dir, nu).unwrap();
        }
        e_rad *= PI;

        assert!(
            (e_rad - e_irr).abs() <= 1e-6 * e_irr,
            "n0 = {n0}: radiance integral {e_rad} vs irradiance {e_irr}"
        );
    }
}

#[test]
fn radiance_is_constant_along_rays_in_a_homogeneous_medium() {
    let n0 = 1.4;
    let field = homogeneous(n0, 1.0, 10.0);
    // Density built from ray invariants only: the transverse offset
    // q − (q·p̂)p̂ and ‖p‖ are both constant along straight characteristics.
    let dens = AnalyticDensity::new(|q, p| {
        let s = p.normalized();
        let q_perp = q - s * q.dot(s);
        (-q_perp.norm_sq() - (p.norm() - 3.0) * (p.norm() - 3.0)).exp()
    });
    let nu = 0.35;
    let dir = Vec3::new(0.3, 0.8, 0.5).normalized();
    let q0 = Vec3::new(0.1, -0.2, 0.15);
    let pnorm = 2.0 * PI * nu * n0; // c = 1
    let z0 = PhasePoint::new(q0, dir * pnorm);
    let traj = helios_core::integrate::flow(&field, &midpoint(0.05), &z0, 2.0).unwrap();

    let base = radiance_sample(&field, &dens, q0, dir, nu).unwrap();
    assert!(base > 0.0);
    for s in &traj.samples {
        let r = radiance_sample(&field, &dens, s.z.q, dir, nu).unwrap();
        assert!(
            (r - base).abs() <= 1e-8 * base,
            "radiance {r} at t = {} vs {base}",
            s.t
        );
    }
}

#[test]
fn radiance_sample_validates_its_inputs() {
    let field = homogeneous(1.0, 1.0, 5.0);
    let dens = AnalyticDensity::new(|_, _| 1.0);
    assert!(matches!(
        radiance_sample(&field, &dens, Vec3::ZERO, Vec3::new(0.0, 0.0, 2.0), 1.0),
        Err(HeliosError::NonUnitDirection(_))
    ));
    assert!(matches!(
        radiance_sample(&field, &dens, Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), 0.0),
        Err(HeliosError::NonPositiveFrequency(_))
    ));
    assert!(matches!(
        radiance_sample(&field, &dens, Vec3::new(9.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0), 1.0),
        Err(HeliosError::OutOfDomain(_))
    ));
}

#[test]
fn single_perpendicular_crossing_deposits_the_particle_weight() {
    let field = homogeneous(1.0, 1.0, 5.0);
    let disc = Surface::Disc {
        center: Vec3::new(0.0, 0.0, 0.5),
        normal: Vec3::new(0.0, 0.0, 1.0),
        radius: 1.0,
    };
    let along = Particle {
        z: PhasePoint::new(Vec3::ZERO, Vec3::new(0.0, 0.0, 2.0)),
        w: 1.0,
        exited: false,
    };
    // Parallel to the disc plane, never crosses.
    let parallel = Particle {
        z: PhasePoint::new(Vec3::new(0.0, 0.3, 0.2), Vec3::new(1.0, 0.0, 0.0)),
        w: 1.0,
        exited: false,
    };
    // Already outside the domain: frozen, contributes nothing.
    let frozen = Particle {
        z: PhasePoint::new(Vec3::new(0.0, 0.1, 0.0), Vec3::new(0.0, 0.0, 1.0)),
        w: 1.0,
        exited: true,
    };
    let cfg = midpoint(0.25);
    let ens = |p: Particle| Ensemble {
        particles: vec![p],
        seed: 0,
    };

    let r = measure_ensemble_crossings(&field, &cfg, &ens(along), &disc, 0.0, 1.0).unwrap();
    assert_eq!(r.e, 1.0);
    assert_eq!(r.samples_used, 1);

    // Window ending before the crossing at t = 0.5 collects nothing.
    let r = measure_ensemble_crossings(&field, &cfg, &ens(along), &disc, 0.0, 0.4).unwrap();
    assert_eq!(r.e, 0.0);

    let r = measure_ensemble_crossings(&field, &cfg, &ens(parallel), &disc, 0.0, 1.0).unwrap();
    assert_eq!(r.e, 0.0);

    let r = measure_ensemble_crossings(&field, &cfg, &ens(frozen), &disc, 0.0, 1.0).unwrap();
    assert_eq!(r.e, 0.0);

    let r = measure_ensemble_crossings(
        &field,
        &cfg,
        &Ensemble {
            particles: Vec::new(),
            seed: 0,
        },
        &disc,
        0.0,
        1.0,
    )
    .unwrap();
    assert_eq!(r.e, 0.0);
    assert_eq!(r.samples_used, 0);
}

#[test]
fn crossing_deposits_are_exactly_additive_across_windows() {
    // Half-open windows partition the crossing times, and with n a power
    // of two every deposit is an exact binary fraction, so the split must
    // reproduce the full window bit for bit.
    let field = homogeneous(1.0, 1.0, 10.0);
    let n = 4096;
    let ens = sample_gaussian_cloud(
        &field,
        Vec3::ZERO,
        0.4,
        Vec3::new(0.0, 0.0, 3.0),
        0.3,
        n,
        909,
        1.0,
    )
    .unwrap();
    let plane = Surface::Disc {
        center: Vec3::new(0.0, 0.0, 1.0),
        normal: Vec3::new(0.0, 0.0, 1.0),
        radius: 50.0,
    };
    let cfg = midpoint(0.25);
    let whole = measure_ensemble_crossings(&field, &cfg, &ens, &plane, 0.0, 2.0).unwrap();
    let early = measure_ensemble_crossings(&field, &cfg, &ens, &plane, 0.0, 0.9).unwrap();
    let late = measure_ensemble_crossings(&field, &cfg, &ens, &plane, 0.9, 2.0).unwrap();
    assert!(whole.e > 0.5, "most of the cloud should cross: {}", whole.e);
    assert_eq!(
        whole.e,
        early.e + late.e,
        "windows must partition deposits exactly"
    );
    // Deposits are integer multiples of the common weight 1/n.
    let count = whole.e * n as f64;
    assert!((count - count.round()).abs() <= 1e-9);
}

#[test]
fn burst_energy_is_fully_recovered_on_enclosing_spheres() {
    // Every ray from the center crosses an enclosing sphere exactly once,
    // outward, so the deposit equals the emitted energy — independent of
    // the radius.
    let field = homogeneous(1.0, 1.0, 5.0);
    let ens = sample_isotropic_burst(&field, Vec3::ZERO, 1.0, 10_000, 77, 1.0).unwrap();
    let cfg = midpoint(0.25);
    for radius in [0.8, 1.5] {
        let sphere = Surface::Sphere {
            center: Vec3::ZERO,
            radius,
            outward: true,
        };
        let r = measure_ensemble_crossings(&field, &cfg, &ens, &sphere, 0.0, 2.0).unwrap();
        assert_eq!(
            r.e,
            ens.total_energy(),
            "sphere r = {radius} must collect the whole burst"
        );
        assert_eq!(r.samples_used, 10_000);
    }
}

#[test]
fn net_flux_through_a_closed_surface_vanishes() {
    // A sphere that does not contain the source: every ray that enters
    // also leaves, so inward and outward deposits cancel exactly.
    let field = homogeneous(1.0, 1.0, 8.0);
    let ens = sample_isotropic_burst(&field, Vec3::ZERO, 1.0, 4096, 31, 1.0).unwrap();
    let cfg = midpoint(0.25);
    let outward = Surface::Sphere {
        center: Vec3::new(2.5, 0.0, 0.0),
        radius: 1.0,
        outward: true,
    };
    let e_out = measure_ensemble_crossings(&field, &cfg, &ens, &outward, 0.0, 6.0).unwrap();
    let e_in =
        measure_ensemble_crossings(&field, &cfg, &ens, &outward.flipped(), 0.0, 6.0).unwrap();
    assert!(e_out.e > 0.0, "some rays should pierce the sphere");
    assert_eq!(e_out.e, e_in.e, "net signed flux must vanish");
}

/// Transverse graded-index oscillator and a plane the ray repeatedly
/// crosses: x(t) = x₀ cos(Ωt) with Ω = c√κ/n₀, against the plane x = 0.
fn grin_crossing_setup() -> (RefractiveIndexField, Ensemble, Surface) {
    let n0 = 1.6;
    let kappa = 0.3;
    let field = RefractiveIndexField::new(
        MediumKind::ParabolicGrin {
            n0,
            kappa,
            axis: Vec3::new(0.0, 0.0, 1.0),
        },
        Domain::new(Vec3::new(-0.05, -0.05, -14.0), Vec3::new(0.05, 0.05, 14.0)).unwrap(),
        1.0,
    )
    .unwrap();
    let q0 = Vec3::new(1e-3, 0.0, -9.0);
    let p0 = Vec3::new(0.0, 0.0, field.eval_n(q0).unwrap());
    let ens = Ensemble {
        particles: vec![Particle {
            z: PhasePoint::new(q0, p0),
            w: 1.0,
            exited: false,
        }],
        seed: 0,
    };
    let plane = Surface::Rectangle {
        origin: Vec3::new(0.0, -20.0, -20.0),
        edge1: Vec3::new(0.0, 40.0, 0.0),
        edge2: Vec3::new(0.0, 0.0, 40.0),
    };
    (field, ens, plane)
}

#[test]
fn a_step_spanning_several_crossings_is_reported_as_ambiguous() {
    // With dt = 28 ≈ 1.5 transverse periods, one step straddles the plane
    // three times (t ≈ 4.6, 13.8, 22.9) — refuse rather than miscount.
    let (field, ens, plane) = grin_crossing_setup();
    let cfg = IntegratorConfig::new(Scheme::ReferenceHighOrder, 28.0).unwrap();
    let err = measure_ensemble_crossings(&field, &cfg, &ens, &plane, 0.0, 25.0).unwrap_err();
    assert!(
        matches!(err, HeliosError::AmbiguousCrossing { count, .. } if count >= 3),
        "expected an ambiguous-crossing report, got {err:?}"
    );
}

#[test]
fn refining_the_step_resolves_the_ambiguous_crossing() {
    // Same ray and plane with a sane step: the oscillation crosses with
    // p̂·n⃗ > 0 once at 3T/4 (and against the normal at T/4 and 5T/4).
    let (field, ens, plane) = grin_crossing_setup();
    let cfg = midpoint(2.0);
    let with = measure_ensemble_crossings(&field, &cfg, &ens, &plane, 0.0, 25.0).unwrap();
    assert_eq!(with.e, 1.0);
    let against =
        measure_ensemble_crossings(&field, &cfg, &ens, &plane.flipped(), 0.0, 25.0).unwrap();
    assert_eq!(against.e, 2.0);
}

#[test]
fn degenerate_surfaces_and_bad_windows_are_rejected() {
    let field = homogeneous(1.0, 1.0, 5.0);
    let dens = TimeDensity::stationary(AnalyticDensity::new(|_, _| 1.0));
    let spec = QuadratureSpec {
        n_time: 2,
        n_area: (2, 2),
        momentum: MomentumSpec::Hemisphere {
            n_polar: 2,
            n_azimuth: 4,
            n_rad: 2,
            p_min: 0.5,
            p_max: 1.0,
        },
    };

    let bad: Vec<Surface> = vec![
        // Parallel edges span no area.
        Surface::Rectangle {
            origin: Vec3::ZERO,
            edge1: Vec3::new(1.0, 0.0, 0.0),
            edge2: Vec3::new(2.0, 0.0, 0.0),
        },
        Surface::Rectangle {
            origin: Vec3::ZERO,
            edge1: Vec3::ZERO,
            edge2: Vec3::new(0.0, 1.0, 0.0),
        },
        Surface::Disc {
            center: Vec3::ZERO,
            normal: Vec3::new(0.0, 0.0, 1.0),
            radius: 0.0,
        },
        Surface::Sphere {
            center: Vec3::ZERO,
            radius: -1.0,
            outward: true,
        },
    ];
    for s in &bad {
        assert!(
            matches!(
                measure_energy(&field, &dens, s, 0.0, 1.0, &spec),
                Err(HeliosError::DegenerateSurface(_))
            ),
            "surface {s:?} should be rejected"
        );
    }

    // A disc normal that is not unit length is a direction error, not a
    // degeneracy.
    let skewed = Surface::Disc {
        center: Vec3::ZERO,
        normal: Vec3::new(0.0, 0.0, 0.5),
        radius: 1.0,
    };
    assert!(matches!(
        measure_energy(&field, &dens, &skewed, 0.0, 1.0, &spec),
        Err(HeliosError::NonUnitDirection(_))
    ));

    let disc = Surface::Disc {
        center: Vec3::ZERO,
        normal: Vec3::new(0.0, 0.0, 1.0),
        radius: 1.0,
    };
    assert!(measure_energy(&field, &dens, &disc, 1.0, 1.0, &spec).is_err());
    assert!(measure_energy(&field, &dens, &disc, 2.0, 1.0, &spec).is_err());

    let ens = Ensemble {
        particles: Vec::new(),
        seed: 0,
    };
    let cfg = midpoint(0.25);
    assert!(measure_ensemble_crossings(&field, &cfg, &ens, &disc, 1.0, 1.0).is_err());
    assert!(measure_ensemble_crossings(&field, &cfg, &ens, &disc, -0.5, 1.0).is_err());
}
