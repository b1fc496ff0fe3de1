use helios_core::math::Vec3;
use helios_core::medium::{
    Domain, GridField, InterpolationOrder, MediumKind, RefractiveIndexField,
};
use helios_core::transport::particle_rng;
use helios_core::HeliosError;
use rand::Rng;

fn cube(half: f64) -> Domain {
    Domain::new(
        Vec3::new(-half, -half, -half),
        Vec3::new(half, half, half),
    )
    .unwrap()
}

fn fisheye() -> RefractiveIndexField {
    RefractiveIndexField::new(MediumKind::Fisheye { n0: 2.0, a: 1.0 }, cube(4.0), 1.0).unwrap()
}

fn all_analytic_kinds() -> Vec<(&'static str, RefractiveIndexField)> {
    vec![
        (
            "homogeneous",
            RefractiveIndexField::new(MediumKind::Homogeneous { n0: 1.5 }, cube(2.0), 1.0)
                .unwrap(),
        ),
        (
            "linear",
            RefractiveIndexField::new(
                MediumKind::Linear {
                    n0: 1.4,
                    g: Vec3::new(0.1, -0.05, 0.02),
                },
                cube(2.0),
                1.0,
            )
            .unwrap(),
        ),
        ("fisheye", fisheye()),
        (
            "parabolic_grin",
            RefractiveIndexField::new(
                MediumKind::ParabolicGrin {
                    n0: 1.6,
                    kappa: 0.3,
                    axis: Vec3::new(0.0, 0.0, 1.0),
                },
                cube(1.0),
                1.0,
            )
            .unwrap(),
        ),
    ]
}

#[test]
fn fisheye_matches_closed_form() {
    let f = fisheye();
    assert!((f.eval_n(Vec3::new(0.5, 0.0, 0.0)).unwrap() - 1.6).abs() < 1e-15);
    assert!((f.eval_n(Vec3::ZERO).unwrap() - 2.0).abs() < 1e-15);
    assert!((f.eval_n(Vec3::new(0.0, 1.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn gradients_match_finite_differences_within_interior() {
    let h = 1e-6;
    for (name, f) in all_analytic_kinds() {
        let half = 0.45 * f.domain().extent().x();
        for i in 0..100u64 {
            let mut rng = particle_rng(321, i);
            let q = Vec3::new(
                half * (2.0 * rng.random::<f64>() - 1.0),
                half * (2.0 * rng.random::<f64>() - 1.0),
                half * (2.0 * rng.random::<f64>() - 1.0),
            );
            let g = f.grad_n(q).unwrap();
            for axis in 0..3 {
                let mut qp = q;
                let mut qm = q;
                qp.0[axis] += h;
                qm.0[axis] -= h;
                let fd = (f.eval_n(qp).unwrap() - f.eval_n(qm).unwrap()) / (2.0 * h);
                let err = (g.0[axis] - fd).abs();
                assert!(
                    err <= 1e-5 * (1.0 + g.norm()),
                    "{name}: grad axis {axis} at {q:?}: analytic {} vs FD {fd}",
                    g.0[axis]
                );
            }
        }
    }
}

#[test]
fn hessians_match_finite_differences_of_gradient() {
    let h = 1e-5;
    for (name, f) in all_analytic_kinds() {
        let half = 0.4 * f.domain().extent().x();
        for i in 0..20u64 {
            let mut rng = particle_rng(654, i);
            let q = Vec3::new(
                half * (2.0 * rng.random::<f64>() - 1.0),
                half * (2.0 * rng.random::<f64>() - 1.0),
                half * (2.0 * rng.random::<f64>() - 1.0),
            );
            let hess = f.hessian_n(q).unwrap();
            for a in 0..3 {
                let mut qp = q;
                let mut qm = q;
                qp.0[a] += h;
                qm.0[a] -= h;
                let gp = f.grad_n(qp).unwrap();
                let gm = f.grad_n(qm).unwrap();
                for b in 0..3 {
                    let fd = (gp.0[b] - gm.0[b]) / (2.0 * h);
                    assert!(
                        (hess.0[b][a] - fd).abs() <= 1e-4 * (1.0 + fd.abs()),
                        "{name}: hessian [{b}][{a}] {} vs FD {fd}",
                        hess.0[b][a]
                    );
                }
            }
        }
    }
}

#[test]
fn constructor_rejects_profiles_that_dip_nonpositive() {
    // n = 1 + 2x dips to 1 − 6 < 0 inside a ±3 box.
    let err = RefractiveIndexField::new(
        MediumKind::Linear {
            n0: 1.0,
            g: Vec3::new(2.0, 0.0, 0.0),
        },
        cube(3.0),
        1.0,
    )
    .unwrap_err();
    assert!(matches!(err, HeliosError::NonPositiveIndex { .. }));
}

#[test]
fn grin_axis_must_be_normalized() {
    let err = RefractiveIndexField::new(
        MediumKind::ParabolicGrin {
            n0: 1.5,
            kappa: 0.1,
            axis: Vec3::new(0.0, 0.0, 2.0),
        },
        cube(1.0),
        1.0,
    );
    assert!(err.is_err());
}

/// Sample the fisheye profile onto a grid (samples laid out x-major, z
/// fastest, matching the grid loader) and wrap it as a field on `domain`.
fn fisheye_grid_field(
    order: InterpolationOrder,
    nodes: usize,
    domain_half: f64,
) -> RefractiveIndexField {
    let analytic = fisheye();
    let lo = -1.5;
    let spacing = 3.0 / (nodes - 1) as f64;
    let mut samples = Vec::with_capacity(nodes * nodes * nodes);
    for i in 0..nodes {
        for j in 0..nodes {
            for k in 0..nodes {
                let q = Vec3::new(
                    lo + spacing * i as f64,
                    lo + spacing * j as f64,
                    lo + spacing * k as f64,
                );
                samples.push(analytic.eval_n(q).unwrap());
            }
        }
    }
    let grid = GridField::new(
        [nodes, nodes, nodes],
        Vec3::new(lo, lo, lo),
        Vec3::new(spacing, spacing, spacing),
        samples,
        order,
    )
    .unwrap();
    RefractiveIndexField::new(MediumKind::Grid(grid), cube(domain_half), 1.0).unwrap()
}

#[test]
fn grid_interpolant_is_node_exact() {
    let analytic = fisheye();
    for order in [InterpolationOrder::Tricubic, InterpolationOrder::Trilinear] {
        // 21 nodes, spacing 0.15; stay a node inside the edges so the
        // tricubic stencil fits.
        let field = fisheye_grid_field(order, 21, 1.3);
        for k in 2..19 {
            for j in (2..19).step_by(4) {
                for i in (2..19).step_by(4) {
                    let q = Vec3::new(
                        -1.5 + 0.15 * i as f64,
                        -1.5 + 0.15 * j as f64,
                        -1.5 + 0.15 * k as f64,
                    );
                    let expect = analytic.eval_n(q).unwrap();
                    let got = field.eval_n(q).unwrap();
                    assert!(
                        (got - expect).abs() <= 1e-12 * expect,
                        "{order:?} node ({i},{j},{k}): {got} vs {expect}"
                    );
                }
            }
        }
    }
}

#[test]
fn tricubic_grid_tracks_analytic_profile_between_nodes() {
    // 41 nodes, spacing 0.075.
    let field = fisheye_grid_field(InterpolationOrder::Tricubic, 41, 1.2);
    let analytic = fisheye();
    for i in 0..50u64 {
        let mut rng = particle_rng(987, i);
        let q = Vec3::new(
            1.1 * (2.0 * rng.random::<f64>() - 1.0),
            1.1 * (2.0 * rng.random::<f64>() - 1.0),
            1.1 * (2.0 * rng.random::<f64>() - 1.0),
        );
        let expect = analytic.eval_n(q).unwrap();
        let got = field.eval_n(q).unwrap();
        assert!(
            (got - expect).abs() <= 5e-5 * expect,
            "value at {q:?}: {got} vs {expect}"
        );
        let ge = analytic.grad_n(q).unwrap();
        let gg = field.grad_n(q).unwrap();
        assert!(
            (gg - ge).norm() <= 5e-3 * (1.0 + ge.norm()),
            "gradient at {q:?}: {gg:?} vs {ge:?}"
        );
    }
}

#[test]
fn raw_file_roundtrip() {
    let dir = std::env::temp_dir().join(format!("helios-grid-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let raw_path = dir.join("n.raw");
    let header_path = dir.join("n.json");

    let nodes = 9usize;
    let spacing = 3.0 / (nodes - 1) as f64;
    let probe = |i: usize, j: usize, k: usize| {
        Vec3::new(
            -1.5 + spacing * i as f64,
            -1.5 + spacing * j as f64,
            -1.5 + spacing * k as f64,
        )
    };
    let analytic = fisheye();
    let mut bytes = Vec::with_capacity(nodes.pow(3) * 8);
    for i in 0..nodes {
        for j in 0..nodes {
            for k in 0..nodes {
                bytes.extend_from_slice(
                    &analytic.eval_n(probe(i, j, k)).unwrap().to_le_bytes(),
                );
            }
        }
    }
    std::fs::write(&raw_path, &bytes).unwrap();
    std::fs::write(
        &header_path,
        r#"{"dims": [9, 9, 9], "origin": [-1.5, -1.5, -1.5], "spacing": [0.375, 0.375, 0.375]}"#,
    )
    .unwrap();

    let grid =
        GridField::from_raw_file(&raw_path, &header_path, InterpolationOrder::Trilinear).unwrap();
    let loaded = RefractiveIndexField::new(MediumKind::Grid(grid), cube(1.5), 1.0).unwrap();
    let direct = fisheye_grid_field(InterpolationOrder::Trilinear, nodes, 1.5);
    for k in 0..nodes {
        for j in 0..nodes {
            for i in 0..nodes {
                let q = probe(i, j, k);
                assert_eq!(loaded.eval_n(q).unwrap(), direct.eval_n(q).unwrap());
                // Node exactness against the source values, bit for bit.
                assert_eq!(loaded.eval_n(q).unwrap(), analytic.eval_n(q).unwrap());
            }
        }
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn raw_file_length_mismatch_is_rejected() {
    let dir = std::env::temp_dir().join(format!("helios-grid-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let raw_path = dir.join("n.raw");
    let header_path = dir.join("n.json");
    std::fs::write(&raw_path, [0u8; 24]).unwrap();
    std::fs::write(
        &header_path,
        r#"{"dims": [2, 2, 2], "origin": [0, 0, 0], "spacing": [1, 1, 1]}"#,
    )
    .unwrap();
    assert!(
        GridField::from_raw_file(&raw_path, &header_path, InterpolationOrder::Trilinear).is_err()
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn scale_parameter_is_zero_for_homogeneous_and_linear_in_wavelength() {
    let homog =
        RefractiveIndexField::new(MediumKind::Homogeneous { n0: 1.5 }, cube(2.0), 1.0).unwrap();
    assert_eq!(homog.estimate_scale_parameter(0.5).unwrap(), 0.0);

    let f = fisheye();
    let eps1 = f.estimate_scale_parameter(0.1).unwrap();
    let eps2 = f.estimate_scale_parameter(0.2).unwrap();
    assert!(eps1 > 0.0 && eps1.is_finite());
    assert!((eps2 / eps1 - 2.0).abs() < 1e-12);
}

#[test]
fn domain_exit_face_and_containment() {
    let d = cube(1.0);
    assert!(d.contains(Vec3::ZERO));
    assert!(!d.contains(Vec3::new(1.5, 0.0, 0.0)));
    assert_eq!(d.exit_face(Vec3::new(1.5, 0.0, 0.0)), Some((0, 1)));
    assert_eq!(d.exit_face(Vec3::new(0.0, -2.0, 0.0)), Some((1, -1)));
    assert_eq!(d.exit_face(Vec3::ZERO), None);
}

#[test]
fn out_of_domain_evaluation_is_an_error() {
    let f = fisheye();
    let err = f.eval_n(Vec3::new(10.0, 0.0, 0.0)).unwrap_err();
    assert!(matches!(err, HeliosError::OutOfDomain(_)));
}
