//! The demo façade must return well-formed payloads with the physics
//! intact: closed fisheye fans, the cosine law, and a packet-centred
//! Wigner heatmap.

use helios_wasm::{patch_energy, ray_fan, wigner_heatmap};
use serde_json::Value;

fn parse_ok(payload: &str) -> Value {
    let v: Value = serde_json::from_str(payload).unwrap();
    assert!(
        v.get("error").is_none(),
        "unexpected error: {}",
        v["error"]
    );
    v
}

#[test]
fn a_tangential_fisheye_fan_closes_after_one_period() {
    let out = ray_fan(
        r#"{
        "profile": {"fisheye": {"n0": 2.0, "a": 1.0}},
        "x0": 0.5, "y0": 0.0,
        "angle0_deg": 90.0, "spread_deg": 40.0,
        "n_rays": 9, "t_end": 6.283185307179586, "dt": 0.005
    }"#,
    );
    let v = parse_ok(&out);
    let rays = v["rays"].as_array().unwrap();
    assert_eq!(rays.len(), 9);
    for ray in rays {
        assert_eq!(ray["exited"], false);
        let pts = ray["points"].as_array().unwrap();
        let first = pts.first().unwrap().as_array().unwrap();
        let last = pts.last().unwrap().as_array().unwrap();
        for c in 0..2 {
            let a = first[c].as_f64().unwrap();
            let b = last[c].as_f64().unwrap();
            // Coordinates are rounded to 1e-4 for the wire format, so
            // closure is only visible to that resolution.
            assert!((a - b).abs() <= 5e-4, "fan ray reopened: {a} vs {b}");
        }
    }
}

#[test]
fn rays_never_report_points_outside_the_domain() {
    // A steep fan in a homogeneous medium runs straight into the walls.
    let out = ray_fan(
        r#"{
        "profile": {"homogeneous": {"n0": 1.0}},
        "x0": 0.0, "y0": 0.0,
        "angle0_deg": 0.0, "spread_deg": 180.0,
        "n_rays": 7, "t_end": 30.0, "dt": 0.05, "half": 2.0
    }"#,
    );
    let v = parse_ok(&out);
    for ray in v["rays"].as_array().unwrap() {
        assert_eq!(ray["exited"], true, "t = 30 crosses a half-width of 2");
        for pt in ray["points"].as_array().unwrap() {
            for c in pt.as_array().unwrap() {
                assert!(c.as_f64().unwrap().abs() <= 2.0 + 1e-3);
            }
        }
    }
}

#[test]
fn patch_energies_follow_the_cosine_law() {
    let e0 = parse_ok(&patch_energy(0.0))["e"].as_f64().unwrap();
    assert!(e0 > 0.0);
    for theta_deg in [30.0, 60.0] {
        let e = parse_ok(&patch_energy(theta_deg))["e"].as_f64().unwrap();
        let expected = (theta_deg * std::f64::consts::PI / 180.0).cos();
        assert!(
            (e / e0 - expected).abs() <= 2e-3,
            "E({theta_deg})/E(0) = {} vs cos = {expected}",
            e / e0
        );
    }
}

#[test]
fn wigner_heatmap_centres_on_the_packet_wavenumber() {
    let v = parse_ok(&wigner_heatmap(0.05, 0.4));
    let n = v["n"].as_u64().unwrap() as usize;
    let w = v["w"].as_array().unwrap();
    assert_eq!(w.len(), n * n);
    assert_eq!(v["alias"], false);

    // Quantized to thousandths of the peak: the max cell holds ±1000.
    let values: Vec<i64> = w.iter().map(|x| x.as_i64().unwrap()).collect();
    let (arg, &max) = values
        .iter()
        .enumerate()
        .max_by_key(|(_, v)| **v)
        .unwrap();
    assert_eq!(max, 1000);

    // The peak column corresponds to p ≈ k0.
    let p_max = v["p_max"].as_f64().unwrap();
    let dp = p_max / (n as f64 / 2.0 - 1.0);
    let col = (arg % n) as f64;
    let p_at_peak = (col - n as f64 / 2.0) * dp;
    assert!(
        (p_at_peak - 0.4).abs() <= 2.0 * dp,
        "peak at p = {p_at_peak}, expected 0.4"
    );

    // An unresolvable oscillation is rejected, not rendered.
    let rejected: Value = serde_json::from_str(&wigner_heatmap(0.005, 2.0)).unwrap();
    assert!(rejected.get("error").is_some());
}
