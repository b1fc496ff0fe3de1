//! Browser façade over the core crate for the static demo page in `www/`.
//!
//! Every export takes and returns JSON strings (errors come back as
//! `{"error": "..."}`), so the JavaScript side stays a thin render layer.
//! The functions are ordinary Rust on native targets — the demo logic is
//! covered by `cargo test` without a browser — and exported through
//! wasm-bindgen on wasm32.

use helios_core::hamiltonian::PhasePoint;
use helios_core::integrate::{flow, IntegratorConfig, Scheme};
use helios_core::math::Vec3;
use helios_core::measure::{measure_energy, MomentumSpec, QuadratureSpec, Surface, TimeDensity};
use helios_core::medium::{Domain, MediumKind, RefractiveIndexField};
use helios_core::transport::AnalyticDensity;
use helios_core::wigner::{discrete_wigner, gaussian_packet, Profile1D};
use serde::Deserialize;
use serde_json::json;
use std::f64::consts::{PI, TAU};

#[cfg(target_arch = "wasm32")]
use wasm_bindgen::prelude::wasm_bindgen;

type DynResult<T> = Result<T, Box<dyn std::error::Error>>;

fn or_error(r: DynResult<serde_json::Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Round for compact JSON; 1e-4 is far below a canvas pixel.
fn r4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

// ------------------------------------------------------------- ray fans

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum Profile2D {
    Homogeneous { n0: f64 },
    Fisheye { n0: f64, a: f64 },
    /// Parabolic index about the x-axis: rays oscillate in y.
    Grin { n0: f64, kappa: f64 },
    /// n = n0 + g·y — a vertical index gradient (mirage bending).
    LinearY { n0: f64, g: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FanConfig {
    profile: Profile2D,
    x0: f64,
    y0: f64,
    /// Central launch direction, degrees from +x.
    angle0_deg: f64,
    /// Full fan opening, degrees.
    spread_deg: f64,
    n_rays: usize,
    t_end: f64,
    dt: f64,
    /// Domain half-width; rays freeze where they leave the box.
    #[serde(default = "default_half")]
    half: f64,
}

fn default_half() -> f64 {
    4.0
}

/// Trace a fan of rays in the z = 0 plane and return their polylines:
/// `{"domain": h, "rays": [{"points": [[x, y], ...], "exited": bool}]}`.
#[cfg_attr(target_arch = "wasm32", wasm_bindgen)]
pub fn ray_fan(config: &str) -> String {
    or_error(ray_fan_impl(config))
}

fn ray_fan_impl(config: &str) -> DynResult<serde_json::Value> {
    let cfg: FanConfig = serde_json::from_str(config)?;
    let kind = match cfg.profile {
        Profile2D::Homogeneous { n0 } => MediumKind::Homogeneous { n0 },
        Profile2D::Fisheye { n0, a } => MediumKind::Fisheye { n0, a },
        Profile2D::Grin { n0, kappa } => MediumKind::ParabolicGrin {
            n0,
            kappa,
            axis: Vec3::new(1.0, 0.0, 0.0),
        },
        Profile2D::LinearY { n0, g } => MediumKind::Linear {
            n0,
            g: Vec3::new(0.0, g, 0.0),
        },
    };
    let h = cfg.half;
    let field = RefractiveIndexField::new(
        kind,
        Domain::new(Vec3::new(-h, -h, -h), Vec3::new(h, h, h))?,
        1.0,
    )?;
    let icfg = IntegratorConfig::new(Scheme::ImplicitMidpoint, cfg.dt)?;
    if !(cfg.t_end > 0.0) {
        return Err("t_end must be positive".into());
    }

    let q0 = Vec3::new(cfg.x0, cfg.y0, 0.0);
    let pnorm = field.eval_n(q0)?;
    let n_rays = cfg.n_rays.clamp(1, 64);
    let mut rays = Vec::with_capacity(n_rays);
    for i in 0..n_rays {
        let frac = if n_rays == 1 {
            0.0
        } else {
            i as f64 / (n_rays - 1) as f64 - 0.5
        };
        let alpha = (cfg.angle0_deg + cfg.spread_deg * frac) * PI / 180.0;
        // ‖p‖ = n(q0) (ω = c = 1); paths do not depend on the scale anyway.
        let p = Vec3::new(alpha.cos(), alpha.sin(), 0.0) * pnorm;
        let fr = flow(&field, &icfg, &PhasePoint::new(q0, p), cfg.t_end)?;
        let points: Vec<[f64; 2]> = fr
            .samples
            .iter()
            .map(|s| [r4(s.z.q.x()), r4(s.z.q.y())])
            .collect();
        rays.push(json!({
            "points": points,
            "exited": fr.exit_event.is_some(),
        }));
    }
    Ok(json!({ "domain": h, "rays": rays }))
}

// ----------------------------------------------------- cosine-law patch

/// Energy through a square patch tilted by `theta_deg`, under a broad
/// collimated beam travelling along +z. The ratio to the θ = 0 value is
/// the projected-area cosine law: `{"theta_deg": t, "e": E}`.
#[cfg_attr(target_arch = "wasm32", wasm_bindgen)]
pub fn patch_energy(theta_deg: f64) -> String {
    or_error(patch_energy_impl(theta_deg))
}

fn patch_energy_impl(theta_deg: f64) -> DynResult<serde_json::Value> {
    if !(0.0..=85.0).contains(&theta_deg) {
        return Err("theta_deg must lie in [0, 85]".into());
    }
    let field = RefractiveIndexField::new(
        MediumKind::Homogeneous { n0: 1.0 },
        Domain::new(Vec3::new(-8.0, -8.0, -8.0), Vec3::new(8.0, 8.0, 8.0))?,
        1.0,
    )?;
    let p0 = Vec3::new(0.0, 0.0, 10.0);
    // Waist 2 ≫ patch 0.5, so the irradiance is uniform over the patch.
    let density = TimeDensity::stationary(AnalyticDensity::new(move |q, p| {
        let q_perp = q.x() * q.x() + q.y() * q.y();
        (-q_perp / (2.0 * 2.0 * 2.0) - (p - p0).norm_sq() / (2.0 * 0.1 * 0.1)).exp()
    }));
    let theta = theta_deg * PI / 180.0;
    let w = 0.5;
    let edge1 = Vec3::new(w, 0.0, 0.0);
    let edge2 = Vec3::new(0.0, w * theta.cos(), w * theta.sin());
    let patch = Surface::Rectangle {
        origin: (edge1 + edge2) * -0.5,
        edge1,
        edge2,
    };
    let spec = QuadratureSpec {
        n_time: 2,
        n_area: (8, 8),
        momentum: MomentumSpec::Box {
            center: p0,
            half_width: Vec3::new(0.6, 0.6, 0.6),
            n_nodes: 14,
        },
    };
    let m = measure_energy(&field, &density, &patch, 0.0, 1.0, &spec)?;
    Ok(json!({ "theta_deg": theta_deg, "e": m.e }))
}

// --------------------------------------------------------------- wigner

const WIGNER_N: usize = 128;

/// Wigner function of a Gaussian wave packet on a 128×128 phase-space
/// grid, quantized to thousandths of the peak:
/// `{"n", "eps", "k0", "peak", "p_max", "q_half", "alias", "w": [i32...]}`.
/// Under-resolved (ε, k0) combinations return the library's rejection,
/// which the page surfaces verbatim.
#[cfg_attr(target_arch = "wasm32", wasm_bindgen)]
pub fn wigner_heatmap(eps: f64, k0: f64) -> String {
    or_error(wigner_heatmap_impl(eps, k0))
}

fn wigner_heatmap_impl(eps: f64, k0: f64) -> DynResult<serde_json::Value> {
    if !(1e-3..=1.0).contains(&eps) {
        return Err("eps must lie in [0.001, 1]".into());
    }
    if !(-4.0..=4.0).contains(&k0) {
        return Err("k0 must lie in [-4, 4]".into());
    }
    let field = gaussian_packet(
        WIGNER_N,
        TAU,
        eps,
        Profile1D::Homogeneous { n0: 1.0 },
        0.0,
        0.35,
        k0,
        true,
    )?;
    let grid = discrete_wigner(&field)?;
    let mut peak = 0.0_f64;
    for j in 0..WIGNER_N {
        for k in 0..WIGNER_N {
            peak = peak.max(grid.at(j, k).abs());
        }
    }
    if peak <= 0.0 {
        return Err("empty Wigner grid".into());
    }
    // Row-major in j (position); each row scans k (momentum).
    let mut w = Vec::with_capacity(WIGNER_N * WIGNER_N);
    for j in 0..WIGNER_N {
        for k in 0..WIGNER_N {
            w.push((grid.at(j, k) / peak * 1000.0).round() as i32);
        }
    }
    let p = grid.p_grid();
    Ok(json!({
        "n": WIGNER_N,
        "eps": eps,
        "k0": k0,
        "peak": peak,
        "p_max": p[WIGNER_N - 1],
        "q_half": TAU / 2.0,
        "alias": grid.alias_warning,
        "w": w,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_inputs_come_back_as_json_errors() {
        let out = ray_fan("{not json");
        assert!(out.contains("\"error\""));
        let out = ray_fan(r#"{"profile": {"warp": {}}, "x0": 0, "y0": 0,
            "angle0_deg": 0, "spread_deg": 0, "n_rays": 1, "t_end": 1, "dt": 0.1}"#);
        assert!(out.contains("\"error\""));
        let out = wigner_heatmap(-1.0, 0.0);
        assert!(out.contains("\"error\""));
    }
}
