//! Scenario files: strict, versioned JSON descriptions of a medium, rays,
//! ensembles, densities, surfaces, and solver settings.
//!
//! Every struct rejects unknown keys, so a typo fails loudly at load time
//! instead of silently running a different experiment. Profiles, shapes,
//! and ensemble kinds are externally tagged:
//! `"profile": {"fisheye": {"n0": 2.0, "a": 1.0}}`.

use crate::error::HeliosError;
use crate::integrate::{BoundaryPolicy, IntegratorConfig, Scheme};
use crate::math::Vec3;
use crate::measure::{MomentumSpec, QuadratureSpec, Surface};
use crate::medium::{Domain, GridField, InterpolationOrder, MediumKind, RefractiveIndexField};
use crate::transport::{sample_gaussian_cloud, sample_isotropic_burst, AnalyticDensity, Ensemble};
use crate::wigner::Profile1D;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub medium: Option<MediumSpec>,
    #[serde(default)]
    pub integrator: Option<IntegratorSpec>,
    #[serde(default)]
    pub time: Option<TimeSpec>,
    #[serde(default)]
    pub rays: Vec<RaySpec>,
    #[serde(default)]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default)]
    pub density: Option<DensitySpec>,
    #[serde(default)]
    pub surfaces: Vec<SurfaceSpec>,
    /// Measurement windows [t1, t2].
    #[serde(default)]
    pub windows: Vec<[f64; 2]>,
    #[serde(default)]
    pub estimator: Option<EstimatorSpec>,
    #[serde(default)]
    pub wigner: Option<WignerSpec>,
    /// Which products to write; `None` means every product the command
    /// produces. Known names: trajectories, ensemble, report, measurements,
    /// wigner.
    #[serde(default)]
    pub outputs: Option<Vec<String>>,
}

/// Product names accepted in `outputs`.
pub const PRODUCTS: &[&str] = &[
    "trajectories",
    "ensemble",
    "report",
    "measurements",
    "wigner",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub profile: ProfileSpec,
    pub domain: DomainSpec,
    #[serde(default = "default_c")]
    pub c: f64,
}

fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Homogeneous {
        n0: f64,
    },
    Linear {
        n0: f64,
        g: [f64; 3],
    },
    Fisheye {
        n0: f64,
        a: f64,
    },
    ParabolicGrin {
        n0: f64,
        kappa: f64,
        axis: [f64; 3],
    },
    Grid {
        raw_path: String,
        header_path: String,
        #[serde(default = "default_order")]
        order: OrderSpec,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderSpec {
    Tricubic,
    Trilinear,
}

fn default_order() -> OrderSpec {
    OrderSpec::Tricubic
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default)]
    pub scheme: Scheme,
    pub dt: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
}

fn default_newton_tol() -> f64 {
    1e-12
}

fn default_newton_max_iter() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaySpec {
    pub q0: [f64; 3],
    pub direction: [f64; 3],
    pub omega: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleSpec {
    IsotropicBurst {
        q0: [f64; 3],
        omega: f64,
        n_particles: usize,
        seed: u64,
        total_energy: f64,
    },
    GaussianCloud {
        q0: [f64; 3],
        sigma_q: f64,
        p0: [f64; 3],
        sigma_p: f64,
        n_particles: usize,
        seed: u64,
        total_energy: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// 𝓛 = A·exp(−‖q−q₀‖²/2σ_q² − ‖p−p₀‖²/2σ_p²).
    GaussianPhaseSpace {
        q0: [f64; 3],
        sigma_q: f64,
        p0: [f64; 3],
        sigma_p: f64,
        amplitude: f64,
    },
    /// 𝓛 = A·exp(−‖q−q₀‖²/2σ_q²) for p_min ≤ ‖p‖ ≤ p_max, else 0.
    IsotropicShell {
        q0: [f64; 3],
        sigma_q: f64,
        p_min: f64,
        p_max: f64,
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub id: String,
    pub shape: ShapeSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Rectangle {
        origin: [f64; 3],
        edge1: [f64; 3],
        edge2: [f64; 3],
    },
    Disc {
        center: [f64; 3],
        normal: [f64; 3],
        radius: f64,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
        #[serde(default = "default_true")]
        outward: bool,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub n_time: usize,
    pub n_area: [usize; 2],
    pub momentum: MomentumSpecJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MomentumSpecJson {
    Box {
        center: [f64; 3],
        half_width: [f64; 3],
        n_nodes: usize,
    },
    Hemisphere {
        n_polar: usize,
        n_azimuth: usize,
        n_rad: usize,
        p_min: f64,
        p_max: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSpec {
    /// Grid size; power of two.
    pub n: usize,
    pub length: f64,
    pub profile: WProfileSpec,
    pub packet: PacketSpec,
    pub eps_ladder: Vec<f64>,
    pub t_end: f64,
    #[serde(default = "default_c")]
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WProfileSpec {
    Homogeneous { n0: f64 },
    Linear { n0: f64, g: f64 },
}

/// Gaussian WKB packet whose width scales coherently with ε:
/// σ(ε) = sigma0·√ε, so the packet stays in the semiclassical regime on
/// every rung of an ε-ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub q_center: f64,
    pub sigma0: f64,
    pub k0: f64,
    #[serde(default = "default_true")]
    pub normalize: bool,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Scenario> {
        let bytes = std::fs::read(path)
            .map_err(|e| HeliosError::Scenario(format!("reading {}: {e}", path.display())))?;
        Scenario::from_slice(&bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Scenario> {
        let s: Scenario = serde_json::from_slice(bytes)
            .map_err(|e| HeliosError::Scenario(format!("parse error: {e}")))?;
        if s.schema != SCHEMA_VERSION {
            return Err(HeliosError::Scenario(format!(
                "unsupported schema version {} (this build reads {})",
                s.schema, SCHEMA_VERSION
            )));
        }
        if let Some(outputs) = &s.outputs {
            for name in outputs {
                if !PRODUCTS.contains(&name.as_str()) {
                    return Err(HeliosError::Scenario(format!(
                        "unknown output product '{name}' (expected one of {PRODUCTS:?})"
                    )));
                }
            }
        }
        Ok(s)
    }

    /// True when `product` should be written under the scenario's `outputs`
    /// filter.
    pub fn wants(&self, product: &str) -> bool {
        match &self.outputs {
            None => true,
            Some(list) => list.iter().any(|p| p == product),
        }
    }

    pub fn build_medium(&self) -> Result<RefractiveIndexField> {
        let spec = self
            .medium
            .as_ref()
            .ok_or_else(|| HeliosError::Scenario("scenario has no `medium` section".into()))?;
        let domain = Domain::new(Vec3(spec.domain.min), Vec3(spec.domain.max))?;
        let kind = match &spec.profile {
            ProfileSpec::Homogeneous { n0 } => MediumKind::Homogeneous { n0: *n0 },
            ProfileSpec::Linear { n0, g } => MediumKind::Linear {
                n0: *n0,
                g: Vec3(*g),
            },
            ProfileSpec::Fisheye { n0, a } => MediumKind::Fisheye { n0: *n0, a: *a },
            ProfileSpec::ParabolicGrin { n0, kappa, axis } => MediumKind::ParabolicGrin {
                n0: *n0,
                kappa: *kappa,
                axis: Vec3(*axis).normalized(),
            },
            ProfileSpec::Grid {
                raw_path,
                header_path,
                order,
            } => {
                let order = match order {
                    OrderSpec::Tricubic => InterpolationOrder::Tricubic,
                    OrderSpec::Trilinear => InterpolationOrder::Trilinear,
                };
                MediumKind::Grid(GridField::from_raw_file(
                    Path::new(raw_path),
                    Path::new(header_path),
                    order,
                )?)
            }
        };
        RefractiveIndexField::new(kind, domain, spec.c)
    }

    pub fn build_integrator(&self) -> Result<IntegratorConfig> {
        let spec = self
            .integrator
            .as_ref()
            .ok_or_else(|| HeliosError::Scenario("scenario has no `integrator` section".into()))?;
        let mut cfg = IntegratorConfig::new(spec.scheme, spec.dt)?;
        cfg.newton_tol = spec.newton_tol;
        cfg.newton_max_iter = spec.newton_max_iter;
        cfg.boundary_policy = BoundaryPolicy::StopAtExit;
        Ok(cfg)
    }

    pub fn t_end(&self) -> Result<f64> {
        let t = self
            .time
            .as_ref()
            .ok_or_else(|| HeliosError::Scenario("scenario has no `time` section".into()))?;
        if !(t.t_end > 0.0) {
            return Err(HeliosError::Scenario("time.t_end must be positive".into()));
        }
        Ok(t.t_end)
    }

    pub fn build_ensemble(&self, field: &RefractiveIndexField) -> Result<Ensemble> {
        let spec = self
            .ensemble
            .as_ref()
            .ok_or_else(|| HeliosError::Scenario("scenario has no `ensemble` section".into()))?;
        match spec {
            EnsembleSpec::IsotropicBurst {
                q0,
                omega,
                n_particles,
                seed,
                total_energy,
            } => sample_isotropic_burst(field, Vec3(*q0), *omega, *n_particles, *seed, *total_energy),
            EnsembleSpec::GaussianCloud {
                q0,
                sigma_q,
                p0,
                sigma_p,
                n_particles,
                seed,
                total_energy,
            } => sample_gaussian_cloud(
                field,
                Vec3(*q0),
                *sigma_q,
                Vec3(*p0),
                *sigma_p,
                *n_particles,
                *seed,
                *total_energy,
            ),
        }
    }

    pub fn build_density(&self) -> Result<AnalyticDensity> {
        let spec = self
            .density
            .as_ref()
            .ok_or_else(|| HeliosError::Scenario("scenario has no `density` section".into()))?;
        Ok(build_density_spec(spec))
    }

    pub fn build_surfaces(&self) -> Result<Vec<(String, Surface)>> {
        let mut out = Vec::with_capacity(self.surfaces.len());
        for s in &self.surfaces {
            let surface = match &s.shape {
                ShapeSpec::Rectangle {
                    origin,
                    edge1,
                    edge2,
                } => Surface::Rectangle {
                    origin: Vec3(*origin),
                    edge1: Vec3(*edge1),
                    edge2: Vec3(*edge2),
                },
                ShapeSpec::Disc {
                    center,
                    normal,
                    radius,
                } => Surface::Disc {
                    center: Vec3(*center),
                    normal: Vec3(*normal),
                    radius: *radius,
                },
                ShapeSpec::Sphere {
                    center,
                    radius,
                    outward,
                } => Surface::Sphere {
                    center: Vec3(*center),
                    radius: *radius,
                    outward: *outward,
                },
            };
            surface.validate()?;
            out.push((s.id.clone(), surface));
        }
        Ok(out)
    }

    pub fn build_estimator(&self) -> Result<QuadratureSpec> {
        let spec = self
            .estimator
            .as_ref()
            .ok_or_else(|| HeliosError::Scenario("scenario has no `estimator` section".into()))?;
        let momentum = match &spec.momentum {
            MomentumSpecJson::Box {
                center,
                half_width,
                n_nodes,
            } => MomentumSpec::Box {
                center: Vec3(*center),
                half_width: Vec3(*half_width),
                n_nodes: *n_nodes,
            },
            MomentumSpecJson::Hemisphere {
                n_polar,
                n_azimuth,
                n_rad,
                p_min,
                p_max,
            } => MomentumSpec::Hemisphere {
                n_polar: *n_polar,
                n_azimuth: *n_azimuth,
                n_rad: *n_rad,
                p_min: *p_min,
                p_max: *p_max,
            },
        };
        Ok(QuadratureSpec {
            n_time: spec.n_time,
            n_area: (spec.n_area[0], spec.n_area[1]),
            momentum,
        })
    }

    pub fn wigner_profile(&self) -> Result<(Profile1D, &WignerSpec)> {
        let spec = self
            .wigner
            .as_ref()
            .ok_or_else(|| HeliosError::Scenario("scenario has no `wigner` section".into()))?;
        let profile = match spec.profile {
            WProfileSpec::Homogeneous { n0 } => Profile1D::Homogeneous { n0 },
            WProfileSpec::Linear { n0, g } => Profile1D::Linear { n0, g },
        };
        Ok((profile, spec))
    }
}

/// Materialize a density spec as a closure.
pub fn build_density_spec(spec: &DensitySpec) -> AnalyticDensity {
    match spec {
        DensitySpec::GaussianPhaseSpace {
            q0,
            sigma_q,
            p0,
            sigma_p,
            amplitude,
        } => {
            let (q0, p0) = (Vec3(*q0), Vec3(*p0));
            let (sq2, sp2, a) = (2.0 * sigma_q * sigma_q, 2.0 * sigma_p * sigma_p, *amplitude);
            AnalyticDensity::new(move |q, p| {
                a * (-(q - q0).norm_sq() / sq2 - (p - p0).norm_sq() / sp2).exp()
            })
        }
        DensitySpec::IsotropicShell {
            q0,
            sigma_q,
            p_min,
            p_max,
            amplitude,
        } => {
            let q0 = Vec3(*q0);
            let (sq2, a, pmin, pmax) = (2.0 * sigma_q * sigma_q, *amplitude, *p_min, *p_max);
            AnalyticDensity::new(move |q, p| {
                let pn = p.norm();
                if pn < pmin || pn > pmax {
                    0.0
                } else {
                    a * (-(q - q0).norm_sq() / sq2).exp()
                }
            })
        }
    }
}
