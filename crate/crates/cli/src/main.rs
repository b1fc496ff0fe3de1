//! `helios` — scenario-driven driver for the light-transport library.
//!
//! Subcommands: `trace`, `transport`, `measure`, `wigner` take a JSON
//! scenario and write CSV/JSON products plus a `manifest.json` hashing
//! every output; `validate` runs the invariant suites. Products are
//! deterministic for a fixed scenario and seed, independent of thread
//! count. Exit codes: 0 success, 1 failed validation check, 2 bad
//! usage/scenario, 3 runtime failure (divergence, ambiguity, I/O).

mod plot;
mod products;

use clap::{Args, Parser, Subcommand};
use helios_core::hamiltonian::{wave_vector_from_direction, PhasePoint};
use helios_core::integrate::{flow, FlowResult, IntegratorConfig};
use helios_core::math::Vec3;
use helios_core::measure::{
    measure_energy, measure_ensemble_crossings, QuadratureSpec, TimeDensity,
};
use helios_core::scenario::{build_density_spec, EnsembleSpec, Scenario, SCHEMA_VERSION};
use helios_core::transport::{transport_ensemble, Ensemble};
use helios_core::validate::{apply_tolerance_overrides, criterion_title, run_suite, Cmp, SUITES};
use helios_core::wigner::{compare_liouville, gaussian_packet};
use helios_core::resolve_threads;
use products::{csv_bytes, fmt_f64, json_bytes, sha256_hex, OutDir, RunInfo, ScenarioRef};
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "helios",
    version,
    about = "Hamiltonian light transport in media with varying refractive index"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scenario rays; writes one trajectory CSV per ray.
    Trace(RunArgs),
    /// Advect the scenario ensemble; writes initial/final particle CSVs
    /// and a conservation report.
    Transport(RunArgs),
    /// Evaluate the energy through each scenario surface over each window.
    Measure(RunArgs),
    /// Run a Wigner-vs-Liouville convergence ladder for the 1-D wave model.
    Wigner(RunArgs),
    /// Run an invariant suite; exits 0 iff every check passes.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Output directory (created on first write; schema failures leave
    /// nothing behind).
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
    /// Also write SVG plots of the products.
    #[arg(long)]
    plot: bool,
    /// Worker threads (default: HELIOS_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the scenario's ensemble seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Suite: symplectic, conservation, cosphere, measure, fermat, wigner, or all.
    suite: String,
    /// Output directory for the machine-readable results.
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
    /// JSON file mapping check names to tolerance overrides.
    #[arg(long)]
    tolerances: Option<PathBuf>,
    /// Also write an SVG chart of check margins.
    #[arg(long)]
    plot: bool,
    /// Worker threads (default: HELIOS_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

/// Why a run stopped, carrying the process exit code.
enum Failure {
    /// Bad usage, scenario, or configuration. Exits 2; no outputs written.
    Usage(String),
    /// The computation or output writing failed. Exits 3.
    Runtime(String),
}

type RunOutcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            3
        }
    };
    ExitCode::from(code)
}

fn dispatch(cli: Cli) -> RunOutcome {
    match cli.command {
        Command::Trace(args) => cmd_trace(args),
        Command::Transport(args) => cmd_transport(args),
        Command::Measure(args) => cmd_measure(args),
        Command::Wigner(args) => cmd_wigner(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

/// Map an error from the construction phase (scenario → objects) to exit 2.
fn schema<T>(r: helios_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Usage(e.to_string()))
}

/// Map an error from the compute/write phase to exit 3.
fn runtime<T>(r: helios_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Runtime(e.to_string()))
}

fn io<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Runtime(format!("{e:#}")))
}

/// Install the global worker pool and return the resolved thread count.
fn init_threads(requested: Option<usize>) -> usize {
    let n = resolve_threads(requested);
    // Fails only if a pool already exists (e.g. in-process tests); the
    // existing pool then serves the run.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    n
}

struct Loaded {
    scenario: Scenario,
    raw: Vec<u8>,
    path: String,
    /// Effective ensemble seed after any `--seed` override.
    seed: Option<u64>,
}

fn load_scenario(path: &Path, seed_override: Option<u64>) -> Result<Loaded, Failure> {
    let raw = std::fs::read(path)
        .map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))?;
    let mut scenario = schema(Scenario::from_slice(&raw))?;
    let seed = match &mut scenario.ensemble {
        Some(EnsembleSpec::IsotropicBurst { seed, .. })
        | Some(EnsembleSpec::GaussianCloud { seed, .. }) => {
            if let Some(new) = seed_override {
                *seed = new;
            }
            Some(*seed)
        }
        None => seed_override,
    };
    Ok(Loaded {
        scenario,
        raw,
        path: path.display().to_string(),
        seed,
    })
}

impl Loaded {
    fn run_info(&self, command: &'static str, threads: usize) -> RunInfo {
        // Hash the command plus the scenario as it will actually run
        // (i.e. after the seed override), not the file on disk.
        let effective =
            serde_json::to_vec(&self.scenario).expect("scenario serializes");
        let mut tagged = command.as_bytes().to_vec();
        tagged.push(0);
        tagged.extend_from_slice(&effective);
        RunInfo {
            command,
            scenario: Some(ScenarioRef {
                path: self.path.clone(),
                sha256: sha256_hex(&self.raw),
            }),
            config_sha256: sha256_hex(&tagged),
            seed: self.seed,
            threads,
        }
    }
}

// ---------------------------------------------------------------- trace

fn cmd_trace(args: RunArgs) -> RunOutcome {
    let threads = init_threads(args.threads);
    let loaded = load_scenario(&args.scenario, args.seed)?;
    let s = &loaded.scenario;
    let field = schema(s.build_medium())?;
    let cfg = schema(s.build_integrator())?;
    let t_end = schema(s.t_end())?;
    if s.rays.is_empty() {
        return Err(Failure::Usage(
            "trace needs at least one entry in `rays`".into(),
        ));
    }

    let mut starts = Vec::with_capacity(s.rays.len());
    for (i, r) in s.rays.iter().enumerate() {
        let q0 = Vec3(r.q0);
        let dir = Vec3(r.direction);
        let dn = dir.norm();
        if dn < 1e-12 {
            return Err(Failure::Usage(format!(
                "ray {i}: direction must be nonzero"
            )));
        }
        // Scenario `omega` is angular frequency: ‖p‖ = n(q)·ω/c.
        let p = wave_vector_from_direction(&field, q0, dir * (1.0 / dn), r.omega / TAU)
            .map_err(|e| Failure::Usage(format!("ray {i}: {e}")))?;
        starts.push(PhasePoint::new(q0, p));
    }

    let flows: Vec<helios_core::Result<FlowResult>> = starts
        .par_iter()
        .map(|z0| flow(&field, &cfg, z0, t_end))
        .collect();
    let mut results = Vec::with_capacity(flows.len());
    for (i, r) in flows.into_iter().enumerate() {
        results.push(r.map_err(|e| Failure::Runtime(format!("ray {i}: {e}")))?);
    }

    let mut out = OutDir::new(&args.out);
    if s.wants("trajectories") {
        for (i, fr) in results.iter().enumerate() {
            let bytes = io(csv_bytes(
                &["t", "qx", "qy", "qz", "px", "py", "pz", "H"],
                fr.samples.iter().map(|smp| {
                    vec![
                        fmt_f64(smp.t),
                        fmt_f64(smp.z.q.x()),
                        fmt_f64(smp.z.q.y()),
                        fmt_f64(smp.z.q.z()),
                        fmt_f64(smp.z.p.x()),
                        fmt_f64(smp.z.p.y()),
                        fmt_f64(smp.z.p.z()),
                        fmt_f64(smp.h),
                    ]
                }),
            ))?;
            io(out.write(&format!("ray_{i:03}.csv"), &bytes))?;
        }
    }
    if args.plot {
        let svg = plot::Plot {
            title: "ray trajectories, x-y projection".into(),
            x_label: "q_x".into(),
            y_label: "q_y".into(),
            log_x: false,
            log_y: false,
            series: results
                .iter()
                .enumerate()
                .map(|(i, fr)| plot::Series {
                    label: format!("ray {i}"),
                    points: fr.samples.iter().map(|s| (s.z.q.x(), s.z.q.y())).collect(),
                    line: true,
                    markers: false,
                })
                .collect(),
        }
        .render();
        io(out.write("trajectories.svg", svg.as_bytes()))?;
    }
    for (i, fr) in results.iter().enumerate() {
        let end = fr.final_sample();
        let exit = fr
            .exit_event
            .map(|e| format!(", left the domain through {}", e.face_name()))
            .unwrap_or_default();
        println!(
            "ray {i}: {} steps to t = {}, max |dH/H| = {:.3e}{exit}",
            fr.steps_taken,
            fmt_f64(end.t),
            fr.max_h_drift()
        );
    }
    io(out.finish(loaded.run_info("trace", threads)))?;
    Ok(0)
}

// ------------------------------------------------------------ transport

fn cmd_transport(args: RunArgs) -> RunOutcome {
    let threads = init_threads(args.threads);
    let loaded = load_scenario(&args.scenario, args.seed)?;
    let s = &loaded.scenario;
    let field = schema(s.build_medium())?;
    let cfg = schema(s.build_integrator())?;
    let t_end = schema(s.t_end())?;
    let initial = schema(s.build_ensemble(&field))?;
    let reference = s.density.as_ref().map(build_density_spec);

    let (advected, report) = runtime(transport_ensemble(
        &field,
        &cfg,
        &initial,
        t_end,
        reference.as_ref(),
    ))?;

    let mut out = OutDir::new(&args.out);
    if s.wants("ensemble") {
        for (name, t, ens) in [
            ("ensemble_initial.csv", 0.0, &initial),
            ("ensemble_final.csv", t_end, &advected),
        ] {
            let bytes = io(csv_bytes(
                &["t", "qx", "qy", "qz", "px", "py", "pz", "w", "exited"],
                ens.particles.iter().map(|p| {
                    vec![
                        fmt_f64(t),
                        fmt_f64(p.z.q.x()),
                        fmt_f64(p.z.q.y()),
                        fmt_f64(p.z.q.z()),
                        fmt_f64(p.z.p.x()),
                        fmt_f64(p.z.p.y()),
                        fmt_f64(p.z.p.z()),
                        fmt_f64(p.w),
                        (p.exited as u8).to_string(),
                    ]
                }),
            ))?;
            io(out.write(name, &bytes))?;
        }
    }
    if s.wants("report") {
        let doc = serde_json::json!({
            "schema": SCHEMA_VERSION,
            "t_end": t_end,
            "n_particles": advected.particles.len(),
            "total_energy_before": report.total_energy_before,
            "total_energy_after": report.total_energy_after,
            "escaped_energy": report.escaped_energy,
            "n_casimir_samples": report.casimir_samples.len(),
            "max_casimir_drift": report.max_casimir_drift,
        });
        io(out.write("report.json", &io(json_bytes(&doc))?))?;
    }
    if args.plot {
        let split = |want_exited: bool| {
            advected
                .particles
                .iter()
                .filter(|p| p.exited == want_exited)
                .map(|p| (p.z.q.x(), p.z.q.y()))
                .collect::<Vec<_>>()
        };
        let svg = plot::Plot {
            title: format!("ensemble at t = {}, x-y projection", fmt_f64(t_end)),
            x_label: "q_x".into(),
            y_label: "q_y".into(),
            log_x: false,
            log_y: false,
            series: vec![
                plot::Series {
                    label: "interior".into(),
                    points: split(false),
                    line: false,
                    markers: true,
                },
                plot::Series {
                    label: "exited".into(),
                    points: split(true),
                    line: false,
                    markers: true,
                },
            ],
        }
        .render();
        io(out.write("ensemble.svg", svg.as_bytes()))?;
    }
    println!(
        "{} particles to t = {}: energy {} -> {}, escaped {}",
        advected.particles.len(),
        fmt_f64(t_end),
        fmt_f64(report.total_energy_before),
        fmt_f64(report.total_energy_after),
        fmt_f64(report.escaped_energy),
    );
    io(out.finish(loaded.run_info("transport", threads)))?;
    Ok(0)
}

// -------------------------------------------------------------- measure

enum Estimator {
    Particles(Box<IntegratorConfig>, Ensemble),
    Quadrature(TimeDensity, QuadratureSpec),
}

fn cmd_measure(args: RunArgs) -> RunOutcome {
    let threads = init_threads(args.threads);
    let loaded = load_scenario(&args.scenario, args.seed)?;
    let s = &loaded.scenario;
    let field = schema(s.build_medium())?;
    let surfaces = schema(s.build_surfaces())?;
    if surfaces.is_empty() {
        return Err(Failure::Usage(
            "measure needs at least one entry in `surfaces`".into(),
        ));
    }
    if s.windows.is_empty() {
        return Err(Failure::Usage(
            "measure needs at least one entry in `windows`".into(),
        ));
    }
    for w in &s.windows {
        if !(w[0] >= 0.0 && w[1] > w[0]) {
            return Err(Failure::Usage(format!(
                "bad window [{}, {}]: need 0 <= t1 < t2",
                w[0], w[1]
            )));
        }
    }
    let estimator = if s.ensemble.is_some() {
        let cfg = schema(s.build_integrator())?;
        let ens = schema(s.build_ensemble(&field))?;
        Estimator::Particles(Box::new(cfg), ens)
    } else if s.density.is_some() {
        let dens = TimeDensity::stationary(schema(s.build_density())?);
        let spec = schema(s.build_estimator())?;
        Estimator::Quadrature(dens, spec)
    } else {
        return Err(Failure::Usage(
            "measure needs an `ensemble` or a `density` section".into(),
        ));
    };

    let mut rows = Vec::new();
    let mut by_surface: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (id, surface) in &surfaces {
        let mut curve = Vec::new();
        for &[t1, t2] in &s.windows {
            let m = match &estimator {
                Estimator::Particles(cfg, ens) => runtime(
                    measure_ensemble_crossings(&field, cfg, ens, surface, t1, t2),
                )?,
                Estimator::Quadrature(dens, spec) => {
                    runtime(measure_energy(&field, dens, surface, t1, t2, spec))?
                }
            };
            rows.push(vec![
                id.clone(),
                fmt_f64(m.t1),
                fmt_f64(m.t2),
                fmt_f64(m.e),
                fmt_f64(m.estimator_stddev),
                m.samples_used.to_string(),
            ]);
            curve.push((0.5 * (t1 + t2), m.e));
        }
        by_surface.push((id.clone(), curve));
    }

    let mut out = OutDir::new(&args.out);
    if s.wants("measurements") {
        let bytes = io(csv_bytes(
            &["surface", "t1", "t2", "e", "stddev", "samples"],
            rows.into_iter(),
        ))?;
        io(out.write("measurements.csv", &bytes))?;
    }
    if args.plot {
        let svg = plot::Plot {
            title: "energy through surfaces per window".into(),
            x_label: "window midpoint t".into(),
            y_label: "E".into(),
            log_x: false,
            log_y: false,
            series: by_surface
                .into_iter()
                .map(|(label, points)| plot::Series {
                    label,
                    points,
                    line: true,
                    markers: true,
                })
                .collect(),
        }
        .render();
        io(out.write("measurements.svg", svg.as_bytes()))?;
    }
    io(out.finish(loaded.run_info("measure", threads)))?;
    Ok(0)
}

// --------------------------------------------------------------- wigner

fn cmd_wigner(args: RunArgs) -> RunOutcome {
    let threads = init_threads(args.threads);
    let loaded = load_scenario(&args.scenario, args.seed)?;
    let s = &loaded.scenario;
    let (profile, spec) = schema(s.wigner_profile())?;
    if spec.eps_ladder.is_empty() {
        return Err(Failure::Usage("wigner.eps_ladder must be nonempty".into()));
    }
    let (n, length, c, t_end) = (spec.n, spec.length, spec.c, spec.t_end);
    let packet = spec.packet.clone();
    let factory = move |eps: f64| {
        gaussian_packet(
            n,
            length,
            eps,
            profile,
            packet.q_center,
            packet.sigma0 * eps.sqrt(),
            packet.k0,
            packet.normalize,
        )
    };
    // Probe once so grid/packet mistakes report as scenario errors rather
    // than mid-ladder failures.
    schema(factory(spec.eps_ladder[0]).map(|_| ()))?;
    let report = runtime(compare_liouville(factory, t_end, &spec.eps_ladder, c))?;

    let mut out = OutDir::new(&args.out);
    if s.wants("wigner") {
        let bytes = io(csv_bytes(
            &["epsilon", "t", "l1_distance", "mass"],
            report.rungs.iter().map(|r| {
                vec![
                    fmt_f64(r.eps),
                    fmt_f64(r.t),
                    fmt_f64(r.l1_distance),
                    fmt_f64(r.mass),
                ]
            }),
        ))?;
        io(out.write("wigner.csv", &bytes))?;
    }
    if args.plot {
        let svg = plot::Plot {
            title: "wave-vs-Liouville L1 distance".into(),
            x_label: "epsilon".into(),
            y_label: "L1 distance".into(),
            log_x: true,
            log_y: true,
            series: vec![plot::Series {
                label: String::new(),
                points: report.rungs.iter().map(|r| (r.eps, r.l1_distance)).collect(),
                line: true,
                markers: true,
            }],
        }
        .render();
        io(out.write("convergence.svg", svg.as_bytes()))?;
    }
    for r in &report.rungs {
        println!(
            "eps = {:<8}: L1 = {:.5e}, mass = {}",
            fmt_f64(r.eps),
            r.l1_distance,
            fmt_f64(r.mass)
        );
    }
    if report.rungs.len() > 1 {
        println!(
            "ladder {}monotone, min adjacent ratio {:.3}",
            if report.monotone() { "" } else { "NOT " },
            report.min_ratio()
        );
    }
    io(out.finish(loaded.run_info("wigner", threads)))?;
    Ok(0)
}

// ------------------------------------------------------------- validate

fn cmd_validate(args: ValidateArgs) -> RunOutcome {
    if !SUITES.contains(&args.suite.as_str()) {
        return Err(Failure::Usage(format!(
            "unknown validation suite '{}' (expected one of {SUITES:?})",
            args.suite
        )));
    }
    let threads = init_threads(args.threads);
    let overrides: HashMap<String, f64> = match &args.tolerances {
        Some(path) => {
            let raw = std::fs::read(path)
                .map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))?;
            serde_json::from_slice(&raw)
                .map_err(|e| Failure::Usage(format!("tolerances {}: {e}", path.display())))?
        }
        None => HashMap::new(),
    };

    let mut checks = run_suite(&args.suite)
        .map_err(|e| Failure::Runtime(format!("suite '{}': {e}", args.suite)))?;
    schema(apply_tolerance_overrides(&mut checks, &overrides))?;

    for c in &checks {
        let rel = match c.cmp {
            Cmp::AtMost => "<=",
            Cmp::AtLeast => ">=",
            Cmp::Exceeds => ">",
        };
        let tag = c.criterion.map(|k| format!("[C{k}] ")).unwrap_or_default();
        println!(
            "{} {tag}{}::{}: {:.6e} {rel} {:.3e}  ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.value,
            c.tolerance,
            c.detail
        );
    }
    let n_pass = checks.iter().filter(|c| c.pass).count();
    let all_pass = n_pass == checks.len();

    // Criterion rollup: a criterion passes iff every contributing check does.
    let mut criteria: Vec<serde_json::Value> = Vec::new();
    for k in 1..=8u8 {
        let of_k: Vec<_> = checks.iter().filter(|c| c.criterion == Some(k)).collect();
        if !of_k.is_empty() {
            criteria.push(serde_json::json!({
                "criterion": k,
                "title": criterion_title(k),
                "passed": of_k.iter().all(|c| c.pass),
                "n_checks": of_k.len(),
            }));
        }
    }
    let doc = serde_json::json!({
        "schema": SCHEMA_VERSION,
        "suite": args.suite,
        "passed": all_pass,
        "n_checks": checks.len(),
        "n_passed": n_pass,
        "criteria": criteria,
        "checks": checks,
    });

    let mut out = OutDir::new(&args.out);
    io(out.write("validation.json", &io(json_bytes(&doc))?))?;
    if args.plot {
        // Margin = how much of the tolerance each check used; < 1 passes
        // regardless of the comparison's direction.
        let margins: Vec<(f64, f64)> = checks
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let m = match c.cmp {
                    Cmp::AtMost => c.value / c.tolerance,
                    Cmp::AtLeast | Cmp::Exceeds => c.tolerance / c.value,
                };
                (i as f64, m.abs().max(1e-18))
            })
            .collect();
        let svg = plot::Plot {
            title: format!("check margins, suite '{}' (pass < 1)", args.suite),
            x_label: "check index".into(),
            y_label: "value / tolerance".into(),
            log_x: false,
            log_y: true,
            series: vec![plot::Series {
                label: String::new(),
                points: margins,
                line: false,
                markers: true,
            }],
        }
        .render();
        io(out.write("checks.svg", svg.as_bytes()))?;
    }
    let mut tagged = b"validate\0".to_vec();
    tagged.extend_from_slice(args.suite.as_bytes());
    tagged.push(0);
    let mut names: Vec<_> = overrides.iter().collect();
    names.sort_by(|a, b| a.0.cmp(b.0));
    for (name, tol) in names {
        tagged.extend_from_slice(name.as_bytes());
        tagged.push(b'=');
        tagged.extend_from_slice(fmt_f64(*tol).as_bytes());
        tagged.push(0);
    }
    io(out.finish(RunInfo {
        command: "validate",
        scenario: None,
        config_sha256: sha256_hex(&tagged),
        seed: None,
        threads,
    }))?;

    println!("{}: {n_pass}/{} checks passed", args.suite, checks.len());
    Ok(if all_pass { 0 } else { 1 })
}
