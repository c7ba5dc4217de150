//! Implementations of the four subcommands.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use serde_json::json;

use helfrich::axisym;
use helfrich::diagnostics::{self, DiagnosticsError};
use helfrich::energy;
use helfrich::flow::{FlowConfig, Integrator, RunSink, TrajectoryRecord, TRAJECTORY_HEADER};
use helfrich::multiplier::GradientKind;
use helfrich::surface::{read_obj_file, validate, write_obj_file, Geometry, TriMesh};

use crate::config::RunConfig;

fn ensure_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| format!("serialize {}: {e}", path.display()))?;
    text.push('\n');
    write_text(path, &text)
}

fn echo_resolved(
    cfg: &RunConfig,
    dir: &Path,
    effective: BTreeMap<String, String>,
) -> Result<(), String> {
    write_text(
        &dir.join("resolved_config.cfg"),
        &cfg.resolved_echo(&effective),
    )
}

fn load_validated_mesh(path: &Path) -> Result<TriMesh, String> {
    let mut mesh = read_obj_file(path).map_err(|e| e.to_string())?;
    validate(&mut mesh).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(mesh)
}

fn measurement_sidecar(mesh: &TriMesh, c0: f64) -> Result<serde_json::Value, String> {
    let geom = Geometry::new(mesh).map_err(|e| e.to_string())?;
    let rep = energy::report(&geom, c0);
    Ok(json!({
        "c0": c0,
        "num_vertices": mesh.num_vertices(),
        "num_triangles": mesh.num_triangles(),
        "area": rep.area,
        "volume": rep.volume,
        "sigma": rep.sigma,
        "willmore": rep.willmore,
        "helfrich": rep.helfrich,
        "w0": rep.w0,
        "cmc_deficit": rep.cmc_deficit,
        "total_mean_curvature": rep.total_mean_curvature,
        "sign_ambiguous_vertices": geom.sign_ambiguous_count(),
    }))
}

pub fn generate(config_path: &Path) -> Result<ExitCode, String> {
    let cfg = RunConfig::load(config_path)?;
    let kind = cfg.require_string("kind")?;
    let output_dir = cfg.require_path("output_dir")?;
    let out_name = cfg.string("out").unwrap_or_else(|| "mesh.obj".into());
    let c0 = cfg.f64_or("c0", 0.0)?;
    let jitter = cfg.f64_or("jitter", 0.0)?;
    let seed = cfg.u64_or("seed", 0)?;

    let mut mesh = match kind.as_str() {
        "torus" => {
            let r = cfg.f64_or("torus_r", 2.0)?;
            let a = cfg.f64_or("torus_a", 1.0)?;
            let n_u = cfg.usize_or("n_u", 64)?;
            let n_v = cfg.usize_or("n_v", 32)?;
            axisym::make_torus(r, a, n_u, n_v).map_err(|e| e.to_string())?
        }
        "sphere" => {
            let radius = cfg.f64_or("radius", 1.0)?;
            let subdiv = cfg.usize_or("subdiv", 4)? as u32;
            axisym::sphere(radius, subdiv)
        }
        "ellipsoid" => {
            let ax = cfg.f64_or("ax", 1.0)?;
            let ay = cfg.f64_or("ay", 1.0)?;
            let az = cfg.f64_or("az", 1.3)?;
            let subdiv = cfg.usize_or("subdiv", 4)? as u32;
            axisym::ellipsoid(ax, ay, az, subdiv)
        }
        "perturbed_sphere" => {
            let radius = cfg.f64_or("radius", 1.0)?;
            let subdiv = cfg.usize_or("subdiv", 4)? as u32;
            let modes = cfg.mode_list("modes")?.unwrap_or_else(|| vec![(2, 1.0)]);
            let target = cfg.f64("target_sigma")?;
            axisym::make_perturbed_sphere(radius, &modes, target, subdiv)
                .map_err(|e| e.to_string())?
        }
        "biconcave" => {
            let radius = cfg.f64_or("radius", 1.0)?;
            let subdiv = cfg.usize_or("subdiv", 4)? as u32;
            axisym::make_biconcave(radius, None, subdiv)
        }
        "dumbbell" => {
            let neck = cfg.f64_or("neck", 0.3)?;
            let elongation = cfg.f64_or("elongation", 1.6)?;
            let n_u = cfg.usize_or("n_u", 64)?;
            let n_v = cfg.usize_or("n_v", 32)?;
            axisym::make_dumbbell(neck, elongation, n_u, n_v).map_err(|e| e.to_string())?
        }
        other => return Err(format!("unknown generator kind `{other}`")),
    };
    cfg.finish()?;

    if jitter > 0.0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        mesh.map_vertices(|v| {
            v + jitter
                * Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
        });
    }

    ensure_dir(&output_dir)?;
    let diag = validate(&mut mesh).map_err(|e| e.to_string())?;
    let obj_path = output_dir.join(&out_name);
    write_obj_file(&mesh, &obj_path).map_err(|e| e.to_string())?;
    let mut sidecar = measurement_sidecar(&mesh, c0)?;
    sidecar["genus"] = json!(diag.genus);
    sidecar["min_triangle_quality"] = json!(diag.min_triangle_quality);
    write_json(&output_dir.join(format!("{out_name}.json")), &sidecar)?;

    let mut effective: BTreeMap<String, String> = cfg.given().clone();
    effective.insert("kind".into(), kind);
    effective.entry("out".to_string()).or_insert(out_name);
    effective.entry("c0".to_string()).or_insert(format!("{c0}"));
    echo_resolved(&cfg, &output_dir, effective)?;
    println!("{}", obj_path.display());
    Ok(ExitCode::SUCCESS)
}

pub fn certify(config_path: &Path) -> Result<ExitCode, String> {
    let cfg = RunConfig::load(config_path)?;
    let mesh_in = cfg.require_path("mesh_in")?;
    let c0 = cfg.f64_or("c0", 0.0)?;
    let c_diam = cfg.f64_or("c_diam", diagnostics::DEFAULT_C_DIAM)?;
    let output_dir = cfg.path("output_dir");
    cfg.finish()?;

    let mesh = load_validated_mesh(&mesh_in)?;
    if let Some(dir) = &output_dir {
        ensure_dir(dir)?;
        let mut effective = cfg.given().clone();
        effective.entry("c0".to_string()).or_insert(format!("{c0}"));
        effective
            .entry("c_diam".to_string())
            .or_insert(format!("{c_diam}"));
        echo_resolved(&cfg, dir, effective)?;
    }

    match diagnostics::threshold_check(&mesh, c0, c_diam) {
        Ok(report) => {
            let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            println!("{json}");
            if report.admissible {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
        Err(e @ DiagnosticsError::SigmaOutOfRange { .. }) => {
            let out = json!({ "admissible": false, "reason": e.to_string() });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).map_err(|e| e.to_string())?
            );
            Ok(ExitCode::from(3))
        }
        Err(e) => Err(e.to_string()),
    }
}

/// Streams trajectory rows and snapshots to the output directory so partial
/// results survive abnormal termination.
struct FileSink {
    trajectory: std::io::BufWriter<std::fs::File>,
    output_dir: PathBuf,
    snapshots: Vec<String>,
}

impl FileSink {
    fn new(output_dir: &Path) -> Result<Self, String> {
        let path = output_dir.join("trajectory.csv");
        let file = std::fs::File::create(&path)
            .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
        let mut trajectory = std::io::BufWriter::new(file);
        writeln!(trajectory, "{TRAJECTORY_HEADER}").map_err(|e| e.to_string())?;
        Ok(Self {
            trajectory,
            output_dir: output_dir.to_path_buf(),
            snapshots: Vec::new(),
        })
    }
}

impl RunSink for FileSink {
    fn on_record(&mut self, record: &TrajectoryRecord) {
        let _ = writeln!(self.trajectory, "{}", record.csv_row());
        let _ = self.trajectory.flush();
    }
    fn on_snapshot(&mut self, step: u64, mesh: &TriMesh) {
        let name = format!("snap_{step}.obj");
        if write_obj_file(mesh, self.output_dir.join(&name)).is_ok() {
            self.snapshots.push(name);
        }
    }
}

pub fn flow(config_path: &Path) -> Result<ExitCode, String> {
    let cfg = RunConfig::load(config_path)?;
    let mesh_in = cfg.require_path("mesh_in")?;
    let output_dir = cfg.require_path("output_dir")?;
    let c0 = cfg.f64_or("c0", 0.0)?;

    let defaults = FlowConfig::default();
    let integrator = match cfg.string("integrator").as_deref() {
        None | Some("explicit") => Integrator::Explicit,
        Some("semi_implicit") => Integrator::SemiImplicit,
        Some(other) => return Err(format!("key `integrator`: unknown value `{other}`")),
    };
    let gradient = match cfg.string("gradient").as_deref() {
        None | Some("discrete_energy") => GradientKind::DiscreteEnergy,
        Some("geometric") => GradientKind::Geometric,
        Some(other) => return Err(format!("key `gradient`: unknown value `{other}`")),
    };
    let flow_cfg = FlowConfig {
        dt_init: cfg.f64_or("dt_init", defaults.dt_init)?,
        dt_min: cfg.f64_or("dt_min", defaults.dt_min)?,
        dt_max: cfg.f64_or("dt_max", defaults.dt_max)?,
        cfl_c: cfg.f64_or("cfl_c", defaults.cfl_c)?,
        constraint_tol: cfg.f64_or("constraint_tol", defaults.constraint_tol)?,
        decay_slack: cfg.f64_or("decay_slack", defaults.decay_slack)?,
        stop_velocity_tol: cfg.f64_or("stop_velocity_tol", defaults.stop_velocity_tol)?,
        t_max: cfg.f64_or("t_max", defaults.t_max)?,
        max_steps: cfg.u64_or("max_steps", defaults.max_steps)?,
        snapshot_every: cfg.u64_or("snapshot_every", defaults.snapshot_every)?,
        record_every: cfg.u64_or("record_every", defaults.record_every)?,
        tangential_smoothing: cfg.bool_or("tangential_smoothing", defaults.tangential_smoothing)?,
        integrator,
        gradient,
        kappa_rho: cfg.f64("kappa_rho")?,
    };
    flow_cfg.validate()?;
    cfg.finish()?;

    ensure_dir(&output_dir)?;
    let mut effective: BTreeMap<String, String> = cfg.given().clone();
    for (k, v) in [
        ("c0", format!("{c0}")),
        ("dt_init", format!("{}", flow_cfg.dt_init)),
        ("dt_min", format!("{}", flow_cfg.dt_min)),
        ("dt_max", format!("{}", flow_cfg.dt_max)),
        ("cfl_c", format!("{}", flow_cfg.cfl_c)),
        ("constraint_tol", format!("{}", flow_cfg.constraint_tol)),
        ("decay_slack", format!("{}", flow_cfg.decay_slack)),
        (
            "stop_velocity_tol",
            format!("{}", flow_cfg.stop_velocity_tol),
        ),
        ("t_max", format!("{}", flow_cfg.t_max)),
        ("max_steps", format!("{}", flow_cfg.max_steps)),
        ("snapshot_every", format!("{}", flow_cfg.snapshot_every)),
        ("record_every", format!("{}", flow_cfg.record_every)),
        (
            "tangential_smoothing",
            if flow_cfg.tangential_smoothing {
                "on"
            } else {
                "off"
            }
            .to_string(),
        ),
        (
            "integrator",
            match flow_cfg.integrator {
                Integrator::Explicit => "explicit".into(),
                Integrator::SemiImplicit => "semi_implicit".into(),
            },
        ),
        (
            "gradient",
            match flow_cfg.gradient {
                GradientKind::DiscreteEnergy => "discrete_energy".into(),
                GradientKind::Geometric => "geometric".into(),
            },
        ),
    ] {
        effective.entry(k.to_string()).or_insert(v);
    }
    echo_resolved(&cfg, &output_dir, effective)?;

    let mesh = load_validated_mesh(&mesh_in)?;
    let mut sink = FileSink::new(&output_dir)?;
    let out = helfrich::flow::run(mesh, c0, &flow_cfg, &mut sink).map_err(|e| e.to_string())?;

    let mut summary = serde_json::to_value(&out.summary).map_err(|e| e.to_string())?;
    summary["snapshots"] = json!(sink.snapshots);
    write_json(&output_dir.join("summary.json"), &summary)?;
    println!(
        "{:?} after {} steps (t = {:.6e}); outputs in {}",
        out.summary.termination,
        out.summary.steps,
        out.summary.final_t,
        output_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn analyze(config_path: &Path) -> Result<ExitCode, String> {
    let cfg = RunConfig::load(config_path)?;
    let mesh_in = cfg.require_path("mesh_in")?;
    let output_dir = cfg.require_path("output_dir")?;
    let c0 = cfg.f64_or("c0", 0.0)?;
    let c_diam = cfg.f64_or("c_diam", diagnostics::DEFAULT_C_DIAM)?;
    let kappa_rhos = cfg.f64_list("kappa_rho_list")?.unwrap_or_default();
    let gamma_rhos = cfg.f64_list("gamma_rho_list")?.unwrap_or_default();
    let liyau_points = cfg.point_list("liyau_points")?.unwrap_or_default();
    let localized_center = cfg.point_list("localized_center")?;
    let localized_rho = cfg.f64("localized_rho")?;
    cfg.finish()?;

    ensure_dir(&output_dir)?;
    let mut mesh = read_obj_file(&mesh_in).map_err(|e| e.to_string())?;
    let mesh_diag = validate(&mut mesh).map_err(|e| e.to_string())?;
    let geom = Geometry::new(&mesh).map_err(|e| e.to_string())?;

    let mut doc = json!({
        "mesh": {
            "path": mesh_in.display().to_string(),
            "diagnostics": serde_json::to_value(&mesh_diag).map_err(|e| e.to_string())?,
            "sign_ambiguous_vertices": geom.sign_ambiguous_count(),
        },
        "energy": serde_json::to_value(energy::report(&geom, c0)).map_err(|e| e.to_string())?,
        "c0": c0,
    });

    doc["threshold"] = match diagnostics::threshold_check_of(&geom, c0, c_diam) {
        Ok(report) => serde_json::to_value(&report).map_err(|e| e.to_string())?,
        Err(e) => json!({ "error": e.to_string() }),
    };

    if !liyau_points.is_empty() {
        let mut entries = Vec::new();
        for p in &liyau_points {
            let point = Vector3::new(p[0], p[1], p[2]);
            match diagnostics::li_yau_functional_of(&mesh, &geom, point, c0) {
                Ok(v) => entries.push(json!({
                    "point": p,
                    "value": v.value,
                    "multiplicity_bound": v.multiplicity_bound,
                    "excluded_area": v.excluded_area,
                    "excluded_vertices": v.excluded_vertices,
                })),
                Err(e) => entries.push(json!({ "point": p, "error": e.to_string() })),
            }
        }
        doc["li_yau"] = json!(entries);
    }

    if !kappa_rhos.is_empty() {
        let mut csv = String::from("rho,value\n");
        let mut entries = Vec::new();
        for &rho in &kappa_rhos {
            let k = diagnostics::kappa_concentration_of(&mesh, &geom, rho);
            csv.push_str(&format!("{:.17e},{:.17e}\n", rho, k.value));
            entries.push(json!({
                "rho": rho,
                "value": k.value,
                "argmax_center": k.argmax_center,
                "argmax_vertex": k.argmax_vertex,
            }));
        }
        write_text(&output_dir.join("kappa_profile.csv"), &csv)?;
        doc["kappa"] = json!(entries);
    }

    if !gamma_rhos.is_empty() {
        match diagnostics::gamma_monotonicity_of(&mesh, &geom, c0, &gamma_rhos, 1e-9) {
            Ok(profile) => {
                let mut csv = String::from("rho,value\n");
                for (rho, value) in profile.rhos.iter().zip(&profile.values) {
                    csv.push_str(&format!("{rho:.17e},{value:.17e}\n"));
                }
                write_text(&output_dir.join("gamma_profile.csv"), &csv)?;
                doc["gamma"] = serde_json::to_value(&profile).map_err(|e| e.to_string())?;
            }
            Err(e) => {
                doc["gamma"] = json!({ "error": e.to_string() });
            }
        }
    }

    if let (Some(centers), Some(rho)) = (&localized_center, localized_rho) {
        let mut entries = Vec::new();
        for p in centers {
            let value = diagnostics::localized_curvature_energy_of(
                &mesh,
                &geom,
                Vector3::new(p[0], p[1], p[2]),
                rho,
            );
            entries.push(json!({ "center": p, "rho": rho, "value": value }));
        }
        doc["localized_curvature_energy"] = json!(entries);
    }

    if mesh.grid.is_some() {
        let profile = axisym::extract_profile(&mesh).map_err(|e| e.to_string())?;
        write_text(&output_dir.join("profile.csv"), &profile.to_csv())?;
        let mut axi = json!({
            "axisymmetry_defect": axisym::axisymmetry_defect(&mesh).map_err(|e| e.to_string())?,
        });
        match axisym::hyperbolic_length(&profile) {
            Ok(len) => axi["hyperbolic_length"] = json!(len),
            Err(e) => axi["hyperbolic_length_error"] = json!(e.to_string()),
        }
        doc["axisymmetry"] = axi;
    }

    let mut effective = cfg.given().clone();
    effective.entry("c0".to_string()).or_insert(format!("{c0}"));
    effective
        .entry("c_diam".to_string())
        .or_insert(format!("{c_diam}"));
    echo_resolved(&cfg, &output_dir, effective)?;
    write_json(&output_dir.join("diagnostics.json"), &doc)?;
    println!("{}", output_dir.join("diagnostics.json").display());
    Ok(ExitCode::SUCCESS)
}
