//! Command-line driver for constrained Helfrich flow experiments.
//!
//! Four subcommands — `generate`, `flow`, `analyze`, `certify` — each take a
//! single flat `key = value` config file. Exit codes: 0 success,
//! 3 certified-negative, 2 error.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

const GENERATE_KEYS: &str = "\
Config keys:
  kind          torus | sphere | ellipsoid | perturbed_sphere | biconcave | dumbbell  (required)
  output_dir    directory for outputs (required)
  out           OBJ file name inside output_dir (default mesh.obj)
  c0            spontaneous curvature recorded in the sidecar (default 0)
  torus_r, torus_a, n_u, n_v    torus parameters (defaults 2, 1, 64, 32)
  radius        sphere-like radius (default 1)
  subdiv        icosphere subdivisions for sphere-like kinds (default 4)
  ax, ay, az    ellipsoid semi-axes (defaults 1, 1, 1.3)
  modes         Legendre modes `deg:amp, deg:amp` for perturbed_sphere
  target_sigma  isoperimetric ratio solved by bisection (perturbed_sphere)
  neck, elongation   dumbbell parameters (defaults 0.3, 1.6)
  jitter        uniform vertex jitter amplitude (default 0)
  seed          RNG seed for jitter (default 0)

Writes <out> plus a JSON sidecar with measured area, volume, sigma, energies.";

const FLOW_KEYS: &str = "\
Config keys:
  mesh_in       input OBJ (required)
  output_dir    directory for trajectory.csv, snapshots, summary.json (required)
  c0            spontaneous curvature (default 0)
  dt_init, dt_min, dt_max      step-size policy (defaults 1e-4, 1e-13, 1e-2)
  cfl_c         explicit step cap factor of h^4 (default 0.1)
  constraint_tol  relative area/volume tolerance per step (default 1e-8)
  decay_slack   absolute energy-increase tolerance (default 1e-10)
  stop_velocity_tol  L2 velocity stopping threshold (default 1e-4)
  t_max, max_steps   horizon (defaults 10, 100000)
  snapshot_every     OBJ snapshot cadence in accepted steps (default 0 = off)
  record_every       trajectory record cadence (default 1)
  tangential_smoothing  on | off (default off)
  integrator    explicit | semi_implicit (default explicit)
  gradient      discrete_energy | geometric (default discrete_energy)
  kappa_rho     radius for the per-record curvature concentration column";

const ANALYZE_KEYS: &str = "\
Config keys:
  mesh_in        input OBJ (required)
  output_dir     directory for diagnostics.json and profile CSVs (required)
  c0             spontaneous curvature (default 0)
  c_diam         diameter constant entering Omega (default 1.0)
  kappa_rho_list comma-separated radii for the kappa profile
  gamma_rho_list comma-separated radii for the gamma profile (about the origin)
  liyau_points   semicolon-separated 3D points `x,y,z; x,y,z`
  localized_center, localized_rho   bump-localized curvature energy";

const CERTIFY_KEYS: &str = "\
Config keys:
  mesh_in     input OBJ (required)
  c0          spontaneous curvature (default 0)
  c_diam      diameter constant entering Omega for c0 < 0 (default 1.0)
  output_dir  optional directory for the resolved-config echo

Prints the threshold report as JSON on stdout.
Exit code 0 when admissible, 3 when not (or sigma out of range), 2 on error.";

#[derive(Parser)]
#[command(
    name = "helfrich",
    about = "Area- and volume-preserving Helfrich flow on closed triangle meshes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an initial mesh (OBJ + JSON sidecar with measurements).
    #[command(after_help = GENERATE_KEYS)]
    Generate { config: PathBuf },
    /// Run the (A0, V0, c0)-Helfrich flow from a mesh.
    #[command(after_help = FLOW_KEYS)]
    Flow { config: PathBuf },
    /// Evaluate all diagnostics of a mesh into diagnostics.json.
    #[command(after_help = ANALYZE_KEYS)]
    Analyze { config: PathBuf },
    /// Check the explicit energy threshold for admissibility.
    #[command(after_help = CERTIFY_KEYS)]
    Certify { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate { config } => commands::generate(config),
        Command::Flow { config } => commands::flow(config),
        Command::Analyze { config } => commands::analyze(config),
        Command::Certify { config } => commands::certify(config),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
