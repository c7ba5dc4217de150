//! Time integration of the (A0, V0, c0)-Helfrich flow
//! `∂t f = −2∇H_{c0}(f) + λ1 Hν + λ2 ν` with per-step exact constraint
//! restoration, an energy-decay safeguard, stopping and blow-up detection.
//!
//! The default integrator is explicit Euler under a `cfl_c · h⁴` step cap.
//! A semi-implicit variant treats the leading bilaplacian implicitly
//! (`(M + dt·L M⁻¹ L) f^{n+1} = M f^n + dt·M v(f^n) + dt·L M⁻¹ L f^n`) behind
//! the same accept/reject contract and is the practical choice for long runs.

mod cg;
mod rescale;

pub use rescale::{rescale_record, rescale_state, rescale_trajectory};

use std::sync::Arc;
use std::time::Instant;

use nalgebra::Vector3;
use serde::Serialize;

use crate::multiplier::{self, GradientKind, MultiplierError, MultiplierSolution};
use crate::surface::{self, Geometry, SurfaceError, Topology, TriMesh};

/// Isoperimetric ratios this close to 1 are treated as the round sphere
/// (constraint degeneracy) by the flow and the certifier.
pub const SIGMA_DEGENERACY_TOL: f64 = crate::diagnostics::SIGMA_TOL;

const DT_GROWTH: f64 = 1.2;
const MAX_NEWTON: usize = 12;
/// Restoration always drives the relative constraint error down here, far
/// below any useful `constraint_tol`. The accepted state then sits on the
/// constraint manifold to near machine precision, so a later restoration can
/// only move it by ~1e-12 — an energy effect below `decay_slack`. (Stopping
/// at the configured tolerance instead lets states hover at the stopping
/// boundary, where a restoration jump changes the energy by a dt-independent
/// amount and can wedge the accept/reject loop into dt underflow.)
const NEWTON_TARGET_REL: f64 = 1e-12;
const MAX_REJECTS_PER_STEP: usize = 60;
const SMOOTHING_STRENGTH: f64 = 0.5;
const CG_REL_TOL: f64 = 1e-10;
const CG_MAX_ITER: usize = 4000;
/// Coefficient of the implicitly treated bilaplacian (the flow's leading
/// fourth-order term has unit coefficient).
const STABILIZATION: f64 = 1.0;

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("invalid flow config: {0}")]
    InvalidConfig(String),
    #[error(
        "degenerate constraint: isoperimetric ratio σ = {sigma:.6} within {tol:.1e} of 1 \
         (round sphere has no area/volume-preserving Helfrich flow)"
    )]
    DegenerateConstraint { sigma: f64, tol: f64 },
    #[error(transparent)]
    Multiplier(#[from] MultiplierError),
    #[error("dt underflow: dt = {dt:.3e} < dt_min = {dt_min:.3e} at t = {t:.6e} after {rejects} rejections (blow-up suspected)")]
    DtUnderflow {
        dt: f64,
        dt_min: f64,
        t: f64,
        rejects: usize,
    },
    #[error("mesh degenerated during step at t = {t:.6e}: {reason}")]
    MeshDegeneracy { t: f64, reason: String },
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Explicit,
    SemiImplicit,
}

/// Time-step policy, tolerances, stopping criteria and output schedule.
#[derive(Debug, Clone, Serialize)]
pub struct FlowConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Explicit-Euler step cap `cfl_c · h⁴` with h the minimum edge length.
    pub cfl_c: f64,
    /// Relative area/volume drift allowed after restoration.
    pub constraint_tol: f64,
    /// Absolute energy increase tolerated per accepted step.
    pub decay_slack: f64,
    /// Stop when the L² norm of ∂t f falls below this.
    pub stop_velocity_tol: f64,
    pub t_max: f64,
    pub max_steps: u64,
    /// Emit a mesh snapshot every this many accepted steps (0 = never).
    pub snapshot_every: u64,
    /// Emit a trajectory record every this many accepted steps.
    pub record_every: u64,
    pub tangential_smoothing: bool,
    pub integrator: Integrator,
    pub gradient: GradientKind,
    /// Radius for the per-record curvature concentration column.
    pub kappa_rho: Option<f64>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-4,
            dt_min: 1e-13,
            dt_max: 1e-2,
            cfl_c: 0.1,
            constraint_tol: 1e-8,
            decay_slack: 1e-10,
            stop_velocity_tol: 1e-4,
            t_max: 10.0,
            max_steps: 100_000,
            snapshot_every: 0,
            record_every: 1,
            tangential_smoothing: false,
            integrator: Integrator::default(),
            gradient: GradientKind::default(),
            kappa_rho: None,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(format!(
                "need dt_min ≤ dt_init ≤ dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            ));
        }
        for (name, v) in [
            ("cfl_c", self.cfl_c),
            ("constraint_tol", self.constraint_tol),
            ("decay_slack", self.decay_slack),
            ("stop_velocity_tol", self.stop_velocity_tol),
        ] {
            if v <= 0.0 {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// State of the flow at one time.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub mesh: TriMesh,
    pub t: f64,
    pub c0: f64,
    pub area_target: f64,
    pub volume_target: f64,
    pub last_multipliers: Option<MultiplierSolution>,
    pub energy: f64,
    pub step_count: u64,
    /// Next step size to attempt.
    pub dt: f64,
    geom: Geometry,
    topology: Arc<Topology>,
}

impl FlowState {
    /// Validate the mesh, normalise orientation, read the targets off it and
    /// reject constraint-degenerate (round-sphere) initial data.
    pub fn new(mut mesh: TriMesh, c0: f64, cfg: &FlowConfig) -> Result<Self, FlowError> {
        surface::validate(&mut mesh)?;
        let geom = Geometry::new(&mesh)?;
        let sigma = crate::energy::sigma_of(&geom);
        if sigma >= 1.0 - SIGMA_DEGENERACY_TOL {
            return Err(FlowError::DegenerateConstraint {
                sigma,
                tol: SIGMA_DEGENERACY_TOL,
            });
        }
        let energy = crate::energy::helfrich_of(&geom, c0);
        let topology = geom.topology.clone();
        Ok(Self {
            mesh,
            t: 0.0,
            c0,
            area_target: geom.area,
            volume_target: geom.volume,
            last_multipliers: None,
            energy,
            step_count: 0,
            dt: cfg.dt_init,
            geom,
            topology,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    /// Flow velocity and multipliers at the current state.
    pub fn velocity(
        &self,
        kind: GradientKind,
    ) -> Result<(Vec<Vector3<f64>>, MultiplierSolution), MultiplierError> {
        multiplier::flow_velocity(&self.mesh, &self.geom, self.c0, kind)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepReport {
    pub dt_used: f64,
    pub rejects: usize,
    pub velocity_l2: f64,
    pub multipliers: MultiplierSolution,
    pub newton_iters: usize,
    pub constraint_err: f64,
    /// Energy change of the accepted step (≤ decay_slack).
    pub energy_delta: f64,
    pub smoothing_applied: bool,
}

/// One record of the trajectory CSV.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub step: u64,
    pub t: f64,
    /// Step size used to reach this state (0 for the initial state).
    pub dt: f64,
    pub energy_helfrich: f64,
    pub energy_willmore: f64,
    pub area: f64,
    pub volume: f64,
    pub sigma: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub cmc_deficit: f64,
    pub velocity_l2: f64,
    pub max_a_sq: f64,
    pub diameter: f64,
    /// Present only for meshes with a revolution grid.
    pub hyperbolic_length: Option<f64>,
    /// Curvature concentration at the configured radius.
    pub kappa_rho: Option<f64>,
    pub accepted: bool,
}

pub const TRAJECTORY_HEADER: &str = "step,t,dt,energy_helfrich,energy_willmore,area,volume,sigma,lambda1,lambda2,cmc_deficit,velocity_l2,max_a_sq,diameter,hyperbolic_length,kappa_rho,accepted";

impl TrajectoryRecord {
    pub fn csv_row(&self) -> String {
        let f = |v: f64| format!("{:.17e}", v);
        let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            f(self.t),
            f(self.dt),
            f(self.energy_helfrich),
            f(self.energy_willmore),
            f(self.area),
            f(self.volume),
            f(self.sigma),
            f(self.lambda1),
            f(self.lambda2),
            f(self.cmc_deficit),
            f(self.velocity_l2),
            f(self.max_a_sq),
            f(self.diameter),
            opt(self.hyperbolic_length),
            opt(self.kappa_rho),
            u8::from(self.accepted),
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    /// The ρ at which the kappa_rho column was evaluated, if any.
    pub kappa_rho: Option<f64>,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAJECTORY_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
#[serde(rename_all = "UPPERCASE")]
pub enum Termination {
    Converged,
    Timeout,
    Singular,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub termination: Termination,
    pub reason: String,
    pub steps: u64,
    pub rejects: u64,
    pub final_t: f64,
    pub final_energy: f64,
    pub final_velocity_l2: Option<f64>,
    /// L² norm of the constrained Helfrich stationarity residual at the end.
    pub final_stationarity_residual: Option<f64>,
    pub max_area_drift: f64,
    pub max_volume_drift: f64,
    /// Largest energy change of an accepted step (≤ decay_slack by contract).
    pub max_energy_increase: f64,
    pub wall_time_s: f64,
    pub integrator: Integrator,
    pub gradient: GradientKind,
    pub tangential_smoothing: bool,
}

/// Sink for streaming outputs of [`run`].
pub trait RunSink {
    fn on_record(&mut self, _record: &TrajectoryRecord) {}
    fn on_snapshot(&mut self, _step: u64, _mesh: &TriMesh) {}
}

/// Discards everything.
pub struct NullSink;
impl RunSink for NullSink {}

pub struct RunOutput {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
    pub state: FlowState,
}

/// Advance by one accepted step (internally retrying with halved dt on
/// energy-decay or restoration failures).
pub fn step(state: &mut FlowState, cfg: &FlowConfig) -> Result<StepReport, FlowError> {
    let (velocity, sol) = state.velocity(cfg.gradient)?;
    step_with_velocity(state, cfg, &velocity, sol)
}

fn step_with_velocity(
    state: &mut FlowState,
    cfg: &FlowConfig,
    velocity: &[Vector3<f64>],
    sol: MultiplierSolution,
) -> Result<StepReport, FlowError> {
    let velocity_l2 = multiplier::l2_norm_vector(&state.geom, velocity);
    let mut dt = state.dt.min(cfg.dt_max);
    if cfg.integrator == Integrator::Explicit {
        let h = state.geom.min_edge;
        dt = dt.min(cfg.cfl_c * h * h * h * h);
    }
    dt = dt.max(cfg.dt_min);

    let mut rejects = 0usize;
    let mut candidate = state.mesh.clone();
    loop {
        match attempt_step(state, cfg, velocity, dt, &mut candidate) {
            Ok(accepted) => {
                let mut accepted = accepted;
                let mut smoothing_applied = false;
                if cfg.tangential_smoothing {
                    if let Some(sm) = try_tangential_smoothing(state, cfg, &accepted) {
                        accepted = sm;
                        smoothing_applied = true;
                    }
                }
                let energy_delta = accepted.energy - state.energy;
                state.mesh = accepted.mesh;
                state.geom = accepted.geom;
                state.energy = accepted.energy;
                state.t += dt;
                state.step_count += 1;
                state.last_multipliers = Some(sol);
                state.dt = (dt * DT_GROWTH).min(cfg.dt_max);
                return Ok(StepReport {
                    dt_used: dt,
                    rejects,
                    velocity_l2,
                    multipliers: sol,
                    newton_iters: accepted.newton_iters,
                    constraint_err: accepted.constraint_err,
                    energy_delta,
                    smoothing_applied,
                });
            }
            Err(reason) => {
                if std::env::var_os("HELFRICH_TRACE_REJECTS").is_some() {
                    eprintln!("reject at dt {dt:.3e}: {reason}");
                }
                rejects += 1;
                dt *= 0.5;
                if dt < cfg.dt_min || rejects > MAX_REJECTS_PER_STEP {
                    state.dt = dt;
                    return Err(FlowError::DtUnderflow {
                        dt,
                        dt_min: cfg.dt_min,
                        t: state.t,
                        rejects,
                    });
                }
            }
        }
    }
}

struct AcceptedCandidate {
    mesh: TriMesh,
    geom: Geometry,
    energy: f64,
    newton_iters: usize,
    constraint_err: f64,
}

fn attempt_step(
    state: &FlowState,
    cfg: &FlowConfig,
    velocity: &[Vector3<f64>],
    dt: f64,
    candidate: &mut TriMesh,
) -> Result<AcceptedCandidate, String> {
    let vs = state.mesh.vertices();
    let nv = vs.len();
    let new_positions: Vec<Vector3<f64>> = match cfg.integrator {
        Integrator::Explicit => (0..nv).map(|v| vs[v] + dt * velocity[v]).collect(),
        Integrator::SemiImplicit => {
            let mut system = cg::BilaplacianSystem::new(&state.geom, dt * STABILIZATION);
            let mut rhs = vec![0.0; nv];
            let mut sol = vec![0.0; nv];
            let mut stiff = vec![0.0; nv];
            let mut out = vec![Vector3::zeros(); nv];
            for coord in 0..3 {
                let comp: Vec<f64> = (0..nv).map(|v| vs[v][coord]).collect();
                state.geom.stiffness_apply(&comp, &mut stiff);
                let mut tmp = vec![0.0; nv];
                for v in 0..nv {
                    tmp[v] = stiff[v] / state.geom.mixed_area[v];
                }
                state.geom.stiffness_apply(&tmp, &mut stiff);
                for v in 0..nv {
                    rhs[v] = state.geom.mixed_area[v] * (comp[v] + dt * velocity[v][coord])
                        + dt * STABILIZATION * stiff[v];
                    sol[v] = comp[v] + dt * velocity[v][coord];
                }
                system
                    .solve(&rhs, &mut sol, CG_REL_TOL, CG_MAX_ITER)
                    .ok_or("semi-implicit solve did not converge")?;
                for v in 0..nv {
                    out[v][coord] = sol[v];
                }
            }
            out
        }
    };
    candidate.set_vertices(new_positions);
    let geom = Geometry::with_topology(candidate, state.topology.clone())
        .map_err(|e| format!("candidate geometry: {e}"))?;
    let (geom, newton_iters, constraint_err) = restore_constraints(
        candidate,
        geom,
        state.area_target,
        state.volume_target,
        cfg.constraint_tol,
        &state.topology,
    )?;
    let energy = crate::energy::helfrich_of(&geom, state.c0);
    if energy > state.energy + cfg.decay_slack {
        return Err(format!("energy increased by {:.3e}", energy - state.energy));
    }
    Ok(AcceptedCandidate {
        mesh: candidate.clone(),
        geom,
        energy,
        newton_iters,
        constraint_err,
    })
}

/// Two-parameter Newton correction `f ← f + s·Hν + u·ν` driving
/// (A − A0, V − V0) to zero. The directions are frozen from the entry
/// geometry; the Jacobian uses the exact discrete area and volume gradients
/// (−S_v and N_v/6) of the current iterate.
fn restore_constraints(
    mesh: &mut TriMesh,
    geom: Geometry,
    area_target: f64,
    volume_target: f64,
    tol: f64,
    topology: &Arc<Topology>,
) -> Result<(Geometry, usize, f64), String> {
    let nv = mesh.num_vertices();
    let (d1, d2) = multiplier::constraint_basis(&geom);
    let base: Vec<Vector3<f64>> = mesh.vertices().to_vec();

    let mut current = geom;
    let (mut s, mut u) = (0.0, 0.0);
    let target = NEWTON_TARGET_REL.min(0.1 * tol);
    for iter in 0..MAX_NEWTON {
        let a_err = (current.area - area_target) / area_target;
        let v_err = (current.volume - volume_target) / volume_target;
        let err = a_err.abs().max(v_err.abs());
        if err <= target {
            return Ok((current, iter, err));
        }
        // Exact first variations at the current iterate.
        let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
        for v in 0..nv {
            let grad_a = -current.lap_vec[v];
            let grad_v = current.normal_sum[v] / 6.0;
            j11 += grad_a.dot(&d1[v]);
            j12 += grad_a.dot(&d2[v]);
            j21 += grad_v.dot(&d1[v]);
            j22 += grad_v.dot(&d2[v]);
        }
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            return Err("singular restoration Jacobian".into());
        }
        let fa = current.area - area_target;
        let fv = current.volume - volume_target;
        let ds = -(j22 * fa - j12 * fv) / det;
        let du = -(-j21 * fa + j11 * fv) / det;
        s += ds;
        u += du;
        let positions: Vec<Vector3<f64>> =
            (0..nv).map(|v| base[v] + s * d1[v] + u * d2[v]).collect();
        mesh.set_vertices(positions);
        current = Geometry::with_topology(mesh, topology.clone())
            .map_err(|e| format!("restoration geometry: {e}"))?;
    }
    let a_err = (current.area - area_target) / area_target;
    let v_err = (current.volume - volume_target) / volume_target;
    let err = a_err.abs().max(v_err.abs());
    if err <= tol {
        Ok((current, MAX_NEWTON, err))
    } else {
        Err(format!("constraint restoration stalled at {err:.3e}"))
    }
}

/// Uniform-weight tangential redistribution. Returns the smoothed candidate
/// only when constraints restore and the energy safeguard still holds.
fn try_tangential_smoothing(
    state: &FlowState,
    cfg: &FlowConfig,
    accepted: &AcceptedCandidate,
) -> Option<AcceptedCandidate> {
    let geom = &accepted.geom;
    let mesh = &accepted.mesh;
    let vs = mesh.vertices();
    let nv = vs.len();
    let topo = &geom.topology;
    let mut positions = Vec::with_capacity(nv);
    for v in 0..nv {
        let (lo, hi) = (topo.offsets[v], topo.offsets[v + 1]);
        let mut centroid = Vector3::zeros();
        for idx in lo..hi {
            centroid += vs[topo.cols[idx]];
        }
        centroid /= (hi - lo) as f64;
        let umbrella = centroid - vs[v];
        let nu = geom.vertex_normal[v];
        let tangential = umbrella - umbrella.dot(&nu) * nu;
        positions.push(vs[v] + SMOOTHING_STRENGTH * tangential);
    }
    let mut smoothed = mesh.clone();
    smoothed.set_vertices(positions);
    let geom2 = Geometry::with_topology(&smoothed, state.topology.clone()).ok()?;
    let (geom2, newton_iters, constraint_err) = restore_constraints(
        &mut smoothed,
        geom2,
        state.area_target,
        state.volume_target,
        cfg.constraint_tol,
        &state.topology,
    )
    .ok()?;
    let energy = crate::energy::helfrich_of(&geom2, state.c0);
    if energy > state.energy + cfg.decay_slack {
        return None;
    }
    Some(AcceptedCandidate {
        mesh: smoothed,
        geom: geom2,
        energy,
        newton_iters,
        constraint_err,
    })
}

fn make_record(
    state: &FlowState,
    cfg: &FlowConfig,
    dt: f64,
    velocity_l2: f64,
    sol: &MultiplierSolution,
) -> TrajectoryRecord {
    let geom = &state.geom;
    let hyperbolic_length = state.mesh.grid.and_then(|_| {
        crate::axisym::extract_profile(&state.mesh)
            .ok()
            .and_then(|p| crate::axisym::hyperbolic_length(&p).ok())
    });
    let kappa_rho = cfg
        .kappa_rho
        .map(|rho| crate::diagnostics::kappa_concentration_of(&state.mesh, geom, rho).value);
    TrajectoryRecord {
        step: state.step_count,
        t: state.t,
        dt,
        energy_helfrich: state.energy,
        energy_willmore: crate::energy::willmore_of(geom),
        area: geom.area,
        volume: geom.volume,
        sigma: crate::energy::sigma_of(geom),
        lambda1: sol.lambda1,
        lambda2: sol.lambda2,
        cmc_deficit: crate::energy::cmc_deficit_of(geom),
        velocity_l2,
        max_a_sq: geom.max_a_sq(),
        diameter: surface::diameter(&state.mesh),
        hyperbolic_length,
        kappa_rho,
        accepted: true,
    }
}

/// Run the flow from `mesh` until convergence, timeout or singularity.
pub fn run(
    mesh: TriMesh,
    c0: f64,
    cfg: &FlowConfig,
    sink: &mut dyn RunSink,
) -> Result<RunOutput, FlowError> {
    cfg.validate().map_err(FlowError::InvalidConfig)?;
    let started = Instant::now();
    let mut state = FlowState::new(mesh, c0, cfg)?;
    let mut trajectory = Trajectory {
        records: Vec::new(),
        kappa_rho: cfg.kappa_rho,
    };
    let mut rejects_total = 0u64;
    let mut max_area_drift = 0.0f64;
    let mut max_volume_drift = 0.0f64;
    let mut max_energy_increase = f64::NEG_INFINITY;
    let mut last_dt_used = 0.0;
    let mut last_velocity = None;
    let mut last_recorded_step = None;

    let (termination, reason) = loop {
        if state.t >= cfg.t_max || state.step_count >= cfg.max_steps {
            break (
                Termination::Timeout,
                format!("t = {:.6e}, steps = {}", state.t, state.step_count),
            );
        }
        let (velocity, sol) = match state.velocity(cfg.gradient) {
            Ok(x) => x,
            Err(e) => {
                if state.step_count == 0 {
                    return Err(e.into());
                }
                break (Termination::Singular, e.to_string());
            }
        };
        let vl2 = multiplier::l2_norm_vector(&state.geom, &velocity);
        last_velocity = Some(vl2);
        if state.step_count % cfg.record_every.max(1) == 0 {
            let rec = make_record(&state, cfg, last_dt_used, vl2, &sol);
            sink.on_record(&rec);
            trajectory.records.push(rec);
            last_recorded_step = Some(state.step_count);
        }
        if vl2 < cfg.stop_velocity_tol {
            break (
                Termination::Converged,
                format!("velocity L² = {vl2:.3e} < {:.3e}", cfg.stop_velocity_tol),
            );
        }
        match step_with_velocity(&mut state, cfg, &velocity, sol) {
            Ok(report) => {
                rejects_total += report.rejects as u64;
                last_dt_used = report.dt_used;
                max_area_drift = max_area_drift
                    .max(((state.geom.area - state.area_target) / state.area_target).abs());
                max_volume_drift = max_volume_drift
                    .max(((state.geom.volume - state.volume_target) / state.volume_target).abs());
                max_energy_increase = max_energy_increase.max(report.energy_delta);
                if cfg.snapshot_every > 0 && state.step_count % cfg.snapshot_every == 0 {
                    sink.on_snapshot(state.step_count, &state.mesh);
                }
            }
            Err(e @ (FlowError::DtUnderflow { .. } | FlowError::MeshDegeneracy { .. })) => {
                break (Termination::Singular, e.to_string());
            }
            Err(e) => return Err(e),
        }
    };

    // Final record and snapshot for the terminal state.
    if last_recorded_step != Some(state.step_count) && state.step_count > 0 {
        if let Ok((velocity, sol)) = state.velocity(cfg.gradient) {
            let vl2 = multiplier::l2_norm_vector(&state.geom, &velocity);
            last_velocity = Some(vl2);
            let rec = make_record(&state, cfg, last_dt_used, vl2, &sol);
            sink.on_record(&rec);
            trajectory.records.push(rec);
        }
    }
    sink.on_snapshot(state.step_count, &state.mesh);

    let final_stationarity_residual = state.last_multipliers.map(|sol| {
        let res = multiplier::stationarity_residual_of(
            &state.mesh,
            &state.geom,
            state.c0,
            sol.lambda1,
            sol.lambda2,
            cfg.gradient,
        );
        multiplier::l2_norm_scalar(&state.geom, &res)
    });

    let summary = RunSummary {
        termination,
        reason,
        steps: state.step_count,
        rejects: rejects_total,
        final_t: state.t,
        final_energy: state.energy,
        final_velocity_l2: last_velocity,
        final_stationarity_residual,
        max_area_drift,
        max_volume_drift,
        max_energy_increase: if state.step_count == 0 {
            0.0
        } else {
            max_energy_increase
        },
        wall_time_s: started.elapsed().as_secs_f64(),
        integrator: cfg.integrator,
        gradient: cfg.gradient,
        tangential_smoothing: cfg.tangential_smoothing,
    };
    Ok(RunOutput {
        trajectory,
        summary,
        state,
    })
}
