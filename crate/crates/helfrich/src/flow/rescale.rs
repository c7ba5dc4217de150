//! Parabolic rescaling `f̃(t, p) = (1/r) f(r⁴ t, p)`: positions scale by 1/r,
//! time by 1/r⁴, the spontaneous curvature by r, the multipliers by r² and
//! r³; dimensionless columns (energies, σ, CMC-deficit, hyperbolic length,
//! curvature concentration) are invariant.

use super::{FlowError, FlowState, Trajectory, TrajectoryRecord};
use crate::surface::Geometry;

pub fn rescale_record(rec: &TrajectoryRecord, r: f64) -> TrajectoryRecord {
    let r2 = r * r;
    let r3 = r2 * r;
    let r4 = r2 * r2;
    TrajectoryRecord {
        step: rec.step,
        t: rec.t / r4,
        dt: rec.dt / r4,
        energy_helfrich: rec.energy_helfrich,
        energy_willmore: rec.energy_willmore,
        area: rec.area / r2,
        volume: rec.volume / r3,
        sigma: rec.sigma,
        lambda1: rec.lambda1 * r2,
        lambda2: rec.lambda2 * r3,
        cmc_deficit: rec.cmc_deficit,
        velocity_l2: rec.velocity_l2 * r2,
        max_a_sq: rec.max_a_sq * r2,
        diameter: rec.diameter / r,
        hyperbolic_length: rec.hyperbolic_length,
        kappa_rho: rec.kappa_rho,
        accepted: rec.accepted,
    }
}

pub fn rescale_trajectory(traj: &Trajectory, r: f64) -> Trajectory {
    assert!(r > 0.0, "rescaling factor must be positive");
    Trajectory {
        records: traj
            .records
            .iter()
            .map(|rec| rescale_record(rec, r))
            .collect(),
        kappa_rho: traj.kappa_rho.map(|rho| rho / r),
    }
}

pub fn rescale_state(state: &FlowState, r: f64) -> Result<FlowState, FlowError> {
    assert!(r > 0.0, "rescaling factor must be positive");
    let r2 = r * r;
    let r3 = r2 * r;
    let r4 = r2 * r2;
    let mut mesh = state.mesh.clone();
    mesh.scale(1.0 / r);
    let geom = Geometry::new(&mesh)?;
    let c0 = state.c0 * r;
    let energy = crate::energy::helfrich_of(&geom, c0);
    let topology = geom.topology.clone();
    Ok(FlowState {
        mesh,
        t: state.t / r4,
        c0,
        area_target: state.area_target / r2,
        volume_target: state.volume_target / r3,
        last_multipliers: state.last_multipliers.map(|m| super::MultiplierSolution {
            lambda1: m.lambda1 * r2,
            lambda2: m.lambda2 * r3,
            denominator: m.denominator / r2,
            degenerate: m.degenerate,
        }),
        energy,
        step_count: state.step_count,
        dt: state.dt / r4,
        geom,
        topology,
    })
}
