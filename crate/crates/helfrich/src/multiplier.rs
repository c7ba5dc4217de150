//! L² gradient of the Helfrich energy, the two nonlocal Lagrange multipliers
//! of the area- and volume-preserving flow, and the stationarity residual of
//! the constrained Helfrich equation.
//!
//! Two gradients are maintained. The *geometric* gradient evaluates
//! `½[ΔH + |A⁰|²(H−c0) + ½ c0 H (H−c0)] ν` with the discrete curvature
//! operators. The *discrete-energy* gradient is the exact derivative of the
//! lumped discrete energy with respect to vertex positions; it is the one
//! that makes finite-difference checks and per-step energy decay tight, and
//! it is the default inside the flow.

mod autodiff;

use nalgebra::Vector3;

use crate::surface::{Geometry, ScalarField, TriMesh, VectorField};

#[derive(Debug, thiserror::Error)]
pub enum MultiplierError {
    #[error(
        "degenerate constraint system: 4WA − (∫H)² = {denominator:.3e} below floor {floor:.3e} \
         (constant mean curvature surface)"
    )]
    DegenerateConstraint { denominator: f64, floor: f64 },
}

/// Which discretisation of ∇H_{c0} to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientKind {
    Geometric,
    #[default]
    DiscreteEnergy,
}

/// Relative floor for the constraint denominator: below
/// `DENOMINATOR_FLOOR_REL · 4WA` the flow is undefined (CMC surface).
pub const DENOMINATOR_FLOOR_REL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MultiplierSolution {
    /// Area multiplier, units 1/length².
    pub lambda1: f64,
    /// Volume multiplier, units 1/length³.
    pub lambda2: f64,
    /// 4WA − (∫H dμ)².
    pub denominator: f64,
    pub degenerate: bool,
}

/// Exact Euclidean derivative of the discrete Helfrich energy with respect
/// to every vertex position (a covector; divide by the vertex area for the
/// L² gradient).
pub fn discrete_energy_derivative(mesh: &TriMesh, geom: &Geometry, c0: f64) -> Vec<Vector3<f64>> {
    autodiff::energy_derivative(mesh, geom, c0)
}

/// L² gradient field ∇H_{c0} per vertex.
pub fn helfrich_gradient_of(
    mesh: &TriMesh,
    geom: &Geometry,
    c0: f64,
    kind: GradientKind,
) -> Vec<Vector3<f64>> {
    match kind {
        GradientKind::Geometric => {
            let lap_h = geom.laplacian_scalar(&geom.mean_h);
            (0..mesh.num_vertices())
                .map(|v| {
                    let h = geom.mean_h[v];
                    let bracket = lap_h[v] + geom.a0_sq[v] * (h - c0) + 0.5 * c0 * h * (h - c0);
                    0.5 * bracket * geom.vertex_normal[v]
                })
                .collect()
        }
        GradientKind::DiscreteEnergy => {
            let g = autodiff::energy_derivative(mesh, geom, c0);
            g.into_iter()
                .zip(&geom.mixed_area)
                .map(|(gv, a)| gv / *a)
                .collect()
        }
    }
}

/// Geometric-formula gradient of the Helfrich energy (see module docs).
pub fn helfrich_gradient(mesh: &TriMesh, c0: f64) -> Result<VectorField, crate::SurfaceError> {
    let geom = Geometry::new(mesh)?;
    Ok(VectorField::new(
        helfrich_gradient_of(mesh, &geom, c0, GradientKind::Geometric),
        mesh,
    ))
}

/// Exact derivative of the discrete energy, as an L² gradient field.
pub fn discrete_gradient(mesh: &TriMesh, c0: f64) -> Result<VectorField, crate::SurfaceError> {
    let geom = Geometry::new(mesh)?;
    Ok(VectorField::new(
        helfrich_gradient_of(mesh, &geom, c0, GradientKind::DiscreteEnergy),
        mesh,
    ))
}

/// Closed-form solution of the 2×2 system fixing λ1 and λ2 so that the flow
/// velocity is L²-orthogonal to span{Hν, ν}:
///
/// `λ1 = 2 [A ⟨∇H, Hν⟩ − (∫H) ⟨∇H, ν⟩] / D`,
/// `λ2 = 2 [−(∫H) ⟨∇H, Hν⟩ + 4W ⟨∇H, ν⟩] / D`,  `D = 4WA − (∫H)²`.
pub fn lagrange_multipliers_of(
    geom: &Geometry,
    gradient: &[Vector3<f64>],
) -> Result<MultiplierSolution, MultiplierError> {
    let w = crate::energy::willmore_of(geom);
    let a = geom.area;
    let int_h = crate::energy::total_mean_curvature_of(geom);
    let denominator = 4.0 * w * a - int_h * int_h;
    let floor = DENOMINATOR_FLOOR_REL * 4.0 * w * a;
    if denominator < floor {
        return Err(MultiplierError::DegenerateConstraint { denominator, floor });
    }

    let mut p1 = 0.0; // ⟨∇H, Hν⟩_{L²}
    let mut p2 = 0.0; // ⟨∇H, ν⟩_{L²}
    for v in 0..gradient.len() {
        let nu = geom.vertex_normal[v];
        let av = geom.mixed_area[v];
        let gn = gradient[v].dot(&nu);
        p1 += gn * geom.mean_h[v] * av;
        p2 += gn * av;
    }
    let lambda1 = 2.0 * (a * p1 - int_h * p2) / denominator;
    let lambda2 = 2.0 * (-int_h * p1 + 4.0 * w * p2) / denominator;
    Ok(MultiplierSolution {
        lambda1,
        lambda2,
        denominator,
        degenerate: false,
    })
}

pub fn lagrange_multipliers(
    mesh: &TriMesh,
    geom: &Geometry,
    c0: f64,
    kind: GradientKind,
) -> Result<MultiplierSolution, MultiplierError> {
    let grad = helfrich_gradient_of(mesh, geom, c0, kind);
    lagrange_multipliers_of(geom, &grad)
}

/// Flow velocity `v = −2∇H_{c0} + λ1 Hν + λ2 ν` together with the
/// multipliers from [`lagrange_multipliers_of`].
///
/// The continuous velocity is a normal field; the discrete velocity uses
/// the normal part of the gradient (its tangential content is a
/// parametrization force with no continuous counterpart). The fixed point
/// is then exactly the discrete constrained stationarity equation
/// `2⟨∇H_{c0}, ν⟩ = λ1 H + λ2`, energy decays with `dE/dt = −½‖v‖²`, and
/// the lumped rates dA/dt and dV/dt vanish by the choice of λ1, λ2.
pub fn flow_velocity(
    mesh: &TriMesh,
    geom: &Geometry,
    c0: f64,
    kind: GradientKind,
) -> Result<(Vec<Vector3<f64>>, MultiplierSolution), MultiplierError> {
    let grad = helfrich_gradient_of(mesh, geom, c0, kind);
    let sol = lagrange_multipliers_of(geom, &grad)?;
    let velocity = (0..grad.len())
        .map(|v| {
            let nu = geom.vertex_normal[v];
            let gn = grad[v].dot(&nu);
            (-2.0 * gn + sol.lambda1 * geom.mean_h[v] + sol.lambda2) * nu
        })
        .collect();
    Ok((velocity, sol))
}

/// The flow's correction fields `d1 = Hν`, `d2 = ν`.
pub fn constraint_basis(geom: &Geometry) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
    let nv = geom.mixed_area.len();
    let mut b1 = Vec::with_capacity(nv);
    let mut b2 = Vec::with_capacity(nv);
    for v in 0..nv {
        let nu = geom.vertex_normal[v];
        b1.push(geom.mean_h[v] * nu);
        b2.push(nu);
    }
    (b1, b2)
}

/// Per-vertex residual of the constrained Helfrich equation
/// `ΔH + |A⁰|²H + c0(½H² − |A⁰|²) − (λ1 + ½c0²)H − λ2 = 0`,
/// evaluated as `2⟨∇H_{c0}, ν⟩ − λ1 H − λ2` (identical expansions for the
/// geometric gradient; for the discrete-energy gradient this is minus the
/// normal flow speed).
pub fn stationarity_residual_of(
    mesh: &TriMesh,
    geom: &Geometry,
    c0: f64,
    lambda1: f64,
    lambda2: f64,
    kind: GradientKind,
) -> Vec<f64> {
    let grad = helfrich_gradient_of(mesh, geom, c0, kind);
    (0..grad.len())
        .map(|v| 2.0 * grad[v].dot(&geom.vertex_normal[v]) - lambda1 * geom.mean_h[v] - lambda2)
        .collect()
}

pub fn stationarity_residual(
    mesh: &TriMesh,
    c0: f64,
    lambda1: f64,
    lambda2: f64,
    kind: GradientKind,
) -> Result<ScalarField, crate::SurfaceError> {
    let geom = Geometry::new(mesh)?;
    Ok(ScalarField::new(
        stationarity_residual_of(mesh, &geom, c0, lambda1, lambda2, kind),
        mesh,
    ))
}

/// L² norm of a per-vertex scalar field, `√(Σ r² A_v)`.
pub fn l2_norm_scalar(geom: &Geometry, values: &[f64]) -> f64 {
    values
        .iter()
        .zip(&geom.mixed_area)
        .map(|(r, a)| r * r * a)
        .sum::<f64>()
        .sqrt()
}

/// L² norm of a per-vertex vector field.
pub fn l2_norm_vector(geom: &Geometry, values: &[Vector3<f64>]) -> f64 {
    values
        .iter()
        .zip(&geom.mixed_area)
        .map(|(v, a)| v.norm_squared() * a)
        .sum::<f64>()
        .sqrt()
}
