//! Analysis quantities for admissibility and convergence monitoring: the
//! energy threshold Ω with its branch structure, the Li–Yau multiplicity
//! functional, the curvature concentration function κ, the monotone localized
//! quantity γ, and bump-localized curvature energies.

use nalgebra::Vector3;
use serde::Serialize;

use crate::energy;
use crate::surface::{Geometry, TriMesh};

/// Isoperimetric ratios within this distance of 1 count as the round sphere.
pub const SIGMA_TOL: f64 = 1e-3;

/// Default diameter constant of the Ω definition. The best constant is not
/// numerically known; any report produced with this value carries a
/// provenance warning.
pub const DEFAULT_C_DIAM: f64 = 1.0;

pub const C_DIAM_WARNING: &str = "C_diam is a configuration value (best diameter constant \
not numerically pinned); Ω for c0 < 0 depends on it";

/// Slack added to value/4π before flooring the multiplicity bound; absorbs
/// the O(h²) quadrature error of the functional (a discrete round sphere
/// evaluates a few 1e-4 below 4π).
pub const MULTIPLICITY_TOL: f64 = 1e-2;

/// Relative slack for closed-ball membership `|x| ≤ ρ`, so that vertices
/// sitting exactly on the ball boundary are kept despite rounding.
const BALL_EPS: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("isoperimetric ratio σ = {sigma:.6} is not in (0, 1 − {tol:.1e})")]
    SigmaOutOfRange { sigma: f64, tol: f64 },
    #[error(
        "evaluation point lies on the surface: exclusion ball removes {removed_frac:.2}% of the \
         area (limit 1%)"
    )]
    PointOnSurfaceUnresolved { removed_frac: f64 },
    #[error(
        "origin lies on the surface (closest vertex at distance {dist:.3e}, exclusion {excl:.3e})"
    )]
    OriginOnSurface { dist: f64, excl: f64 },
    #[error("rho list must be sorted ascending and positive")]
    BadRhoList,
    #[error(transparent)]
    Surface(#[from] crate::surface::SurfaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaBranch {
    NegC0,
    PosPlusPart,
    PosVolume,
}

/// The explicit energy threshold
/// `Ω = 4π + √((4π)² + |c0| V0 / (2C² A0))` for c0 < 0 and
/// `Ω = max{(√(8π) − ½√(c0²A0))₊², 8π − 6c0 (4π²V0)^{1/3}}` for c0 ≥ 0.
pub fn omega(a0: f64, v0: f64, c0: f64, c_diam: f64) -> (f64, OmegaBranch) {
    assert!(a0 > 0.0 && v0 > 0.0 && c_diam > 0.0);
    let four_pi = 4.0 * std::f64::consts::PI;
    if c0 < 0.0 {
        let value =
            four_pi + (four_pi * four_pi + c0.abs() * v0 / (2.0 * c_diam * c_diam * a0)).sqrt();
        (value, OmegaBranch::NegC0)
    } else {
        let plus_part = ((2.0 * four_pi).sqrt() - 0.5 * (c0 * c0 * a0).sqrt()).max(0.0);
        let b1 = plus_part * plus_part;
        let b2 = 2.0 * four_pi
            - 6.0 * c0 * (4.0 * std::f64::consts::PI * std::f64::consts::PI * v0).cbrt();
        if b1 >= b2 {
            (b1, OmegaBranch::PosPlusPart)
        } else {
            (b2, OmegaBranch::PosVolume)
        }
    }
}

/// Admissibility report for the threshold
/// `√H_{c0}(f0) ≤ min{√Ω, √(4π/σ) − ½ c0 √A0}`.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub omega: f64,
    pub branch_used: OmegaBranch,
    /// √Ω.
    pub sqrt_term_a: f64,
    /// √(4π/σ) − ½ c0 √A0.
    pub sqrt_term_b: f64,
    /// √H_{c0}(f0).
    pub sqrt_energy: f64,
    pub admissible: bool,
    pub margin_a: f64,
    pub margin_b: f64,
    pub sigma: f64,
    pub area: f64,
    pub volume: f64,
    pub c0: f64,
    pub c_diam: f64,
    pub c_diam_warning: &'static str,
}

pub fn threshold_check_of(
    geom: &Geometry,
    c0: f64,
    c_diam: f64,
) -> Result<ThresholdReport, DiagnosticsError> {
    let sigma = energy::sigma_of(geom);
    if sigma >= 1.0 - SIGMA_TOL || sigma <= 0.0 {
        return Err(DiagnosticsError::SigmaOutOfRange {
            sigma,
            tol: SIGMA_TOL,
        });
    }
    let (a0, v0) = (geom.area, geom.volume);
    let (omega_value, branch_used) = omega(a0, v0, c0, c_diam);
    let sqrt_term_a = omega_value.sqrt();
    let sqrt_term_b = (4.0 * std::f64::consts::PI / sigma).sqrt() - 0.5 * c0 * a0.sqrt();
    let sqrt_energy = energy::helfrich_of(geom, c0).sqrt();
    let margin_a = sqrt_term_a - sqrt_energy;
    let margin_b = sqrt_term_b - sqrt_energy;
    Ok(ThresholdReport {
        omega: omega_value,
        branch_used,
        sqrt_term_a,
        sqrt_term_b,
        sqrt_energy,
        admissible: margin_a >= 0.0 && margin_b >= 0.0,
        margin_a,
        margin_b,
        sigma,
        area: a0,
        volume: v0,
        c0,
        c_diam,
        c_diam_warning: C_DIAM_WARNING,
    })
}

pub fn threshold_check(
    mesh: &TriMesh,
    c0: f64,
    c_diam: f64,
) -> Result<ThresholdReport, DiagnosticsError> {
    threshold_check_of(&Geometry::new(mesh)?, c0, c_diam)
}

/// Right-hand side of the Li–Yau-type multiplicity bound
/// `4πk ≤ H_{c0}(f) − 2c0 ∫ ⟨f − p, ν⟩ / |f − p|² dμ`.
#[derive(Debug, Clone, Serialize)]
pub struct LiYauValue {
    pub value: f64,
    pub multiplicity_bound: u64,
    /// Area dropped around the singular point (vertices within 2 mean edges).
    pub excluded_area: f64,
    pub excluded_vertices: usize,
}

pub fn li_yau_functional_of(
    mesh: &TriMesh,
    geom: &Geometry,
    p: Vector3<f64>,
    c0: f64,
) -> Result<LiYauValue, DiagnosticsError> {
    let excl = 2.0 * geom.mean_edge;
    let mut integral = 0.0;
    let mut excluded_area = 0.0;
    let mut excluded_vertices = 0;
    for (v, pos) in mesh.vertices().iter().enumerate() {
        let d = pos - p;
        let dist_sq = d.norm_squared();
        if dist_sq < excl * excl {
            excluded_area += geom.mixed_area[v];
            excluded_vertices += 1;
            continue;
        }
        integral += d.dot(&geom.vertex_normal[v]) / dist_sq * geom.mixed_area[v];
    }
    if excluded_area > 0.01 * geom.area {
        return Err(DiagnosticsError::PointOnSurfaceUnresolved {
            removed_frac: 100.0 * excluded_area / geom.area,
        });
    }
    let value = energy::helfrich_of(geom, c0) - 2.0 * c0 * integral;
    let bound = (value / (4.0 * std::f64::consts::PI) + MULTIPLICITY_TOL).floor();
    Ok(LiYauValue {
        value,
        multiplicity_bound: if bound > 0.0 { bound as u64 } else { 0 },
        excluded_area,
        excluded_vertices,
    })
}

/// Curvature concentration `κ(ρ) = sup_x ∫_{B_ρ(x)} |A|² dμ`, the sup taken
/// over vertex positions (within O(h) of the true sup; ties broken by the
/// lowest vertex index).
#[derive(Debug, Clone, Serialize)]
pub struct KappaValue {
    pub value: f64,
    pub argmax_center: [f64; 3],
    pub argmax_vertex: usize,
}

pub fn kappa_concentration_of(mesh: &TriMesh, geom: &Geometry, rho: f64) -> KappaValue {
    assert!(rho > 0.0);
    let vs = mesh.vertices();
    let n = vs.len();
    let rho_sq = rho * rho;
    let mut best = f64::NEG_INFINITY;
    let mut best_v = 0;
    for c in 0..n {
        let center = vs[c];
        let mut acc = 0.0;
        for v in 0..n {
            if (vs[v] - center).norm_squared() < rho_sq {
                acc += geom.a_sq[v] * geom.mixed_area[v];
            }
        }
        if acc > best {
            best = acc;
            best_v = c;
        }
    }
    KappaValue {
        value: best,
        argmax_center: vs[best_v].into(),
        argmax_vertex: best_v,
    }
}

/// Profile of the localized monotone quantity
/// `γ(ρ) = μ(B̄_ρ(0))/ρ² + (1/16)∫_{B̄_ρ}(H−c0)² dμ − (c0/2)∫_{B̄_ρ}⟨h,ν⟩/|h|² dμ
///        + (1/(2ρ²))∫_{B̄_ρ}⟨h,ν⟩ H dμ`
/// about the origin.
#[derive(Debug, Clone, Serialize)]
pub struct GammaProfile {
    pub rhos: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest decrease between consecutive radii (0 when nondecreasing).
    pub max_decrease: f64,
    /// Indices i where γ(ρ_{i+1}) < γ(ρ_i) − tol.
    pub violations: Vec<usize>,
}

pub fn gamma_monotonicity_of(
    mesh: &TriMesh,
    geom: &Geometry,
    c0: f64,
    rho_list: &[f64],
    tol: f64,
) -> Result<GammaProfile, DiagnosticsError> {
    if rho_list.is_empty() || rho_list[0] <= 0.0 || rho_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DiagnosticsError::BadRhoList);
    }
    let excl = 2.0 * geom.mean_edge;
    let min_dist = mesh
        .vertices()
        .iter()
        .map(|p| p.norm())
        .fold(f64::INFINITY, f64::min);
    if min_dist <= excl {
        return Err(DiagnosticsError::OriginOnSurface {
            dist: min_dist,
            excl,
        });
    }

    let vs = mesh.vertices();
    let mut values = Vec::with_capacity(rho_list.len());
    for &rho in rho_list {
        let rho_sq = rho * rho * (1.0 + BALL_EPS);
        let (mut mu, mut bend, mut liyau, mut willmore_like) = (0.0, 0.0, 0.0, 0.0);
        for (v, pos) in vs.iter().enumerate() {
            let r2 = pos.norm_squared();
            if r2 > rho_sq {
                continue;
            }
            let a = geom.mixed_area[v];
            let h = geom.mean_h[v];
            let hn = pos.dot(&geom.vertex_normal[v]);
            mu += a;
            bend += (h - c0) * (h - c0) * a;
            liyau += hn / r2 * a;
            willmore_like += hn * h * a;
        }
        values.push(mu / rho_sq + bend / 16.0 - 0.5 * c0 * liyau + 0.5 * willmore_like / rho_sq);
    }
    let mut max_decrease = 0.0f64;
    let mut violations = Vec::new();
    for i in 0..values.len().saturating_sub(1) {
        let drop = values[i] - values[i + 1];
        max_decrease = max_decrease.max(drop);
        if drop > tol {
            violations.push(i);
        }
    }
    Ok(GammaProfile {
        rhos: rho_list.to_vec(),
        values,
        max_decrease,
        violations,
    })
}

/// Smooth bump equal to 1 on `B_{ρ/2}` and 0 outside `B_ρ` (as a function of
/// s = dist/ρ).
pub fn bump(s: f64) -> f64 {
    fn g(t: f64) -> f64 {
        if t > 0.0 {
            (-1.0 / t).exp()
        } else {
            0.0
        }
    }
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let a = g(2.0 * (1.0 - s));
        let b = g(2.0 * s - 1.0);
        a / (a + b)
    }
}

/// `∫ |A|² γ⁴ dμ` with γ the standard bump of radius ρ about `center`.
pub fn localized_curvature_energy_of(
    mesh: &TriMesh,
    geom: &Geometry,
    center: Vector3<f64>,
    rho: f64,
) -> f64 {
    assert!(rho > 0.0);
    let mut acc = 0.0;
    for (v, pos) in mesh.vertices().iter().enumerate() {
        let s = (pos - center).norm() / rho;
        let b = bump(s);
        if b > 0.0 {
            acc += geom.a_sq[v] * b.powi(4) * geom.mixed_area[v];
        }
    }
    acc
}
