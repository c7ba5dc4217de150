//! Scalar functionals of a surface: Willmore and Helfrich bending energies,
//! trace-free energy, CMC-deficit, isoperimetric ratio.
//!
//! All integrals use the lumped mixed-Voronoi quadrature of the curvature
//! operators, so the variance identity `4WA − (∫H)² = 4A·deficit` holds at
//! the discrete level up to rounding.

use serde::Serialize;

use crate::surface::{Geometry, SurfaceError, TriMesh};

/// Flat record of every energy-like functional of a mesh at a given c0.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub willmore: f64,
    pub helfrich: f64,
    pub w0: f64,
    pub cmc_deficit: f64,
    pub total_mean_curvature: f64,
    pub sigma: f64,
    pub area: f64,
    pub volume: f64,
}

/// ¼ ∫ H² dμ.
pub fn willmore_of(geom: &Geometry) -> f64 {
    let mut acc = 0.0;
    for (h, a) in geom.mean_h.iter().zip(&geom.mixed_area) {
        acc += h * h * a;
    }
    0.25 * acc
}

/// ¼ ∫ (H − c0)² dμ.
pub fn helfrich_of(geom: &Geometry, c0: f64) -> f64 {
    let mut acc = 0.0;
    for (h, a) in geom.mean_h.iter().zip(&geom.mixed_area) {
        let d = h - c0;
        acc += d * d * a;
    }
    0.25 * acc
}

/// ∫ H dμ.
pub fn total_mean_curvature_of(geom: &Geometry) -> f64 {
    let mut acc = 0.0;
    for (h, a) in geom.mean_h.iter().zip(&geom.mixed_area) {
        acc += h * a;
    }
    acc
}

/// ∫ |A⁰|² dμ.
pub fn w0_of(geom: &Geometry) -> f64 {
    let mut acc = 0.0;
    for (a0, a) in geom.a0_sq.iter().zip(&geom.mixed_area) {
        acc += a0 * a;
    }
    acc
}

/// ¼ ∫ (H − H̄)² dμ with H̄ the area average of H.
pub fn cmc_deficit_of(geom: &Geometry) -> f64 {
    let h_bar = total_mean_curvature_of(geom) / geom.area;
    let mut acc = 0.0;
    for (h, a) in geom.mean_h.iter().zip(&geom.mixed_area) {
        let d = h - h_bar;
        acc += d * d * a;
    }
    0.25 * acc
}

/// 36π V² / A³, dimensionless and scale invariant; 1 only for round spheres.
pub fn sigma_of(geom: &Geometry) -> f64 {
    36.0 * std::f64::consts::PI * geom.volume * geom.volume / geom.area.powi(3)
}

pub fn report(geom: &Geometry, c0: f64) -> EnergyReport {
    EnergyReport {
        willmore: willmore_of(geom),
        helfrich: helfrich_of(geom, c0),
        w0: w0_of(geom),
        cmc_deficit: cmc_deficit_of(geom),
        total_mean_curvature: total_mean_curvature_of(geom),
        sigma: sigma_of(geom),
        area: geom.area,
        volume: geom.volume,
    }
}

pub fn willmore(mesh: &TriMesh) -> Result<f64, SurfaceError> {
    Ok(willmore_of(&Geometry::new(mesh)?))
}

pub fn helfrich(mesh: &TriMesh, c0: f64) -> Result<f64, SurfaceError> {
    Ok(helfrich_of(&Geometry::new(mesh)?, c0))
}

pub fn cmc_deficit(mesh: &TriMesh) -> Result<f64, SurfaceError> {
    Ok(cmc_deficit_of(&Geometry::new(mesh)?))
}

pub fn isoperimetric_sigma(mesh: &TriMesh) -> Result<f64, SurfaceError> {
    Ok(sigma_of(&Geometry::new(mesh)?))
}

/// Evaluation of the bound `W ≤ (√H_{c0} + ½√(c0²A))²`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub const HOLDS_TOL_ABS: f64 = 1e-9;
pub const HOLDS_TOL_REL: f64 = 1e-6;

pub fn willmore_helfrich_bound_of(
    geom: &Geometry,
    c0: f64,
    tol_abs: f64,
    tol_rel: f64,
) -> BoundCheck {
    let lhs = willmore_of(geom);
    let rhs = (helfrich_of(geom, c0).sqrt() + 0.5 * (c0 * c0 * geom.area).sqrt()).powi(2);
    BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + tol_abs + tol_rel * rhs.abs(),
    }
}

pub fn willmore_helfrich_bound(mesh: &TriMesh, c0: f64) -> Result<BoundCheck, SurfaceError> {
    Ok(willmore_helfrich_bound_of(
        &Geometry::new(mesh)?,
        c0,
        HOLDS_TOL_ABS,
        HOLDS_TOL_REL,
    ))
}
