//! Generators for axisymmetric initial data (tori, perturbed spheres,
//! biconcave discs, dumbbells), profile-curve extraction, hyperbolic length
//! and the axisymmetry defect.
//!
//! All surfaces of revolution use the x-axis as axis of rotation: a profile
//! point (x, y) with y > 0 sweeps to (x, y cos v, y sin v).

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::surface::{RevolutionGrid, SurfaceError, TriMesh};

#[derive(Debug, thiserror::Error)]
pub enum AxisymError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("target isoperimetric ratio {target} not reachable (range ≈ [{lo:.4}, {hi:.4}])")]
    TargetSigmaUnreachable { target: f64, lo: f64, hi: f64 },
    #[error("profile curve touches the rotation axis (min height {min_y:.3e})")]
    AxisTouch { min_y: f64 },
    #[error("mesh carries no surface-of-revolution grid structure")]
    NoGridStructure,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Closed discretised curve in the half-plane ℝ × (0, ∞).
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

impl ProfileCurve {
    /// Two-column CSV (x, y), one node per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for (x, y) in &self.points {
            out.push_str(&format!("{:.17e},{:.17e}\n", x, y));
        }
        out
    }
}

fn normalize_orientation(mesh: &mut TriMesh) {
    if mesh.signed_volume_raw() < 0.0 {
        mesh.flip_orientation();
    }
}

/// Unit icosphere: icosahedron subdivided `subdiv` times, vertices projected
/// to the unit sphere. 12 · 4^0... vertices grow as 10·4^s + 2.
pub fn icosphere(subdiv: u32) -> TriMesh {
    let t = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdiv {
        let mut midpoint = std::collections::HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for tri in &triangles {
            let mut mids = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mids[e] = *midpoint.entry(key).or_insert_with(|| {
                    let m = (vertices[a] + vertices[b]).normalize();
                    vertices.push(m);
                    vertices.len() - 1
                });
            }
            next.push([tri[0], mids[0], mids[2]]);
            next.push([tri[1], mids[1], mids[0]]);
            next.push([tri[2], mids[2], mids[1]]);
            next.push([mids[0], mids[1], mids[2]]);
        }
        triangles = next;
    }

    let mut mesh = TriMesh::new(vertices, triangles).expect("icosphere is well-formed");
    normalize_orientation(&mut mesh);
    mesh
}

/// Sphere of given radius.
pub fn sphere(radius: f64, subdiv: u32) -> TriMesh {
    let mut mesh = icosphere(subdiv);
    mesh.scale(radius);
    mesh
}

/// Ellipsoid with semi-axes (a, b, c), mapped from an icosphere.
pub fn ellipsoid(a: f64, b: f64, c: f64, subdiv: u32) -> TriMesh {
    let mut mesh = icosphere(subdiv);
    mesh.map_vertices(|v| Vector3::new(a * v.x, b * v.y, c * v.z));
    mesh
}

/// Torus of revolution with tube radius `a` around a circle of radius `big_r`,
/// on an `n_u × n_v` grid (tube angle × rotation angle). Genus 1.
///
/// Alternate rings are staggered by half a rotation step, which keeps the
/// exact 2π/n_v rotational symmetry of the grid but avoids the right-angled
/// triangles of a plain diagonal split (those sit exactly on the obtuse-case
/// boundary of the mixed Voronoi areas, where the discrete energy has a
/// kink). `n_u` must be even for the staggering to close up.
pub fn make_torus(big_r: f64, a: f64, n_u: usize, n_v: usize) -> Result<TriMesh, AxisymError> {
    if !(big_r > a && a > 0.0) {
        return Err(AxisymError::InvalidParams(format!(
            "torus needs R > a > 0, got R = {big_r}, a = {a}"
        )));
    }
    if n_u < 8 || n_v < 8 {
        return Err(AxisymError::InvalidParams(format!(
            "torus grid must be at least 8×8, got {n_u}×{n_v}"
        )));
    }
    if !n_u.is_multiple_of(2) {
        return Err(AxisymError::InvalidParams(format!(
            "torus tube resolution n_u must be even, got {n_u}"
        )));
    }
    let mut vertices = Vec::with_capacity(n_u * n_v);
    for iu in 0..n_u {
        let u = 2.0 * PI * iu as f64 / n_u as f64;
        let (gx, gy) = (a * u.sin(), big_r + a * u.cos());
        let stagger = crate::surface::GRID_STAGGER * (iu % 2) as f64;
        for iv in 0..n_v {
            let v = 2.0 * PI * (iv as f64 + stagger) / n_v as f64;
            vertices.push(Vector3::new(gx, gy * v.cos(), gy * v.sin()));
        }
    }
    let idx = |iu: usize, iv: usize| (iu % n_u) * n_v + (iv % n_v);
    let mut triangles = Vec::with_capacity(2 * n_u * n_v);
    for iu in 0..n_u {
        for iv in 0..n_v {
            let (q00, q10, q01, q11) = (
                idx(iu, iv),
                idx(iu + 1, iv),
                idx(iu, iv + 1),
                idx(iu + 1, iv + 1),
            );
            triangles.push([q00, q10, q11]);
            triangles.push([q00, q11, q01]);
        }
    }
    let mut mesh = TriMesh::new(vertices, triangles)?;
    normalize_orientation(&mut mesh);
    mesh.grid = Some(RevolutionGrid {
        n_u,
        n_v,
        staggered: true,
    });
    Ok(mesh)
}

/// Legendre polynomial P_n(x) by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

fn perturbed_sphere_mesh(radius: f64, modes: &[(usize, f64)], amp: f64, subdiv: u32) -> TriMesh {
    let mut mesh = icosphere(subdiv);
    mesh.map_vertices(|d| {
        let u = d.x; // cosine of the polar angle from the x-axis
        let mut s = 1.0;
        for &(deg, a) in modes {
            s += amp * a * legendre(deg, u);
        }
        radius * s * d
    });
    normalize_orientation(&mut mesh);
    mesh
}

fn sigma_of(mesh: &TriMesh) -> f64 {
    let a = crate::surface::area(mesh);
    let v = crate::surface::signed_volume(mesh).abs();
    36.0 * PI * v * v / (a * a * a)
}

/// Genus-0 mesh: sphere radially perturbed by axisymmetric Legendre modes
/// `r(θ) = radius (1 + t Σ aₖ Pₖ(cos θ))`. When `target_sigma` is given, the
/// overall amplitude `t` is solved by bisection so that the isoperimetric
/// ratio matches to 0.1%.
pub fn make_perturbed_sphere(
    radius: f64,
    modes: &[(usize, f64)],
    target_sigma: Option<f64>,
    subdiv: u32,
) -> Result<TriMesh, AxisymError> {
    if radius <= 0.0 {
        return Err(AxisymError::InvalidParams("radius must be positive".into()));
    }
    let Some(target) = target_sigma else {
        return Ok(perturbed_sphere_mesh(radius, modes, 1.0, subdiv));
    };

    let sigma0 = sigma_of(&perturbed_sphere_mesh(radius, modes, 0.0, subdiv));
    if target >= sigma0 || target <= 0.0 {
        return Err(AxisymError::TargetSigmaUnreachable {
            target,
            lo: 0.0,
            hi: sigma0,
        });
    }
    if modes.is_empty() {
        return Err(AxisymError::TargetSigmaUnreachable {
            target,
            lo: sigma0,
            hi: sigma0,
        });
    }

    // Bracket: grow t until sigma drops below target or the shape factor
    // approaches zero somewhere. |P_n| ≤ 1 on [−1, 1] bounds the perturbation.
    let max_rel: f64 = modes.iter().map(|(_, a)| a.abs()).sum();
    let t_cap = 0.9 / max_rel.max(1e-300);
    let mut lo = 0.0;
    let hi;
    let mut t = (0.05_f64).min(t_cap);
    loop {
        let s = sigma_of(&perturbed_sphere_mesh(radius, modes, t, subdiv));
        if s < target {
            hi = t;
            break;
        }
        lo = t;
        if t >= t_cap {
            return Err(AxisymError::TargetSigmaUnreachable {
                target,
                lo: s,
                hi: sigma0,
            });
        }
        t = (t * 2.0).min(t_cap);
    }
    let mut hi = hi;

    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let s = sigma_of(&perturbed_sphere_mesh(radius, modes, mid, subdiv));
        if (s - target).abs() <= 1e-3 * target {
            return Ok(perturbed_sphere_mesh(radius, modes, mid, subdiv));
        }
        if s > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(perturbed_sphere_mesh(
        radius,
        modes,
        0.5 * (lo + hi),
        subdiv,
    ))
}

/// Biconcave disc (red-blood-cell-like) from the Evans–Fung profile
/// `x = ½ dx (c0 + c1 ρ² + c2 ρ⁴)` applied to an icosphere, axis x.
pub fn make_biconcave(radius: f64, coeffs: Option<(f64, f64, f64)>, subdiv: u32) -> TriMesh {
    let (c0, c1, c2) = coeffs.unwrap_or((0.207, 2.002, -1.122));
    let mut mesh = icosphere(subdiv);
    mesh.map_vertices(|d| {
        let rho2 = d.y * d.y + d.z * d.z;
        let half_thickness = 0.5 * (c0 + c1 * rho2 + c2 * rho2 * rho2);
        radius * Vector3::new(d.x * half_thickness, d.y, d.z)
    });
    normalize_orientation(&mut mesh);
    mesh
}

/// Genus-0 surface of revolution around the x-axis from a profile
/// `u ∈ [0, π] ↦ (x(u), y(u))` with y(0) = y(π) = 0 and y > 0 inside.
pub fn make_revolution_genus0(
    profile: impl Fn(f64) -> (f64, f64),
    n_u: usize,
    n_v: usize,
) -> Result<TriMesh, AxisymError> {
    if n_u < 8 || n_v < 8 {
        return Err(AxisymError::InvalidParams(
            "revolution grid must be at least 8×8".into(),
        ));
    }
    let mut vertices = Vec::with_capacity((n_u - 1) * n_v + 2);
    let (x0, _) = profile(0.0);
    vertices.push(Vector3::new(x0, 0.0, 0.0));
    for iu in 1..n_u {
        let u = PI * iu as f64 / n_u as f64;
        let (x, y) = profile(u);
        if y <= 0.0 {
            return Err(AxisymError::InvalidParams(format!(
                "profile height must be positive inside (0, π), got {y} at u = {u}"
            )));
        }
        for iv in 0..n_v {
            let v = 2.0 * PI * iv as f64 / n_v as f64;
            vertices.push(Vector3::new(x, y * v.cos(), y * v.sin()));
        }
    }
    let (x1, _) = profile(PI);
    vertices.push(Vector3::new(x1, 0.0, 0.0));
    let south = vertices.len() - 1;
    let ring = |iu: usize, iv: usize| 1 + (iu - 1) * n_v + (iv % n_v);

    let mut triangles = Vec::new();
    for iv in 0..n_v {
        triangles.push([0, ring(1, iv), ring(1, iv + 1)]);
    }
    for iu in 1..(n_u - 1) {
        for iv in 0..n_v {
            let (q00, q10, q01, q11) = (
                ring(iu, iv),
                ring(iu + 1, iv),
                ring(iu, iv + 1),
                ring(iu + 1, iv + 1),
            );
            triangles.push([q00, q10, q11]);
            triangles.push([q00, q11, q01]);
        }
    }
    for iv in 0..n_v {
        triangles.push([south, ring(n_u - 1, iv + 1), ring(n_u - 1, iv)]);
    }
    let mut mesh = TriMesh::new(vertices, triangles)?;
    normalize_orientation(&mut mesh);
    Ok(mesh)
}

/// Dumbbell of revolution: two bulbs joined by a neck of relative radius
/// `neck ∈ (0, 1)`, total half-length `elongation`.
pub fn make_dumbbell(
    neck: f64,
    elongation: f64,
    n_u: usize,
    n_v: usize,
) -> Result<TriMesh, AxisymError> {
    if !(neck > 0.0 && neck < 1.0 && elongation > 0.0) {
        return Err(AxisymError::InvalidParams(format!(
            "dumbbell needs 0 < neck < 1 and elongation > 0, got {neck}, {elongation}"
        )));
    }
    make_revolution_genus0(
        move |u| {
            let (s, c) = u.sin_cos();
            let y = s * (neck * neck + (1.0 - neck * neck) * c * c).sqrt();
            (elongation * c, y)
        },
        n_u,
        n_v,
    )
}

/// Profile curve of a grid torus: the v = 0 slice mapped to (x, √(y² + z²)).
pub fn extract_profile(mesh: &TriMesh) -> Result<ProfileCurve, AxisymError> {
    let grid = mesh.grid.ok_or(AxisymError::NoGridStructure)?;
    let vs = mesh.vertices();
    let mut points = Vec::with_capacity(grid.n_u);
    for iu in 0..grid.n_u {
        let p = vs[iu * grid.n_v];
        points.push((p.x, (p.y * p.y + p.z * p.z).sqrt()));
    }
    Ok(ProfileCurve {
        points,
        closed: true,
    })
}

/// Length of a closed profile curve in the hyperbolic half-plane metric
/// (1/y²)(dx² + dy²): per segment, Euclidean length divided by the midpoint
/// height.
pub fn hyperbolic_length(curve: &ProfileCurve) -> Result<f64, AxisymError> {
    let pts = &curve.points;
    if pts.len() < 2 {
        return Err(AxisymError::InvalidParams(
            "profile curve needs at least 2 nodes".into(),
        ));
    }
    let mut scale: f64 = 0.0;
    let mut min_y = f64::INFINITY;
    for &(x, y) in pts {
        scale = scale.max(x.abs()).max(y.abs());
        min_y = min_y.min(y);
    }
    if min_y <= 1e-9 * scale {
        return Err(AxisymError::AxisTouch { min_y });
    }
    let n = pts.len();
    let last = if curve.closed { n } else { n - 1 };
    let mut length = 0.0;
    for i in 0..last {
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[(i + 1) % n];
        let seg = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
        length += seg / (0.5 * (y0 + y1));
    }
    Ok(length)
}

/// Deviation from exact axisymmetry of a grid mesh: the largest mismatch
/// between a grid rotation and the corresponding rigid rotation about the
/// x-axis, plus the largest out-of-plane component of the v = 0 slice
/// (rotated back by the known row offsets), both relative to the diameter.
pub fn axisymmetry_defect(mesh: &TriMesh) -> Result<f64, AxisymError> {
    let grid = mesh.grid.ok_or(AxisymError::NoGridStructure)?;
    let vs = mesh.vertices();
    let diam = crate::surface::diameter(mesh);
    let idx = |iu: usize, iv: usize| iu * grid.n_v + (iv % grid.n_v);

    let mut rot_defect: f64 = 0.0;
    for k in 1..grid.n_v {
        let phi = 2.0 * PI * k as f64 / grid.n_v as f64;
        let (s, c) = phi.sin_cos();
        for iu in 0..grid.n_u {
            for iv in 0..grid.n_v {
                let p = vs[idx(iu, iv)];
                let rotated = Vector3::new(p.x, c * p.y - s * p.z, s * p.y + c * p.z);
                let shifted = vs[idx(iu, iv + k)];
                rot_defect = rot_defect.max((shifted - rotated).norm());
            }
        }
    }
    // Slice condition: after undoing the known row offsets, the v = 0 grid
    // line must lie in a single half-plane through the axis. The global
    // rotation phase is quotiented out using row 0 as the reference.
    let phase_of = |iu: usize| -> f64 {
        let p = vs[idx(iu, 0)];
        p.z.atan2(p.y) - 2.0 * PI * grid.row_offset(iu) / grid.n_v as f64
    };
    let reference = phase_of(0);
    let mut slice_defect: f64 = 0.0;
    for iu in 0..grid.n_u {
        let p = vs[idx(iu, 0)];
        let rho = (p.y * p.y + p.z * p.z).sqrt();
        let mut dphi = phase_of(iu) - reference;
        while dphi > PI {
            dphi -= 2.0 * PI;
        }
        while dphi < -PI {
            dphi += 2.0 * PI;
        }
        slice_defect = slice_defect.max((rho * dphi.sin()).abs());
    }
    Ok(rot_defect / diam + slice_defect / diam)
}
