//! Discrete curvature operators: cotangent Laplace–Beltrami with mixed
//! Voronoi vertex areas for the mean curvature vector, angle defect for the
//! Gauss curvature.
//!
//! All reductions run in fixed (triangle index) order so repeated evaluations
//! are bit-identical.

use std::sync::Arc;

use nalgebra::Vector3;

use super::{SurfaceError, TriMesh, DEGENERACY_TOL};

/// Cap on cotangent weights; beyond this a triangle is as good as degenerate.
pub const COT_CAP: f64 = 1e6;

/// Half-width (in cotangent units) of the C¹ blend between the Voronoi and
/// obtuse-case mixed-area formulas. The two formulas agree in value exactly
/// at right angles, so blending over a narrow band around them removes the
/// derivative kink of the hard branch switch (which otherwise wedges the
/// gradient flow) while leaving acute meshes bit-identical.
pub const MIXED_AREA_BLEND: f64 = 0.05;

/// Smoothstep weight of the Voronoi branch: 1 for safely acute triangles
/// (q ≥ blend width), 0 at and beyond the right angle (q ≤ 0).
pub fn voronoi_blend_weight(q: f64) -> f64 {
    let t = (q / MIXED_AREA_BLEND).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Vertices whose mean curvature vector is shorter than this (relative to the
/// bounding box scale) get their scalar-H sign flagged as unreliable.
const SIGN_AMBIGUITY_TOL: f64 = 1e-9;

/// Symmetric sparse matrix of cotangent weights in CSR layout, plus the
/// precomputed slot of every triangle edge for O(F) reassembly.
#[derive(Debug, Clone)]
pub struct Topology {
    pub offsets: Vec<usize>,
    pub cols: Vec<usize>,
    /// For each triangle: slots of the directed edges (0→1, 1→2, 2→0) and
    /// their reverses.
    edge_slots: Vec<[(usize, usize); 3]>,
}

impl Topology {
    pub fn new(mesh: &TriMesh) -> Self {
        let nv = mesh.num_vertices();
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for tri in mesh.triangles() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        let mut offsets = Vec::with_capacity(nv + 1);
        let mut cols = Vec::new();
        offsets.push(0);
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
            cols.extend_from_slice(list);
            offsets.push(cols.len());
        }
        let slot = |offsets: &[usize], cols: &[usize], i: usize, j: usize| -> usize {
            let row = &cols[offsets[i]..offsets[i + 1]];
            offsets[i] + row.binary_search(&j).expect("edge present in adjacency")
        };
        let mut edge_slots = Vec::with_capacity(mesh.num_triangles());
        for tri in mesh.triangles() {
            let mut slots = [(0, 0); 3];
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                slots[e] = (slot(&offsets, &cols, a, b), slot(&offsets, &cols, b, a));
            }
            edge_slots.push(slots);
        }
        Self {
            offsets,
            cols,
            edge_slots,
        }
    }
}

/// All per-vertex discrete geometry of one mesh snapshot.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub mesh_version: u64,
    /// Mixed Voronoi vertex areas.
    pub mixed_area: Vec<f64>,
    /// Inward unit normal ν (orientation convention: signed volume ≥ 0).
    pub vertex_normal: Vec<Vector3<f64>>,
    /// Raw area-weighted outward normal sum Σ (p_j−p_i)×(p_k−p_i).
    pub normal_sum: Vec<Vector3<f64>>,
    /// Cotangent Laplacian applied to positions, S_v = Σ_j w_vj (p_j − p_v).
    /// The mean curvature vector is S_v / A_v; the total-area gradient is −S_v.
    pub lap_vec: Vec<Vector3<f64>>,
    /// Scalar mean curvature H = ⟨S_v/A_v, ν_v⟩ (2/r on a radius-r sphere).
    pub mean_h: Vec<f64>,
    /// Gauss curvature, angle defect / mixed area.
    pub gauss_k: Vec<f64>,
    /// Angle defect 2π − Σ θ (sums exactly to 2πχ).
    pub angle_defect: Vec<f64>,
    /// |A⁰|² = max(½H² − 2K, 0).
    pub a0_sq: Vec<f64>,
    /// |A|² = |A⁰|² + ½H².
    pub a_sq: Vec<f64>,
    /// Vertices where the H-vector is too short to resolve the sign of H.
    pub sign_ambiguous: Vec<bool>,
    pub area: f64,
    pub volume: f64,
    pub min_edge: f64,
    pub mean_edge: f64,
    /// Cotangent weights in the CSR layout of the topology used to build this.
    pub stiffness: Vec<f64>,
    pub topology: Arc<Topology>,
}

impl Geometry {
    pub fn new(mesh: &TriMesh) -> Result<Self, SurfaceError> {
        let topo = Arc::new(Topology::new(mesh));
        Self::with_topology(mesh, topo)
    }

    pub fn with_topology(mesh: &TriMesh, topology: Arc<Topology>) -> Result<Self, SurfaceError> {
        let nv = mesh.num_vertices();
        let vs = mesh.vertices();
        let scale = mesh.bbox_scale();
        let area_tol = DEGENERACY_TOL * scale * scale;

        let mut mixed_area = vec![0.0; nv];
        let mut normal_sum = vec![Vector3::zeros(); nv];
        let mut lap_vec = vec![Vector3::zeros(); nv];
        let mut angle_sum = vec![0.0; nv];
        let mut stiffness = vec![0.0; topology.cols.len()];
        let mut total_area = 0.0;
        let mut min_edge = f64::INFINITY;
        let mut edge_sum = 0.0;

        for (t, tri) in mesh.triangles().iter().enumerate() {
            let p = [vs[tri[0]], vs[tri[1]], vs[tri[2]]];
            let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let two_area = cross.norm();
            let area = 0.5 * two_area;
            if area < area_tol {
                return Err(SurfaceError::DegenerateTriangle {
                    tri: t,
                    area,
                    tol: area_tol,
                });
            }
            total_area += area;

            // Corner data. dot_c = ⟨edges out of corner c⟩; |u×v| = 2·area at
            // every corner.
            let mut dots = [0.0; 3];
            let mut cots = [0.0; 3];
            let mut edge_sq = [0.0; 3]; // edge opposite corner c
            for c in 0..3 {
                let u = p[(c + 1) % 3] - p[c];
                let v = p[(c + 2) % 3] - p[c];
                dots[c] = u.dot(&v);
                cots[c] = (dots[c] / two_area).clamp(-COT_CAP, COT_CAP);
                let opp = p[(c + 2) % 3] - p[(c + 1) % 3];
                edge_sq[c] = opp.norm_squared();
                let elen = u.norm();
                min_edge = min_edge.min(elen);
                edge_sum += elen;
                angle_sum[tri[c]] += two_area.atan2(dots[c]);
            }

            // Mixed Voronoi areas (Meyer et al.), with the branch switch
            // blended to C¹ near right angles.
            let worst = (0..3).fold(0, |m, c| if dots[c] < dots[m] { c } else { m });
            let w = voronoi_blend_weight(cots[worst]);
            for c in 0..3 {
                // Voronoi area at corner c: edges adjacent to c are opposite
                // the other two corners.
                let voronoi = (edge_sq[(c + 1) % 3] * cots[(c + 1) % 3]
                    + edge_sq[(c + 2) % 3] * cots[(c + 2) % 3])
                    / 8.0;
                let obtuse = if c == worst { area / 2.0 } else { area / 4.0 };
                mixed_area[tri[c]] += w * voronoi + (1.0 - w) * obtuse;
            }

            for c in 0..3 {
                normal_sum[tri[c]] += cross;
            }

            // Edge (a, b) opposite corner c gets weight cot_c / 2.
            let slots = topology.edge_slots[t];
            for e in 0..3 {
                let (ia, ib) = (tri[e], tri[(e + 1) % 3]);
                let opp = (e + 2) % 3;
                let w = 0.5 * cots[opp];
                lap_vec[ia] += w * (p[(e + 1) % 3] - p[e]);
                lap_vec[ib] += w * (p[e] - p[(e + 1) % 3]);
                stiffness[slots[e].0] += w;
                stiffness[slots[e].1] += w;
            }
        }

        let mut vertex_normal = vec![Vector3::zeros(); nv];
        let mut mean_h = vec![0.0; nv];
        let mut gauss_k = vec![0.0; nv];
        let mut angle_defect = vec![0.0; nv];
        let mut a0_sq = vec![0.0; nv];
        let mut a_sq = vec![0.0; nv];
        let mut sign_ambiguous = vec![false; nv];
        for v in 0..nv {
            let av = mixed_area[v];
            debug_assert!(av > 0.0, "mixed vertex area must be positive");
            let m = normal_sum[v].norm();
            let nu = -normal_sum[v] / m;
            vertex_normal[v] = nu;
            let hvec = lap_vec[v] / av;
            if hvec.norm() * scale < SIGN_AMBIGUITY_TOL {
                sign_ambiguous[v] = true;
            }
            let h = hvec.dot(&nu);
            mean_h[v] = h;
            let defect = 2.0 * std::f64::consts::PI - angle_sum[v];
            angle_defect[v] = defect;
            let k = defect / av;
            gauss_k[v] = k;
            let a0 = (0.5 * h * h - 2.0 * k).max(0.0);
            a0_sq[v] = a0;
            a_sq[v] = a0 + 0.5 * h * h;
        }

        Ok(Self {
            mesh_version: mesh.version(),
            mixed_area,
            vertex_normal,
            normal_sum,
            lap_vec,
            mean_h,
            gauss_k,
            angle_defect,
            a0_sq,
            a_sq,
            sign_ambiguous,
            area: total_area,
            volume: mesh.signed_volume_raw(),
            min_edge,
            mean_edge: edge_sum / (3 * mesh.num_triangles()) as f64,
            stiffness,
            topology,
        })
    }

    /// Laplace–Beltrami of a per-vertex scalar field:
    /// `(Δφ)_i = (1/A_i) Σ_j w_ij (φ_j − φ_i)`.
    pub fn laplacian_scalar(&self, field: &[f64]) -> Vec<f64> {
        let nv = self.mixed_area.len();
        assert_eq!(field.len(), nv);
        let mut out = vec![0.0; nv];
        for i in 0..nv {
            let mut acc = 0.0;
            for idx in self.topology.offsets[i]..self.topology.offsets[i + 1] {
                let j = self.topology.cols[idx];
                acc += self.stiffness[idx] * (field[j] - field[i]);
            }
            out[i] = acc / self.mixed_area[i];
        }
        out
    }

    /// Stiffness matrix–vector product `(Lφ)_i = Σ_j w_ij (φ_i − φ_j)`
    /// (positive semidefinite form, no area weighting).
    pub fn stiffness_apply(&self, field: &[f64], out: &mut [f64]) {
        let nv = self.mixed_area.len();
        for i in 0..nv {
            let mut acc = 0.0;
            for idx in self.topology.offsets[i]..self.topology.offsets[i + 1] {
                let j = self.topology.cols[idx];
                acc += self.stiffness[idx] * (field[i] - field[j]);
            }
            out[i] = acc;
        }
    }

    /// Number of vertices with unreliable H sign.
    pub fn sign_ambiguous_count(&self) -> usize {
        self.sign_ambiguous.iter().filter(|b| **b).count()
    }

    /// Max over vertices of |A|².
    pub fn max_a_sq(&self) -> f64 {
        self.a_sq.iter().cloned().fold(0.0, f64::max)
    }
}
