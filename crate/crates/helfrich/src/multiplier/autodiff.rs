//! Exact derivative of the discrete Helfrich energy by forward-mode
//! differentiation of the per-triangle assembly.
//!
//! The energy is a function of three per-vertex aggregates — the Laplacian
//! vector S_v, the mixed area A_v and the raw normal sum N_v — each a sum of
//! per-triangle contributions. A plain pass computes the aggregates and the
//! adjoints ∂E/∂(S, A, N); a second pass re-evaluates every triangle's
//! contributions with 9-lane dual numbers (one lane per local coordinate)
//! and accumulates the chain rule.
//!
//! The kernel mirrors the arithmetic of `surface::geometry` exactly so that
//! branch decisions (obtuse mixed-area cases, cotangent caps) agree between
//! the two passes.

use nalgebra::Vector3;

use crate::surface::geometry::COT_CAP;
use crate::surface::{Geometry, TriMesh};

trait Scalar:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    /// Clamp with zero derivative outside the interval.
    fn clamp_sym(self, cap: f64) -> Self;
    /// The C¹ Voronoi/obtuse blend weight of `surface::geometry`.
    fn voronoi_blend(self) -> Self;
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn clamp_sym(self, cap: f64) -> Self {
        self.clamp(-cap, cap)
    }
    fn voronoi_blend(self) -> Self {
        crate::surface::geometry::voronoi_blend_weight(self)
    }
}

/// Value plus nine partial derivatives (the triangle's local coordinates).
#[derive(Clone, Copy)]
struct Dual9 {
    v: f64,
    d: [f64; 9],
}

impl Dual9 {
    fn seed(v: f64, lane: usize) -> Self {
        let mut d = [0.0; 9];
        d[lane] = 1.0;
        Self { v, d }
    }
}

impl std::ops::Add for Dual9 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut d = self.d;
        for i in 0..9 {
            d[i] += o.d[i];
        }
        Self { v: self.v + o.v, d }
    }
}

impl std::ops::Sub for Dual9 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut d = self.d;
        for i in 0..9 {
            d[i] -= o.d[i];
        }
        Self { v: self.v - o.v, d }
    }
}

impl std::ops::Mul for Dual9 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; 9];
        for i in 0..9 {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        Self { v: self.v * o.v, d }
    }
}

impl std::ops::Div for Dual9 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let mut d = [0.0; 9];
        for i in 0..9 {
            d[i] = (self.d[i] - v * o.d[i]) * inv;
        }
        Self { v, d }
    }
}

impl std::ops::Neg for Dual9 {
    type Output = Self;
    fn neg(self) -> Self {
        let mut d = self.d;
        for x in &mut d {
            *x = -*x;
        }
        Self { v: -self.v, d }
    }
}

impl Scalar for Dual9 {
    fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 9] }
    }
    fn value(self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        let scale = 0.5 / r;
        let mut d = self.d;
        for x in &mut d {
            *x *= scale;
        }
        Self { v: r, d }
    }
    fn clamp_sym(self, cap: f64) -> Self {
        if self.v.abs() <= cap {
            self
        } else {
            Self::constant(self.v.clamp(-cap, cap))
        }
    }
    fn voronoi_blend(self) -> Self {
        use crate::surface::geometry::MIXED_AREA_BLEND;
        if self.v <= 0.0 {
            Self::constant(0.0)
        } else if self.v >= MIXED_AREA_BLEND {
            Self::constant(1.0)
        } else {
            let t = self * Self::constant(1.0 / MIXED_AREA_BLEND);
            t * t * (Self::constant(3.0) - Self::constant(2.0) * t)
        }
    }
}

type V3<S> = [S; 3];

fn sub3<S: Scalar>(a: V3<S>, b: V3<S>) -> V3<S> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3<S: Scalar>(a: V3<S>, b: V3<S>) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3<S: Scalar>(a: V3<S>, b: V3<S>) -> V3<S> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale3<S: Scalar>(s: S, a: V3<S>) -> V3<S> {
    [s * a[0], s * a[1], s * a[2]]
}

fn add3<S: Scalar>(a: V3<S>, b: V3<S>) -> V3<S> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

struct TriContrib<S: Scalar> {
    /// Contribution of this triangle to S_{v_c} for each corner c.
    s_add: [V3<S>; 3],
    /// Mixed-area contribution per corner.
    mixed: [S; 3],
    /// Unnormalised cross-product normal, added to every corner's N_v.
    cross: V3<S>,
}

/// Per-triangle contributions to (S, A, N), mirroring `Geometry`.
fn tri_kernel<S: Scalar>(p: [V3<S>; 3]) -> TriContrib<S> {
    let cross = cross3(sub3(p[1], p[0]), sub3(p[2], p[0]));
    let two_area = dot3(cross, cross).sqrt();
    let area = S::constant(0.5) * two_area;

    let mut dots = [S::constant(0.0); 3];
    let mut cots = [S::constant(0.0); 3];
    let mut edge_sq = [S::constant(0.0); 3];
    for c in 0..3 {
        let u = sub3(p[(c + 1) % 3], p[c]);
        let v = sub3(p[(c + 2) % 3], p[c]);
        dots[c] = dot3(u, v);
        cots[c] = (dots[c] / two_area).clamp_sym(COT_CAP);
        let opp = sub3(p[(c + 2) % 3], p[(c + 1) % 3]);
        edge_sq[c] = dot3(opp, opp);
    }

    // Blended mixed areas, mirroring `Geometry` (same branch and weight).
    let worst = (0..3).fold(0, |m, c| {
        if dots[c].value() < dots[m].value() {
            c
        } else {
            m
        }
    });
    let w = cots[worst].voronoi_blend();
    let one_minus_w = S::constant(1.0) - w;
    let mut mixed = [S::constant(0.0); 3];
    let eighth = S::constant(1.0 / 8.0);
    for c in 0..3 {
        let voronoi = eighth
            * (edge_sq[(c + 1) % 3] * cots[(c + 1) % 3] + edge_sq[(c + 2) % 3] * cots[(c + 2) % 3]);
        let obtuse = if c == worst {
            area * S::constant(0.5)
        } else {
            area * S::constant(0.25)
        };
        mixed[c] = w * voronoi + one_minus_w * obtuse;
    }

    let zero = [S::constant(0.0); 3];
    let mut s_add = [zero; 3];
    let half = S::constant(0.5);
    for e in 0..3 {
        let opp = (e + 2) % 3;
        let w = half * cots[opp];
        let d = sub3(p[(e + 1) % 3], p[e]);
        s_add[e] = add3(s_add[e], scale3(w, d));
        s_add[(e + 1) % 3] = sub3(s_add[(e + 1) % 3], scale3(w, d));
    }

    TriContrib {
        s_add,
        mixed,
        cross,
    }
}

/// ∂E/∂x for the discrete energy `E = ¼ Σ_v A_v (H_v − c0)²` with
/// `H_v = −⟨S_v, N_v⟩ / (A_v |N_v|)`.
pub fn energy_derivative(mesh: &TriMesh, geom: &Geometry, c0: f64) -> Vec<Vector3<f64>> {
    let nv = mesh.num_vertices();
    debug_assert_eq!(geom.mesh_version, mesh.version());

    // Adjoints of the aggregates from the already-assembled geometry.
    let mut sbar = vec![Vector3::zeros(); nv];
    let mut abar = vec![0.0; nv];
    let mut nbar = vec![Vector3::zeros(); nv];
    for v in 0..nv {
        let u = geom.mean_h[v] - c0;
        let nu = geom.vertex_normal[v];
        let s_v = geom.lap_vec[v];
        let m = geom.normal_sum[v].norm();
        sbar[v] = 0.5 * u * nu;
        abar[v] = 0.25 * u * u - 0.5 * u * geom.mean_h[v];
        let s_tangential = s_v - s_v.dot(&nu) * nu;
        nbar[v] = -(u / (2.0 * m)) * s_tangential;
    }

    let vs = mesh.vertices();
    let mut grad = vec![Vector3::zeros(); nv];
    for tri in mesh.triangles() {
        let mut p = [[Dual9::constant(0.0); 3]; 3];
        for c in 0..3 {
            let pos = vs[tri[c]];
            for k in 0..3 {
                p[c][k] = Dual9::seed(pos[k], 3 * c + k);
            }
        }
        let contrib = tri_kernel(p);

        let mut phi = Dual9::constant(0.0);
        for c in 0..3 {
            let v = tri[c];
            let sb = sbar[v];
            let nb = nbar[v];
            for k in 0..3 {
                phi = phi
                    + Dual9::constant(sb[k]) * contrib.s_add[c][k]
                    + Dual9::constant(nb[k]) * contrib.cross[k];
            }
            phi = phi + Dual9::constant(abar[v]) * contrib.mixed[c];
        }
        for c in 0..3 {
            let v = tri[c];
            for k in 0..3 {
                grad[v][k] += phi.d[3 * c + k];
            }
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axisym::ellipsoid;
    use crate::energy::helfrich_of;

    /// The f64 kernel must reproduce the geometry assembly bit-for-bit.
    #[test]
    fn kernel_matches_geometry_assembly() {
        let mesh = ellipsoid(1.0, 0.8, 1.3, 2);
        let geom = Geometry::new(&mesh).unwrap();
        let nv = mesh.num_vertices();
        let mut s = vec![Vector3::zeros(); nv];
        let mut a = vec![0.0; nv];
        let mut n = vec![Vector3::zeros(); nv];
        for tri in mesh.triangles() {
            let p = [
                [
                    mesh.vertices()[tri[0]][0],
                    mesh.vertices()[tri[0]][1],
                    mesh.vertices()[tri[0]][2],
                ],
                [
                    mesh.vertices()[tri[1]][0],
                    mesh.vertices()[tri[1]][1],
                    mesh.vertices()[tri[1]][2],
                ],
                [
                    mesh.vertices()[tri[2]][0],
                    mesh.vertices()[tri[2]][1],
                    mesh.vertices()[tri[2]][2],
                ],
            ];
            let c = tri_kernel::<f64>(p);
            for i in 0..3 {
                let v = tri[i];
                s[v] += Vector3::new(c.s_add[i][0], c.s_add[i][1], c.s_add[i][2]);
                a[v] += c.mixed[i];
                n[v] += Vector3::new(c.cross[0], c.cross[1], c.cross[2]);
            }
        }
        for v in 0..nv {
            assert!((s[v] - geom.lap_vec[v]).norm() <= 1e-13 * (1.0 + geom.lap_vec[v].norm()));
            assert!((a[v] - geom.mixed_area[v]).abs() <= 1e-13 * geom.mixed_area[v]);
            assert!((n[v] - geom.normal_sum[v]).norm() <= 1e-13 * geom.normal_sum[v].norm());
        }
    }

    /// Central finite differences of the energy along random coordinate
    /// directions agree with the analytic derivative.
    #[test]
    fn finite_difference_spot_check() {
        let mesh = ellipsoid(1.0, 1.0, 1.3, 1);
        let geom = Geometry::new(&mesh).unwrap();
        let c0 = 0.7;
        let grad = energy_derivative(&mesh, &geom, c0);

        let eps = 1e-6;
        for &(v, k) in &[(0usize, 0usize), (7, 1), (23, 2), (40, 0)] {
            let mut plus = mesh.clone();
            let mut vs = plus.vertices().to_vec();
            vs[v][k] += eps;
            plus.set_vertices(vs);
            let mut minus = mesh.clone();
            let mut vs = minus.vertices().to_vec();
            vs[v][k] -= eps;
            minus.set_vertices(vs);
            let ep = helfrich_of(&Geometry::new(&plus).unwrap(), c0);
            let em = helfrich_of(&Geometry::new(&minus).unwrap(), c0);
            let fd = (ep - em) / (2.0 * eps);
            let an = grad[v][k];
            assert!(
                (fd - an).abs() <= 1e-6 * (1.0 + an.abs()),
                "vertex {v} coord {k}: fd {fd:.12e} vs analytic {an:.12e}"
            );
        }
    }
}
