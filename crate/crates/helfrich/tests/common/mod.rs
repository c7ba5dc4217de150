//! Shared oracles and mesh corpora for the integration tests.
//!
//! Everything here is deliberately independent of the library's assembly
//! path: closed forms and dense quadrature on smooth parametrizations.

#![allow(dead_code)]

use helfrich::surface::TriMesh;
use nalgebra::Vector3;

pub const PI: f64 = std::f64::consts::PI;

/// Dense Simpson quadrature on [a, b].
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i.is_multiple_of(2) { 2.0 } else { 4.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Torus of revolution (R, a): analytic per-angle mean curvature with the
/// crate's sign convention (positive on convex spheres).
pub fn torus_h(big_r: f64, a: f64, theta: f64) -> f64 {
    1.0 / a + theta.cos() / (big_r + a * theta.cos())
}

/// Area element factor: dμ = a (R + a cos θ) dθ dφ.
pub fn torus_area_element(big_r: f64, a: f64, theta: f64) -> f64 {
    a * (big_r + a * theta.cos())
}

pub fn torus_area(big_r: f64, a: f64) -> f64 {
    4.0 * PI * PI * big_r * a
}

pub fn torus_volume(big_r: f64, a: f64) -> f64 {
    2.0 * PI * PI * big_r * a * a
}

/// ¼ ∫ (H − c0)² dμ by quadrature over the tube angle.
pub fn torus_helfrich(big_r: f64, a: f64, c0: f64) -> f64 {
    0.25 * 2.0
        * PI
        * simpson(
            |t| {
                let d = torus_h(big_r, a, t) - c0;
                d * d * torus_area_element(big_r, a, t)
            },
            0.0,
            2.0 * PI,
            20_000,
        )
}

/// ∫ H dμ by quadrature.
pub fn torus_total_h(big_r: f64, a: f64) -> f64 {
    2.0 * PI
        * simpson(
            |t| torus_h(big_r, a, t) * torus_area_element(big_r, a, t),
            0.0,
            2.0 * PI,
            20_000,
        )
}

/// CMC-deficit ¼∫(H − H̄)² dμ by quadrature.
pub fn torus_cmc_deficit(big_r: f64, a: f64) -> f64 {
    let area = torus_area(big_r, a);
    let h_bar = torus_total_h(big_r, a) / area;
    torus_helfrich(big_r, a, h_bar)
}

/// Mean curvature (κ1 + κ2, positive for convex) of the ellipsoid
/// x²/a² + y²/b² + z²/c² = 1 at a surface point, via div(∇F/|∇F|).
pub fn ellipsoid_h(a: f64, b: f64, c: f64, p: Vector3<f64>) -> f64 {
    let (a2, b2, c2) = (a * a, b * b, c * c);
    let g = Vector3::new(2.0 * p.x / a2, 2.0 * p.y / b2, 2.0 * p.z / c2);
    let hess = Vector3::new(2.0 / a2, 2.0 / b2, 2.0 / c2);
    let gn = g.norm();
    let lap = hess.x + hess.y + hess.z;
    let ghg = hess.x * g.x * g.x + hess.y * g.y * g.y + hess.z * g.z * g.z;
    (lap * gn * gn - ghg) / (gn * gn * gn)
}

/// Torus |A⁰|² from the closed-form principal curvatures.
pub fn torus_a0_sq(big_r: f64, a: f64, theta: f64) -> f64 {
    let k1 = 1.0 / a;
    let k2 = theta.cos() / (big_r + a * theta.cos());
    0.5 * (k1 - k2) * (k1 - k2)
}

/// Hyperbolic length of a circle of radius `a` centred at height `big_r`:
/// 2πa / √(R² − a²).
pub fn circle_hyperbolic_length(big_r: f64, a: f64) -> f64 {
    2.0 * PI * a / (big_r * big_r - a * a).sqrt()
}

/// The same by blind numeric quadrature of ∫ a dθ / (R + a sin θ).
pub fn circle_hyperbolic_length_quadrature(big_r: f64, a: f64) -> f64 {
    simpson(|t| a / (big_r + a * t.sin()), 0.0, 2.0 * PI, 200_000)
}

/// Deterministic corpus of valid closed meshes with varied genus and shape.
#[allow(clippy::vec_init_then_push)]
pub fn mesh_corpus() -> Vec<(String, TriMesh)> {
    use helfrich::axisym::*;
    let mut corpus: Vec<(String, TriMesh)> = Vec::new();
    corpus.push(("icosphere3".into(), icosphere(3)));
    corpus.push(("icosphere4".into(), icosphere(4)));
    corpus.push(("icosphere5".into(), icosphere(5)));
    corpus.push(("sphere_r0.4".into(), sphere(0.4, 3)));
    corpus.push(("sphere_r3".into(), sphere(3.0, 4)));
    corpus.push(("ellipsoid_prolate".into(), ellipsoid(1.0, 1.0, 1.3, 3)));
    corpus.push(("ellipsoid_oblate".into(), ellipsoid(1.2, 1.2, 0.7, 4)));
    corpus.push(("ellipsoid_triax".into(), ellipsoid(0.8, 1.1, 1.4, 3)));
    corpus.push(("torus_2_1".into(), make_torus(2.0, 1.0, 64, 32).unwrap()));
    corpus.push((
        "torus_2_1_fine".into(),
        make_torus(2.0, 1.0, 128, 64).unwrap(),
    ));
    corpus.push((
        "torus_clifford".into(),
        make_torus(2.0_f64.sqrt(), 1.0, 64, 32).unwrap(),
    ));
    corpus.push(("torus_thin".into(), make_torus(3.0, 0.5, 96, 24).unwrap()));
    corpus.push((
        "perturbed_sigma95".into(),
        make_perturbed_sphere(1.0, &[(2, 1.0)], Some(0.95), 3).unwrap(),
    ));
    corpus.push((
        "perturbed_sigma85".into(),
        make_perturbed_sphere(1.0, &[(2, 1.0), (4, 0.3)], Some(0.85), 3).unwrap(),
    ));
    corpus.push((
        "perturbed_plain".into(),
        make_perturbed_sphere(1.3, &[(3, 0.15)], None, 3).unwrap(),
    ));
    corpus.push(("biconcave".into(), make_biconcave(1.0, None, 4)));
    corpus.push((
        "dumbbell_mild".into(),
        make_dumbbell(0.55, 1.4, 48, 24).unwrap(),
    ));
    corpus.push((
        "dumbbell_neck".into(),
        make_dumbbell(0.3, 1.6, 64, 32).unwrap(),
    ));
    corpus.push((
        "revolution_egg".into(),
        make_revolution_genus0(|u| (1.2 * u.cos(), u.sin() * (1.0 + 0.2 * u.cos())), 48, 24)
            .unwrap(),
    ));
    corpus.push(("icosphere_scaled".into(), sphere(10.0, 3)));
    corpus
}

/// Deterministic pseudo-random unit vector stream (splitmix64 based).
pub struct DetRng(u64);

impl DetRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
    /// Uniform in [-1, 1).
    pub fn sym(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    }
    pub fn vector(&mut self) -> Vector3<f64> {
        Vector3::new(self.sym(), self.sym(), self.sym())
    }
}

pub fn rel_err(x: f64, want: f64) -> f64 {
    (x - want).abs() / want.abs().max(1e-300)
}
