mod common;

use common::*;
use helfrich::axisym::{icosphere, make_dumbbell, make_torus};
use helfrich::diagnostics::{
    bump, gamma_monotonicity_of, kappa_concentration_of, li_yau_functional_of,
    localized_curvature_energy_of, omega, threshold_check, DiagnosticsError, OmegaBranch,
};
use helfrich::energy::helfrich_of;
use helfrich::surface::Geometry;
use nalgebra::Vector3;

#[test]
fn omega_at_zero_c0_is_eight_pi() {
    // Both c0 ≥ 0 branch expressions coincide at 8π; which label wins the
    // max is a rounding artifact and not significant.
    let (value, branch) = omega(4.0 * PI, 1.0, 0.0, 1.0);
    assert!((value - 8.0 * PI).abs() < 1e-12);
    assert!(matches!(
        branch,
        OmegaBranch::PosPlusPart | OmegaBranch::PosVolume
    ));
}

const PI_F: f64 = std::f64::consts::PI;

#[test]
fn omega_negative_c0_value() {
    // Independent evaluation: 4π + √((4π)² + |c0| V0 / (2 C² A0)).
    let (value, branch) = omega(4.0 * PI, 2.0, -1.0, 1.0);
    assert_eq!(branch, OmegaBranch::NegC0);
    let independent = 4.0 * PI + (16.0 * PI * PI + 2.0 / (8.0 * PI)).sqrt();
    assert!((value - independent).abs() < 1e-12);
    assert!((value - 25.1359).abs() < 5e-4, "value {value}");
}

#[test]
fn omega_positive_c0_branches() {
    // Large positive c0 with small volume: the plus-part square vanishes and
    // the volume branch is negative, so the max picks the larger.
    let (v1, b1) = omega(4.0 * PI, 1.0, 5.0, 1.0);
    // (√(8π) − ½·5·√(4π))₊² = 0; 8π − 6·5·(4π²)^(1/3) < 0 → max is 0.
    assert_eq!(b1, OmegaBranch::PosPlusPart);
    assert_eq!(v1, 0.0);
    // Small positive c0: volume branch can win for large V0.
    let a0 = 4.0 * PI;
    let v0 = 4.0;
    let c0 = 0.1;
    let plus = ((8.0 * PI_F).sqrt() - 0.5 * (c0 * c0 * a0).sqrt())
        .max(0.0)
        .powi(2);
    let vol = 8.0 * PI - 6.0 * c0 * (4.0 * PI * PI * v0).cbrt();
    let (value, branch) = omega(a0, v0, c0, 1.0);
    assert!((value - plus.max(vol)).abs() < 1e-12);
    if vol > plus {
        assert_eq!(branch, OmegaBranch::PosVolume);
    } else {
        assert_eq!(branch, OmegaBranch::PosPlusPart);
    }
}

#[test]
fn omega_scale_invariance() {
    for (a0, v0, c0) in [(4.0 * PI, 1.0, -1.3), (7.0, 0.9, 0.0), (10.0, 1.7, 2.1)] {
        let (base, _) = omega(a0, v0, c0, 1.0);
        for r in [0.1, 0.5, 2.0, 10.0] {
            let (scaled, _) = omega(a0 / (r * r), v0 / (r * r * r), r * c0, 1.0);
            assert!(
                (scaled - base).abs() <= 1e-12 * (1.0 + base),
                "r {r}: {scaled} vs {base}"
            );
        }
    }
}

#[test]
fn threshold_check_admissible_ellipsoid() {
    let mesh = helfrich::axisym::make_perturbed_sphere(1.0, &[(2, 1.0)], Some(0.95), 4).unwrap();
    let rep = threshold_check(&mesh, 0.0, 1.0).unwrap();
    assert!(
        rep.admissible,
        "margins {} / {}",
        rep.margin_a, rep.margin_b
    );
    assert!(rep.sqrt_energy < rep.sqrt_term_a);
    assert!(rep.sqrt_energy < rep.sqrt_term_b);
    assert!(!rep.c_diam_warning.is_empty());
}

#[test]
fn threshold_check_large_positive_c0_inadmissible() {
    let mesh = helfrich::axisym::make_perturbed_sphere(1.0, &[(2, 1.0)], Some(0.9), 3).unwrap();
    let geom = Geometry::new(&mesh).unwrap();
    let c0 = 20.0 / geom.area.sqrt();
    let rep = helfrich::diagnostics::threshold_check_of(&geom, c0, 1.0).unwrap();
    assert!(rep.sqrt_term_b < 0.0, "term_b {}", rep.sqrt_term_b);
    assert!(!rep.admissible);
}

#[test]
fn threshold_check_sphere_rejected() {
    let mesh = icosphere(4);
    match threshold_check(&mesh, 0.0, 1.0) {
        Err(DiagnosticsError::SigmaOutOfRange { sigma, .. }) => {
            assert!(sigma > 0.999);
        }
        other => panic!("expected SigmaOutOfRange, got {other:?}"),
    }
}

#[test]
fn threshold_admissibility_scale_invariant() {
    let mesh = helfrich::axisym::make_perturbed_sphere(1.0, &[(2, 1.0)], Some(0.9), 3).unwrap();
    let geom = Geometry::new(&mesh).unwrap();
    let c0 = -1.0 / geom.area.sqrt();
    let base = helfrich::diagnostics::threshold_check_of(&geom, c0, 1.0).unwrap();
    for r in [0.1, 0.5, 2.0, 10.0] {
        let mut scaled = mesh.clone();
        scaled.scale(1.0 / r);
        let gs = Geometry::new(&scaled).unwrap();
        let rep = helfrich::diagnostics::threshold_check_of(&gs, r * c0, 1.0).unwrap();
        assert_eq!(rep.admissible, base.admissible);
        assert!((rep.sqrt_energy - base.sqrt_energy).abs() < 1e-8 * (1.0 + base.sqrt_energy));
    }
}

#[test]
fn li_yau_on_unit_sphere_center() {
    // Value = π(2 + c0)² with ν inward (∫⟨f, ν⟩/|f|² dμ = −4π).
    let mesh = icosphere(5);
    let geom = Geometry::new(&mesh).unwrap();
    for c0 in [-2.0, 0.0, 2.0] {
        let got = li_yau_functional_of(&mesh, &geom, Vector3::zeros(), c0).unwrap();
        let want = PI * (2.0 + c0) * (2.0 + c0);
        assert!(
            (got.value - want).abs() <= 0.01 * want.max(4.0 * PI),
            "c0 {c0}: {} vs {want}",
            got.value
        );
        assert_eq!(got.excluded_vertices, 0);
    }
    // Multiplicity bound for an embedded sphere at c0 = 0: 4π/4π = 1.
    let got = li_yau_functional_of(&mesh, &geom, Vector3::zeros(), 0.0).unwrap();
    assert_eq!(got.multiplicity_bound, 1);
}

#[test]
fn li_yau_far_point_tends_to_energy() {
    let mesh = icosphere(4);
    let geom = Geometry::new(&mesh).unwrap();
    let c0 = 1.0;
    let far = Vector3::new(1e7, -2e6, 5e6);
    let got = li_yau_functional_of(&mesh, &geom, far, c0).unwrap();
    let want = helfrich_of(&geom, c0);
    assert!((got.value - want).abs() < 1e-4 * (1.0 + want));
}

#[test]
fn li_yau_torus_against_quadrature_oracle() {
    // p on the axis center; the integrand is v-independent:
    // ⟨f, ν⟩ = −(a sin²θ + (R + a cosθ) cosθ), |f|² = a² sin²θ + (R + a cosθ)².
    let (big_r, a, c0) = (2.0, 1.0, -1.0);
    let mesh = make_torus(big_r, a, 128, 64).unwrap();
    let geom = Geometry::new(&mesh).unwrap();
    let got = li_yau_functional_of(&mesh, &geom, Vector3::zeros(), c0).unwrap();
    let integral = 2.0
        * PI
        * simpson(
            |t| {
                let rho = big_r + a * t.cos();
                let fn_dot = -(a * t.sin() * t.sin() + rho * t.cos());
                let dist_sq = a * a * t.sin() * t.sin() + rho * rho;
                fn_dot / dist_sq * torus_area_element(big_r, a, t)
            },
            0.0,
            2.0 * PI,
            20_000,
        );
    let want = torus_helfrich(big_r, a, c0) - 2.0 * c0 * integral;
    assert!(
        rel_err(got.value, want) < 1e-2,
        "mesh {} vs oracle {want}",
        got.value
    );
}

#[test]
fn li_yau_point_on_surface_unresolved() {
    let mesh = icosphere(2);
    let geom = Geometry::new(&mesh).unwrap();
    let p = mesh.vertices()[11];
    match li_yau_functional_of(&mesh, &geom, p, 1.0) {
        Err(DiagnosticsError::PointOnSurfaceUnresolved { removed_frac }) => {
            assert!(removed_frac > 1.0);
        }
        other => panic!("expected PointOnSurfaceUnresolved, got {other:?}"),
    }
}

#[test]
fn kappa_full_sphere_and_monotonicity() {
    let mesh = icosphere(4);
    let geom = Geometry::new(&mesh).unwrap();
    // ∫|A|² = 8π on the unit sphere (|A|² = 2).
    let full = kappa_concentration_of(&mesh, &geom, 3.0);
    assert!(rel_err(full.value, 8.0 * PI) < 2e-2, "{}", full.value);
    // Monotone nondecreasing in ρ, tending to 0 with the radius.
    let mut last = 0.0;
    for rho in [0.05, 0.2, 0.5, 1.0, 2.0, 3.0] {
        let k = kappa_concentration_of(&mesh, &geom, rho).value;
        assert!(k >= last, "κ must be nondecreasing in ρ");
        last = k;
    }
    let tiny = kappa_concentration_of(&mesh, &geom, 1e-6).value;
    assert!(tiny < 0.02, "κ(ρ→0) = {tiny}");
}

#[test]
fn kappa_argmax_lands_on_dumbbell_neck() {
    let mesh = make_dumbbell(0.3, 1.6, 64, 32).unwrap();
    let geom = Geometry::new(&mesh).unwrap();
    let k = kappa_concentration_of(&mesh, &geom, 0.35);
    let center = Vector3::from(k.argmax_center);
    assert!(
        center.x.abs() < 0.5,
        "argmax at x = {} (neck is near x = 0)",
        center.x
    );
}

#[test]
fn gamma_constant_on_origin_sphere() {
    // Unit sphere centred at the origin, c0 = 0, ρ ≥ 1: γ ≡ π.
    let mesh = icosphere(5);
    let geom = Geometry::new(&mesh).unwrap();
    let rhos = [1.0, 1.3, 1.9, 2.8, 4.0];
    let profile = gamma_monotonicity_of(&mesh, &geom, 0.0, &rhos, 1e-9).unwrap();
    for (rho, value) in profile.rhos.iter().zip(&profile.values) {
        assert!(rel_err(*value, PI) < 1e-2, "γ({rho}) = {value}, want π");
    }
}

#[test]
fn gamma_nondecreasing_on_translated_sphere() {
    let mut mesh = icosphere(5);
    mesh.map_vertices(|v| v + Vector3::new(2.0, 0.0, 0.0));
    let geom = Geometry::new(&mesh).unwrap();
    let rhos: Vec<f64> = (0..30).map(|i| 1.2 + 0.12 * i as f64).collect();
    let profile = gamma_monotonicity_of(&mesh, &geom, 0.0, &rhos, 1e-4).unwrap();
    assert!(
        profile.max_decrease <= 1e-4,
        "max decrease {}",
        profile.max_decrease
    );
    assert!(profile.violations.is_empty());
}

#[test]
fn gamma_scaling_law() {
    // γ_{r·h, c0/r}(r·ρ) = γ_{h, c0}(ρ), exact discretely.
    let mut mesh = icosphere(3);
    mesh.map_vertices(|v| v + Vector3::new(1.8, 0.3, -0.2));
    let geom = Geometry::new(&mesh).unwrap();
    let c0 = -0.7;
    let rhos = [1.0, 1.5, 2.2];
    let base = gamma_monotonicity_of(&mesh, &geom, c0, &rhos, 1e-9).unwrap();
    for r in [0.5, 2.0, 10.0] {
        let mut scaled = mesh.clone();
        scaled.scale(r);
        let gs = Geometry::new(&scaled).unwrap();
        let rhos_scaled: Vec<f64> = rhos.iter().map(|x| r * x).collect();
        let got = gamma_monotonicity_of(&scaled, &gs, c0 / r, &rhos_scaled, 1e-9).unwrap();
        for (a, b) in got.values.iter().zip(&base.values) {
            assert!(
                (a - b).abs() <= 1e-10 * (1.0 + b.abs()),
                "r {r}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn gamma_origin_on_surface_rejected() {
    let mut mesh = icosphere(3);
    mesh.map_vertices(|v| v + Vector3::new(1.0, 0.0, 0.0));
    let geom = Geometry::new(&mesh).unwrap();
    assert!(matches!(
        gamma_monotonicity_of(&mesh, &geom, 0.0, &[1.0, 2.0], 1e-9),
        Err(DiagnosticsError::OriginOnSurface { .. })
    ));
}

#[test]
fn gamma_rejects_unsorted_rhos() {
    let mesh = icosphere(2);
    let geom = Geometry::new(&mesh).unwrap();
    assert!(matches!(
        gamma_monotonicity_of(&mesh, &geom, 0.0, &[2.0, 1.0], 1e-9),
        Err(DiagnosticsError::BadRhoList)
    ));
}

#[test]
fn localized_energy_far_from_surface_is_zero() {
    let mesh = icosphere(3);
    let geom = Geometry::new(&mesh).unwrap();
    let v = localized_curvature_energy_of(&mesh, &geom, Vector3::new(10.0, 0.0, 0.0), 2.0);
    assert_eq!(v, 0.0);
}

#[test]
fn localized_energy_full_cover_is_total() {
    let mesh = icosphere(4);
    let geom = Geometry::new(&mesh).unwrap();
    let v = localized_curvature_energy_of(&mesh, &geom, Vector3::zeros(), 10.0);
    assert!(rel_err(v, 8.0 * PI) < 2e-2, "{v}");
}

#[test]
fn localized_energy_half_cover_matches_cap_oracle() {
    // Bump of radius 1 at the north pole of the unit sphere; |A|² = 2.
    // Oracle: 2π ∫ 2 ψ(2 sin(α/2))⁴ sin α dα over the polar angle.
    let mesh = icosphere(5);
    let geom = Geometry::new(&mesh).unwrap();
    let rho = 1.0;
    let got = localized_curvature_energy_of(&mesh, &geom, Vector3::new(0.0, 0.0, 1.0), rho);
    let oracle = 2.0
        * PI
        * simpson(
            |alpha: f64| {
                let chord = 2.0 * (alpha / 2.0).sin();
                2.0 * bump(chord / rho).powi(4) * alpha.sin()
            },
            0.0,
            PI,
            20_000,
        );
    assert!(got > 0.0 && got < 8.0 * PI);
    assert!(rel_err(got, oracle) < 2e-2, "{got} vs {oracle}");
}

#[test]
fn bump_profile_shape() {
    assert_eq!(bump(0.0), 1.0);
    assert_eq!(bump(0.5), 1.0);
    assert_eq!(bump(1.0), 0.0);
    assert!(bump(0.75) > 0.0 && bump(0.75) < 1.0);
    // Monotone on the transition.
    assert!(bump(0.6) > bump(0.7) && bump(0.7) > bump(0.9));
}
