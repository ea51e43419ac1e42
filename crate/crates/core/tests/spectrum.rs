use std::f64::consts::PI;

use proptest::prelude::*;
use semidisk::bessel::{bessel_j, bessel_j_derivative, bessel_zero, zeros, ZeroTable};
use semidisk::quad::GaussLegendre;
use semidisk::spectrum::{annulus_mass, siegel_separation};
use semidisk::Eigenmode;

/// Bessel's integral `(1/π) ∫₀^π cos(nτ - x sin τ) dτ`; the trapezoid rule
/// on the periodic integrand converges geometrically.
fn bessel_integral(n: usize, x: f64) -> f64 {
    let m = 2048 + 4 * (n + x as usize);
    let h = PI / m as f64;
    let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(PI));
    for i in 1..m {
        s += f(i as f64 * h);
    }
    s * h / PI
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn three_term_recurrence(n in 1usize..200, x in 0.05..400.0f64) {
        let r = bessel_j(n - 1, x).unwrap() + bessel_j(n + 1, x).unwrap() - 2.0 * n as f64 / x * bessel_j(n, x).unwrap();
        prop_assert!(r.abs() < 1e-10, "{r}");
    }

    #[test]
    fn agrees_with_integral_representation(n in 0usize..60, x in 0.0..120.0f64) {
        prop_assert!((bessel_j(n, x).unwrap() - bessel_integral(n, x)).abs() < 1e-12);
    }

    #[test]
    fn derivative_identity_at_zeros(n in 0usize..120, k in 1usize..40) {
        let a = bessel_zero(n, k).unwrap();
        let r = bessel_j_derivative(n, a).unwrap() + bessel_j(n + 1, a).unwrap();
        prop_assert!(r.abs() < 1e-10);
    }
}

#[test]
fn zero_table_vanishes_and_interlaces() {
    let t = ZeroTable::new(65, 201).unwrap();
    for n in 0..=64 {
        for k in 1..=200 {
            let a = t.zero(n, k);
            assert!(bessel_j(n, a).unwrap().abs() < 1e-12, "J_{n}(α_{n},{k})");
            assert!(a < t.zero(n + 1, k) && t.zero(n + 1, k) < t.zero(n, k + 1), "{n},{k}");
        }
    }
}

#[test]
fn radial_profiles_are_orthogonal() {
    let gl = GaussLegendre::new(20);
    for n in [0, 3, 17] {
        let z = zeros(n, 12);
        for j in 0..z.len() {
            for k in 0..j {
                let f = |r: f64| bessel_j(n, z[j] * r).unwrap() * bessel_j(n, z[k] * r).unwrap() * r;
                let v = gl.integrate_composite(0.0, 1.0, 40, f);
                assert!(v.abs() < 1e-10, "n={n} j={j} k={k}: {v}");
            }
        }
    }
}

#[test]
fn eigenmodes_are_normalized() {
    for (n, k) in [(0, 1), (5, 3), (30, 7)] {
        let m = Eigenmode::new(n, k, 1).unwrap();
        assert!((annulus_mass(&m, 0.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((m.l2norm_squared_by_quadrature() - m.l2norm.powi(2)).abs() < 1e-12 * m.l2norm.powi(2));
    }
}

#[test]
fn siegel_pairs_are_separated() {
    for n in 0..=16 {
        for m in 0..n {
            assert!(siegel_separation(n, m, 50).unwrap() > 0.0);
        }
    }
}

#[test]
fn whispering_mass_grows() {
    let masses: Vec<f64> = [10, 20, 40, 80]
        .iter()
        .map(|&n| annulus_mass(&Eigenmode::new(n, 1, 1).unwrap(), 0.9, 1.0))
        .collect();
    assert!(masses.windows(2).all(|w| w[0] < w[1]), "{masses:?}");
    assert!(masses[3] > 0.9);
}
