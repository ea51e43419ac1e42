mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use semidisk::evolve::{random_state, sample_grid};
use semidisk::quad::GaussLegendre;
use semidisk::*;

fn bump() -> PotentialSpec {
    PotentialSpec::GaussianBump { center: Vec2::new(0.3, -0.1), width: 0.2, amplitude: 5.0 }
}

fn propagator(v: &PotentialSpec, e_cut: f64) -> Propagator {
    let b = Arc::new(Basis::new(e_cut).unwrap());
    Propagator::build(v, b, &QuadratureOptions::default()).unwrap()
}

fn six_modes() -> Arc<Basis> {
    let modes = [(0, 1, 1), (1, 1, 1), (1, 1, -1), (2, 1, 1), (2, 1, -1), (0, 2, 1)]
        .iter()
        .map(|&(n, k, s)| Eigenmode::new(n, k, s).unwrap())
        .collect();
    Arc::new(Basis::from_modes(modes, 6.0).unwrap())
}

/// `⟨ψ_a, x ψ_b⟩`: the angular integral of `e^{i(m_b - m_a)u} cos u` is `π`
/// when `|m_b - m_a| = 1` and zero otherwise.
fn x_matrix(b: &Basis) -> DMatrix<Complex64> {
    let gl = GaussLegendre::new(40);
    DMatrix::from_fn(b.len(), b.len(), |i, j| {
        let (ma, mb) = (b.mode(i), b.mode(j));
        if (ma.angular() - mb.angular()).abs() != 1 {
            return Complex64::new(0.0, 0.0);
        }
        let radial = gl.integrate_composite(0.0, 1.0, 8, |r| ma.normalized_radial(r) * mb.normalized_radial(r) * r * r);
        Complex64::new(PI * radial, 0.0)
    })
}

#[test]
fn six_mode_evolution_matches_matrix_exponential() {
    let b = six_modes();
    let slope = 1.3;
    let prop = Propagator::build(&PotentialSpec::XLinear(slope), b.clone(), &QuadratureOptions::default()).unwrap();
    let mut h = x_matrix(&b) * Complex64::new(slope, 0.0);
    for i in 0..b.len() {
        h[(i, i)] += 0.5 * b.mode(i).eigenvalue;
    }
    assert!(common::max_abs(&(&prop.hamiltonian.matrix - &h)) < 1e-12);
    let u = random_state(b.clone(), 0.0, 11).unwrap();
    for t in [0.1, 1.0, 7.5] {
        let oracle = common::expm(&(&h * Complex64::new(0.0, -t))) * &u.coeffs;
        let got = prop.propagate(&u, t).unwrap();
        assert!((got.coeffs - oracle).norm() < 1e-9, "t = {t}");
    }
}

#[test]
fn unitarity_and_energy_up_to_t_100() {
    let p = propagator(&bump(), 25.0);
    let u = random_state(p.basis().clone(), 1.0, 4).unwrap();
    let e0 = p.hamiltonian.energy(&u).unwrap();
    for t in [0.5, 3.0, 17.0, 100.0] {
        let v = p.propagate(&u, t).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-10);
        assert!((p.hamiltonian.energy(&v).unwrap() - e0).abs() < 1e-9 * e0.abs().max(1.0));
    }
}

#[test]
fn radial_potential_conserves_angular_mass() {
    let p = propagator(&PotentialSpec::RadialPolynomial(vec![0.0, 3.0, -2.0]), 25.0);
    let u = random_state(p.basis().clone(), 0.5, 8).unwrap();
    let m0 = u.angular_mass();
    for t in [1.0, 10.0, 60.0] {
        let m = p.propagate(&u, t).unwrap().angular_mass();
        for ((n0, a), (n1, b)) in m0.iter().zip(&m) {
            assert_eq!(n0, n1);
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn free_eigenmode_density_is_stationary() {
    let p = propagator(&PotentialSpec::Zero, 20.0);
    let u = WaveField::mode(p.basis().clone(), 4, 2, -1).unwrap();
    let r: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let th: Vec<f64> = (0..16).map(|j| j as f64 * 0.4).collect();
    let g0 = sample_grid(&u, &r, &th).unwrap();
    for t in [0.3, 42.0] {
        let g = sample_grid(&p.propagate(&u, t).unwrap(), &r, &th).unwrap();
        for (a, b) in g0.iter().zip(&g) {
            assert!((a.norm() - b.norm()).abs() < 1e-10);
        }
    }
}

#[test]
fn zero_datum_is_rejected_by_normalization() {
    let b = Arc::new(Basis::new(5.0).unwrap());
    assert_eq!(WaveField::zero(b).normalized().unwrap_err(), Error::ZeroDatum);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn group_law(seed in 0u64..1000, t1 in -20.0..20.0f64, t2 in -20.0..20.0f64) {
        let b = six_modes();
        let p = Propagator::build(&PotentialSpec::XLinear(0.7), b.clone(), &QuadratureOptions::default()).unwrap();
        let u = random_state(b, 0.0, seed).unwrap();
        let a = p.propagate(&p.propagate(&u, t1).unwrap(), t2).unwrap();
        let c = p.propagate(&u, t1 + t2).unwrap();
        prop_assert!((a.coeffs - c.coeffs).norm() < 1e-9);
    }

    #[test]
    fn linearity(seed in 0u64..1000, t in 0.0..5.0f64, re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let b = six_modes();
        let p = Propagator::build(&PotentialSpec::XLinear(-0.4), b.clone(), &QuadratureOptions::default()).unwrap();
        let u = random_state(b.clone(), 0.0, seed).unwrap();
        let w = random_state(b, 0.0, seed + 1).unwrap();
        let c = Complex64::new(re, im);
        let lhs = p.propagate(&u.combine(c, &w, Complex64::new(1.0, 0.0)).unwrap(), t).unwrap();
        let rhs = p.propagate(&u, t).unwrap().scaled(c).coeffs + p.propagate(&w, t).unwrap().coeffs;
        prop_assert!((lhs.coeffs - rhs).norm() < 1e-10);
    }
}

#[test]
fn mismatched_bases_are_rejected() {
    let p = propagator(&PotentialSpec::Zero, 8.0);
    let other = Arc::new(Basis::new(9.0).unwrap());
    let u = WaveField::new(other.clone(), DVector::from_element(other.len(), Complex64::new(1.0, 0.0))).unwrap();
    assert!(p.propagate(&u, 1.0).is_err());
}
