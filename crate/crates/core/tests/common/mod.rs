#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

/// `exp(A)` by scaling and squaring with a truncated Taylor series; no
/// eigendecomposition involved.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm: f64 = (0..n).map(|i| a.row(i).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * Complex64::new(scale, 0.0);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &x * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[test]
fn expm_of_rotation_generator() {
    let t = 2.3;
    let a = DMatrix::from_row_slice(2, 2, &[
        Complex64::new(0.0, 0.0), Complex64::new(-t, 0.0),
        Complex64::new(t, 0.0), Complex64::new(0.0, 0.0),
    ]);
    let e = expm(&a);
    assert!((e[(0, 0)].re - t.cos()).abs() < 1e-14);
    assert!((e[(1, 0)].re - t.sin()).abs() < 1e-14);
}
