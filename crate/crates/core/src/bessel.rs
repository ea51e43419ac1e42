//! Bessel functions of the first kind and their positive zeros.
//!
//! `J_n(x)` is evaluated by Miller's backward recurrence normalized with
//! `J_0 + 2 Σ J_{2k} = 1`, which is stable for every order and argument in
//! range. Zeros are bracketed by a sign-change scan (consecutive zeros of
//! `J_n` are more than 3 apart) and polished by Newton steps safeguarded
//! by bisection.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::{Error, Result};

/// Largest supported order.
pub const N_MAX: usize = 512;
/// Largest supported argument.
pub const X_MAX: f64 = 1e4;
/// Largest supported zero index.
pub const K_MAX: usize = 4096;

const RESCALE: f64 = 1e250;

fn check_range(n: usize, x: f64) -> Result<()> {
    if n > N_MAX {
        return Err(Error::OutOfRange(format!("order {n} > {N_MAX}")));
    }
    if !(0.0..=X_MAX).contains(&x) {
        return Err(Error::OutOfRange(format!("argument {x} outside [0, {X_MAX}]")));
    }
    Ok(())
}

/// `J_n(x)` for `0 ≤ n ≤ N_MAX`, `0 ≤ x ≤ X_MAX`.
pub fn bessel_j(n: usize, x: f64) -> Result<f64> {
    check_range(n, x)?;
    Ok(orders_unchecked(n, x)[n])
}

/// `[J_0(x), ..., J_{n_max}(x)]`.
pub fn bessel_j_orders(n_max: usize, x: f64) -> Result<Vec<f64>> {
    check_range(n_max, x)?;
    Ok(orders_unchecked(n_max, x))
}

/// `(J_n(x), J_{n+1}(x))` without range checks.
pub(crate) fn pair(n: usize, x: f64) -> (f64, f64) {
    let v = orders_unchecked(n + 1, x);
    (v[n], v[n + 1])
}

/// `J_n(x)` without range checks.
pub(crate) fn j(n: usize, x: f64) -> f64 {
    orders_unchecked(n, x)[n]
}

/// `J_n'(x)`.
pub fn bessel_j_derivative(n: usize, x: f64) -> Result<f64> {
    check_range(n + 1, x)?;
    if x == 0.0 {
        return Ok(if n == 1 { 0.5 } else { 0.0 });
    }
    let (jn, jn1) = pair(n, x);
    Ok(n as f64 / x * jn - jn1)
}

fn orders_unchecked(n_keep: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_keep + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let big = (n_keep as f64).max(x);
    let mut start = (big + 30.0 + 10.0 * big.cbrt()).ceil() as usize;
    start += start % 2;

    let two_over_x = 2.0 / x;
    let mut above = 0.0; // J_{k+1}
    let mut cur = 1.0; // J_k, arbitrary scale
    let mut norm = 2.0 * cur; // start is even
    for k in (1..=start).rev() {
        let below = k as f64 * two_over_x * cur - above;
        above = cur;
        cur = below;
        let idx = k - 1;
        if idx <= n_keep {
            out[idx] = cur;
        }
        if idx % 2 == 0 {
            norm += if idx == 0 { cur } else { 2.0 * cur };
        }
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            above /= RESCALE;
            norm /= RESCALE;
            for v in out.iter_mut().skip(idx) {
                *v /= RESCALE;
            }
        }
    }
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Refines a zero of `J_n` inside the sign-change bracket `[lo, hi]`.
fn polish_zero(n: usize, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = j(n, lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (jn, jn1) = pair(n, x);
        if jn == 0.0 {
            return x;
        }
        if (jn > 0.0) == (f_lo > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        let deriv = n as f64 / x * jn - jn1;
        let newton = x - jn / deriv;
        let next = if deriv != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * x {
            break;
        }
    }
    x
}

/// Positive zeros of `J_n`, in increasing order, until `stop` says so.
fn scan_zeros(n: usize, mut stop: impl FnMut(usize, f64) -> bool) -> Vec<f64> {
    // J_n > 0 on (0, n] and consecutive zeros are more than 3 apart.
    let mut a = if n == 0 { 0.5 } else { n as f64 };
    let mut fa = j(n, a);
    let mut zeros = Vec::new();
    loop {
        let b = a + 1.0;
        let fb = j(n, b);
        if fb == 0.0 || (fa > 0.0) != (fb > 0.0) {
            let z = if fb == 0.0 { b } else { polish_zero(n, a, b) };
            if stop(zeros.len(), z) {
                return zeros;
            }
            zeros.push(z);
            a = z + 2.0;
            fa = j(n, a);
        } else {
            a = b;
            fa = fb;
        }
    }
}

/// `α_{n,k}`, the `k`-th positive zero of `J_n` (`k ≥ 1`).
pub fn bessel_zero(n: usize, k: usize) -> Result<f64> {
    if k == 0 || k > K_MAX {
        return Err(Error::OutOfRange(format!("zero index {k} outside [1, {K_MAX}]")));
    }
    if n > N_MAX {
        return Err(Error::OutOfRange(format!("order {n} > {N_MAX}")));
    }
    Ok(*zeros(n, k).last().expect("k >= 1"))
}

/// First `count` zeros of `J_n`.
pub fn zeros(n: usize, count: usize) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    scan_zeros(n, |found, _| found == count)
}

/// All zeros of `J_n` not exceeding `alpha_max`.
pub fn zeros_below(n: usize, alpha_max: f64) -> Vec<f64> {
    if (n as f64) >= alpha_max {
        return Vec::new();
    }
    scan_zeros(n, |_, z| z > alpha_max)
}

/// Immutable table of `α_{n,k}` for `n ≤ n_max`, `k ≤ k_max`.
#[derive(Debug, Clone)]
pub struct ZeroTable {
    rows: Vec<Vec<f64>>,
}

impl ZeroTable {
    pub fn new(n_max: usize, k_max: usize) -> Result<Self> {
        if n_max > N_MAX || k_max > K_MAX {
            return Err(Error::OutOfRange(format!("table {n_max}x{k_max} too large")));
        }
        let rows = (0..=n_max).into_par_iter().map(|n| zeros(n, k_max)).collect();
        Ok(Self { rows })
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn k_max(&self) -> usize {
        self.rows[0].len()
    }

    /// `α_{n,k}` with `k ≥ 1`.
    pub fn zero(&self, n: usize, k: usize) -> f64 {
        self.rows[n][k - 1]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n]
    }
}

/// McMahon's large-`k` expansion of `α_{n,k}`; an estimate only.
pub fn mcmahon_estimate(n: usize, k: usize) -> f64 {
    let beta = (k as f64 + 0.5 * n as f64 - 0.25) * PI;
    let mu = 4.0 * (n as f64).powi(2);
    beta - (mu - 1.0) / (8.0 * beta) - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * beta).powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `J_n(x) = (1/2π) ∫ cos(nτ - x sin τ) dτ` over a period; the
    /// trapezoid rule is spectrally accurate for this integrand.
    fn integral_oracle(n: usize, x: f64) -> f64 {
        let m = 2 * ((x + n as f64) as usize + 64);
        (0..m)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / m as f64;
                (n as f64 * t - x * t.sin()).cos()
            })
            .sum::<f64>()
            / m as f64
    }

    fn series_oracle(n: usize, x: f64) -> f64 {
        let mut term = (0..n).fold(1.0, |acc, i| acc * x / 2.0 / (i + 1) as f64);
        let mut sum = term;
        for k in 1..200 {
            term *= -(x * x / 4.0) / (k as f64 * (n + k) as f64);
            sum += term;
            if term.abs() < 1e-20 {
                break;
            }
        }
        sum
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert!(bessel_j(513, 1.0).is_err());
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_j(0, 2e4).is_err());
    }

    #[test]
    fn first_zero_of_j0_from_series_bisection() {
        // bisection on the power series
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if series_oracle(0, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 2.404825557695773).abs() < 1e-14);
        assert!(bessel_j(0, 2.404825557695773).unwrap().abs() < 1e-12);
        assert!((bessel_zero(0, 1).unwrap() - lo).abs() < 1e-10);
    }

    #[test]
    fn matches_integral_oracle_across_range() {
        let orders = [0usize, 1, 2, 5, 17, 64, 128, 300, 512];
        let args = [1e-3, 0.5, 3.0, 10.0, 63.0, 64.0, 65.5, 200.0, 511.0, 700.0, 2500.0, 1e4];
        for &n in &orders {
            for &x in &args {
                let got = bessel_j(n, x).unwrap();
                let want = integral_oracle(n, x);
                assert!((got - want).abs() < 1e-12, "J_{n}({x}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn small_arguments_match_series() {
        for n in [0, 1, 3, 10, 40] {
            for x in [1e-6, 0.01, 0.3, 2.0, 7.0] {
                let got = bessel_j(n, x).unwrap();
                let want = series_oracle(n, x);
                assert!((got - want).abs() <= 1e-13 * want.abs() + 1e-14, "J_{n}({x})");
            }
        }
    }

    #[test]
    fn known_zeros() {
        assert!((bessel_zero(0, 1).unwrap() - 2.404825557695773).abs() < 1e-10);
        assert!((bessel_zero(1, 1).unwrap() - 3.831705970207512).abs() < 1e-10);
        assert!((bessel_zero(0, 2).unwrap() - 5.520078110286311).abs() < 1e-10);
        assert!(bessel_zero(0, 0).is_err());
        assert!(bessel_zero(600, 1).is_err());
    }

    #[test]
    fn zeros_vanish_and_interlace() {
        let table = ZeroTable::new(12, 30).unwrap();
        for n in 0..12 {
            for k in 1..30 {
                let a = table.zero(n, k);
                assert!(bessel_j(n, a).unwrap().abs() < 1e-12);
                assert!(a < table.zero(n + 1, k));
                assert!(table.zero(n + 1, k) < table.zero(n, k + 1));
            }
        }
    }

    #[test]
    fn zeros_of_large_orders() {
        for n in [200, 512] {
            let z = zeros(n, 3);
            assert!(z[0] > n as f64);
            for a in &z {
                assert!(bessel_j(n, *a).unwrap().abs() < 1e-12);
            }
            // sign change scan cannot skip: compare with the McMahon-free count
            assert!(z.windows(2).all(|w| w[1] - w[0] > 3.0));
        }
    }

    #[test]
    fn zeros_below_is_consistent() {
        let z = zeros_below(3, 40.0);
        assert!(z.iter().all(|&a| a <= 40.0));
        let more = zeros(3, z.len() + 1);
        assert!(more[z.len()] > 40.0);
        assert!(zeros_below(50, 40.0).is_empty());
    }

    #[test]
    fn mcmahon_is_close_for_large_k() {
        let exact = zeros(2, 100)[99];
        assert!((mcmahon_estimate(2, 100) - exact).abs() < 1e-6);
    }

    #[test]
    fn derivative_identity_at_zeros() {
        for n in [0, 3, 20] {
            for a in zeros(n, 10) {
                let d = bessel_j_derivative(n, a).unwrap();
                let jn1 = bessel_j(n + 1, a).unwrap();
                assert!((d + jn1).abs() < 1e-10);
            }
        }
        assert_eq!(bessel_j_derivative(1, 0.0).unwrap(), 0.5);
    }
}
