//! Dirichlet eigenmodes of the unit disk.
//!
//! `ψ±_{n,k}(r e^{iu}) = J_n(α_{n,k} r) e^{±inu}` with eigenvalue `α_{n,k}²`
//! for `-Δ_D` and squared norm `π J_{n+1}(α_{n,k})²`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::bessel::{self, K_MAX, N_MAX};
use crate::quad::GaussLegendre;
use crate::{Error, Result};

/// Half-width of the window around the caustic excluded from
/// [`limit_density_error`].
pub const CAUSTIC_WINDOW: f64 = 0.02;

/// Largest caustic radius accepted by the limit-density comparisons.
pub const MAX_CAUSTIC_RADIUS: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenmode {
    pub n: usize,
    pub k: usize,
    /// `+1` for `e^{inu}`, `-1` for `e^{-inu}`.
    pub sign: i8,
    /// `α_{n,k}`.
    pub zero: f64,
    /// `α_{n,k}²`, the eigenvalue of `-Δ_D`.
    pub eigenvalue: f64,
    /// L² norm of the unnormalized mode.
    pub l2norm: f64,
    /// Caustic radius `n / α_{n,k}`.
    pub gamma: f64,
    /// `J_{n+1}(α_{n,k})`, kept for the Neumann trace.
    jn1_at_zero: f64,
}

impl Eigenmode {
    pub fn new(n: usize, k: usize, sign: i8) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidInput(format!("sign must be ±1, got {sign}")));
        }
        if n > N_MAX || k == 0 || k > K_MAX {
            return Err(Error::OutOfRange(format!("mode ({n}, {k}) out of range")));
        }
        Ok(Self::from_zero(n, k, sign, bessel::bessel_zero(n, k)?))
    }

    /// Builds the mode from a precomputed zero `α_{n,k}`.
    pub fn from_zero(n: usize, k: usize, sign: i8, zero: f64) -> Self {
        let jn1 = bessel::j(n + 1, zero);
        Self {
            n,
            k,
            sign,
            zero,
            eigenvalue: zero * zero,
            l2norm: PI.sqrt() * jn1.abs(),
            gamma: n as f64 / zero,
            jn1_at_zero: jn1,
        }
    }

    /// Signed angular number `±n`.
    pub fn angular(&self) -> i64 {
        self.sign as i64 * self.n as i64
    }

    /// `J_n(α r)`.
    pub fn radial(&self, r: f64) -> f64 {
        bessel::j(self.n, self.zero * r)
    }

    /// Radial profile of the L²-normalized mode.
    pub fn normalized_radial(&self, r: f64) -> f64 {
        self.radial(r) / self.l2norm
    }

    /// Normalized mode at polar point `(r, u)`, `z = r e^{iu}`.
    pub fn value(&self, r: f64, u: f64) -> Complex64 {
        Complex64::from_polar(self.normalized_radial(r), self.angular() as f64 * u)
    }

    /// `∂_r` of the normalized radial profile at `r = 1`:
    /// `α J_n'(α) / ‖ψ‖ = -α J_{n+1}(α) / ‖ψ‖`.
    pub fn normal_derivative(&self) -> f64 {
        -self.zero * self.jn1_at_zero / self.l2norm
    }

    /// `‖ψ‖²` by Gauss–Legendre radial quadrature (independent of the
    /// closed form stored in `l2norm`).
    pub fn l2norm_squared_by_quadrature(&self) -> f64 {
        TAU * radial_integral(self, 0.0, 1.0, |r| self.radial(r).powi(2) * r)
    }
}

/// Composite Gauss–Legendre over `[a, b]` with panels sized to the mode's
/// oscillation length.
fn radial_integral(m: &Eigenmode, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let gl = GaussLegendre::new(16);
    let panels = ((b - a) * (m.zero / 2.0 + 8.0)).ceil().max(1.0) as usize;
    gl.integrate_composite(a, b, panels, f)
}

/// Stationary density `|ψ|²/‖ψ‖²` (density with respect to `dz`) on a
/// radial grid.
pub fn radial_density(m: &Eigenmode, r_grid: &[f64]) -> Vec<f64> {
    r_grid.iter().map(|&r| m.normalized_radial(r).powi(2)).collect()
}

/// Probability mass of the normalized mode in the annulus `r0 < r < r1`.
pub fn annulus_mass(m: &Eigenmode, r0: f64, r1: f64) -> f64 {
    let (a, b) = (r0.max(0.0), r1.min(1.0));
    TAU * radial_integral(m, a, b, |r| m.normalized_radial(r).powi(2) * r)
}

/// Weak-* limit of the stationary densities along a sequence with caustic
/// radius `γ`:
/// `1 / (2π (1-γ²)^{1/2}) · (r² - γ²)^{-1/2}` on `γ < r < 1`.
pub fn limit_density(gamma: f64, r: f64) -> f64 {
    if r <= gamma || r > 1.0 {
        return 0.0;
    }
    1.0 / (TAU * (1.0 - gamma * gamma).sqrt() * (r * r - gamma * gamma).sqrt())
}

/// Mass of the limit density in the annulus `a < r < b`.
pub fn limit_mass(gamma: f64, a: f64, b: f64) -> f64 {
    let lo = a.max(gamma);
    let hi = b.min(1.0);
    if hi <= lo {
        return 0.0;
    }
    let g2 = gamma * gamma;
    ((hi * hi - g2).sqrt() - (lo * lo - g2).max(0.0).sqrt()) / (1.0 - g2).sqrt()
}

fn check_caustic(m: &Eigenmode) -> Result<()> {
    if m.gamma > MAX_CAUSTIC_RADIUS {
        return Err(Error::CausticTooClose { gamma: m.gamma });
    }
    Ok(())
}

fn outside_window(gamma: f64) -> Vec<(f64, f64)> {
    let mut pieces = Vec::with_capacity(2);
    let lo = gamma - CAUSTIC_WINDOW;
    if lo > 0.0 {
        pieces.push((0.0, lo));
    }
    let hi = (gamma + CAUSTIC_WINDOW).max(0.0);
    if hi < 1.0 {
        pieces.push((hi, 1.0));
    }
    pieces
}

/// Pointwise L¹ distance `∫ |ρ_mode - ρ_limit| 2πr dr` over `[0, 1]`
/// minus the caustic window `(γ - δ, γ + δ)`.
///
/// The mode density oscillates around the limit profile on the scale
/// `1/α`, so this distance does not tend to zero; see
/// [`limit_density_binned_error`] for a weak-* distance.
pub fn limit_density_error(m: &Eigenmode) -> Result<f64> {
    check_caustic(m)?;
    let gl = GaussLegendre::new(8);
    let mut total = 0.0;
    for (a, b) in outside_window(m.gamma) {
        let panels = ((b - a) * m.zero * 8.0 / PI).ceil().max(1.0) as usize;
        total += gl.integrate_composite(a, b, panels, |r| {
            (m.normalized_radial(r).powi(2) - limit_density(m.gamma, r)).abs() * TAU * r
        });
    }
    Ok(total)
}

/// Weak-* distance: `Σ_bins |mass_mode(bin) - mass_limit(bin)|` over
/// `bins` equal radial bins, each with the caustic window removed.
pub fn limit_density_binned_error(m: &Eigenmode, bins: usize) -> Result<f64> {
    check_caustic(m)?;
    if bins == 0 {
        return Err(Error::InvalidInput("bins must be positive".into()));
    }
    let pieces = outside_window(m.gamma);
    let width = 1.0 / bins as f64;
    let mut total = 0.0;
    for i in 0..bins {
        let (lo, hi) = (i as f64 * width, (i + 1) as f64 * width);
        let mut diff = 0.0;
        for &(a, b) in &pieces {
            let (a, b) = (a.max(lo), b.min(hi));
            if b > a {
                diff += annulus_mass(m, a, b) - limit_mass(m.gamma, a, b);
            }
        }
        total += diff.abs();
    }
    Ok(total)
}

/// `min_{j,k ≤ K} |α_{n,j} - α_{m,k}|`; positive whenever `n ≠ m`.
pub fn siegel_separation(n: usize, m: usize, count: usize) -> Result<f64> {
    if n == m {
        return Err(Error::SameOrder(n));
    }
    if n.max(m) > N_MAX || count == 0 || count > K_MAX {
        return Err(Error::OutOfRange(format!("({n}, {m}, {count})")));
    }
    Ok(min_separation(&bessel::zeros(n, count), &bessel::zeros(m, count)))
}

/// Minimum distance between two increasing sequences.
pub(crate) fn min_separation(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut best = f64::INFINITY;
    while i < a.len() && j < b.len() {
        best = best.min((a[i] - b[j]).abs());
        if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalue_and_boundary_value() {
        let m = Eigenmode::new(0, 1, 1).unwrap();
        assert!((m.eigenvalue - 2.404825557695773f64.powi(2)).abs() < 1e-9);
        for (n, k) in [(0, 1), (3, 4), (40, 1), (64, 32)] {
            let m = Eigenmode::new(n, k, -1).unwrap();
            assert!(m.radial(1.0).abs() < 1e-12);
            assert!(m.gamma < 1.0);
        }
        assert!(Eigenmode::new(1, 1, 0).is_err());
        assert!(Eigenmode::new(1, 0, 1).is_err());
    }

    #[test]
    fn norm_closed_form_matches_quadrature() {
        for (n, k) in [(0, 1), (2, 5), (30, 3)] {
            let m = Eigenmode::new(n, k, 1).unwrap();
            let q = m.l2norm_squared_by_quadrature();
            assert!((q / m.l2norm.powi(2) - 1.0).abs() < 1e-10, "({n},{k})");
        }
    }

    #[test]
    fn density_is_normalized() {
        for (n, k) in [(0, 1), (5, 7), (40, 1)] {
            let m = Eigenmode::new(n, k, 1).unwrap();
            assert!((annulus_mass(&m, 0.0, 1.0) - 1.0).abs() < 1e-8);
        }
        let m = Eigenmode::new(2, 2, 1).unwrap();
        let d = radial_density(&m, &[0.0, 0.5, 1.0]);
        assert_eq!(d[0], 0.0);
        assert!(d[2] < 1e-20);
    }

    #[test]
    fn whispering_gallery_mass_grows_with_n() {
        let mass = |n| annulus_mass(&Eigenmode::new(n, 1, 1).unwrap(), 0.9, 1.0);
        assert!(mass(40) > mass(20) && mass(20) > mass(10));
    }

    #[test]
    fn caustic_forbids_inner_disk() {
        // γ = n/α ≈ 0.5 for (n, k) = (100, 22)
        let m = Eigenmode::new(100, 22, 1).unwrap();
        assert!((m.gamma - 0.5).abs() < 0.01, "{}", m.gamma);
        let r: Vec<f64> = (0..=45).map(|i| i as f64 * 0.01).collect();
        assert!(radial_density(&m, &r).iter().all(|&d| d < 1e-3));
    }

    #[test]
    fn limit_density_has_unit_mass() {
        for g in [0.0, 0.3, 0.9] {
            assert!((limit_mass(g, 0.0, 1.0) - 1.0).abs() < 1e-14);
            let gl = GaussLegendre::new(64);
            // substitute r = sqrt(γ² + t²) to remove the singularity
            let tmax = (1.0 - g * g).sqrt();
            let q = gl.integrate(0.0, tmax, |t| {
                let r = (g * g + t * t).sqrt();
                limit_density(g, r) * TAU * t
            });
            assert!((q - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pointwise_distance_is_dominated_by_oscillation() {
        // the mode density is ~ 2 cos²(phase) × limit, so the pointwise L¹
        // distance stays near 2/π of the mass outside the window
        let m = Eigenmode::new(32, 16, 1).unwrap();
        let e = limit_density_error(&m).unwrap();
        assert!((0.5..0.62).contains(&e), "{e}");
    }

    #[test]
    fn binned_distance_shrinks() {
        let a = limit_density_binned_error(&Eigenmode::new(32, 16, 1).unwrap(), 20).unwrap();
        let b = limit_density_binned_error(&Eigenmode::new(64, 32, 1).unwrap(), 20).unwrap();
        assert!(b < a, "{a} {b}");
    }

    #[test]
    fn gamma_zero_family_approaches_inverse_r_profile() {
        // γ = 0: the limit is (2π r)^{-1}; the binned distance decreases in k
        let a = limit_density_binned_error(&Eigenmode::new(0, 20, 1).unwrap(), 10).unwrap();
        let b = limit_density_binned_error(&Eigenmode::new(0, 80, 1).unwrap(), 10).unwrap();
        assert!(b < a && b < 0.05, "{a} {b}");
    }

    #[test]
    fn caustic_too_close() {
        let m = Eigenmode::new(400, 1, 1).unwrap();
        assert!(m.gamma > 0.95);
        assert!(matches!(limit_density_error(&m), Err(Error::CausticTooClose { .. })));
    }

    #[test]
    fn siegel_examples() {
        assert!(siegel_separation(0, 1, 50).unwrap() > 1e-6);
        assert_eq!(siegel_separation(3, 3, 10), Err(Error::SameOrder(3)));
        let s50 = siegel_separation(2, 5, 50).unwrap();
        let s200 = siegel_separation(2, 5, 200).unwrap();
        assert!(s200 <= s50 && s200 > 0.0);
    }

    #[test]
    fn orthogonality_of_radial_profiles() {
        let zs = bessel::zeros(3, 6);
        let gl = GaussLegendre::new(64);
        for j in 0..6 {
            for k in 0..j {
                let v = gl.integrate(0.0, 1.0, |r| bessel::j(3, zs[j] * r) * bessel::j(3, zs[k] * r) * r);
                assert!(v.abs() < 1e-10);
            }
        }
    }
}
