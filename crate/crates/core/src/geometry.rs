//! Billiard dynamics on the closed unit disk.
//!
//! Phase points are `(z, ξ)` pairs in Cartesian coordinates. A point on the
//! unit circle may be stored with either its incoming or its outgoing
//! momentum; both represent the same state of the billiard, and
//! [`PhasePoint::orientation`] tells which representative is held.
//!
//! The action-angle chart `(s, θ, E, J)` is
//!
//! ```text
//! ξ = E (-sin θ, cos θ)
//! z = s (-sin θ, cos θ) + (J/E) (cos θ, sin θ)
//! ```
//!
//! with `E = |ξ|`, `J = x ξ_y - y ξ_x` and incidence angle `α = -asin(J/E)`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::quad::GaussLegendre;
use crate::{Error, Result, Tolerances};

pub type Vec2 = Vector2<f64>;

/// Which representative of a boundary state a phase point holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Interior,
    Incoming,
    Outgoing,
    /// On the circle with `z·ξ = 0`.
    Tangent,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub z: Vec2,
    pub xi: Vec2,
}

impl PhasePoint {
    pub fn new(z: Vec2, xi: Vec2) -> Self {
        Self { z, xi }
    }

    pub fn from_coords(x: f64, y: f64, xi_x: f64, xi_y: f64) -> Self {
        Self::new(Vec2::new(x, y), Vec2::new(xi_x, xi_y))
    }

    /// `E = |ξ|`.
    pub fn speed(&self) -> f64 {
        self.xi.norm()
    }

    /// `J = x ξ_y - y ξ_x`.
    pub fn angular_momentum(&self) -> f64 {
        cross(&self.z, &self.xi)
    }

    /// Incidence angle `α = -asin(J/E)` in `[-π/2, π/2]`.
    pub fn alpha(&self) -> Result<f64> {
        let e = self.speed();
        if e == 0.0 {
            return Err(Error::ZeroMomentum);
        }
        Ok(-(self.angular_momentum() / e).clamp(-1.0, 1.0).asin())
    }

    pub fn orientation(&self, tol: f64) -> Orientation {
        let r = self.z.norm();
        if r < 1.0 - tol {
            return Orientation::Interior;
        }
        if r > 1.0 + tol {
            return Orientation::Exterior;
        }
        let dot = self.z.dot(&self.xi);
        if dot > 0.0 {
            Orientation::Outgoing
        } else if dot < 0.0 {
            Orientation::Incoming
        } else {
            Orientation::Tangent
        }
    }

    /// Rotation `R^β` of both position and momentum.
    pub fn rotated(&self, beta: f64) -> Self {
        let (s, c) = beta.sin_cos();
        let rot = |v: &Vec2| Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y);
        Self::new(rot(&self.z), rot(&self.xi))
    }

    /// Euclidean distance in `R^4`.
    pub fn distance(&self, other: &Self) -> f64 {
        ((self.z - other.z).norm_squared() + (self.xi - other.xi).norm_squared()).sqrt()
    }

    /// Distance in the billiard phase space: boundary points are compared
    /// modulo the reflection `(z, ξ) ~ (z, σ_z ξ)`.
    pub fn class_distance(&self, other: &Self, tol: f64) -> f64 {
        let d = self.distance(other);
        let on_boundary = |p: &Self| (p.z.norm() - 1.0).abs() <= tol;
        if on_boundary(self) && on_boundary(other) {
            let zn = self.z / self.z.norm();
            let flipped = Self::new(self.z, reflect_unchecked(&zn, &self.xi));
            d.min(flipped.distance(other))
        } else {
            d
        }
    }
}

/// Action-angle coordinates `(s, θ, E, J)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionAngle {
    pub s: f64,
    /// Direction of the momentum, measured from the vertical, in `[0, 2π)`.
    pub theta: f64,
    /// `E = |ξ| > 0`.
    pub speed: f64,
    pub angular_momentum: f64,
}

impl ActionAngle {
    pub fn new(s: f64, theta: f64, speed: f64, angular_momentum: f64) -> Self {
        Self {
            s,
            theta,
            speed,
            angular_momentum,
        }
    }

    pub fn alpha(&self) -> f64 {
        -(self.angular_momentum / self.speed).clamp(-1.0, 1.0).asin()
    }

    /// True when the point projects into the closed disk.
    pub fn over_closed_disk(&self, tol: f64) -> bool {
        let r = self.angular_momentum / self.speed;
        r * r + self.s * self.s <= 1.0 + tol
    }
}

pub(crate) fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn reflect_unchecked(z: &Vec2, xi: &Vec2) -> Vec2 {
    xi - 2.0 * z.dot(xi) * z
}

/// `σ_z(ξ) = ξ - 2 (z·ξ) z` for `z` on the unit circle.
pub fn reflect(z: &Vec2, xi: &Vec2, tol: &Tolerances) -> Result<Vec2> {
    let r = z.norm();
    if (r - 1.0).abs() > tol.geom {
        return Err(Error::NotOnBoundary { radius: r });
    }
    Ok(reflect_unchecked(z, xi))
}

pub fn to_action_angle(p: &PhasePoint) -> Result<ActionAngle> {
    let speed = p.speed();
    if speed == 0.0 {
        return Err(Error::ZeroMomentum);
    }
    let theta = (-p.xi.x).atan2(p.xi.y).rem_euclid(TAU);
    let s = p.z.dot(&p.xi) / speed;
    Ok(ActionAngle::new(s, theta, speed, p.angular_momentum()))
}

pub fn from_action_angle(a: &ActionAngle) -> PhasePoint {
    let (sin, cos) = a.theta.sin_cos();
    let dir = Vec2::new(-sin, cos);
    let perp = Vec2::new(cos, sin);
    PhasePoint::new(
        a.s * dir + (a.angular_momentum / a.speed) * perp,
        a.speed * dir,
    )
}

/// `cos α` computed without cancellation.
pub(crate) fn cos_alpha(ratio: f64) -> f64 {
    let r = ratio.clamp(-1.0, 1.0);
    ((1.0 - r) * (1.0 + r)).sqrt()
}

/// Smallest `t ≥ 0` with `|z + t ξ| = 1`.
pub(crate) fn exit_time(z: &Vec2, xi: &Vec2) -> f64 {
    let a = xi.norm_squared();
    let b = z.dot(xi);
    let c = z.norm_squared() - 1.0;
    let disc = (b * b - a * c).max(0.0);
    let root = disc.sqrt();
    let t = if b >= 0.0 {
        if b + root == 0.0 {
            0.0
        } else {
            -c / (b + root)
        }
    } else {
        (root - b) / a
    };
    t.max(0.0)
}

/// A rational multiple `πp/q` of π with `|p/q| ≤ 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalAngle {
    p: i64,
    q: i64,
}

impl RationalAngle {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q <= 0 {
            return Err(Error::InvalidInput(format!("denominator must be positive, got {q}")));
        }
        if gcd(p.unsigned_abs(), q.unsigned_abs()) != 1 {
            return Err(Error::InvalidInput(format!("{p}/{q} is not in lowest terms")));
        }
        if 2 * p.abs() > q {
            return Err(Error::InvalidInput(format!("|{p}/{q}| exceeds 1/2")));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    /// `πp/q`.
    pub fn value(&self) -> f64 {
        PI * self.p as f64 / self.q as f64
    }

    /// Number of chords after which every orbit of the interpolating flow
    /// closes: the smallest `m` with `m (π + 2α0) ≡ 0 mod 2π`.
    pub fn chords_per_period(&self) -> u64 {
        let num = (self.q + 2 * self.p).unsigned_abs();
        let den = 2 * self.q.unsigned_abs();
        den / gcd(num, den)
    }

    /// Period of every orbit of `φ^τ_{α0}`; each chord takes `τ = 2`.
    pub fn period(&self) -> f64 {
        2.0 * self.chords_per_period() as f64
    }
}

impl fmt::Display for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for RationalAngle {
    type Err = Error;

    /// Parses `"p/q"` (meaning `πp/q`) or a bare integer `"p"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse rational angle {s:?}"));
        let (p, q) = match s.trim().split_once('/') {
            Some((p, q)) => (
                p.trim().parse::<i64>().map_err(|_| bad())?,
                q.trim().parse::<i64>().map_err(|_| bad())?,
            ),
            None => (s.trim().parse::<i64>().map_err(|_| bad())?, 1),
        };
        if q == 0 {
            return Err(bad());
        }
        let g = gcd(p.unsigned_abs(), q.unsigned_abs()) as i64;
        let sign = if q < 0 { -1 } else { 1 };
        Self::new(sign * p / g, sign * q / g)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Outcome of [`classify_angle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AngleClass {
    Rational(RationalAngle),
    Irrational,
}

/// Finds the fraction `p/q` with the smallest denominator such that
/// `|α - πp/q| < tol`, accepting it when `q ≤ q_max`.
///
/// The witness is the simplest rational in the open interval
/// `(α/π - tol/π, α/π + tol/π)`, built from continued-fraction expansions
/// of the interval endpoints.
pub fn classify_angle(alpha: f64, q_max: u64, tol: f64) -> AngleClass {
    let x = alpha / PI;
    let eps = tol / PI;
    match simplest_rational(x - eps, x + eps, 0) {
        Some((p, q)) if q <= q_max as i64 => RationalAngle::new(p, q)
            .map(AngleClass::Rational)
            .unwrap_or(AngleClass::Irrational),
        _ => AngleClass::Irrational,
    }
}

/// Simplest rational strictly inside `(lo, hi)`.
fn simplest_rational(lo: f64, hi: f64, depth: u32) -> Option<(i64, i64)> {
    if depth > 48 || !(lo < hi) {
        return None;
    }
    if lo < 0.0 && hi > 0.0 {
        return Some((0, 1));
    }
    if hi <= 0.0 {
        return simplest_rational(-hi, -lo, depth).map(|(p, q)| (-p, q));
    }
    let fl = lo.floor();
    if fl + 1.0 < hi {
        return Some((fl as i64 + 1, 1));
    }
    let a = lo - fl;
    let b = hi - fl;
    let (p, q) = simplest_rational(1.0 / b, if a == 0.0 { f64::INFINITY } else { 1.0 / a }, depth + 1)?;
    // x = fl + 1/(p/q) = fl + q/p
    let num = (fl as i64).checked_mul(p)?.checked_add(q)?;
    Some((num, p))
}

/// A joint level set `T_(E,J)` of speed and angular momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantTorus {
    pub speed: f64,
    pub angular_momentum: f64,
}

impl InvariantTorus {
    pub fn new(speed: f64, angular_momentum: f64) -> Result<Self> {
        if !(speed > 0.0) {
            return Err(Error::ZeroMomentum);
        }
        if angular_momentum.abs() >= speed {
            return Err(Error::DegenerateTorus {
                ratio: angular_momentum.abs() / speed,
            });
        }
        Ok(Self {
            speed,
            angular_momentum,
        })
    }

    /// Half-length `cos α` of the `s`-range `|s| ≤ cos α`.
    pub fn half_chord(&self) -> f64 {
        cos_alpha(self.angular_momentum / self.speed)
    }

    pub fn alpha(&self) -> f64 {
        -(self.angular_momentum / self.speed).asin()
    }

    /// `c(E,J) = 1 / ∫ ds dθ` over the torus.
    pub fn normalizer(&self) -> f64 {
        1.0 / (TAU * 2.0 * self.half_chord())
    }
}

/// Billiard dynamics with a fixed set of tolerances.
#[derive(Debug, Clone, Copy, Default)]
pub struct Billiard {
    pub tol: Tolerances,
}

impl Billiard {
    pub fn new(tol: Tolerances) -> Self {
        Self { tol }
    }

    pub fn reflect(&self, z: &Vec2, xi: &Vec2) -> Result<Vec2> {
        reflect(z, xi, &self.tol)
    }

    fn check_not_gliding(&self, p: &PhasePoint) -> Result<()> {
        let e = p.speed();
        if e == 0.0 {
            return Err(Error::ZeroMomentum);
        }
        let ratio = p.angular_momentum().abs() / e;
        if ratio > 1.0 - self.tol.tangent {
            return Err(Error::GlidingRay { ratio });
        }
        Ok(())
    }

    /// The billiard flow `φ^τ`: free flight with specular reflection.
    pub fn flow(&self, p: &PhasePoint, tau: f64) -> Result<PhasePoint> {
        self.check_not_gliding(p)?;
        Ok(flight(p, tau))
    }

    /// First return map on outgoing boundary vectors:
    /// `(z, ξ) ↦ (z + (2 cos α / |ξ|) σ_z ξ, σ_z ξ)`.
    pub fn first_return(&self, z: &Vec2, xi: &Vec2) -> Result<(Vec2, Vec2)> {
        let reflected = self.reflect(z, xi)?;
        let dot = z.dot(xi);
        if !(dot > 0.0) {
            return Err(Error::NotOutgoing { dot });
        }
        let e = xi.norm();
        let ca = cos_alpha(cross(z, xi) / e);
        let next = z + (2.0 * ca / e) * reflected;
        Ok((next / next.norm(), reflected))
    }

    /// The interpolating flow `φ^τ_{α0}`: billiard motion slowed by
    /// `cos α / E`, composed with the rotation `R^{(α0 - α) τ}`. Every orbit
    /// has period [`RationalAngle::period`].
    pub fn flow_alpha0(&self, p: &PhasePoint, tau: f64, alpha0: RationalAngle) -> Result<PhasePoint> {
        let e = p.speed();
        if e == 0.0 {
            return Err(Error::ZeroMomentum);
        }
        let ratio = p.angular_momentum() / e;
        let alpha = -ratio.clamp(-1.0, 1.0).asin();
        let ca = cos_alpha(ratio);
        let moved = if ca > 0.0 { flight(p, tau * ca / e) } else { *p };
        Ok(moved.rotated((alpha0.value() - alpha) * tau))
    }

    /// Exact one-period average of `a` along the `φ_{α0}` orbit through `p`,
    /// by Gauss–Legendre quadrature on each smooth piece between bounces.
    pub fn orbit_average<F>(&self, a: F, p: &PhasePoint, alpha0: RationalAngle, nodes_per_chord: usize) -> Result<f64>
    where
        F: Fn(&PhasePoint) -> f64,
    {
        let e = p.speed();
        if e == 0.0 {
            return Err(Error::ZeroMomentum);
        }
        let period = alpha0.period();
        let ratio = p.angular_momentum() / e;
        let ca = cos_alpha(ratio);
        let gl = GaussLegendre::new(nodes_per_chord.max(2));
        let mut breaks = vec![0.0];
        if ca > 0.0 {
            // first bounce, then one bounce every τ = 2
            let mut t = exit_time(&p.z, &p.xi) * e / ca;
            while t < period {
                if t > 0.0 {
                    breaks.push(t);
                }
                t += 2.0;
            }
        } else {
            let panels = 4 * alpha0.chords_per_period() as usize;
            breaks.extend((1..panels).map(|i| period * i as f64 / panels as f64));
        }
        breaks.push(period);
        let mut total = 0.0;
        for w in breaks.windows(2) {
            for (tau, wt) in gl.on_interval(w[0], w[1]) {
                total += wt * a(&self.flow_alpha0(p, tau, alpha0)?);
            }
        }
        Ok(total / period)
    }

    /// Independent uniform samples of `λ_(E,J)`: uniform in `θ ∈ [0, 2π)`
    /// and `s ∈ [-cos α, cos α]`.
    pub fn sample_torus(&self, torus: &InvariantTorus, n: usize, seed: u64) -> Result<Vec<PhasePoint>> {
        let ratio = torus.angular_momentum.abs() / torus.speed;
        if ratio >= 1.0 - self.tol.tangent {
            return Err(Error::DegenerateTorus { ratio });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = torus.half_chord();
        Ok((0..n)
            .map(|_| {
                let theta = rng.random_range(0.0..TAU);
                let s = rng.random_range(-half..=half);
                from_action_angle(&ActionAngle::new(s, theta, torus.speed, torus.angular_momentum))
            })
            .collect())
    }
}

/// Billiard flight for signed time, no tangency checks.
fn flight(p: &PhasePoint, tau: f64) -> PhasePoint {
    if tau < 0.0 {
        let reversed = PhasePoint::new(p.z, -p.xi);
        let out = forward_flight(&reversed, -tau);
        return PhasePoint::new(out.z, -out.xi);
    }
    forward_flight(p, tau)
}

fn forward_flight(p: &PhasePoint, tau: f64) -> PhasePoint {
    let mut z = p.z;
    let mut xi = p.xi;
    let t_hit = exit_time(&z, &xi);
    if tau <= t_hit {
        return PhasePoint::new(z + tau * xi, xi);
    }
    z += t_hit * xi;
    z /= z.norm();
    xi = reflect_unchecked(&z, &xi);
    let mut remaining = tau - t_hit;

    // Whole chords act as the rotation R^{π + 2α} on the post-bounce state.
    let e = xi.norm();
    let ratio = cross(&z, &xi) / e;
    let chord_time = 2.0 * cos_alpha(ratio) / e;
    if chord_time > 0.0 && remaining > chord_time {
        let chords = (remaining / chord_time).floor();
        let alpha = -ratio.clamp(-1.0, 1.0).asin();
        let beta = ((PI + 2.0 * alpha) * chords).rem_euclid(TAU);
        let rotated = PhasePoint::new(z, xi).rotated(beta);
        z = rotated.z / rotated.z.norm();
        xi = rotated.xi;
        remaining -= chords * chord_time;
    }
    // at most a couple of iterations remain
    loop {
        let t_hit = exit_time(&z, &xi);
        if remaining <= t_hit {
            return PhasePoint::new(z + remaining * xi, xi);
        }
        z += t_hit * xi;
        z /= z.norm();
        xi = reflect_unchecked(&z, &xi);
        remaining -= t_hit;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Vec2, b: &Vec2, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn reflect_examples() {
        let tol = Tolerances::default();
        let r = reflect(&Vec2::new(1.0, 0.0), &Vec2::new(1.0, 0.0), &tol).unwrap();
        assert_eq!(r, Vec2::new(-1.0, 0.0));
        let r = reflect(&Vec2::new(1.0, 0.0), &Vec2::new(0.0, 1.0), &tol).unwrap();
        assert_eq!(r, Vec2::new(0.0, 1.0));
        let s = 0.5f64.sqrt();
        let r = reflect(&Vec2::new(0.0, 1.0), &Vec2::new(s, s), &tol).unwrap();
        assert!(close(&r, &Vec2::new(s, -s), 1e-15));
    }

    #[test]
    fn reflect_off_boundary_is_rejected() {
        let tol = Tolerances::default();
        let err = reflect(&Vec2::new(0.5, 0.0), &Vec2::new(1.0, 0.0), &tol).unwrap_err();
        assert!(matches!(err, Error::NotOnBoundary { .. }));
    }

    #[test]
    fn action_angle_examples() {
        let a = to_action_angle(&PhasePoint::from_coords(0.0, 0.0, 0.0, 1.0)).unwrap();
        assert_eq!((a.s, a.theta, a.speed, a.angular_momentum), (0.0, 0.0, 1.0, 0.0));
        let a = to_action_angle(&PhasePoint::from_coords(1.0, 0.0, 0.0, 2.0)).unwrap();
        assert_eq!((a.s, a.theta, a.speed, a.angular_momentum), (0.0, 0.0, 2.0, 2.0));
        assert_eq!(
            to_action_angle(&PhasePoint::from_coords(0.1, 0.0, 0.0, 0.0)),
            Err(Error::ZeroMomentum)
        );

        let p = from_action_angle(&ActionAngle::new(0.0, 0.0, 1.0, 0.0));
        assert_eq!(p, PhasePoint::from_coords(0.0, 0.0, 0.0, 1.0));
        let p = from_action_angle(&ActionAngle::new(0.0, PI / 2.0, 1.0, 0.5));
        assert!(close(&p.z, &Vec2::new(0.0, 0.5), 1e-15));
        assert!(close(&p.xi, &Vec2::new(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn flow_examples() {
        let b = Billiard::default();
        let p = b.flow(&PhasePoint::from_coords(0.0, 0.0, 0.0, 1.0), 0.5).unwrap();
        assert!(close(&p.z, &Vec2::new(0.0, 0.5), 1e-15));
        let p = b.flow(&PhasePoint::from_coords(-1.0, 0.0, 1.0, 0.0), 3.0).unwrap();
        assert!(close(&p.z, &Vec2::new(0.0, 0.0), 1e-15));
        assert!(close(&p.xi, &Vec2::new(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn tangent_rays_glide() {
        let b = Billiard::default();
        let p = PhasePoint::from_coords(1.0, 0.0, 0.0, 1.0);
        assert!(matches!(b.flow(&p, 1.0), Err(Error::GlidingRay { .. })));
    }

    #[test]
    fn triangle_orbit_closes_after_three_chords() {
        // α = π/6 leaves (1,0) at 30° from the inward normal.
        let b = Billiard::default();
        let alpha = PI / 6.0;
        let inward = Vec2::new(-alpha.cos(), -alpha.sin());
        let p = PhasePoint::new(Vec2::new(1.0, 0.0), inward);
        assert!((p.alpha().unwrap() - alpha).abs() < 1e-15);
        let chord = 2.0 * alpha.cos();
        assert!((chord - 3f64.sqrt()).abs() < 1e-15);
        let q = b.flow(&p, 3.0 * chord).unwrap();
        assert!(q.class_distance(&p, 1e-9) < 1e-10, "{q:?}");
    }

    #[test]
    fn first_return_examples() {
        let b = Billiard::default();
        let (z, xi) = b.first_return(&Vec2::new(1.0, 0.0), &Vec2::new(1.0, 0.0)).unwrap();
        assert!(close(&z, &Vec2::new(-1.0, 0.0), 1e-15));
        assert!(close(&xi, &Vec2::new(-1.0, 0.0), 1e-15));

        // outgoing vector at (1,0) with incidence π/6
        let alpha = PI / 6.0;
        let z0 = Vec2::new(1.0, 0.0);
        let xi0 = Vec2::new(alpha.cos(), -alpha.sin());
        let (z1, _) = b.first_return(&z0, &xi0).unwrap();
        let turn = z0.dot(&z1).clamp(-1.0, 1.0).acos();
        assert!((turn - (PI - 2.0 * alpha)).abs() < 1e-12);

        let (mut z, mut xi) = (z0, xi0);
        for _ in 0..6 {
            (z, xi) = b.first_return(&z, &xi).unwrap();
        }
        // π/6 incidence: the orbit is a triangle, so 6 returns is twice round
        assert!(close(&z, &z0, 1e-10) && close(&xi, &xi0, 1e-10));

        let err = b.first_return(&z0, &Vec2::new(-1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::NotOutgoing { .. }));
    }

    #[test]
    fn chords_per_period_matches_polygons() {
        let cases = [((0, 1), 2), ((1, 6), 3), ((-1, 6), 3), ((1, 4), 4), ((1, 3), 6), ((1, 2), 1), ((1, 10), 5)];
        for ((p, q), m) in cases {
            let a = RationalAngle::new(p, q).unwrap();
            assert_eq!(a.chords_per_period(), m, "{p}/{q}");
        }
    }

    #[test]
    fn flow_alpha0_examples() {
        let b = Billiard::default();
        let a0 = RationalAngle::new(1, 6).unwrap();
        let p = PhasePoint::from_coords(0.2, -0.3, 0.4, 0.9);
        assert_eq!(b.flow_alpha0(&p, 0.0, a0).unwrap(), p);

        // tangent input: pure rotation at rate α0 - α
        let t = PhasePoint::from_coords(0.0, 1.0, -2.0, 0.0);
        assert!((t.alpha().unwrap() + PI / 2.0).abs() < 1e-15);
        let q = b.flow_alpha0(&t, 0.7, a0).unwrap();
        assert!((q.z.norm() - 1.0).abs() < 1e-15);
        assert!(q.distance(&t.rotated((a0.value() + PI / 2.0) * 0.7)) < 1e-14);

        // on I_{π/6}: orbit closes at τ = 6
        let start = from_action_angle(&ActionAngle::new(0.1, 0.4, 1.0, -(PI / 6.0).sin()));
        let end = b.flow_alpha0(&start, 6.0, a0).unwrap();
        assert!(end.class_distance(&start, 1e-9) < 1e-9);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify_angle(PI / 6.0, 50, 1e-9),
            AngleClass::Rational(RationalAngle::new(1, 6).unwrap())
        );
        assert_eq!(
            classify_angle(PI / 2.0, 50, 1e-9),
            AngleClass::Rational(RationalAngle::new(1, 2).unwrap())
        );
        assert_eq!(
            classify_angle(-PI / 6.0, 50, 1e-9),
            AngleClass::Rational(RationalAngle::new(-1, 6).unwrap())
        );
        assert_eq!(classify_angle(0.0, 1, 1e-9), AngleClass::Rational(RationalAngle::new(0, 1).unwrap()));
        assert_eq!(classify_angle(PI * (2f64.sqrt() - 1.0), 50, 1e-9), AngleClass::Irrational);
    }

    #[test]
    fn classify_prefers_smallest_denominator() {
        // 0.3333 is within 1e-3 of 1/3 and of many larger-denominator fractions
        let got = classify_angle(PI * 0.3334, 100, PI * 1e-3);
        assert_eq!(got, AngleClass::Rational(RationalAngle::new(1, 3).unwrap()));
        // brute-force check on a grid of inputs
        for i in 0..200 {
            let x = -0.5 + i as f64 / 199.0;
            let tol = 2e-3;
            let brute = (1..=40i64).find_map(|q| {
                let p = (x * q as f64).round() as i64;
                ((x - p as f64 / q as f64).abs() < tol).then_some(q)
            });
            match classify_angle(PI * x, 40, PI * tol) {
                AngleClass::Rational(r) => assert_eq!(Some(r.q()), brute, "x = {x}"),
                AngleClass::Irrational => assert_eq!(brute, None, "x = {x}"),
            }
        }
    }

    #[test]
    fn rational_angle_parsing() {
        let a: RationalAngle = "1/6".parse().unwrap();
        assert_eq!((a.p(), a.q()), (1, 6));
        let a: RationalAngle = "2/-12".parse().unwrap();
        assert_eq!((a.p(), a.q()), (-1, 6));
        assert!("3/4".parse::<RationalAngle>().is_err());
        assert!("x".parse::<RationalAngle>().is_err());
        assert!(RationalAngle::new(2, 6).is_err());
    }

    #[test]
    fn torus_normalizer_and_degeneracy() {
        let t = InvariantTorus::new(1.0, 0.0).unwrap();
        assert!((t.normalizer() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(InvariantTorus::new(1.0, 1.0).is_err());
        let b = Billiard::default();
        assert!(b.sample_torus(&t, 0, 1).unwrap().is_empty());
        let near = InvariantTorus { speed: 1.0, angular_momentum: 1.0 - 1e-12 };
        assert!(matches!(b.sample_torus(&near, 3, 1), Err(Error::DegenerateTorus { .. })));
    }
}
