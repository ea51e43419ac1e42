//! Phase-space measures at a semiclassical scale `h`.
//!
//! The Wigner distribution is replaced by the Husimi function, which is
//! nonnegative at every `h` and has the same limits. The moment map
//! `(z, ξ) ↦ (E, J) = (|ξ|, x ξ_y - y ξ_x)` is pushed forward exactly from the
//! eigenbasis expansion.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::evolve::WaveField;
use crate::geometry::{classify_angle, cos_alpha, exit_time, reflect, AngleClass};
use crate::quad::GaussLegendre;
use crate::{Error, PhasePoint, Result, Tolerances, Vec2};

/// Point of the moment-map image: speed `E` and angular momentum `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentAtom {
    pub speed: f64,
    pub angular_momentum: f64,
}

impl MomentAtom {
    /// `α = -arcsin(J/E)`.
    pub fn alpha(&self) -> f64 {
        -(self.angular_momentum / self.speed).clamp(-1.0, 1.0).asin()
    }
}

/// Nonnegative weights on a list of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMeasure<A> {
    pub atoms: Vec<A>,
    pub weights: Vec<f64>,
    pub total_mass: f64,
    pub h: f64,
}

impl<A> PhaseMeasure<A> {
    pub fn new(atoms: Vec<A>, weights: Vec<f64>, h: f64) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidInput("atoms and weights differ in length".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!("weight {w} is not a nonnegative number")));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!("h = {h}")));
        }
        let total_mass = weights.iter().sum();
        Ok(Self { atoms, weights, total_mass, h })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Mass of the atoms satisfying `pred`.
    pub fn mass_where(&self, pred: impl Fn(&A) -> bool) -> f64 {
        self.atoms.iter().zip(&self.weights).filter(|(a, _)| pred(a)).map(|(_, w)| w).sum()
    }

    /// Histogram of `key` over `bins` equal cells of `[lo, hi)`; mass
    /// outside the range is dropped.
    pub fn histogram(&self, key: impl Fn(&A) -> f64, lo: f64, hi: f64, bins: usize) -> Vec<f64> {
        let mut out = vec![0.0; bins];
        let width = (hi - lo) / bins as f64;
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            let x = key(a);
            if x >= lo && x < hi {
                let b = (((x - lo) / width) as usize).min(bins - 1);
                out[b] += w;
            }
        }
        out
    }
}

impl PhaseMeasure<MomentAtom> {
    /// Mass in the Euclidean ball of radius `radius` around `(E, J)`.
    pub fn ball_mass(&self, speed: f64, angular_momentum: f64, radius: f64) -> f64 {
        self.mass_where(|a| {
            (a.speed - speed).hypot(a.angular_momentum - angular_momentum) <= radius
        })
    }

    /// Exact `J`-marginal: total weight per distinct `J` value, sorted.
    pub fn j_marginal(&self) -> Vec<(f64, f64)> {
        let mut acc: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            let key = (a.angular_momentum / self.h).round() as i64;
            let e = acc.entry(key).or_insert((a.angular_momentum, 0.0));
            e.1 += w;
        }
        acc.into_values().collect()
    }
}

/// Weight `|c_{n,k}|²` at `(E, J) = (h α_{n,k}, h·(±n))`; exact, total mass
/// `‖u‖²`.
pub fn moment_pushforward(u: &WaveField, h: f64) -> Result<PhaseMeasure<MomentAtom>> {
    let atoms = u
        .basis
        .modes()
        .iter()
        .map(|m| MomentAtom { speed: h * m.zero, angular_momentum: h * m.angular() as f64 })
        .collect();
    let weights = u.coeffs.iter().map(|c| c.norm_sqr()).collect();
    PhaseMeasure::new(atoms, weights, h)
}

/// Split of a moment measure by the angle `α = -arcsin(J/E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaPartition {
    /// Mass per class, rational classes ascending, `Irrational` last.
    pub parts: Vec<(AngleClass, f64)>,
    pub total_mass: f64,
}

impl AlphaPartition {
    pub fn mass_of(&self, class: AngleClass) -> f64 {
        self.parts.iter().find(|(c, _)| *c == class).map_or(0.0, |p| p.1)
    }

    pub fn rational_mass(&self) -> f64 {
        self.parts.iter().filter(|(c, _)| *c != AngleClass::Irrational).map(|p| p.1).sum()
    }
}

/// Classifies each atom's `α` with [`classify_angle`] and sums the weights
/// per class.
pub fn alpha_decompose(m: &PhaseMeasure<MomentAtom>, q_max: u64, tol: f64) -> Result<AlphaPartition> {
    let mut acc: BTreeMap<(u8, AngleClass), f64> = BTreeMap::new();
    for (a, w) in m.atoms.iter().zip(&m.weights) {
        if !(a.speed > 0.0) {
            return Err(Error::InvalidInput(format!("atom with E = {}", a.speed)));
        }
        let class = classify_angle(a.alpha(), q_max, tol);
        let rank = match class {
            AngleClass::Rational(_) => 0,
            AngleClass::Irrational => 1,
        };
        *acc.entry((rank, class)).or_default() += w;
    }
    let mut parts: Vec<(AngleClass, f64)> = acc.into_iter().map(|((_, c), w)| (c, w)).collect();
    parts.sort_by(|a, b| match (a.0, b.0) {
        (AngleClass::Rational(x), AngleClass::Rational(y)) => x.value().total_cmp(&y.value()),
        (AngleClass::Rational(_), AngleClass::Irrational) => std::cmp::Ordering::Less,
        (AngleClass::Irrational, AngleClass::Rational(_)) => std::cmp::Ordering::Greater,
        _ => std::cmp::Ordering::Equal,
    });
    Ok(AlphaPartition { parts, total_mass: m.total_mass })
}

/// Axes of a Husimi grid: a square `z` grid and a square `ξ` grid, both
/// with `n` equally spaced points per axis including the endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HusimiSpec {
    pub z_min: f64,
    pub z_max: f64,
    pub nz: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub nxi: usize,
}

impl HusimiSpec {
    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    fn spacing(lo: f64, hi: f64, n: usize) -> f64 {
        (hi - lo) / (n - 1) as f64
    }

    /// The smallest grid with spacing `≤ √h/2` over the given ranges.
    pub fn resolving(h: f64, z_half: f64, xi_min: f64, xi_max: f64) -> Self {
        let step = 0.5 * h.sqrt();
        let nz = (2.0 * z_half / step).ceil() as usize + 1;
        let nxi = ((xi_max - xi_min) / step).ceil() as usize + 1;
        Self { z_min: -z_half, z_max: z_half, nz, xi_min, xi_max, nxi }
    }
}

/// `(2πh)^{-2} |⟨g_{z0,ξ0}, u⟩|²` on a `(z, ξ)` grid, stored with index
/// order `(x0, y0, ξx, ξy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub h: f64,
    pub z_axis: Vec<f64>,
    pub xi_axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl HusimiGrid {
    fn idx(&self, ix: usize, iy: usize, kx: usize, ky: usize) -> usize {
        let (nz, nxi) = (self.z_axis.len(), self.xi_axis.len());
        ((ix * nz + iy) * nxi + kx) * nxi + ky
    }

    pub fn value(&self, ix: usize, iy: usize, kx: usize, ky: usize) -> f64 {
        self.values[self.idx(ix, iy, kx, ky)]
    }

    fn cell(&self) -> f64 {
        let dz = self.z_axis[1] - self.z_axis[0];
        let dxi = self.xi_axis[1] - self.xi_axis[0];
        (dz * dxi).powi(2)
    }

    /// Riemann-sum mass over the grid.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    /// Grid point of largest value.
    pub fn argmax(&self) -> PhasePoint {
        let best = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        let nz = self.z_axis.len();
        let nxi = self.xi_axis.len();
        let ky = best % nxi;
        let kx = (best / nxi) % nxi;
        let iy = (best / (nxi * nxi)) % nz;
        let ix = best / (nxi * nxi * nz);
        PhasePoint::from_coords(self.z_axis[ix], self.z_axis[iy], self.xi_axis[kx], self.xi_axis[ky])
    }

    /// The Husimi mass carried to `(E, J)` by the moment map.
    pub fn moment_measure(&self) -> Result<PhaseMeasure<MomentAtom>> {
        let cell = self.cell();
        let mut atoms = Vec::with_capacity(self.values.len());
        let mut weights = Vec::with_capacity(self.values.len());
        for (ix, &x) in self.z_axis.iter().enumerate() {
            for (iy, &y) in self.z_axis.iter().enumerate() {
                for (kx, &a) in self.xi_axis.iter().enumerate() {
                    for (ky, &b) in self.xi_axis.iter().enumerate() {
                        atoms.push(MomentAtom { speed: a.hypot(b), angular_momentum: x * b - y * a });
                        weights.push(self.value(ix, iy, kx, ky) * cell);
                    }
                }
            }
        }
        PhaseMeasure::new(atoms, weights, self.h)
    }
}

/// Normalized radial profiles tabulated on a uniform grid and evaluated by
/// cubic Hermite interpolation.
struct RadialTable {
    step: f64,
    values: Vec<Vec<(f64, f64)>>,
}

impl RadialTable {
    fn new(u: &WaveField, active: &[usize]) -> Self {
        let nodes = (16.0 * u.basis.max_zero()).ceil().max(512.0) as usize;
        let step = 1.0 / nodes as f64;
        let values = active
            .par_iter()
            .map(|&a| {
                let m = u.basis.mode(a);
                (0..=nodes)
                    .map(|i| {
                        let r = i as f64 * step;
                        let x = m.zero * r;
                        let (jn, jn1) = crate::bessel::pair(m.n, x);
                        let d = if x == 0.0 {
                            if m.n == 1 {
                                0.5
                            } else {
                                0.0
                            }
                        } else {
                            m.n as f64 / x * jn - jn1
                        };
                        (jn / m.l2norm, m.zero * d / m.l2norm)
                    })
                    .collect()
            })
            .collect();
        Self { step, values }
    }

    fn eval(&self, row: usize, r: f64) -> f64 {
        let t = r / self.step;
        let i = (t.floor() as usize).min(self.values[row].len() - 2);
        let s = t - i as f64;
        let (f0, d0) = self.values[row][i];
        let (f1, d1) = self.values[row][i + 1];
        let (d0, d1) = (d0 * self.step, d1 * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        f0 * (2.0 * s3 - 3.0 * s2 + 1.0) + d0 * (s3 - 2.0 * s2 + s) + f1 * (-2.0 * s3 + 3.0 * s2) + d1 * (s3 - s2)
    }
}

/// `u` on the square grid `x_i = y_i = -1 + i·dx`, zero outside the disk.
fn cartesian_samples(u: &WaveField, dx: f64) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = (2.0 / dx).round() as usize + 1;
    let axis: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let active: Vec<usize> = (0..u.basis.len()).filter(|&a| u.coeffs[a].norm_sqr() > 0.0).collect();
    let table = RadialTable::new(u, &active);
    let m_max = active.iter().map(|&a| u.basis.mode(a).n).max().unwrap_or(0) as i64;
    let cols: Vec<Vec<Complex64>> = axis
        .par_iter()
        .map(|&x| {
            let mut phases = vec![Complex64::new(0.0, 0.0); (2 * m_max + 1) as usize];
            axis.iter()
                .map(|&y| {
                    let r = x.hypot(y);
                    if r > 1.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let e = Complex64::from_polar(1.0, y.atan2(x));
                    let mut p = Complex64::new(1.0, 0.0);
                    phases[m_max as usize] = p;
                    for m in 1..=m_max as usize {
                        p *= e;
                        phases[m_max as usize + m] = p;
                        phases[m_max as usize - m] = p.conj();
                    }
                    active
                        .iter()
                        .enumerate()
                        .map(|(row, &a)| {
                            let mode = u.basis.mode(a);
                            u.coeffs[a] * table.eval(row, r) * phases[(mode.angular() + m_max) as usize]
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    let grid = DMatrix::from_fn(n, n, |i, j| cols[i][j]);
    (axis, grid)
}

/// Husimi function of `u` (extended by zero outside the disk) with the
/// isotropic coherent state
/// `g(z) = (πh)^{-1/2} exp(-|z - z0|²/(2h) + i ξ0·(z - z0)/h)`.
pub fn husimi(u: &WaveField, h: f64, spec: &HusimiSpec) -> Result<HusimiGrid> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("h = {h}")));
    }
    if spec.nz < 2 || spec.nxi < 2 {
        return Err(Error::GridTooCoarse("need at least two points per axis".into()));
    }
    let limit = 0.5 * h.sqrt();
    let dz0 = HusimiSpec::spacing(spec.z_min, spec.z_max, spec.nz);
    let dxi0 = HusimiSpec::spacing(spec.xi_min, spec.xi_max, spec.nxi);
    if dz0 > limit * (1.0 + 1e-12) || dxi0 > limit * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse(format!(
            "spacings {dz0:.4} (z), {dxi0:.4} (ξ) exceed √h/2 = {limit:.4}"
        )));
    }
    let xi_extent = spec.xi_min.abs().max(spec.xi_max.abs());
    let bandwidth = u.basis.max_zero() + xi_extent / h + 8.0 / h.sqrt();
    let dx = (0.25 * h.sqrt()).min(TAU / bandwidth);
    let (axis, samples) = cartesian_samples(u, dx);
    let dx = axis[1] - axis[0];
    let z_axis = HusimiSpec::axis(spec.z_min, spec.z_max, spec.nz);
    let xi_axis = HusimiSpec::axis(spec.xi_min, spec.xi_max, spec.nxi);
    let reach = 7.0 * h.sqrt();
    let pref = (PI * h).powf(-0.5) * dx * dx;
    let norm = (TAU * h).powi(-2);
    let nxi = xi_axis.len();

    let window = |c: f64| -> (usize, usize) {
        let lo = ((c - reach + 1.0) / dx).floor().max(0.0) as usize;
        let hi = (((c + reach + 1.0) / dx).ceil() as usize).min(axis.len() - 1);
        (lo, hi)
    };
    let pairs: Vec<(usize, usize)> = (0..z_axis.len())
        .flat_map(|i| (0..z_axis.len()).map(move |j| (i, j)))
        .collect();
    let blocks: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(ix, iy)| {
            let (x0, y0) = (z_axis[ix], z_axis[iy]);
            let mut out = vec![0.0; nxi * nxi];
            if x0 - reach > 1.0 || x0 + reach < -1.0 || y0 - reach > 1.0 || y0 + reach < -1.0 {
                return out;
            }
            let (xl, xh) = window(x0);
            let (yl, yh) = window(y0);
            if xl > xh || yl > yh {
                return out;
            }
            let gx: Vec<f64> = (xl..=xh).map(|i| (-(axis[i] - x0).powi(2) / (2.0 * h)).exp()).collect();
            let gy: Vec<f64> = (yl..=yh).map(|j| (-(axis[j] - y0).powi(2) / (2.0 * h)).exp()).collect();
            let ey = DMatrix::from_fn(yh - yl + 1, nxi, |j, k| {
                Complex64::from_polar(1.0, -xi_axis[k] * (axis[yl + j] - y0) / h)
            });
            let ex = DMatrix::from_fn(nxi, xh - xl + 1, |k, i| {
                Complex64::from_polar(1.0, -xi_axis[k] * (axis[xl + i] - x0) / h)
            });
            let w = DMatrix::from_fn(xh - xl + 1, yh - yl + 1, |i, j| samples[(xl + i, yl + j)] * (gx[i] * gy[j]));
            // overlap[kx, ky] = Σ_i Σ_j ex[kx, i] w[i, j] ey[j, ky]
            let overlap = ex * (w * ey);
            for kx in 0..nxi {
                for ky in 0..nxi {
                    out[kx * nxi + ky] = norm * (pref * overlap[(kx, ky)]).norm_sqr();
                }
            }
            out
        })
        .collect();
    Ok(HusimiGrid { h, z_axis, xi_axis, values: blocks.concat() })
}

/// Samples of a complex function on the square grid
/// `x_i = y_i = -L + i·(2L/n)`, `i < n`, stored as `values[i * n + j]` for
/// the point `(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianField {
    pub half_width: f64,
    pub n: usize,
    pub values: Vec<Complex64>,
}

impl CartesianField {
    pub fn from_fn(half_width: f64, n: usize, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let dx = 2.0 * half_width / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(-half_width + i as f64 * dx, -half_width + j as f64 * dx));
            }
        }
        Self { half_width, n, values }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spacing().powi(2)
    }

    /// Largest modulus on the outermost rows and columns.
    fn edge_max(&self) -> f64 {
        let n = self.n;
        (0..n)
            .flat_map(|k| [(0, k), (n - 1, k), (k, 0), (k, n - 1)])
            .map(|(i, j)| self.values[i * n + j].norm())
            .fold(0.0, f64::max)
    }
}

/// Quadrature for the action-angle transform.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformOptions {
    /// Gauss–Legendre nodes in `E ∈ [0, π/dx]`.
    pub n_energy: usize,
    /// Trapezoid nodes in `θ`.
    pub n_theta: usize,
    /// Output abscissae `s`.
    pub s_grid: Vec<f64>,
    /// Largest spectral mass fraction allowed above two thirds of the
    /// Nyquist radius.
    pub tail_limit: f64,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self {
            n_energy: 96,
            n_theta: 256,
            s_grid: (0..161).map(|i| -2.0 + 0.025 * i as f64).collect(),
            tail_limit: 1e-6,
        }
    }
}

/// `f̂(E ω(θ))` at polar nodes, `ω(θ) = (-sin θ, cos θ)`, with
/// `f̂(ξ) = ∫ f(z) e^{-iξ·z} dz`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSpectrum {
    pub energies: Vec<f64>,
    pub energy_weights: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Row per energy, column per angle.
    pub values: DMatrix<Complex64>,
    /// Spectral mass fraction above two thirds of the Nyquist radius.
    pub tail_fraction: f64,
}

impl PolarSpectrum {
    pub fn new(f: &CartesianField, n_energy: usize, n_theta: usize) -> Self {
        let dx = f.spacing();
        let e_max = PI / dx;
        let (energies, energy_weights): (Vec<f64>, Vec<f64>) =
            GaussLegendre::new(n_energy).on_interval(0.0, e_max).unzip();
        let thetas: Vec<f64> = (0..n_theta).map(|j| TAU * j as f64 / n_theta as f64).collect();
        let coords: Vec<f64> = (0..f.n).map(|i| f.coord(i)).collect();
        let nodes: Vec<(usize, usize)> = (0..n_energy).flat_map(|k| (0..n_theta).map(move |j| (k, j))).collect();
        let vals: Vec<Complex64> = nodes
            .par_iter()
            .map(|&(k, j)| {
                let (xi_x, xi_y) = (-energies[k] * thetas[j].sin(), energies[k] * thetas[j].cos());
                let ey: Vec<Complex64> = coords.iter().map(|&y| Complex64::from_polar(1.0, -xi_y * y)).collect();
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, &x) in coords.iter().enumerate() {
                    let row = &f.values[i * f.n..(i + 1) * f.n];
                    let inner: Complex64 = row.iter().zip(&ey).map(|(v, e)| v * e).sum();
                    acc += inner * Complex64::from_polar(1.0, -xi_x * x);
                }
                acc * dx * dx
            })
            .collect();
        let values = DMatrix::from_fn(n_energy, n_theta, |k, j| vals[k * n_theta + j]);
        let mut spectrum = Self { energies, energy_weights, thetas, values, tail_fraction: 0.0 };
        let total = spectrum.mass_above(0.0);
        spectrum.tail_fraction = if total > 0.0 { spectrum.mass_above(2.0 * e_max / 3.0) / total } else { 0.0 };
        spectrum
    }

    fn mass_above(&self, e0: f64) -> f64 {
        let dtheta = TAU / self.thetas.len() as f64;
        let mut s = 0.0;
        for (k, (&e, &w)) in self.energies.iter().zip(&self.energy_weights).enumerate() {
            if e >= e0 {
                s += w * e * self.values.row(k).iter().map(|v| v.norm_sqr()).sum::<f64>() * dtheta;
            }
        }
        s / TAU.powi(2)
    }

    /// `‖𝒰f‖²_{L²(ℝ × [0, 2π))} = (2π)^{-2} ∫∫ |f̂(Eω)|² E dE dθ`.
    pub fn norm_squared(&self) -> f64 {
        self.mass_above(0.0)
    }

    /// `∂_s^order 𝒰f(s, θ_j)` on the given `s` values; row per `s`.
    pub fn evaluate(&self, s_grid: &[f64], order: u32) -> DMatrix<Complex64> {
        let pref = TAU.powf(-1.5);
        let factor = Complex64::new(0.0, 1.0).powu(order);
        let rows: Vec<Vec<Complex64>> = s_grid
            .par_iter()
            .map(|&s| {
                let kernel: Vec<Complex64> = self
                    .energies
                    .iter()
                    .zip(&self.energy_weights)
                    .map(|(&e, &w)| Complex64::from_polar(w * e.sqrt() * e.powi(order as i32), e * s) * factor)
                    .collect();
                (0..self.thetas.len())
                    .map(|j| pref * kernel.iter().enumerate().map(|(k, c)| c * self.values[(k, j)]).sum::<Complex64>())
                    .collect()
            })
            .collect();
        DMatrix::from_fn(s_grid.len(), self.thetas.len(), |i, j| rows[i][j])
    }
}

/// `𝒰f` sampled on an `(s, θ)` grid, with its polar spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionAngleField {
    pub s: Vec<f64>,
    pub theta: Vec<f64>,
    /// Row per `s`, column per `θ`.
    pub values: DMatrix<Complex64>,
    pub spectrum: PolarSpectrum,
}

impl ActionAngleField {
    /// `∂²_s 𝒰f` on the same grid.
    pub fn second_derivative(&self) -> DMatrix<Complex64> {
        self.spectrum.evaluate(&self.s, 2)
    }

    /// `(Σ |g|² ds dθ)^{1/2}` over the sample grid.
    pub fn grid_norm(&self, g: &DMatrix<Complex64>) -> f64 {
        let ds = if self.s.len() > 1 { self.s[1] - self.s[0] } else { 1.0 };
        let dtheta = TAU / self.theta.len() as f64;
        (g.iter().map(|v| v.norm_sqr()).sum::<f64>() * ds * dtheta).sqrt()
    }
}

/// `𝒰f(s, θ) = (2π)^{-3/2} ∫₀^∞ e^{iEs} f̂(E ω(θ)) √E dE`, the `h`-independent
/// form of the transform attached to the action-angle map.
pub fn action_angle_transform(f: &CartesianField, opts: &TransformOptions) -> Result<ActionAngleField> {
    if f.n < 4 || opts.n_energy == 0 || opts.n_theta == 0 {
        return Err(Error::GridTooCoarse("transform grid too small".into()));
    }
    let peak = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak > 0.0 && f.edge_max() > opts.tail_limit * peak {
        return Err(Error::AliasingDetected { tail: f.edge_max() / peak });
    }
    let spectrum = PolarSpectrum::new(f, opts.n_energy, opts.n_theta);
    if spectrum.tail_fraction > opts.tail_limit {
        return Err(Error::AliasingDetected { tail: spectrum.tail_fraction });
    }
    Ok(ActionAngleField {
        s: opts.s_grid.clone(),
        theta: spectrum.thetas.clone(),
        values: spectrum.evaluate(&opts.s_grid, 0),
        spectrum,
    })
}

/// A phase-space test function `a(z, ξ)`.
pub trait Symbol: Sync {
    fn value(&self, z: &Vec2, xi: &Vec2) -> f64;

    /// `ξ·∂_z a`; by default a five-point difference along `ξ`.
    fn transport(&self, z: &Vec2, xi: &Vec2) -> f64 {
        let eps = 1e-3 / xi.norm().max(1e-300);
        let at = |t: f64| self.value(&(z + t * xi), xi);
        (8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps)
    }
}

impl<F: Fn(&Vec2, &Vec2) -> f64 + Sync> Symbol for F {
    fn value(&self, z: &Vec2, xi: &Vec2) -> f64 {
        self(z, xi)
    }
}

/// Both sides of the section identity for an empirical measure with
/// weights `w` on interior points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionResidual {
    /// `∫ ξ·∂_z a dμ`.
    pub transport: f64,
    /// `∫_{S+} |ξ| (a(z, ξ) - a(z, σ_z ξ)) dμ^S`.
    pub boundary: f64,
}

impl SectionResidual {
    pub fn residual(&self) -> f64 {
        (self.transport - self.boundary).abs()
    }
}

/// Evaluates the section identity. Each sample is traced back to its last
/// boundary hit `z_b`; the outgoing vector there is `σ_{z_b} ξ`, and the
/// sample contributes to `μ^S` with weight `w / (2 cos α)`.
pub fn section_invariance_residual(
    samples: &[PhasePoint],
    weights: &[f64],
    a: &impl Symbol,
    tol: &Tolerances,
) -> Result<SectionResidual> {
    if samples.len() != weights.len() {
        return Err(Error::InvalidInput("samples and weights differ in length".into()));
    }
    let parts: Vec<(f64, f64)> = samples
        .par_iter()
        .zip(weights.par_iter())
        .map(|(p, &w)| -> Result<(f64, f64)> {
            let e = p.speed();
            if e == 0.0 {
                return Err(Error::ZeroMomentum);
            }
            let ca = cos_alpha(p.angular_momentum() / e);
            if ca <= tol.tangent {
                return Err(Error::GlidingRay { ratio: p.angular_momentum().abs() / e });
            }
            let back = -p.xi;
            let zb = p.z + exit_time(&p.z, &back) * back;
            let zb = zb / zb.norm();
            let outgoing = reflect(&zb, &p.xi, tol)?;
            let lhs = w * a.transport(&p.z, &p.xi);
            let rhs = w * e * (a.value(&zb, &outgoing) - a.value(&zb, &p.xi)) / (2.0 * ca);
            Ok((lhs, rhs))
        })
        .collect::<Result<_>>()?;
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Ok(SectionResidual { transport: 0.0, boundary: 0.0 });
    }
    let (l, r) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    Ok(SectionResidual { transport: l / total, boundary: r / total })
}
