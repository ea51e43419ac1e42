//! Galerkin propagator for `(1/i) ∂_t u = (-½Δ + V) u` with Dirichlet
//! conditions, in the eigenbasis of the disk truncated at `α ≤ E_cut`.
//!
//! Modes are `ψ(r e^{iu}) = R(r) e^{imu}` with `x = r cos u`, `y = r sin u`
//! and `m = ±n` the signed angular number.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::bessel;
use crate::quad::GaussLegendre;
use crate::spectrum::Eigenmode;
use crate::{Error, Result, Vec2};

/// Default cutoff on `α_{n,k}`.
pub const DEFAULT_E_CUT: f64 = 60.0;

/// Fraction of the Neumann-trace majorant allowed in the top tenth of the
/// spectrum before the series is declared unresolved.
pub const TRACE_TAIL_LIMIT: f64 = 0.25;

/// Dirichlet modes with `α_{n,k} ≤ e_cut`, sorted by eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    modes: Vec<Eigenmode>,
    e_cut: f64,
    index: HashMap<(usize, usize, i8), usize>,
}

impl Basis {
    /// Every mode with `α_{n,k} ≤ e_cut`; both signs for `n > 0`, sign `+1`
    /// only for `n = 0`.
    pub fn new(e_cut: f64) -> Result<Self> {
        if !(e_cut > 0.0) || e_cut > bessel::N_MAX as f64 {
            return Err(Error::OutOfRange(format!("E_cut = {e_cut}")));
        }
        let n_top = e_cut.floor() as usize;
        let rows: Vec<Vec<f64>> = (0..=n_top)
            .into_par_iter()
            .map(|n| bessel::zeros_below(n, e_cut))
            .collect();
        let mut modes = Vec::new();
        for (n, row) in rows.iter().enumerate() {
            for (i, &z) in row.iter().enumerate() {
                modes.push(Eigenmode::from_zero(n, i + 1, 1, z));
                if n > 0 {
                    modes.push(Eigenmode::from_zero(n, i + 1, -1, z));
                }
            }
        }
        Self::from_modes(modes, e_cut)
    }

    /// A basis from an explicit mode list. The list must be closed under
    /// `sign ↦ -sign` and use sign `+1` for `n = 0`.
    pub fn from_modes(mut modes: Vec<Eigenmode>, e_cut: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidInput("empty basis".into()));
        }
        modes.sort_by(|a, b| {
            a.zero
                .total_cmp(&b.zero)
                .then(a.n.cmp(&b.n))
                .then(b.sign.cmp(&a.sign))
        });
        let mut index = HashMap::with_capacity(modes.len());
        for (i, m) in modes.iter().enumerate() {
            if m.n == 0 && m.sign != 1 {
                return Err(Error::InvalidInput("n = 0 modes carry sign +1".into()));
            }
            if index.insert((m.n, m.k, m.sign), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate mode ({}, {}, {})", m.n, m.k, m.sign)));
            }
        }
        for m in &modes {
            if m.n > 0 && !index.contains_key(&(m.n, m.k, -m.sign)) {
                return Err(Error::InvalidInput(format!(
                    "mode ({}, {}) present with one sign only",
                    m.n, m.k
                )));
            }
        }
        Ok(Self { modes, e_cut, index })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Eigenmode] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> &Eigenmode {
        &self.modes[i]
    }

    pub fn e_cut(&self) -> f64 {
        self.e_cut
    }

    /// Flat index of `(n, k, sign)`; the sign is ignored for `n = 0`.
    pub fn index_of(&self, n: usize, k: usize, sign: i8) -> Option<usize> {
        let sign = if n == 0 { 1 } else { sign };
        self.index.get(&(n, k, sign)).copied()
    }

    /// Largest `|m|` in the basis.
    pub fn max_angular(&self) -> usize {
        self.modes.iter().map(|m| m.n).max().unwrap_or(0)
    }

    /// Largest `α` in the basis.
    pub fn max_zero(&self) -> f64 {
        self.modes.last().map_or(0.0, |m| m.zero)
    }

    /// Normalized radial profiles `R_a(r_i)`, one row per mode.
    pub fn radial_table(&self, r: &[f64]) -> DMatrix<f64> {
        radial_table(&self.modes, r)
    }
}

/// Normalized radial profiles `R_a(r_i)` of `modes`, one row per mode.
pub fn radial_table(modes: &[Eigenmode], r: &[f64]) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = modes
        .par_iter()
        .map(|m| r.iter().map(|&ri| m.normalized_radial(ri)).collect())
        .collect();
    DMatrix::from_fn(modes.len(), r.len(), |a, i| rows[a][i])
}

/// A state `Σ c_a ψ_a` on a shared basis at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub basis: Arc<Basis>,
    pub coeffs: DVector<Complex64>,
    pub time: f64,
}

impl WaveField {
    pub fn new(basis: Arc<Basis>, coeffs: DVector<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for a basis of {} modes",
                coeffs.len(),
                basis.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(Self { basis, coeffs, time: 0.0 })
    }

    pub fn zero(basis: Arc<Basis>) -> Self {
        let n = basis.len();
        Self { basis, coeffs: DVector::zeros(n), time: 0.0 }
    }

    /// The normalized eigenmode `ψ_{n,k}^{sign}`.
    pub fn mode(basis: Arc<Basis>, n: usize, k: usize, sign: i8) -> Result<Self> {
        let i = basis
            .index_of(n, k, sign)
            .ok_or_else(|| Error::OutOfRange(format!("mode ({n}, {k}, {sign}) not in basis")))?;
        let mut u = Self::zero(basis);
        u.coeffs[i] = Complex64::new(1.0, 0.0);
        Ok(u)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// `Σ (1 + α²) |c|²`.
    pub fn h1_norm_squared(&self) -> f64 {
        self.weighted_mass(|m| 1.0 + m.eigenvalue)
    }

    /// `‖∇u‖² = Σ α² |c|²`.
    pub fn gradient_norm_squared(&self) -> f64 {
        self.weighted_mass(|m| m.eigenvalue)
    }

    fn weighted_mass(&self, w: impl Fn(&Eigenmode) -> f64) -> f64 {
        self.basis
            .modes()
            .iter()
            .zip(self.coeffs.iter())
            .map(|(m, c)| w(m) * c.norm_sqr())
            .sum()
    }

    /// Mass carried by each signed angular number `m`.
    pub fn angular_mass(&self) -> Vec<(i64, f64)> {
        let mut acc: HashMap<i64, f64> = HashMap::new();
        for (m, c) in self.basis.modes().iter().zip(self.coeffs.iter()) {
            *acc.entry(m.angular()).or_default() += c.norm_sqr();
        }
        let mut out: Vec<_> = acc.into_iter().collect();
        out.sort_by_key(|e| e.0);
        out
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self { coeffs: &self.coeffs * s, ..self.clone() }
    }

    /// `a u + b v` on the same basis.
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        same_basis(&self.basis, &other.basis)?;
        Ok(Self {
            basis: self.basis.clone(),
            coeffs: &self.coeffs * a + &other.coeffs * b,
            time: self.time,
        })
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroDatum);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    /// Value at the polar point `(r, u)`.
    pub fn value(&self, r: f64, u: f64) -> Complex64 {
        self.basis
            .modes()
            .iter()
            .zip(self.coeffs.iter())
            .filter(|(_, c)| **c != Complex64::new(0.0, 0.0))
            .map(|(m, c)| c * m.value(r, u))
            .sum()
    }
}

pub(crate) fn same_basis(a: &Arc<Basis>, b: &Arc<Basis>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::InvalidInput("wave fields live on different bases".into()))
    }
}

type PotentialFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A real, time-independent potential on the closed disk.
#[derive(Clone)]
pub enum PotentialSpec {
    Zero,
    Constant(f64),
    /// `Σ_j c_j r^{2j}`.
    RadialPolynomial(Vec<f64>),
    /// `slope · x`.
    XLinear(f64),
    /// `amplitude · exp(-|z - center|² / (2 width²))`.
    GaussianBump { center: Vec2, width: f64, amplitude: f64 },
    Custom { name: String, radial: bool, f: Arc<PotentialFn> },
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Constant(c) => write!(f, "constant({c})"),
            Self::RadialPolynomial(c) => {
                let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                write!(f, "radial({})", parts.join(";"))
            }
            Self::XLinear(s) => write!(f, "xlinear({s})"),
            Self::GaussianBump { center, width, amplitude } => {
                write!(f, "bump({},{};{};{})", center.x, center.y, width, amplitude)
            }
            Self::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

impl PotentialSpec {
    pub fn custom(name: &str, radial: bool, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom { name: name.to_string(), radial, f: Arc::new(f) }
    }

    /// `V(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::RadialPolynomial(c) => {
                let r2 = x * x + y * y;
                c.iter().rev().fold(0.0, |acc, &cj| acc * r2 + cj)
            }
            Self::XLinear(s) => s * x,
            Self::GaussianBump { center, width, amplitude } => {
                let d2 = (x - center.x).powi(2) + (y - center.y).powi(2);
                amplitude * (-d2 / (2.0 * width * width)).exp()
            }
            Self::Custom { f, .. } => f(x, y),
        }
    }

    pub fn eval_polar(&self, r: f64, u: f64) -> f64 {
        self.eval(r * u.cos(), r * u.sin())
    }

    /// True when `V` depends on `|z|` only.
    pub fn is_radial(&self) -> bool {
        match self {
            Self::Zero | Self::Constant(_) | Self::RadialPolynomial(_) => true,
            Self::XLinear(s) => *s == 0.0,
            Self::GaussianBump { center, amplitude, .. } => *amplitude == 0.0 || center.norm() == 0.0,
            Self::Custom { radial, .. } => *radial,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant(c) | Self::XLinear(c) => *c == 0.0,
            Self::RadialPolynomial(c) => c.iter().all(|&v| v == 0.0),
            Self::GaussianBump { amplitude, .. } => *amplitude == 0.0,
            Self::Custom { .. } => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Zero => true,
            Self::Constant(c) | Self::XLinear(c) => c.is_finite(),
            Self::RadialPolynomial(c) => c.iter().all(|v| v.is_finite()),
            Self::GaussianBump { center, width, amplitude } => {
                center.iter().all(|v| v.is_finite()) && *width > 0.0 && amplitude.is_finite()
            }
            Self::Custom { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid potential {self}")))
        }
    }
}

/// Quadrature orders for matrix elements of `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Gauss–Legendre nodes in `r`.
    pub radial: usize,
    /// Trapezoid nodes in `u`.
    pub angular: usize,
    /// Re-assemble at doubled orders and require agreement to `tolerance`.
    pub check: bool,
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { radial: 256, angular: 512, check: true, tolerance: 1e-9 }
    }
}

/// Tensor grid `(r_i, u_j)` with Gauss–Legendre in `r` and the trapezoid
/// rule in `u`.
#[derive(Debug, Clone)]
pub struct PolarQuadrature {
    pub r: Vec<f64>,
    /// Weights for `∫ g(r) r dr`.
    pub r_weights: Vec<f64>,
    pub n_u: usize,
}

impl PolarQuadrature {
    pub fn new(n_r: usize, n_u: usize) -> Self {
        let gl = GaussLegendre::new(n_r);
        let (r, r_weights) = gl.on_interval(0.0, 1.0).map(|(x, w)| (x, w * x)).unzip();
        Self { r, r_weights, n_u }
    }

    pub fn u(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_u as f64
    }

    /// For each radial node, `F_d(r_i) = (1/N) Σ_j g(r_i, u_j) e^{-i d u_j}`
    /// for `|d| ≤ d_max`, stored at column `d + d_max`.
    pub fn angular_fourier(&self, d_max: usize, g: impl Fn(f64, f64) -> Complex64 + Sync) -> DMatrix<Complex64> {
        let n = self.n_u;
        let fft = FftPlanner::new().plan_fft_forward(n);
        let rows: Vec<Vec<Complex64>> = self
            .r
            .par_iter()
            .map(|&r| {
                let mut buf: Vec<Complex64> = (0..n).map(|j| g(r, self.u(j))).collect();
                fft.process(&mut buf);
                let scale = 1.0 / n as f64;
                (0..=2 * d_max)
                    .map(|c| {
                        let d = c as i64 - d_max as i64;
                        buf[d.rem_euclid(n as i64) as usize] * scale
                    })
                    .collect()
            })
            .collect();
        DMatrix::from_fn(self.r.len(), 2 * d_max + 1, |i, c| rows[i][c])
    }
}

/// `H = diag(α²/2) + M_V` on a basis.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub basis: Arc<Basis>,
    pub matrix: DMatrix<Complex64>,
    pub potential: PotentialSpec,
    /// Largest entry change between the two quadrature orders, when checked.
    pub quadrature_deviation: Option<f64>,
}

impl Hamiltonian {
    pub fn assemble(potential: &PotentialSpec, basis: Arc<Basis>, opts: &QuadratureOptions) -> Result<Self> {
        potential.validate()?;
        let mut deviation = None;
        let mv = match potential {
            _ if potential.is_zero() => DMatrix::zeros(basis.len(), basis.len()),
            PotentialSpec::Constant(c) => DMatrix::identity(basis.len(), basis.len()) * Complex64::new(*c, 0.0),
            _ => {
                let (n_r, n_u) = resolved_orders(&basis, opts.radial, opts.angular);
                let m = potential_matrix(potential, &basis, &PolarQuadrature::new(n_r, n_u));
                if opts.check {
                    let fine = potential_matrix(potential, &basis, &PolarQuadrature::new(2 * n_r, 2 * n_u));
                    let dev = (&fine - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    deviation = Some(dev);
                    if dev > opts.tolerance {
                        return Err(Error::QuadratureUnderResolved { deviation: dev });
                    }
                }
                m
            }
        };
        let mut matrix = mv;
        for (a, m) in basis.modes().iter().enumerate() {
            matrix[(a, a)] += 0.5 * m.eigenvalue;
        }
        Ok(Self { basis, matrix, potential: potential.clone(), quadrature_deviation: deviation })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `⟨u, H u⟩`.
    pub fn energy(&self, u: &WaveField) -> Result<f64> {
        same_basis(&self.basis, &u.basis)?;
        Ok(u.coeffs.dotc(&(&self.matrix * &u.coeffs)).re)
    }

    /// Connected components of the coupling graph of `H`; for radial `V`
    /// these are the signed-angular-number blocks.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for a in 0..n {
            for b in a + 1..n {
                if self.matrix[(a, b)] != Complex64::new(0.0, 0.0) {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for a in 0..n {
            let r = find(&mut parent, a);
            groups.entry(r).or_default().push(a);
        }
        let mut out: Vec<_> = groups.into_values().collect();
        out.sort_by_key(|g| g[0]);
        out
    }
}

/// Quadrature orders large enough for the basis' bandwidth.
fn resolved_orders(basis: &Basis, radial: usize, angular: usize) -> (usize, usize) {
    let n_r = radial.max((2.0 * basis.max_zero()).ceil() as usize + 64);
    let need_u = 4 * basis.max_angular() + 64;
    let n_u = angular.max(need_u.next_power_of_two());
    (n_r, n_u)
}

fn potential_matrix(v: &PotentialSpec, basis: &Basis, q: &PolarQuadrature) -> DMatrix<Complex64> {
    weighted_gram(basis.modes(), q, v.is_radial(), |r, u| v.eval_polar(r, u))
}

/// `(∫ conj(ψ_a) w ψ_b dz)_{ab}` over the given modes by tensor quadrature;
/// `radial` skips pairs with different angular numbers.
pub(crate) fn weighted_gram(
    modes: &[Eigenmode],
    q: &PolarQuadrature,
    radial: bool,
    w: impl Fn(f64, f64) -> f64 + Sync,
) -> DMatrix<Complex64> {
    let n = modes.len();
    let d_max = 2 * modes.iter().map(|m| m.n).max().unwrap_or(0);
    let fourier = q.angular_fourier(d_max, |r, u| Complex64::new(w(r, u), 0.0));
    let table = radial_table(modes, &q.r);
    // A_{a,i} = sqrt(2π w_i r_i) R_a(r_i); weights are positive.
    let scaled = DMatrix::from_fn(n, q.r.len(), |a, i| table[(a, i)] * (TAU * q.r_weights[i]).sqrt());
    let rows: Vec<Vec<(usize, Complex64)>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let ma = modes[a].angular();
            (a..n)
                .filter_map(|b| {
                    let d = ma - modes[b].angular();
                    if radial && d != 0 {
                        return None;
                    }
                    let col = (d + d_max as i64) as usize;
                    let s: Complex64 = (0..q.r.len())
                        .map(|i| fourier[(i, col)] * (scaled[(a, i)] * scaled[(b, i)]))
                        .sum();
                    Some((b, if radial { Complex64::new(s.re, 0.0) } else { s }))
                })
                .collect()
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (a, row) in rows.into_iter().enumerate() {
        for (b, v) in row {
            if a == b {
                m[(a, a)] = Complex64::new(v.re, 0.0);
            } else {
                m[(a, b)] = v;
                m[(b, a)] = v.conj();
            }
        }
    }
    m
}

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub(crate) indices: Vec<usize>,
    pub(crate) energies: Vec<f64>,
    pub(crate) vectors: DMatrix<Complex64>,
}

/// `exp(-i t H)` through a blockwise Hermitian eigendecomposition.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub hamiltonian: Hamiltonian,
    pub(crate) blocks: Vec<Block>,
}

impl Propagator {
    pub fn new(hamiltonian: Hamiltonian) -> Self {
        let blocks = hamiltonian
            .blocks()
            .into_par_iter()
            .map(|indices| {
                let k = indices.len();
                let sub = DMatrix::from_fn(k, k, |i, j| hamiltonian.matrix[(indices[i], indices[j])]);
                if k == 1 {
                    return Block { energies: vec![sub[(0, 0)].re], vectors: DMatrix::identity(1, 1), indices };
                }
                let eig = sub.symmetric_eigen();
                Block { energies: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors, indices }
            })
            .collect();
        Self { hamiltonian, blocks }
    }

    /// Assembles and diagonalizes in one step.
    pub fn build(potential: &PotentialSpec, basis: Arc<Basis>, opts: &QuadratureOptions) -> Result<Self> {
        Ok(Self::new(Hamiltonian::assemble(potential, basis, opts)?))
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.hamiltonian.basis
    }

    /// All eigenvalues of `H`, ascending.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.blocks.iter().flat_map(|b| b.energies.iter().copied()).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// `u(t) = exp(-i t H) u`; the result's time is `u.time + t`.
    pub fn propagate(&self, u: &WaveField, t: f64) -> Result<WaveField> {
        Ok(self.spectral(u)?.at(t))
    }

    /// Decomposes `u` once so that many times can be evaluated cheaply.
    pub fn spectral(&self, u: &WaveField) -> Result<SpectralState<'_>> {
        same_basis(self.basis(), &u.basis)?;
        let amplitudes = self
            .blocks
            .iter()
            .map(|b| {
                let local = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| u.coeffs[i]));
                b.vectors.ad_mul(&local)
            })
            .collect();
        Ok(SpectralState { prop: self, amplitudes, start: u.time })
    }
}

/// A state expanded in the eigenvectors of `H`.
#[derive(Debug, Clone)]
pub struct SpectralState<'a> {
    pub(crate) prop: &'a Propagator,
    pub(crate) amplitudes: Vec<DVector<Complex64>>,
    start: f64,
}

impl SpectralState<'_> {
    /// Flat indices reachable from the state: the union of the blocks in
    /// which it has nonzero amplitude, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .prop
            .blocks
            .iter()
            .zip(&self.amplitudes)
            .filter(|(_, a)| a.iter().any(|c| c.norm_sqr() > 0.0))
            .flat_map(|(b, _)| b.indices.iter().copied())
            .collect();
        s.sort_unstable();
        s
    }

    pub fn at(&self, t: f64) -> WaveField {
        let basis = self.prop.basis().clone();
        let mut coeffs = DVector::zeros(basis.len());
        for (b, amp) in self.prop.blocks.iter().zip(&self.amplitudes) {
            let phased = DVector::from_iterator(
                amp.len(),
                amp.iter().zip(&b.energies).map(|(a, &e)| a * Complex64::from_polar(1.0, -e * t)),
            );
            let local = &b.vectors * phased;
            for (k, &i) in b.indices.iter().enumerate() {
                coeffs[i] = local[k];
            }
        }
        WaveField { basis, coeffs, time: self.start + t }
    }
}

/// Radial values grouped by signed angular number: for each `r_i`, the map
/// `m ↦ Σ_{a: m_a = m} c_a R_a(r_i)`.
fn angular_profiles(u: &WaveField, r: &[f64]) -> (Vec<i64>, DMatrix<Complex64>) {
    let mut ms: Vec<i64> = u
        .basis
        .modes()
        .iter()
        .zip(u.coeffs.iter())
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(m, _)| m.angular())
        .collect();
    ms.sort_unstable();
    ms.dedup();
    let col: HashMap<i64, usize> = ms.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let rows: Vec<Vec<Complex64>> = r
        .par_iter()
        .map(|&ri| {
            let mut acc = vec![Complex64::new(0.0, 0.0); ms.len()];
            for (m, c) in u.basis.modes().iter().zip(u.coeffs.iter()) {
                if c.norm_sqr() > 0.0 {
                    acc[col[&m.angular()]] += c * m.normalized_radial(ri);
                }
            }
            acc
        })
        .collect();
    (ms.clone(), DMatrix::from_fn(r.len(), ms.len(), |i, j| rows[i][j]))
}

/// `u(r_i, u_j)` on a polar grid, row-major with one row per radius.
pub fn sample_grid(u: &WaveField, r_grid: &[f64], u_grid: &[f64]) -> Result<Vec<Complex64>> {
    if let Some(&r) = r_grid.iter().find(|&&r| !(0.0..=1.0 + 1e-12).contains(&r)) {
        return Err(Error::InvalidInput(format!("radius {r} outside the closed disk")));
    }
    let (ms, prof) = angular_profiles(u, r_grid);
    let phases = DMatrix::from_fn(ms.len(), u_grid.len(), |k, j| Complex64::from_polar(1.0, ms[k] as f64 * u_grid[j]));
    let values = prof * phases;
    Ok(values.transpose().as_slice().to_vec())
}

/// `u(x, y)` at Cartesian points; zero outside the disk.
pub fn sample_points(u: &WaveField, points: &[Vec2]) -> Vec<Complex64> {
    let modes = u.basis.modes();
    let active: Vec<(usize, Complex64)> = u
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(i, c)| (i, *c))
        .collect();
    points
        .par_iter()
        .map(|p| {
            let r = p.norm();
            if r > 1.0 {
                return Complex64::new(0.0, 0.0);
            }
            let theta = p.y.atan2(p.x);
            active.iter().map(|&(i, c)| c * modes[i].value(r, theta)).sum()
        })
        .collect()
}

/// Coefficients of `f` on `basis`: `c_a = ∫ conj(ψ_a) f dz`, with
/// Gauss–Legendre in `r` and an FFT in `u`.
pub fn project(
    basis: Arc<Basis>,
    quadrature: &PolarQuadrature,
    f: impl Fn(f64, f64) -> Complex64 + Sync,
) -> Result<WaveField> {
    let d_max = basis.max_angular();
    if quadrature.n_u < 2 * d_max + 2 {
        return Err(Error::GridTooCoarse(format!(
            "{} angular nodes for angular numbers up to {d_max}",
            quadrature.n_u
        )));
    }
    let fourier = quadrature.angular_fourier(d_max, |r, u| f(r * u.cos(), r * u.sin()));
    let table = basis.radial_table(&quadrature.r);
    let coeffs = DVector::from_iterator(
        basis.len(),
        basis.modes().iter().enumerate().map(|(a, m)| {
            let col = (m.angular() + d_max as i64) as usize;
            (0..quadrature.r.len())
                .map(|i| fourier[(i, col)] * (TAU * quadrature.r_weights[i] * table[(a, i)]))
                .sum::<Complex64>()
        }),
    );
    WaveField::new(basis, coeffs)
}

/// Share of the Neumann-trace majorant `Σ |c_a| |∂_r ψ_a(1)|` carried by the
/// modes with `α` in the top tenth of the basis.
pub fn trace_tail_fraction(u: &WaveField) -> f64 {
    let top = 0.9 * u.basis.max_zero();
    let (mut tail, mut total) = (0.0, 0.0);
    for (m, c) in u.basis.modes().iter().zip(u.coeffs.iter()) {
        let t = c.norm() * m.normal_derivative().abs();
        total += t;
        if m.zero > top {
            tail += t;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// `∂_r u` at `r = 1` on the boundary angles `u_grid`.
pub fn neumann_trace(u: &WaveField, u_grid: &[f64]) -> Result<Vec<Complex64>> {
    let tail_fraction = trace_tail_fraction(u);
    if tail_fraction > TRACE_TAIL_LIMIT {
        return Err(Error::TraceDiverging { tail_fraction });
    }
    let mut by_m: HashMap<i64, Complex64> = HashMap::new();
    for (m, c) in u.basis.modes().iter().zip(u.coeffs.iter()) {
        if c.norm_sqr() > 0.0 {
            *by_m.entry(m.angular()).or_default() += c * m.normal_derivative();
        }
    }
    let mut terms: Vec<(i64, Complex64)> = by_m.into_iter().collect();
    terms.sort_by_key(|t| t.0);
    Ok(u_grid
        .iter()
        .map(|&t| terms.iter().map(|&(m, a)| a * Complex64::from_polar(1.0, m as f64 * t)).sum())
        .collect())
}

/// `‖∂_n u‖²_{L²(∂D)} = 2π Σ_m |Σ_{m_a = m} c_a ∂_r R_a(1)|²`.
pub fn neumann_trace_norm_squared(u: &WaveField) -> f64 {
    let mut by_m: HashMap<i64, Complex64> = HashMap::new();
    for (m, c) in u.basis.modes().iter().zip(u.coeffs.iter()) {
        *by_m.entry(m.angular()).or_default() += c * m.normal_derivative();
    }
    TAU * by_m.values().map(|a| a.norm_sqr()).sum::<f64>()
}

/// Fraction of `‖V u‖²` that falls outside the span of the basis,
/// `1 - ‖P V u‖² / ‖V u‖²`.
pub fn truncation_loss(h: &Hamiltonian, u: &WaveField, quadrature: &PolarQuadrature) -> Result<f64> {
    same_basis(&h.basis, &u.basis)?;
    let mut mv = h.matrix.clone();
    for (a, m) in h.basis.modes().iter().enumerate() {
        mv[(a, a)] -= 0.5 * m.eigenvalue;
    }
    let projected = (&mv * &u.coeffs).norm_squared();
    let (ms, prof) = angular_profiles(u, &quadrature.r);
    let full: f64 = (0..quadrature.r.len())
        .into_par_iter()
        .map(|i| {
            let r = quadrature.r[i];
            let s: f64 = (0..quadrature.n_u)
                .map(|j| {
                    let t = quadrature.u(j);
                    let val: Complex64 = ms
                        .iter()
                        .enumerate()
                        .map(|(k, &m)| prof[(i, k)] * Complex64::from_polar(1.0, m as f64 * t))
                        .sum();
                    (h.potential.eval_polar(r, t) * val.norm()).powi(2)
                })
                .sum();
            quadrature.r_weights[i] * s * TAU / quadrature.n_u as f64
        })
        .sum();
    if full == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - projected / full).max(0.0))
}

/// Random state with `|c_a|` of order `(1 + α_a²)^{-decay/2}` and uniform
/// phases, normalized in L².
pub fn random_state(basis: Arc<Basis>, decay: f64, seed: u64) -> Result<WaveField> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let coeffs = DVector::from_iterator(
        basis.len(),
        basis.modes().iter().map(|m| {
            let amp: f64 = rng.random_range(0.5..1.5) * (1.0 + m.eigenvalue).powf(-0.5 * decay);
            Complex64::from_polar(amp, rng.random_range(0.0..TAU))
        }),
    );
    WaveField::new(basis, coeffs)?.normalized()
}

/// `(πh)^{-1/2} exp(-|z - z0|²/(2h) + i ξ0·(z - z0)/h)`, an L²(ℝ²)-normalized
/// coherent state.
pub fn coherent_state(z0: Vec2, xi0: Vec2, h: f64) -> impl Fn(f64, f64) -> Complex64 + Sync {
    let norm = (PI * h).powf(-0.5);
    move |x, y| {
        let (dx, dy) = (x - z0.x, y - z0.y);
        Complex64::from_polar(
            norm * (-(dx * dx + dy * dy) / (2.0 * h)).exp(),
            (xi0.x * dx + xi0.y * dy) / h,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_basis() -> Arc<Basis> {
        Arc::new(Basis::new(12.0).unwrap())
    }

    #[test]
    fn basis_is_sorted_and_closed() {
        let b = small_basis();
        assert!(b.modes().windows(2).all(|w| w[0].zero <= w[1].zero));
        for m in b.modes() {
            assert!(b.index_of(m.n, m.k, -m.sign).is_some());
        }
        // α_{0,1}, α_{1,1} ×2, α_{2,1} ×2, α_{0,2} ...
        assert_eq!(b.mode(0).n, 0);
        assert_eq!(b.mode(1).n, 1);
        assert!(b.max_zero() <= 12.0);
    }

    #[test]
    fn zero_and_constant_potentials() {
        let b = small_basis();
        let opts = QuadratureOptions::default();
        let h0 = Hamiltonian::assemble(&PotentialSpec::Zero, b.clone(), &opts).unwrap();
        let hc = Hamiltonian::assemble(&PotentialSpec::Constant(3.0), b.clone(), &opts).unwrap();
        for (a, m) in b.modes().iter().enumerate() {
            assert_eq!(h0.matrix[(a, a)].re, 0.5 * m.eigenvalue);
            assert_eq!(hc.matrix[(a, a)].re, 0.5 * m.eigenvalue + 3.0);
        }
        assert_eq!(h0.blocks().len(), b.len());
    }

    #[test]
    fn radial_potential_is_block_diagonal_and_orthonormality_holds() {
        let b = small_basis();
        // V = 1 + r² through quadrature; the constant part checks orthonormality.
        let v = PotentialSpec::custom("1+r^2", true, |x, y| 1.0 + x * x + y * y);
        let h = Hamiltonian::assemble(&v, b.clone(), &QuadratureOptions::default()).unwrap();
        let poly = PotentialSpec::RadialPolynomial(vec![1.0, 1.0]);
        let hp = Hamiltonian::assemble(&poly, b.clone(), &QuadratureOptions::default()).unwrap();
        assert!((&h.matrix - &hp.matrix).camax() < 1e-12);
        for a in 0..b.len() {
            for c in 0..b.len() {
                if b.mode(a).angular() != b.mode(c).angular() {
                    assert!(h.matrix[(a, c)].norm() < 1e-12);
                }
                assert!((h.matrix[(a, c)] - h.matrix[(c, a)].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_sampling_and_projection_agree() {
        let b = small_basis();
        let u = random_state(b.clone(), 0.0, 3).unwrap();
        let q = PolarQuadrature::new(64, 64);
        let back = project(b.clone(), &q, |x, y| {
            let r = (x * x + y * y).sqrt();
            u.value(r, y.atan2(x))
        })
        .unwrap();
        assert!((&back.coeffs - &u.coeffs).norm() < 1e-10);
        let grid = sample_grid(&u, &[1.0], &[0.0, 1.0, 2.0]).unwrap();
        assert!(grid.iter().all(|v| v.norm() < 1e-10));
    }

    #[test]
    fn neumann_trace_of_ground_state() {
        let b = small_basis();
        let u = WaveField::mode(b, 0, 1, 1).unwrap();
        let tr = neumann_trace(&u, &[0.0, 2.0]).unwrap();
        let m = Eigenmode::new(0, 1, 1).unwrap();
        let want = -m.zero * bessel::bessel_j(1, m.zero).unwrap() / m.l2norm;
        assert!((tr[0].re - want).abs() < 1e-12 && (tr[1] - tr[0]).norm() < 1e-12);
        assert!((neumann_trace_norm_squared(&u) - 2.0 * m.eigenvalue).abs() < 1e-9);
    }

    #[test]
    fn trace_of_rough_state_is_rejected() {
        let b = small_basis();
        let top = b.len() - 1;
        let mut u = WaveField::zero(b);
        u.coeffs[top] = Complex64::new(1.0, 0.0);
        assert!(matches!(neumann_trace(&u, &[0.0]), Err(Error::TraceDiverging { .. })));
    }

    #[test]
    fn under_resolved_quadrature_is_reported() {
        let b = small_basis();
        let v = PotentialSpec::GaussianBump { center: Vec2::new(0.3, 0.0), width: 0.01, amplitude: 1.0 };
        let opts = QuadratureOptions { radial: 8, angular: 8, ..Default::default() };
        let err = Hamiltonian::assemble(&v, b, &opts).unwrap_err();
        assert!(matches!(err, Error::QuadratureUnderResolved { .. }));
    }
}
