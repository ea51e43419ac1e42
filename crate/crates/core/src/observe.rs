//! Observability quotients.
//!
//! Interior: `∫₀^T ‖u(t)‖²_{L²(Ω)} dt / (T ‖u⁰‖²)`.
//! Boundary: `∫₀^T ‖∂_n u(t)‖²_{L²(Γ)} dt / ‖u⁰‖²_{H¹}` with
//! `‖u‖²_{H¹} = Σ (1 + α²) |c|²`.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bessel;
use crate::evolve::{
    self, coherent_state, project, Basis, PolarQuadrature, PotentialSpec, Propagator, QuadratureOptions,
    SpectralState, WaveField,
};
use crate::geometry::RationalAngle;
use crate::quad::GaussLegendre;
use crate::spectrum::Eigenmode;
use crate::twomicro::torus_point;
use crate::{Error, Result};

/// Fewest Simpson intervals in time.
pub const MIN_TIME_STEPS: usize = 64;
/// Most Simpson intervals in time; beyond this the spectral rule is used.
pub const MAX_TIME_STEPS: usize = 4096;

type MaskFn = dyn Fn(f64, f64) -> bool + Send + Sync;

/// Observation region in the disk.
#[derive(Clone)]
pub enum Region {
    /// `{r e^{iu} : r0 < r < r1, u ∈ (u0, u1)}` with `u1 - u0 ≤ 2π`.
    AnnularSector { r0: f64, r1: f64, u0: f64, u1: f64 },
    /// Indicator of `{(x, y) : f(x, y)}`, integrated on a polar grid.
    Mask { name: String, touches_boundary: bool, f: Arc<MaskFn> },
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AnnularSector { r0, r1, u0, u1 } => {
                if (u1 - u0 - TAU).abs() < 1e-15 {
                    write!(f, "{r0}<r<{r1}")
                } else {
                    write!(f, "{r0}<r<{r1};{u0}<u<{u1}")
                }
            }
            Self::Mask { name, .. } => write!(f, "mask({name})"),
        }
    }
}

impl Region {
    pub fn sector(r0: f64, r1: f64, u0: f64, u1: f64) -> Result<Self> {
        if !(0.0 <= r0 && r0 < r1 && r1 <= 1.0) {
            return Err(Error::InvalidInput(format!("radial interval ({r0}, {r1})")));
        }
        if !(u0 < u1 && u1 - u0 <= TAU + 1e-15) {
            return Err(Error::InvalidInput(format!("angular interval ({u0}, {u1})")));
        }
        Ok(Self::AnnularSector { r0, r1, u0, u1 })
    }

    pub fn annulus(r0: f64, r1: f64) -> Result<Self> {
        Self::sector(r0, r1, 0.0, TAU)
    }

    pub fn disk() -> Self {
        Self::AnnularSector { r0: 0.0, r1: 1.0, u0: 0.0, u1: TAU }
    }

    pub fn mask(name: &str, touches_boundary: bool, f: impl Fn(f64, f64) -> bool + Send + Sync + 'static) -> Self {
        Self::Mask { name: name.to_string(), touches_boundary, f: Arc::new(f) }
    }

    pub fn touches_boundary(&self) -> bool {
        match self {
            Self::AnnularSector { r1, .. } => *r1 >= 1.0,
            Self::Mask { touches_boundary, .. } => *touches_boundary,
        }
    }

    /// `(⟨ψ_a, 1_Ω ψ_b⟩)_{ab}` over `modes`.
    pub fn gram(&self, modes: &[Eigenmode]) -> DMatrix<Complex64> {
        match self {
            Self::AnnularSector { r0, r1, u0, u1 } => {
                let alpha_max = modes.iter().map(|m| m.zero).fold(0.0, f64::max);
                let gl = GaussLegendre::new(16);
                let panels = ((r1 - r0) * (alpha_max / 2.0 + 8.0)).ceil().max(1.0) as usize;
                let h = (r1 - r0) / panels as f64;
                let nodes: Vec<(f64, f64)> = (0..panels)
                    .flat_map(|p| {
                        let lo = r0 + p as f64 * h;
                        gl.on_interval(lo, lo + h).collect::<Vec<_>>()
                    })
                    .collect();
                let r: Vec<f64> = nodes.iter().map(|n| n.0).collect();
                let table = evolve::radial_table(modes, &r);
                let scaled = DMatrix::from_fn(modes.len(), r.len(), |a, i| table[(a, i)] * (nodes[i].1 * r[i]).sqrt());
                let radial = &scaled * scaled.transpose();
                let full = (u1 - u0 - TAU).abs() < 1e-15;
                DMatrix::from_fn(modes.len(), modes.len(), |a, b| {
                    let d = modes[b].angular() - modes[a].angular();
                    if full && d != 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        angular_factor(d, *u0, *u1) * radial[(a, b)]
                    }
                })
            }
            Self::Mask { f, .. } => {
                let alpha_max = modes.iter().map(|m| m.zero).fold(0.0, f64::max);
                let m_max = modes.iter().map(|m| m.n).max().unwrap_or(0);
                let n_r = 256.max((2.0 * alpha_max).ceil() as usize + 64);
                let n_u = 512.max((4 * m_max + 64).next_power_of_two());
                let q = PolarQuadrature::new(n_r, n_u);
                evolve::weighted_gram(modes, &q, false, |r, u| {
                    if f(r * u.cos(), r * u.sin()) {
                        1.0
                    } else {
                        0.0
                    }
                })
            }
        }
    }
}

/// `∫_{u0}^{u1} e^{idu} du`.
fn angular_factor(d: i64, u0: f64, u1: f64) -> Complex64 {
    if d == 0 {
        return Complex64::new(u1 - u0, 0.0);
    }
    let d = d as f64;
    (Complex64::from_polar(1.0, d * u1) - Complex64::from_polar(1.0, d * u0)) / Complex64::new(0.0, d)
}

/// Boundary arc `{e^{iu} : u0 < u < u1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryArc {
    pub u0: f64,
    pub u1: f64,
}

impl BoundaryArc {
    pub fn new(u0: f64, u1: f64) -> Result<Self> {
        if !(u0 < u1 && u1 - u0 <= TAU + 1e-15) {
            return Err(Error::InvalidInput(format!("arc ({u0}, {u1})")));
        }
        Ok(Self { u0, u1 })
    }

    pub fn circle() -> Self {
        Self { u0: 0.0, u1: TAU }
    }

    pub fn length(&self) -> f64 {
        self.u1 - self.u0
    }

    /// `(∫_Γ conj(∂_n ψ_a) ∂_n ψ_b)_{ab}`.
    pub fn gram(&self, modes: &[Eigenmode]) -> DMatrix<Complex64> {
        let full = (self.length() - TAU).abs() < 1e-15;
        DMatrix::from_fn(modes.len(), modes.len(), |a, b| {
            let d = modes[b].angular() - modes[a].angular();
            if full && d != 0 {
                return Complex64::new(0.0, 0.0);
            }
            angular_factor(d, self.u0, self.u1) * (modes[a].normal_derivative() * modes[b].normal_derivative())
        })
    }
}

impl fmt::Display for BoundaryArc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arc({};{})", self.u0, self.u1)
    }
}

/// How the time integral was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeRule {
    /// Composite Simpson with this many intervals.
    Simpson(usize),
    /// Closed-form integration of the phases `e^{-iλt}` of `H`.
    Spectral,
}

impl fmt::Display for TimeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Simpson(n) => write!(f, "simpson({n})"),
            Self::Spectral => write!(f, "spectral"),
        }
    }
}

/// `∫₀^T ⟨u(t), G u(t)⟩ dt` and its error indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeIntegral {
    pub value: f64,
    pub rule: TimeRule,
    /// `|S_N - S_{N/2}| / 15` for Simpson, zero for the spectral rule.
    pub richardson: f64,
}

/// Number of Simpson intervals: `max(64, ⌈8 T E²⌉)` rounded up to a multiple
/// of 4 so the half-resolution rule used for the Richardson estimate also
/// has an even panel count, or `None` when that exceeds [`MAX_TIME_STEPS`].
pub fn simpson_steps(t_final: f64, e_cut: f64) -> Option<usize> {
    let n = ((8.0 * t_final * e_cut * e_cut).ceil() as usize).max(MIN_TIME_STEPS);
    let n = n.div_ceil(4) * 4;
    (n <= MAX_TIME_STEPS).then_some(n)
}

fn simpson(values: &[f64], step: f64) -> f64 {
    let n = values.len() - 1;
    let mut s = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * step / 3.0
}

/// `(1/(iωT))(e^{iωT} - 1)`, the time average of `e^{iωt}` over `[0, T]`.
fn phase_average(omega: f64, t: f64) -> Complex64 {
    let x = omega * t;
    if x.abs() < 1e-4 {
        // 1 + ix/2 - x²/6 - ix³/24
        Complex64::new(1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0)
    } else {
        (Complex64::from_polar(1.0, x) - 1.0) / Complex64::new(0.0, x)
    }
}

/// `∫₀^T c(t)* G c(t) dt` on the support of the state, `g` indexed like
/// `support`.
pub fn time_integral(state: &SpectralState<'_>, support: &[usize], g: &DMatrix<Complex64>, t_final: f64) -> TimeIntegral {
    let basis = state.prop.basis();
    let e_top = support.iter().map(|&i| basis.mode(i).zero).fold(0.0, f64::max);
    let pos: std::collections::HashMap<usize, usize> = support.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let touched: Vec<usize> = (0..state.prop.blocks.len())
        .filter(|&b| state.amplitudes[b].iter().any(|c| c.norm_sqr() > 0.0))
        .collect();
    let n = support.len();

    // eigenvector matrix restricted to the support, columns aligned with rows
    let mut q = DMatrix::zeros(n, n);
    let mut lambda = vec![0.0; n];
    let mut d = DVector::zeros(n);
    let mut trivial = true;
    for &b in &touched {
        let block = &state.prop.blocks[b];
        let cols: Vec<usize> = block.indices.iter().map(|i| pos[i]).collect();
        trivial &= block.indices.len() == 1;
        for (k, &ck) in cols.iter().enumerate() {
            lambda[ck] = block.energies[k];
            d[ck] = state.amplitudes[b][k];
            for (i, &ri) in cols.iter().enumerate() {
                q[(ri, ck)] = block.vectors[(i, k)];
            }
        }
    }
    let quadratic = |t: f64| -> f64 {
        let c = &q * DVector::from_iterator(n, d.iter().zip(&lambda).map(|(a, &e)| a * Complex64::from_polar(1.0, -e * t)));
        c.dotc(&(g * &c)).re
    };

    match simpson_steps(t_final, e_top) {
        Some(steps) => {
            let h = t_final / steps as f64;
            let values: Vec<f64> = (0..=steps).into_par_iter().map(|k| quadratic(k as f64 * h)).collect();
            let fine = simpson(&values, h);
            let coarse_values: Vec<f64> = values.iter().step_by(2).copied().collect();
            let coarse = if steps >= 4 { simpson(&coarse_values, 2.0 * h) } else { fine };
            TimeIntegral { value: fine, rule: TimeRule::Simpson(steps), richardson: (fine - coarse).abs() / 15.0 }
        }
        None => {
            let gp = if trivial { g.clone() } else { q.adjoint() * g * &q };
            let mut total = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if d[j].norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..n {
                    if d[k].norm_sqr() == 0.0 || gp[(j, k)] == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    total += d[j].conj() * d[k] * gp[(j, k)] * phase_average(lambda[j] - lambda[k], t_final);
                }
            }
            TimeIntegral { value: total.re * t_final, rule: TimeRule::Spectral, richardson: 0.0 }
        }
    }
}

/// A quotient with the time rule that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quotient {
    pub value: f64,
    pub rule: TimeRule,
    /// Richardson estimate of the time-quadrature error, in quotient units.
    pub richardson: f64,
}

fn check_time(t_final: f64) -> Result<()> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidInput(format!("T = {t_final}")));
    }
    Ok(())
}

fn support_modes(state: &SpectralState<'_>) -> (Vec<usize>, Vec<Eigenmode>) {
    let support = state.support();
    let modes = support.iter().map(|&i| *state.prop.basis().mode(i)).collect();
    (support, modes)
}

/// `∫₀^T ‖U_V(t) u⁰‖²_{L²(Ω)} dt / (T ‖u⁰‖²)`.
pub fn interior_quotient(u0: &WaveField, prop: &Propagator, region: &Region, t_final: f64) -> Result<Quotient> {
    check_time(t_final)?;
    let norm2 = u0.norm().powi(2);
    if norm2 == 0.0 {
        return Err(Error::ZeroDatum);
    }
    let state = prop.spectral(u0)?;
    let (support, modes) = support_modes(&state);
    let g = region.gram(&modes);
    let ti = time_integral(&state, &support, &g, t_final);
    let scale = t_final * norm2;
    Ok(Quotient { value: ti.value / scale, rule: ti.rule, richardson: ti.richardson / scale })
}

/// `∫₀^T ‖∂_n U_V(t) u⁰‖²_{L²(Γ)} dt / ‖u⁰‖²_{H¹}`.
pub fn boundary_quotient(u0: &WaveField, prop: &Propagator, arc: &BoundaryArc, t_final: f64) -> Result<Quotient> {
    check_time(t_final)?;
    let h1 = u0.h1_norm_squared();
    if h1 == 0.0 {
        return Err(Error::ZeroDatum);
    }
    let tail_fraction = evolve::trace_tail_fraction(u0);
    if tail_fraction > evolve::TRACE_TAIL_LIMIT {
        return Err(Error::TraceDiverging { tail_fraction });
    }
    let state = prop.spectral(u0)?;
    let (support, modes) = support_modes(&state);
    let g = arc.gram(&modes);
    let ti = time_integral(&state, &support, &g, t_final);
    Ok(Quotient { value: ti.value / h1, rule: ti.rule, richardson: ti.richardson / h1 })
}

/// Interior region or boundary arc.
#[derive(Debug, Clone)]
pub enum Observation {
    Interior(Region),
    Boundary(BoundaryArc),
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Interior(r) => write!(f, "{r}"),
            Self::Boundary(a) => write!(f, "{a}"),
        }
    }
}

/// Families of initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `ψ⁺_{n,k}` with `α_{n,k} ≤ alpha_max`.
    Eigen { alpha_max: f64 },
    /// `ψ⁺_{n,1}` for the listed `n`.
    Whispering { ns: Vec<usize> },
    /// For `k = 1..=count`, the `ψ⁺_{n,k}` whose caustic radius `n/α_{n,k}`
    /// is closest to `gamma`.
    Caustic { gamma: f64, count: usize },
    /// Coherent states at scale `h` on the orbits of `𝓘_{α0}` (unit speed)
    /// through the angles `thetas`.
    Coherent { alpha0: RationalAngle, h: f64, thetas: Vec<f64> },
    /// `(ψ_a + ψ_b)/√2` for the `count` closest pairs of eigenvalues with
    /// different `n` and `α ≤ alpha_max`.
    Beats { alpha_max: f64, count: usize },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Eigen { alpha_max } => write!(f, "eigen:{alpha_max}"),
            Self::Whispering { ns } => {
                let s: Vec<String> = ns.iter().map(|n| n.to_string()).collect();
                write!(f, "whispering:{}", s.join(","))
            }
            Self::Caustic { gamma, count } => write!(f, "caustic:{gamma}:{count}"),
            Self::Coherent { alpha0, h, thetas } => write!(f, "coherent:{alpha0}:{h}:{}", thetas.len()),
            Self::Beats { alpha_max, count } => write!(f, "beats:{alpha_max}:{count}"),
        }
    }
}

/// One labelled initial datum.
#[derive(Debug, Clone)]
pub struct Datum {
    pub label: String,
    pub state: WaveField,
}

fn caustic_mode(gamma: f64, k: usize) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for n in 0..=bessel::N_MAX {
        let z = bessel::bessel_zero(n, k)?;
        let g = n as f64 / z;
        if best.is_none_or(|(bn, bz)| (g - gamma).abs() < (bn as f64 / bz - gamma).abs()) {
            best = Some((n, z));
        }
        if g > gamma {
            break;
        }
    }
    best.ok_or_else(|| Error::InvalidInput(format!("no caustic mode for γ = {gamma}")))
}

impl Family {
    /// Largest `α` the family's data need.
    fn required_cutoff(&self) -> Result<f64> {
        Ok(match self {
            Self::Eigen { alpha_max } | Self::Beats { alpha_max, .. } => *alpha_max,
            Self::Whispering { ns } => ns
                .iter()
                .map(|&n| bessel::bessel_zero(n, 1))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max),
            Self::Caustic { gamma, count } => (1..=*count)
                .map(|k| caustic_mode(*gamma, k).map(|m| m.1))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max),
            Self::Coherent { h, .. } => 1.0 / h + 8.0 / h.sqrt(),
        })
    }

    /// A basis whose top tenth lies above every mode the data use.
    pub fn basis(&self) -> Result<Basis> {
        Basis::new(self.required_cutoff()? * 1.15 + 1.0)
    }

    /// The family's data on `basis`, in a fixed order.
    pub fn data(&self, basis: &Arc<Basis>) -> Result<Vec<Datum>> {
        let mode = |n: usize, k: usize| -> Result<Datum> {
            Ok(Datum { label: format!("psi({n},{k})"), state: WaveField::mode(basis.clone(), n, k, 1)? })
        };
        match self {
            Self::Eigen { alpha_max } => basis
                .modes()
                .iter()
                .filter(|m| m.sign == 1 && m.zero <= *alpha_max)
                .map(|m| mode(m.n, m.k))
                .collect(),
            Self::Whispering { ns } => ns.iter().map(|&n| mode(n, 1)).collect(),
            Self::Caustic { gamma, count } => (1..=*count)
                .map(|k| caustic_mode(*gamma, k).and_then(|(n, _)| mode(n, k)))
                .collect(),
            Self::Coherent { alpha0, h, thetas } => {
                let n_r = (2.0 * basis.max_zero()).ceil() as usize + 64;
                let n_u = (4 * basis.max_angular() + 64).next_power_of_two();
                let q = PolarQuadrature::new(n_r, n_u);
                thetas
                    .iter()
                    .map(|&theta| {
                        let p = torus_point(*alpha0, 1.0, theta);
                        let state = project(basis.clone(), &q, coherent_state(p.z, p.xi, *h))?.normalized()?;
                        Ok(Datum { label: format!("coherent({alpha0};{h};{theta})"), state })
                    })
                    .collect()
            }
            Self::Beats { alpha_max, count } => {
                let modes: Vec<(usize, &Eigenmode)> = basis
                    .modes()
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| m.sign == 1 && m.zero <= *alpha_max)
                    .collect();
                let mut pairs = Vec::new();
                for (i, (a, ma)) in modes.iter().enumerate() {
                    for (b, mb) in &modes[i + 1..] {
                        if ma.n != mb.n {
                            pairs.push(((mb.zero * mb.zero - ma.zero * ma.zero).abs(), *a, *b));
                        }
                    }
                }
                pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
                pairs
                    .into_iter()
                    .take(*count)
                    .map(|(_, a, b)| {
                        let mut u = WaveField::zero(basis.clone());
                        u.coeffs[a] = Complex64::new(FRAC_1_SQRT_2, 0.0);
                        u.coeffs[b] = Complex64::new(FRAC_1_SQRT_2, 0.0);
                        let (ma, mb) = (basis.mode(a), basis.mode(b));
                        Ok(Datum { label: format!("beat({},{})+({},{})", ma.n, ma.k, mb.n, mb.k), state: u })
                    })
                    .collect()
            }
        }
    }
}

/// One `(datum, observation)` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub datum: String,
    pub observation: String,
    pub quotient: f64,
    pub rule: TimeRule,
    pub richardson: f64,
}

/// Quotients of a family against a list of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityReport {
    pub family: String,
    pub potential: String,
    pub t_final: f64,
    pub rows: Vec<ReportRow>,
    /// Minimum quotient per observation, in the order given.
    pub minima: Vec<(String, f64)>,
}

/// Evaluates every datum of `family` against every observation.
pub fn sweep(
    family: &Family,
    observations: &[Observation],
    t_final: f64,
    potential: &PotentialSpec,
    quadrature: &QuadratureOptions,
) -> Result<ObservabilityReport> {
    let mut report = ObservabilityReport {
        family: family.to_string(),
        potential: potential.to_string(),
        t_final,
        rows: Vec::new(),
        minima: Vec::new(),
    };
    if observations.is_empty() {
        return Ok(report);
    }
    check_time(t_final)?;
    let basis = Arc::new(family.basis()?);
    let prop = Propagator::build(potential, basis.clone(), quadrature)?;
    let data = family.data(&basis)?;
    if data.is_empty() {
        return Err(Error::InvalidInput(format!("family {family} is empty")));
    }
    let jobs: Vec<(usize, usize)> = (0..data.len())
        .flat_map(|d| (0..observations.len()).map(move |o| (d, o)))
        .collect();
    let quotients = jobs
        .par_iter()
        .map(|&(d, o)| match &observations[o] {
            Observation::Interior(r) => interior_quotient(&data[d].state, &prop, r, t_final),
            Observation::Boundary(a) => boundary_quotient(&data[d].state, &prop, a, t_final),
        })
        .collect::<Result<Vec<Quotient>>>()?;
    for (&(d, o), q) in jobs.iter().zip(&quotients) {
        report.rows.push(ReportRow {
            datum: data[d].label.clone(),
            observation: observations[o].to_string(),
            quotient: q.value,
            rule: q.rule,
            richardson: q.richardson,
        });
    }
    for (o, obs) in observations.iter().enumerate() {
        let min = jobs
            .iter()
            .zip(&quotients)
            .filter(|((_, oo), _)| *oo == o)
            .map(|(_, q)| q.value)
            .fold(f64::INFINITY, f64::min);
        report.minima.push((obs.to_string(), min));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(e_cut: f64) -> Propagator {
        let b = Arc::new(Basis::new(e_cut).unwrap());
        Propagator::build(&PotentialSpec::Zero, b, &QuadratureOptions::default()).unwrap()
    }

    #[test]
    fn full_disk_quotient_is_one() {
        let p = free(15.0);
        let u = evolve::random_state(p.basis().clone(), 1.0, 5).unwrap();
        let q = interior_quotient(&u, &p, &Region::disk(), 0.3).unwrap();
        assert!((q.value - 1.0).abs() < 1e-8, "{q:?}");
    }

    #[test]
    fn zero_datum_is_rejected() {
        let p = free(8.0);
        let u = WaveField::zero(p.basis().clone());
        assert_eq!(interior_quotient(&u, &p, &Region::disk(), 1.0), Err(Error::ZeroDatum));
        assert_eq!(boundary_quotient(&u, &p, &BoundaryArc::circle(), 1.0), Err(Error::ZeroDatum));
    }

    #[test]
    fn simpson_and_spectral_rules_agree() {
        let p = free(10.0);
        let u = evolve::random_state(p.basis().clone(), 0.0, 9).unwrap();
        let state = p.spectral(&u).unwrap();
        let support = state.support();
        let modes: Vec<Eigenmode> = support.iter().map(|&i| *p.basis().mode(i)).collect();
        let g = Region::sector(0.2, 0.7, 0.3, 2.0).unwrap().gram(&modes);
        // T small enough that Simpson is uncapped and well resolved
        let t = 0.05;
        let simpson = time_integral(&state, &support, &g, t);
        assert!(matches!(simpson.rule, TimeRule::Simpson(_)));
        let t_long = 200.0;
        let spectral = time_integral(&state, &support, &g, t_long);
        assert_eq!(spectral.rule, TimeRule::Spectral);
        // brute-force Simpson at a very fine step for the short window
        let n = 20000;
        let h = t / n as f64;
        let vals: Vec<f64> = (0..=n)
            .map(|k| {
                let c = state.at(k as f64 * h).coeffs;
                let c: DVector<Complex64> = DVector::from_iterator(support.len(), support.iter().map(|&i| c[i]));
                c.dotc(&(&g * &c)).re
            })
            .collect();
        assert!((simpson.value - super::simpson(&vals, h)).abs() < 1e-9);
    }

    #[test]
    fn single_mode_boundary_quotient_closed_form() {
        let p = free(20.0);
        let arc = BoundaryArc::new(0.4, 0.4 + std::f64::consts::FRAC_PI_8).unwrap();
        for (n, k) in [(0, 1), (3, 2), (7, 1)] {
            let u = WaveField::mode(p.basis().clone(), n, k, 1).unwrap();
            let a = p.basis().mode(p.basis().index_of(n, k, 1).unwrap()).zero;
            for t in [0.5, 3.0] {
                let q = boundary_quotient(&u, &p, &arc, t).unwrap();
                let want = arc.length() / TAU * 2.0 * a * a * t / (1.0 + a * a);
                assert!((q.value - want).abs() < 1e-8 * want, "{n},{k}: {} vs {want}", q.value);
            }
        }
    }

    #[test]
    fn sector_is_angular_fraction_of_annulus_for_single_modes() {
        let p = free(20.0);
        for (n, k) in [(0, 2), (5, 1)] {
            let u = WaveField::mode(p.basis().clone(), n, k, 1).unwrap();
            let ring = interior_quotient(&u, &p, &Region::annulus(0.3, 0.9).unwrap(), 1.0).unwrap();
            let sector = interior_quotient(&u, &p, &Region::sector(0.3, 0.9, 1.0, 2.5).unwrap(), 1.0).unwrap();
            assert!((sector.value - 1.5 / TAU * ring.value).abs() < 1e-10);
        }
    }

    #[test]
    fn mask_matches_sector() {
        let p = free(12.0);
        let u = evolve::random_state(p.basis().clone(), 1.0, 2).unwrap();
        let sector = interior_quotient(&u, &p, &Region::annulus(0.5, 1.0).unwrap(), 0.2).unwrap();
        let mask = interior_quotient(&u, &p, &Region::mask("r>0.5", true, |x, y| x * x + y * y > 0.25), 0.2).unwrap();
        // the polar grid resolves the radial jump to first order only
        assert!((sector.value - mask.value).abs() < 1e-2, "{} {}", sector.value, mask.value);
    }

    #[test]
    fn whispering_mode_misses_the_centre() {
        let p = free(75.0);
        let u = WaveField::mode(p.basis().clone(), 60, 1, 1).unwrap();
        let q = interior_quotient(&u, &p, &Region::annulus(0.0, 0.5).unwrap(), 1.0).unwrap();
        assert!(q.value < 1e-3, "{}", q.value);
    }

    #[test]
    fn empty_observation_list_gives_empty_report() {
        let r = sweep(&Family::Eigen { alpha_max: 5.0 }, &[], 1.0, &PotentialSpec::Zero, &QuadratureOptions::default())
            .unwrap();
        assert!(r.rows.is_empty() && r.minima.is_empty());
    }
}
