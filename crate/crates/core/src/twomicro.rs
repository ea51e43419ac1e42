//! One-dimensional dynamics on a rational-angle torus `𝓘_{α0}`.
//!
//! On the Floquet space `ℋ_ω = {v : v(θ + 2π) = e^{iω} v(θ)}` the state
//! solves `cos²α0 ∂_t v = -i (-½∂²_θ + cos²α0 ⟨V⟩_{α0}) v`, so that
//! `v(t) = exp(-i t H_ω / cos²α0) v(0)`. The basis is
//! `e_m(θ) = (2π)^{-1/2} e^{i(m + ω/2π)θ}`, `|m| ≤ M`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::evolve::PotentialSpec;
use crate::geometry::{from_action_angle, ActionAngle, Billiard, RationalAngle};
use crate::{Error, PhasePoint, Result};

/// Gauss–Legendre nodes per chord in orbit averages.
pub const NODES_PER_CHORD: usize = 24;

/// Outer fraction of the Fourier window whose mass must be negligible.
const TAIL_BAND: f64 = 0.1;

/// A function of `θ` on `𝓘_{α0}` at speed `energy`, obtained by averaging a
/// phase-space function along the closed orbits of `φ_{α0}`. Samples are on
/// the uniform grid `θ_j = 2πj/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedPotential {
    pub alpha0: RationalAngle,
    pub energy: f64,
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
}

impl AveragedPotential {
    /// `(1/2π) ∫ f(θ) e^{-idθ} dθ` by the trapezoid rule.
    pub fn fourier(&self, d: i64) -> Complex64 {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .zip(&self.thetas)
            .map(|(&v, &t)| Complex64::from_polar(v, -(d as f64) * t))
            .sum::<Complex64>()
            / n
    }

    /// Matrix of multiplication by the function on the Floquet basis,
    /// `(W)_{mm'} = f̂_{m - m'}`; independent of `ω`.
    pub fn multiplication_matrix(&self, cutoff: usize) -> DMatrix<Complex64> {
        let dim = 2 * cutoff + 1;
        let coeffs: Vec<Complex64> = (0..2 * dim - 1).map(|i| self.fourier(i as i64 - (dim as i64 - 1))).collect();
        DMatrix::from_fn(dim, dim, |i, j| coeffs[i + dim - 1 - j])
    }

    /// Largest deviation from the mean.
    pub fn oscillation(&self) -> f64 {
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        self.values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
    }
}

/// Start of the orbit labelled `θ` on `𝓘_{α0}` at speed `energy`.
pub fn torus_point(alpha0: RationalAngle, energy: f64, theta: f64) -> PhasePoint {
    from_action_angle(&ActionAngle::new(0.0, theta, energy, -energy * alpha0.value().sin()))
}

/// `⟨a⟩_{α0}(θ)`: exact one-period average of `a` along the orbit of `φ_{α0}`
/// through [`torus_point`], on `n_theta` equally spaced angles.
pub fn averaged_symbol<F>(
    a: F,
    alpha0: RationalAngle,
    energy: f64,
    n_theta: usize,
    billiard: &Billiard,
) -> Result<AveragedPotential>
where
    F: Fn(&PhasePoint) -> f64 + Sync,
{
    if !(energy > 0.0) {
        return Err(Error::InvalidInput(format!("energy {energy}")));
    }
    if n_theta == 0 {
        return Err(Error::InvalidInput("empty θ grid".into()));
    }
    let thetas: Vec<f64> = (0..n_theta).map(|j| TAU * j as f64 / n_theta as f64).collect();
    let values = thetas
        .par_iter()
        .map(|&t| billiard.orbit_average(&a, &torus_point(alpha0, energy, t), alpha0, NODES_PER_CHORD))
        .collect::<Result<Vec<f64>>>()?;
    Ok(AveragedPotential { alpha0, energy, thetas, values })
}

/// `⟨V⟩_{α0}` on `𝓘_{α0}` at `E = 1`.
pub fn averaged_potential(
    v: &PotentialSpec,
    alpha0: RationalAngle,
    n_theta: usize,
    billiard: &Billiard,
) -> Result<AveragedPotential> {
    v.validate()?;
    if let PotentialSpec::Constant(c) = v {
        let thetas: Vec<f64> = (0..n_theta).map(|j| TAU * j as f64 / n_theta as f64).collect();
        return Ok(AveragedPotential { alpha0, energy: 1.0, values: vec![*c; n_theta], thetas });
    }
    averaged_symbol(|p: &PhasePoint| v.eval(p.z.x, p.z.y), alpha0, 1.0, n_theta, billiard)
}

/// `H_ω = -½∂²_θ + cos²α0 ⟨V⟩_{α0}` on the truncated Floquet basis, with its
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct FloquetOperator {
    pub alpha0: RationalAngle,
    pub omega: f64,
    pub cutoff: usize,
    pub matrix: DMatrix<Complex64>,
    energies: Vec<f64>,
    vectors: Option<DMatrix<Complex64>>,
}

impl FloquetOperator {
    pub fn new(potential: &AveragedPotential, omega: f64, cutoff: usize) -> Result<Self> {
        let alpha0 = potential.alpha0;
        let c2 = alpha0.value().cos().powi(2);
        if c2 < 1e-12 {
            return Err(Error::InvalidInput(format!("cos²α0 vanishes for α0 = π·{alpha0}")));
        }
        if potential.values.len() < 4 * cutoff + 1 {
            return Err(Error::GridTooCoarse(format!(
                "{} θ samples for Fourier cutoff {cutoff}",
                potential.values.len()
            )));
        }
        let mut matrix = potential.multiplication_matrix(cutoff) * Complex64::new(c2, 0.0);
        for i in 0..2 * cutoff + 1 {
            let k = i as f64 - cutoff as f64 + omega / TAU;
            matrix[(i, i)] = Complex64::new(matrix[(i, i)].re + 0.5 * k * k, 0.0);
        }
        Ok(Self::from_matrix(alpha0, omega, cutoff, matrix))
    }

    fn from_matrix(alpha0: RationalAngle, omega: f64, cutoff: usize, matrix: DMatrix<Complex64>) -> Self {
        let dim = matrix.nrows();
        let diagonal = (0..dim).all(|i| (0..dim).all(|j| i == j || matrix[(i, j)] == Complex64::new(0.0, 0.0)));
        let (energies, vectors) = if diagonal {
            ((0..dim).map(|i| matrix[(i, i)].re).collect(), None)
        } else {
            let eig = matrix.clone().symmetric_eigen();
            (eig.eigenvalues.iter().copied().collect(), Some(eig.eigenvectors))
        };
        Self { alpha0, omega, cutoff, matrix, energies, vectors }
    }

    pub fn dim(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Frequency `m + ω/2π` of basis vector `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        i as f64 - self.cutoff as f64 + self.omega / TAU
    }

    /// Basis index of the Fourier number `m`.
    pub fn index_of(&self, m: i64) -> Option<usize> {
        let i = m + self.cutoff as i64;
        (0..self.dim() as i64).contains(&i).then_some(i as usize)
    }

    fn time_scale(&self) -> f64 {
        1.0 / self.alpha0.value().cos().powi(2)
    }

    /// `U(t) = exp(-i t H_ω / cos²α0)`.
    pub fn unitary(&self, t: f64) -> DMatrix<Complex64> {
        let s = t * self.time_scale();
        let phases: Vec<Complex64> = self.energies.iter().map(|&e| Complex64::from_polar(1.0, -e * s)).collect();
        match &self.vectors {
            None => DMatrix::from_fn(self.dim(), self.dim(), |i, j| if i == j { phases[i] } else { Complex64::new(0.0, 0.0) }),
            Some(q) => {
                let mut scaled = q.clone();
                for (j, p) in phases.iter().enumerate() {
                    for i in 0..self.dim() {
                        scaled[(i, j)] *= p;
                    }
                }
                scaled * q.adjoint()
            }
        }
    }

    /// `U*(t) A U(t)`.
    pub fn heisenberg(&self, a: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
        let u = self.unitary(t);
        u.adjoint() * a * u
    }
}

/// Mass of `v` in the outer band of the Fourier window, relative to `‖v‖²`.
pub fn fourier_tail(v: &DVector<Complex64>, cutoff: usize) -> f64 {
    let band = ((TAIL_BAND * cutoff as f64).ceil() as usize).max(1);
    let total = v.norm_squared();
    if total == 0.0 {
        return 0.0;
    }
    let dim = v.len();
    let tail: f64 = (0..dim)
        .filter(|&i| i < band || i >= dim - band)
        .map(|i| v[i].norm_sqr())
        .sum();
    tail / total
}

/// `v(t) = exp(-i t H_ω / cos²α0) v`.
pub fn floquet_propagate(v: &DVector<Complex64>, t: f64, op: &FloquetOperator) -> Result<DVector<Complex64>> {
    if v.len() != op.dim() {
        return Err(Error::InvalidInput(format!("state of length {} for dimension {}", v.len(), op.dim())));
    }
    let tail = fourier_tail(v, op.cutoff);
    if tail > 1e-10 {
        return Err(Error::CutoffTooSmall { tail });
    }
    let s = t * op.time_scale();
    Ok(match &op.vectors {
        None => DVector::from_iterator(
            v.len(),
            v.iter().zip(&op.energies).map(|(c, &e)| c * Complex64::from_polar(1.0, -e * s)),
        ),
        Some(q) => {
            let mut amp = q.ad_mul(v);
            for (a, &e) in amp.iter_mut().zip(&op.energies) {
                *a *= Complex64::from_polar(1.0, -e * s);
            }
            q * amp
        }
    })
}

/// A nonnegative Hermitian matrix on the truncated Floquet space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermitian symmetry and `λ_min ≥ -1e-12`.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidInput("density matrix must be square".into()));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let asym = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput(format!("not Hermitian (asymmetry {asym:e})")));
        }
        let d = Self { matrix };
        if let Some(&min) = d.eigenvalues().first() {
            if min < -1e-12 {
                return Err(Error::InvalidInput(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(d)
    }

    /// `|v⟩⟨v|`.
    pub fn pure(v: &DVector<Complex64>) -> Self {
        Self { matrix: v * v.adjoint() }
    }

    /// `Σ p_i |v_i⟩⟨v_i|`; the weights must be nonnegative.
    pub fn mixture(states: &[(f64, DVector<Complex64>)]) -> Result<Self> {
        let dim = states.first().map_or(0, |s| s.1.len());
        let mut m = DMatrix::zeros(dim, dim);
        for (p, v) in states {
            if !(*p >= 0.0) || v.len() != dim {
                return Err(Error::InvalidInput("mixture weights must be nonnegative".into()));
            }
            m += v * v.adjoint() * Complex64::new(*p, 0.0);
        }
        Self::new(m)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// `σ(t) = U(t) σ U*(t)`, evaluated in the eigenbasis of `H_ω` as
/// `σ'_{ij} e^{-i(λ_i - λ_j)t/cos²α0}` so that commuting parts are untouched.
pub fn propagate_density(s0: &DensityMatrix, t: f64, op: &FloquetOperator) -> Result<DensityMatrix> {
    if s0.matrix.nrows() != op.dim() {
        return Err(Error::InvalidInput("density matrix dimension mismatch".into()));
    }
    let s = t * op.time_scale();
    let rotate = |m: &DMatrix<Complex64>| {
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                m[(i, j)] * Complex64::from_polar(1.0, -(op.energies[i] - op.energies[j]) * s)
            }
        })
    };
    let matrix = match &op.vectors {
        None => rotate(&s0.matrix),
        Some(q) => q * rotate(&(q.adjoint() * &s0.matrix * q)) * q.adjoint(),
    };
    Ok(DensityMatrix { matrix })
}

/// `Tr(m_{⟨a⟩_{α0}} σ)` with `⟨a⟩_{α0}` taken on `𝓘_{α0}` at speed `energy`.
pub fn nu_functional<F>(
    s: &DensityMatrix,
    a: F,
    alpha0: RationalAngle,
    energy: f64,
    n_theta: usize,
    billiard: &Billiard,
) -> Result<f64>
where
    F: Fn(&PhasePoint) -> f64 + Sync,
{
    let dim = s.matrix.nrows();
    if dim % 2 == 0 {
        return Err(Error::InvalidInput("Floquet dimension must be odd".into()));
    }
    let cutoff = dim / 2;
    if n_theta < 4 * cutoff + 1 {
        return Err(Error::GridTooCoarse(format!("{n_theta} θ samples for Fourier cutoff {cutoff}")));
    }
    let avg = averaged_symbol(a, alpha0, energy, n_theta, billiard)?;
    Ok(pairing(&avg.multiplication_matrix(cutoff), s))
}

/// `Tr(A σ)`.
pub fn pairing(a: &DMatrix<Complex64>, s: &DensityMatrix) -> f64 {
    (a * &s.matrix).trace().re
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sixth() -> RationalAngle {
        RationalAngle::new(1, 6).unwrap()
    }

    #[test]
    fn constant_potential_averages_to_itself() {
        let b = Billiard::default();
        let v = PotentialSpec::custom("c", true, |_, _| 2.5);
        let avg = averaged_potential(&v, sixth(), 16, &b).unwrap();
        assert!(avg.values.iter().all(|x| (x - 2.5).abs() < 1e-12));
        let zero = averaged_potential(&PotentialSpec::Zero, sixth(), 8, &b).unwrap();
        assert!(zero.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn free_operator_is_diagonal() {
        let b = Billiard::default();
        let zero = averaged_potential(&PotentialSpec::Zero, sixth(), 64, &b).unwrap();
        let op = FloquetOperator::new(&zero, 0.7, 5).unwrap();
        for i in 0..op.dim() {
            let k = op.frequency(i);
            assert_eq!(op.matrix[(i, i)].re, 0.5 * k * k);
        }
        assert!(op.vectors.is_none());
    }

    #[test]
    fn constant_mode_is_stationary_without_potential() {
        let b = Billiard::default();
        let zero = averaged_potential(&PotentialSpec::Zero, sixth(), 64, &b).unwrap();
        let op = FloquetOperator::new(&zero, 0.0, 8).unwrap();
        let mut v = DVector::zeros(op.dim());
        v[op.index_of(0).unwrap()] = Complex64::new(1.0, 0.0);
        let w = floquet_propagate(&v, 3.7, &op).unwrap();
        assert_eq!(w, v);
    }

    #[test]
    fn wide_states_are_rejected() {
        let b = Billiard::default();
        let zero = averaged_potential(&PotentialSpec::Zero, sixth(), 64, &b).unwrap();
        let op = FloquetOperator::new(&zero, 0.0, 8).unwrap();
        let v = DVector::from_element(op.dim(), Complex64::new(1.0, 0.0));
        assert!(matches!(floquet_propagate(&v, 1.0, &op), Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn tangent_angle_has_no_floquet_dynamics() {
        let b = Billiard::default();
        let half = RationalAngle::new(1, 2).unwrap();
        let zero = averaged_potential(&PotentialSpec::Zero, half, 16, &b).unwrap();
        assert!(FloquetOperator::new(&zero, 0.0, 2).is_err());
    }
}
