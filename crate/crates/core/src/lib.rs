//! Semiclassical toolkit for the Schrödinger equation on the unit disk.
//!
//! The crate covers the integrable billiard of the disk ([`geometry`]),
//! the Dirichlet spectrum ([`spectrum`], [`bessel`]), the Galerkin
//! propagator ([`evolve`]), phase-space measures ([`phase`]), the effective
//! one-dimensional dynamics on rational-angle tori ([`twomicro`]) and an
//! observability harness ([`observe`]).

pub mod bessel;
pub mod error;
pub mod evolve;
pub mod geometry;
pub mod observe;
pub mod phase;
pub mod quad;
pub mod spectrum;
pub mod tolerance;
pub mod twomicro;

pub use error::{Error, Result};
pub use geometry::{
    classify_angle, from_action_angle, reflect, to_action_angle, ActionAngle, AngleClass, Billiard,
    InvariantTorus, Orientation, PhasePoint, RationalAngle, Vec2,
};
pub use evolve::{Basis, Hamiltonian, PotentialSpec, Propagator, QuadratureOptions, WaveField};
pub use observe::{BoundaryArc, Family, ObservabilityReport, Observation, Region};
pub use phase::{HusimiGrid, HusimiSpec, MomentAtom, PhaseMeasure};
pub use spectrum::Eigenmode;
pub use tolerance::Tolerances;
pub use twomicro::{DensityMatrix, FloquetOperator};
