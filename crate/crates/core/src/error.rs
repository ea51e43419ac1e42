use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point is not on the unit circle (|z| = {radius})")]
    NotOnBoundary { radius: f64 },
    #[error("momentum vanishes")]
    ZeroMomentum,
    #[error("trajectory is tangent to the boundary (|J|/E = {ratio})")]
    GlidingRay { ratio: f64 },
    #[error("momentum is not pointing outwards (z·ξ = {dot})")]
    NotOutgoing { dot: f64 },
    #[error("torus degenerates onto the boundary (|J|/E = {ratio})")]
    DegenerateTorus { ratio: f64 },
    #[error("argument out of supported range: {0}")]
    OutOfRange(String),
    #[error("Bessel orders must differ (got n = m = {0})")]
    SameOrder(usize),
    #[error("caustic radius {gamma} is too close to the boundary")]
    CausticTooClose { gamma: f64 },
    #[error("quadrature self-convergence failed (max deviation {deviation:e})")]
    QuadratureUnderResolved { deviation: f64 },
    #[error("Neumann trace series does not settle (tail fraction {tail_fraction})")]
    TraceDiverging { tail_fraction: f64 },
    #[error("grid does not resolve the semiclassical scale: {0}")]
    GridTooCoarse(String),
    #[error("spectral tail mass {tail:e} exceeds the aliasing threshold")]
    AliasingDetected { tail: f64 },
    #[error("Fourier cutoff too small: tail mass {tail:e}")]
    CutoffTooSmall { tail: f64 },
    #[error("initial datum has zero norm")]
    ZeroDatum,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
