/// Numerical tolerances shared across the library.
///
/// The defaults are the values every test and the CLI assume; a run
/// configuration may override any of them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Distance from the unit circle still treated as "on the boundary".
    pub geom: f64,
    /// Rays with `|J|/E > 1 - tangent` are treated as gliding.
    pub tangent: f64,
    /// Accuracy target for composed flows.
    pub flow: f64,
    /// Accuracy target for orbit quadratures.
    pub quad: f64,
    /// Absolute accuracy target for Bessel evaluation.
    pub bessel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            geom: 1e-12,
            tangent: 1e-9,
            flow: 1e-10,
            quad: 1e-8,
            bessel: 1e-12,
        }
    }
}

impl Tolerances {
    /// Name/value pairs, in a fixed order, for manifests.
    pub fn entries(&self) -> [(&'static str, f64); 5] {
        [
            ("tol_geom", self.geom),
            ("tol_tangent", self.tangent),
            ("tol_flow", self.flow),
            ("tol_quad", self.quad),
            ("tol_bessel", self.bessel),
        ]
    }

    pub fn validate(&self) -> crate::Result<()> {
        for (name, v) in self.entries() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}
