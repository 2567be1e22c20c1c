use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Problem parameters for the defect NLS on the normalized strip.
///
/// `l_width` is the physical strip width; after rescaling to [0, 1] it enters
/// the functionals only through the 1/L^2 transverse weight. `mass` is the
/// target mass for energy (fixed-mass) problems and is ignored by the
/// action/Nehari problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub p: f64,
    pub gamma: f64,
    pub omega: f64,
    pub l_width: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
}

fn default_mass() -> f64 {
    1.0
}

impl ProblemParams {
    pub fn new(p: f64, gamma: f64, omega: f64, l_width: f64, mass: f64) -> ProblemParams {
        ProblemParams { p, gamma, omega, l_width, mass }
    }

    /// Frequency admissibility: omega > gamma^2/4 when gamma < 0, omega > 0 otherwise.
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) {
            return Err(Error::InadmissibleParams(format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.l_width > 0.0) {
            return Err(Error::InadmissibleParams(format!(
                "l_width must be positive, got {}",
                self.l_width
            )));
        }
        check_omega_admissible(self.omega, self.gamma)?;
        Ok(())
    }

    /// Extra constraints for fixed-mass energy minimization.
    pub fn validate_energy_mode(&self) -> Result<()> {
        self.validate()?;
        if !(self.p < 3.0) {
            return Err(Error::InadmissibleParams(format!(
                "energy minimization requires 1 < p < 3, got p = {}",
                self.p
            )));
        }
        if !(self.mass > 0.0) {
            return Err(Error::InadmissibleParams(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        Ok(())
    }

    /// Transverse weight of the rescaled functionals.
    #[inline]
    pub fn y_weight(&self) -> f64 {
        1.0 / (self.l_width * self.l_width)
    }
}

/// omega > gamma^2/4 for gamma < 0; omega > 0 for gamma >= 0.
pub fn check_omega_admissible(omega: f64, gamma: f64) -> Result<()> {
    if gamma < 0.0 {
        if !(omega > gamma * gamma / 4.0) {
            return Err(Error::InadmissibleParams(format!(
                "omega <= gamma^2/4 with gamma < 0 (omega = {omega}, gamma = {gamma})"
            )));
        }
    } else if !(omega > 0.0) {
        return Err(Error::InadmissibleParams(format!(
            "omega must be positive for gamma >= 0 (omega = {omega}, gamma = {gamma})"
        )));
    }
    Ok(())
}
