use thiserror::Error;

use crate::mapping::Method;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("adiabatic gap vanishes at x = {x} (V_z = {v_z:e})")]
    DegenerateGap { x: f64, v_z: f64 },

    #[error("mapping variables have zero norm")]
    ZeroNorm,

    #[error("quadrature did not converge: {what} (error estimate {estimate:e}, tolerance {tolerance:e})")]
    QuadratureNotConverged {
        what: &'static str,
        estimate: f64,
        tolerance: f64,
    },

    #[error("method {0} is not supported here")]
    UnsupportedMethod(Method),

    #[error("{0}: no finite limit factor, method is exact by construction")]
    NotApplicable(Method),

    #[error("{method} is unstable on this model: alpha * r_max = {alpha_r_max} >= 1 (inverted potential)")]
    InvertedPotential { method: Method, alpha_r_max: f64 },

    #[error("hop attempted but active surface already matches sgn(S_z)")]
    InconsistentState,

    #[error("every trajectory diverged before t = {t}")]
    AllDiverged { t: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
