use thiserror::Error;

use crate::weakvalue::Regime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("kinetic energy {energy} lies in the forbidden band |E| < m = {mass}")]
    ForbiddenBand { energy: f64, mass: f64 },

    #[error("inconsistent dispersion triple: E = {energy}, p = {momentum}, m = {mass}")]
    InconsistentDispersion {
        energy: f64,
        momentum: f64,
        mass: f64,
    },

    #[error("spinor is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("pre- and post-selected states are orthogonal (|overlap| = {overlap:e})")]
    OrthogonalPostSelection { overlap: f64 },

    #[error("parameters (E_f = {e_f}, V0 = {v0}, m = {mass}) are in regime {actual:?}, not {requested:?}")]
    RegimeMismatch {
        e_f: f64,
        v0: f64,
        mass: f64,
        requested: Regime,
        actual: Regime,
    },

    #[error("no transmission channel in regime {0:?}")]
    NoTransmission(Regime),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("series order {0} is not supported (maximum 3)")]
    UnsupportedOrder(usize),

    #[error("quadrature did not converge after {evaluations} evaluations (error estimate {error_estimate:e})")]
    NonConvergence {
        evaluations: usize,
        error_estimate: f64,
    },

    #[error("packet does not fit the grid: {0}")]
    PacketOutOfGrid(String),

    #[error("packet still interacting at t_max (interaction-region norm {residual:e})")]
    StillInteracting { residual: f64 },

    #[error("t_max = {t_max} ends before the packet centre reaches the potential (needs at least {arrival})")]
    NotArrived { t_max: f64, arrival: f64 },

    #[error("packet failed to traverse the ramp (transmitted norm {transmitted:e})")]
    NoTraversal { transmitted: f64 },

    #[error("plane x = {0} lies outside the grid interior")]
    PlaneOutOfGrid(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
