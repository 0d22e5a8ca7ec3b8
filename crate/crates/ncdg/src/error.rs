//! Error type shared across the solver.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("point ({x:.12e}, {y:.12e}) is not inside element {elem}")]
    PointNotInElement { elem: usize, x: f64, y: f64 },

    #[error(
        "coupling map: quadrature point ({x:.12e}, {y:.12e}) of NCI face {face} \
         was not found in any secondary element"
    )]
    UnboundQuadPoint { face: usize, x: f64, y: f64 },

    #[error("coupling map: {0}")]
    CouplingMap(String),

    #[error("non-finite value in element {elem} at step {step} (t = {t:.6e})")]
    NonFinite { elem: usize, step: usize, t: f64 },

    #[error("numerical blow-up at t = {t:.6e} (step {step}): {detail}")]
    BlowUp { t: f64, step: usize, detail: String },

    #[error("diagnostics: {0}")]
    Diagnostics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
