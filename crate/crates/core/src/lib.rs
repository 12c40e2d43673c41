//! Multiscale first-order traffic toolkit.
//!
//! Follow-the-Leader (microscopic) and LWR (macroscopic) simulation on a single
//! road and on road networks, the operators that move between the two scales,
//! and the distances used to compare two traffic states at either scale.

// `!(x > 0.0)` guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod harness;
pub mod lwr;
pub mod metrics;
pub mod micro;
pub mod scale;
pub mod scenario_file;
pub mod transport;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("directed cycle through junction `{0}`")]
    Cycle(String),
    #[error("points lie in disconnected components")]
    Disconnected,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("CFL condition violated: dt*v_max/dx = {0} > {1}")]
    Cfl(f64, f64),
    #[error("transport problem: {0}")]
    Transport(String),
    #[error("scenario field `{field}`: {msg}")]
    Scenario { field: String, msg: String },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn scenario(field: &str, msg: impl Into<String>) -> Self {
        Error::Scenario {
            field: field.to_owned(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
