// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(
        "matrix is not Hermitian: anti-Hermitian residual {residual:.3e} exceeds {tolerance:.1e}"
    )]
    NotHermitian { residual: f64, tolerance: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{}", singular_message(*.time, *.condition, *.threshold))]
    SingularMap {
        time: Option<f64>,
        condition: f64,
        threshold: f64,
    },

    #[error("finite-difference stencil needs at least {needed} grid points, trajectory has {len}")]
    BoundaryStencil { needed: usize, len: usize },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("function undefined on the spectrum: {0}")]
    Domain(String),

    #[error("no inverse temperature matches energy {energy}: it must lie strictly inside ({lower}, {upper})")]
    NoMatchingBeta { energy: f64, lower: f64, upper: f64 },

    #[error("inverse temperature not bracketed in [{lo:e}, {hi:e}] for energy {energy}")]
    BetaBracket { lo: f64, hi: f64, energy: f64 },

    #[error("negative outcome probability {0:.3e}")]
    NegativeProbability(f64),

    #[error("thermal Fock truncation too small: tail weight {tail:.3e} at n_max = {n_max}, need n_max >= {required}")]
    Truncation {
        n_max: usize,
        tail: f64,
        required: usize,
    },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

fn singular_message(time: Option<f64>, condition: f64, threshold: f64) -> String {
    match time {
        Some(t) => format!(
            "dynamical map not invertible at t = {t}: condition number {condition:.3e} exceeds {threshold:.1e}"
        ),
        None => format!(
            "superoperator not invertible: condition number {condition:.3e} exceeds {threshold:.1e}"
        ),
    }
}

impl Error {
    /// Attach a time label to a `SingularMap` error that has none.
    pub fn at_time(self, t: f64) -> Self {
        match self {
            Error::SingularMap {
                time: None,
                condition,
                threshold,
            } => Error::SingularMap {
                time: Some(t),
                condition,
                threshold,
            },
            other => other,
        }
    }

    /// True for failures caused by the numerics (singular maps, truncation),
    /// as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularMap { .. }
                | Error::Truncation { .. }
                | Error::NegativeProbability(_)
                | Error::BetaBracket { .. }
                | Error::NoMatchingBeta { .. }
                | Error::InvalidGenerator(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
