use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("multipole order {0} is out of range")]
    ModeOutOfRange(usize),

    #[error("no LSP resonance bracketed for multipole order {0}")]
    NoResonance(usize),

    #[error("vanishing self-coupling of emitter {emitter} to multipole order {order}")]
    VanishingCoupling { emitter: usize, order: usize },

    #[error("overlap matrix for order {order} is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { order: usize, eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rate matrix is not symmetric (entry ({0}, {1}))")]
    NotSymmetric(usize, usize),

    #[error("eigen solver did not converge: {0}")]
    NonConvergence(String),

    #[error("numerical invariant breached: {0}")]
    InvariantBreach(String),
}

pub type Result<T> = std::result::Result<T, Error>;
