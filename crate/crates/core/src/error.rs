use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MuskatError {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("admissibility error: {0}")]
    Admissibility(String),

    /// The stepper produced a value that violates positivity (or the ε floor)
    /// or is not finite.
    #[error("invariant failure at t={t:.6e}: species {species} cell {cell} value {value:.6e} ({reason})")]
    Invariant {
        t: f64,
        species: char,
        cell: usize,
        value: f64,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, MuskatError>;
