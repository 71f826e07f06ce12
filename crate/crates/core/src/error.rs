//! Error type shared across the simulator.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, SimError>;

/// All failure modes surfaced by the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    /// A physical parameter is outside its admissible range.
    #[error("invalid parameter {name}: {reason} (got {value})")]
    InvalidParam {
        name: &'static str,
        reason: &'static str,
        value: f64,
    },

    /// A shape definition cannot be realized.
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    /// The grid resolution is below the supported minimum.
    #[error("grid too small: {got} cells per side, need at least {min}")]
    GridTooSmall { min: usize, got: usize },

    /// The zero level set reaches into the outer padding band of the grid.
    #[error(
        "particle {particle} touches the grid margin: interface within {got} \
         cells of the boundary, need {required}"
    )]
    PaddingViolation {
        particle: usize,
        got: usize,
        required: usize,
    },

    /// A time step would violate the advection stability bound.
    #[error("time step {dt} exceeds stability bound {max_dt} (max |v| = {max_speed})")]
    CflViolation { dt: f64, max_dt: f64, max_speed: f64 },

    /// Scenario configuration is syntactically or semantically invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Underlying I/O failure while reading inputs or writing outputs.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl SimError {
    /// Shorthand for a [`SimError::Config`] with a formatted message.
    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }
}
