use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by the planning and simulation pipeline.
#[derive(Debug, Clone)]
pub enum Error {
    /// An input failed validation. The message names the offending field.
    Validation(String),
    /// A window offset does not fit inside the mask.
    Geometry { offset_index: usize, detail: String },
    /// Planning produced no usable solution.
    Planning(String),
    /// The active-set iteration cap was exceeded. Carries the best feasible
    /// iterate found so far.
    IterationCap { weights: Vec<f64>, residual_norm: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Validation(msg) => write!(f, "validation: {msg}"),
            Error::Geometry { offset_index, detail } => {
                write!(f, "geometry: offset {offset_index}: {detail}")
            }
            Error::Planning(msg) => write!(f, "planning: {msg}"),
            Error::IterationCap { residual_norm, .. } => {
                write!(f, "iteration cap exceeded (best residual {residual_norm})")
            }
        }
    }
}

impl std::error::Error for Error {}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
