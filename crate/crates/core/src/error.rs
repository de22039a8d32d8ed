use thiserror::Error;

use crate::lattice::MultiIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected d={expected}, got d={found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("axis {axis} out of range for d={dim} (axes are 1-based)")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("index {index} lies outside the box <{n}>^d")]
    OutsideBox { index: MultiIndex, n: usize },

    #[error("element is not measurable w.r.t. the shifted past at {base}; offending indices: {}", format_indices(.offending))]
    NotMeasurable {
        base: MultiIndex,
        offending: Vec<MultiIndex>,
    },

    #[error("innovation box too small: a margin of {required:?} per axis is required")]
    InsufficientMargin { required: Vec<i64> },

    #[error("innovation law has no finite absolute moment of order {p}")]
    MissingMoment { p: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn format_indices(indices: &[MultiIndex]) -> String {
    indices
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
