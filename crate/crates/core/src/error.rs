use thiserror::Error;

use crate::grid::Dims;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid rank must be 1, 2 or 3 with nonzero extents, got {0:?}")]
    InvalidDims(Vec<usize>),

    #[error("data length {found} does not match dims {dims} ({expected} samples)")]
    DataLength {
        dims: Dims,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: Dims, found: Dims },

    #[error("channel count {found} does not match grid rank {expected}")]
    ChannelCount { expected: usize, found: usize },

    #[error("kernel is identically zero")]
    ZeroKernel,

    #[error("image is identically zero")]
    ZeroImage,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inverse transform left an imaginary residue {residue:e} (real norm {norm:e})")]
    ImaginaryResidue { residue: f64, norm: f64 },

    #[error("filter bank is rank deficient: every filter spectrum vanishes at frequency {frequency:?}")]
    RankDeficient { frequency: Vec<usize> },

    #[error("kernel spectrum vanishes at frequency {frequency:?}")]
    VanishingSpectrum { frequency: Vec<usize> },

    #[error("dual field is infeasible: isotropic sup norm {norm} exceeds 1")]
    InfeasibleDual { norm: f64 },

    #[error("operation requires the quadratic (L2) prior")]
    RequiresL2Prior,

    #[error("no samples supplied")]
    EmptySamples,

    #[error("small-alpha predicate fails even at alpha = {alpha:e}")]
    ThresholdNotFound { alpha: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
