use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Real scalar the whole crate is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances that depend on the working
/// precision (FFT round-off, divisions by near-zero spectra) are exposed here
/// so the numerical kernels never hard-code an `f64` epsilon.
pub trait Real:
    Float + FloatConst + FftNum + FromPrimitive + NumAssign + Sum + Default + Debug + Display + 'static
{
    /// Relative tolerance accepted for the imaginary residue left by an
    /// inverse transform of a conjugate-symmetric spectrum.
    fn residue_tolerance() -> Self;

    /// Relative floor under which a spectral denominator counts as zero.
    fn spectral_floor() -> Self;

    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal fits in the scalar type")
    }

    #[inline]
    fn from_usize_lossy(value: usize) -> Self {
        Self::from_usize(value).expect("usize converts to a float")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl Real for f32 {
    #[inline]
    fn residue_tolerance() -> Self {
        1e-4
    }

    #[inline]
    fn spectral_floor() -> Self {
        1e-6
    }
}

impl Real for f64 {
    #[inline]
    fn residue_tolerance() -> Self {
        1e-10
    }

    #[inline]
    fn spectral_floor() -> Self {
        1e-14
    }
}
