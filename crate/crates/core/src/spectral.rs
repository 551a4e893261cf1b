//! Discrete Fourier transforms on periodic grids.
//!
//! Convention: the forward transform is unnormalized (`û(0)` is the sum of
//! the samples, `||û||_2 = sqrt(n) ||u||_2`) and the inverse carries the
//! `1/n` factor. Any extent is supported; nothing is padded.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Dims, Grid};
use crate::scalar::Real;

pub type Spectrum<T> = Grid<Complex<T>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Separable multi-dimensional FFT with plans prepared once per grid shape.
pub struct FourierPlan<T: Real> {
    dims: Dims,
    forward: Vec<Arc<dyn Fft<T>>>,
    inverse: Vec<Arc<dyn Fft<T>>>,
    scratch_len: usize,
}

impl<T: Real> FourierPlan<T> {
    pub fn new(dims: Dims) -> Self {
        let mut planner = FftPlanner::new();
        let forward: Vec<_> = dims.extents().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse: Vec<_> = dims.extents().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let scratch_len = forward
            .iter()
            .chain(&inverse)
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            dims,
            forward,
            inverse,
            scratch_len,
        }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    fn run(&self, buf: &mut [Complex<T>], direction: Direction) {
        assert_eq!(buf.len(), self.dims.len(), "buffer does not match plan dims");
        let plans = match direction {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        let mut scratch = vec![Complex::default(); self.scratch_len];
        let rank = self.dims.rank();
        for (axis, fft) in plans.iter().enumerate() {
            let len = self.dims.extent(axis);
            if len == 1 {
                continue;
            }
            if axis + 1 == rank {
                // contiguous lines
                fft.process_with_scratch(buf, &mut scratch);
                continue;
            }
            // gather each block transposed so its lines are contiguous
            let stride = self.dims.stride(axis);
            let block_len = len * stride;
            let mut lines = vec![Complex::default(); block_len];
            for block in buf.chunks_exact_mut(block_len) {
                for j in 0..len {
                    for i in 0..stride {
                        lines[i * len + j] = block[j * stride + i];
                    }
                }
                fft.process_with_scratch(&mut lines, &mut scratch);
                for j in 0..len {
                    for i in 0..stride {
                        block[j * stride + i] = lines[i * len + j];
                    }
                }
            }
        }
        if direction == Direction::Inverse {
            let scale = T::from_usize_lossy(self.dims.len()).recip();
            for v in buf.iter_mut() {
                *v = *v * scale;
            }
        }
    }

    /// Unnormalized forward DFT in place.
    pub fn forward_in_place(&self, buf: &mut [Complex<T>]) {
        self.run(buf, Direction::Forward);
    }

    /// Inverse DFT (including the `1/n` factor) in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex<T>]) {
        self.run(buf, Direction::Inverse);
    }

    pub fn forward(&self, u: &Grid<T>) -> Spectrum<T> {
        let mut s = u.to_complex();
        self.forward_in_place(s.data_mut());
        s
    }

    pub fn forward_complex(&self, u: &Spectrum<T>) -> Spectrum<T> {
        let mut s = u.clone();
        self.forward_in_place(s.data_mut());
        s
    }

    pub fn inverse(&self, s: &Spectrum<T>) -> Spectrum<T> {
        let mut u = s.clone();
        self.inverse_in_place(u.data_mut());
        u
    }

    /// Inverse transform keeping the real part; the imaginary part is dropped
    /// without inspection.
    pub fn inverse_real(&self, s: &Spectrum<T>) -> Grid<T> {
        self.inverse(s).re()
    }

    /// Inverse transform of a spectrum expected to be conjugate symmetric.
    pub fn inverse_real_checked(&self, s: &Spectrum<T>) -> Result<Grid<T>> {
        let u = self.inverse(s);
        real_part_checked(&u)
    }
}

/// Drops the imaginary part after checking it is round-off only.
pub fn real_part_checked<T: Real>(u: &Spectrum<T>) -> Result<Grid<T>> {
    let re = u.re();
    let residue = u.data().iter().map(|z| z.im * z.im).sum::<T>().sqrt();
    let norm = re.norm2();
    if residue > T::residue_tolerance() * norm.max(T::min_positive_value()) {
        return Err(Error::ImaginaryResidue {
            residue: residue.to_f64().unwrap_or(f64::NAN),
            norm: norm.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(re)
}

/// Forward transform of a real grid.
pub fn forward<T: Real>(u: &Grid<T>) -> Spectrum<T> {
    FourierPlan::new(u.dims()).forward(u)
}

/// Inverse transform of a spectrum, returned as a complex grid.
pub fn inverse<T: Real>(s: &Spectrum<T>) -> Spectrum<T> {
    FourierPlan::new(s.dims()).inverse(s)
}

/// Inverse transform of a conjugate-symmetric spectrum.
pub fn inverse_real<T: Real>(s: &Spectrum<T>) -> Result<Grid<T>> {
    FourierPlan::new(s.dims()).inverse_real_checked(s)
}

/// `(s(ξ) + conj(s(−ξ))) / 2`, the spectrum of the real part of the inverse
/// transform of `s`.
pub fn hermitian_part<T: Real>(s: &Spectrum<T>) -> Spectrum<T> {
    let dims = s.dims();
    let half = T::lit(0.5);
    Grid::from_fn(dims, |xi| {
        let mirror: Vec<isize> = xi.iter().map(|&x| -(x as isize)).collect();
        let here: Vec<isize> = xi.iter().map(|&x| x as isize).collect();
        (s.at(&here) + s.at(&mirror).conj()) * half
    })
}

/// Spectral symbol of the forward difference along `axis`,
/// `d̂_k(ξ) = exp(2πi ξ_k / n_k) - 1`.
pub fn difference_symbol<T: Real>(dims: Dims, axis: usize) -> Spectrum<T> {
    let n = T::from_usize_lossy(dims.extent(axis));
    Grid::from_fn(dims, |xi| {
        let angle = T::two() * T::PI() * T::from_usize_lossy(xi[axis]) / n;
        Complex::new(angle.cos() - T::one(), angle.sin())
    })
}

pub fn difference_symbols<T: Real>(dims: Dims) -> Vec<Spectrum<T>> {
    (0..dims.rank()).map(|k| difference_symbol(dims, k)).collect()
}

/// `sum_k |d̂_k(ξ)|^2 = sum_k 4 sin^2(π ξ_k / n_k)`; vanishes only at `ξ = 0`.
pub fn laplacian_symbol<T: Real>(dims: Dims) -> Grid<T> {
    Grid::from_fn(dims, |xi| {
        xi.iter()
            .enumerate()
            .map(|(k, &x)| {
                let s = (T::PI() * T::from_usize_lossy(x) / T::from_usize_lossy(dims.extent(k))).sin();
                T::lit(4.0) * s * s
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_part_inverts_to_the_real_part() {
        let d = Dims::d2(5, 6).unwrap();
        let s = Grid::from_fn(d, |x| Complex::new((x[0] * 7 + x[1]) as f64 % 3.0, (x[0] + 2 * x[1]) as f64 % 5.0));
        let expected = inverse(&s).re();
        let got = inverse_real(&hermitian_part(&s)).unwrap();
        assert!(got.sub(&expected).unwrap().norm_inf() < 1e-12);
    }

    #[test]
    fn constant_image_has_only_dc() {
        let d = Dims::d2(3, 5).unwrap();
        let s = forward(&Grid::filled(d, 2.5f64));
        assert!((s.data()[0].re - 2.5 * 15.0).abs() < 1e-12);
        for z in &s.data()[1..] {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn impulse_has_flat_unit_spectrum() {
        let d = Dims::d1(4).unwrap();
        let s = forward(&Grid::impulse(d, 1.0f64));
        for z in s.data() {
            assert!((z.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_rejects_non_hermitian_spectrum() {
        let d = Dims::d1(4).unwrap();
        let mut s = Grid::filled(d, Complex::new(0.0f64, 0.0));
        s.data_mut()[1] = Complex::new(1.0, 0.0);
        assert!(matches!(inverse_real(&s), Err(Error::ImaginaryResidue { .. })));
    }

    #[test]
    fn laplacian_symbol_vanishes_only_at_origin() {
        let d = Dims::d3(3, 4, 5).unwrap();
        let l = laplacian_symbol::<f64>(d);
        assert_eq!(l.data()[0], 0.0);
        assert!(l.data()[1..].iter().all(|&v| v > 1e-3));
        let sym = difference_symbols::<f64>(d);
        for i in 0..d.len() {
            let e: f64 = sym.iter().map(|s| s.data()[i].norm_sqr()).sum();
            assert!((e - l.data()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let d = Dims::d2(6, 10).unwrap();
        let u = Grid::from_fn(d, |c| (c[0] * 7 + c[1] * 3) as f32 * 0.1 - 1.0);
        let plan = FourierPlan::new(d);
        let back = plan.inverse_real_checked(&plan.forward(&u)).unwrap();
        let err = back.sub(&u).unwrap().norm2() / u.norm2();
        assert!(err < 1e-5, "{err}");
    }
}
