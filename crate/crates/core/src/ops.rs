//! Periodic convolution, discrete gradient and its adjoint, total variation.

use crate::error::Result;
use crate::grid::{Field, Grid, PNorm};
use crate::scalar::Real;
use crate::spectral::{difference_symbol, FourierPlan};

/// `(u ⋆ ψ)(x) = sum_y u(y) ψ(x - y)` with periodic wrap, computed spectrally.
pub fn circular_convolve<T: Real>(u: &Grid<T>, psi: &Grid<T>) -> Result<Grid<T>> {
    u.ensure_same_dims(psi.dims())?;
    let plan = FourierPlan::new(u.dims());
    let kernel = plan.forward(psi);
    let mut s = plan.forward(u);
    for (a, b) in s.data_mut().iter_mut().zip(kernel.data()) {
        *a *= *b;
    }
    Ok(plan.inverse_real(&s))
}

/// Periodic forward differences `∂_k u(x) = u(x + e_k) - u(x)`, one channel per axis.
pub fn gradient<T: Real>(u: &Grid<T>) -> Field<T> {
    let dims = u.dims();
    let channels = (0..dims.rank())
        .map(|axis| {
            let mut out = Grid::zeros(dims);
            forward_difference(u.data(), out.data_mut(), dims.extent(axis), dims.stride(axis));
            out
        })
        .collect();
    Field::new(channels).expect("one channel per axis")
}

/// Adjoint of [`gradient`]: `∇ᵀq(x) = sum_k q_k(x - e_k) - q_k(x)`.
pub fn gradient_adjoint<T: Real>(q: &Field<T>) -> Grid<T> {
    let dims = q.dims();
    let mut out = Grid::zeros(dims);
    for axis in 0..dims.rank() {
        accumulate_backward_difference(
            q.channel(axis).data(),
            out.data_mut(),
            dims.extent(axis),
            dims.stride(axis),
        );
    }
    out
}

/// Gradient evaluated as convolutions with the difference filters `d_k`.
pub fn gradient_spectral<T: Real>(u: &Grid<T>) -> Field<T> {
    let dims = u.dims();
    let plan = FourierPlan::new(dims);
    let spectrum = plan.forward(u);
    let channels = (0..dims.rank())
        .map(|axis| {
            let symbol = difference_symbol::<T>(dims, axis);
            let s = spectrum.zip_map(&symbol, |a, b| a * b).expect("same dims");
            plan.inverse_real(&s)
        })
        .collect();
    Field::new(channels).expect("one channel per axis")
}

/// Isotropic total variation `||∇u||_1`.
pub fn tv_norm<T: Real>(u: &Grid<T>) -> T {
    gradient(u).iso_norm(PNorm::One)
}

pub fn iso_norm<T: Real>(q: &Field<T>, p: PNorm) -> T {
    q.iso_norm(p)
}

/// [`gradient`] into preallocated channels.
pub(crate) fn gradient_into<T: Real>(u: &Grid<T>, out: &mut Field<T>) {
    let dims = u.dims();
    for axis in 0..dims.rank() {
        forward_difference(
            u.data(),
            out.channel_mut(axis).data_mut(),
            dims.extent(axis),
            dims.stride(axis),
        );
    }
}

/// [`gradient_adjoint`] into a preallocated grid.
pub(crate) fn gradient_adjoint_into<T: Real>(q: &Field<T>, out: &mut Grid<T>) {
    let dims = q.dims();
    out.data_mut().fill(T::zero());
    for axis in 0..dims.rank() {
        accumulate_backward_difference(
            q.channel(axis).data(),
            out.data_mut(),
            dims.extent(axis),
            dims.stride(axis),
        );
    }
}

pub(crate) fn forward_difference<T: Real>(src: &[T], dst: &mut [T], len: usize, stride: usize) {
    let block = len * stride;
    for (s_block, d_block) in src.chunks_exact(block).zip(dst.chunks_exact_mut(block)) {
        let (head, last) = d_block.split_at_mut((len - 1) * stride);
        for (i, d) in head.iter_mut().enumerate() {
            *d = s_block[i + stride] - s_block[i];
        }
        for (i, d) in last.iter_mut().enumerate() {
            *d = s_block[i] - s_block[(len - 1) * stride + i];
        }
    }
}

pub(crate) fn accumulate_backward_difference<T: Real>(src: &[T], dst: &mut [T], len: usize, stride: usize) {
    let block = len * stride;
    for (s_block, d_block) in src.chunks_exact(block).zip(dst.chunks_exact_mut(block)) {
        for i in 0..stride {
            d_block[i] += s_block[(len - 1) * stride + i] - s_block[i];
        }
        for i in stride..block {
            d_block[i] += s_block[i - stride] - s_block[i];
        }
    }
}
