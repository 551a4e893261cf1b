//! Periodic d-dimensional grids and vector fields.
//!
//! Samples are stored row-major with `x_1` slowest and `x_d` fastest. All
//! index arithmetic wraps, so every grid lives on a discrete torus.

use std::fmt;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAX_RANK: usize = 3;

/// Extents `(n_1, ..., n_d)` of a grid with `1 <= d <= 3`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    extents: [usize; MAX_RANK],
    rank: usize,
}

impl Dims {
    pub fn new(extents: &[usize]) -> Result<Self> {
        if extents.is_empty() || extents.len() > MAX_RANK || extents.contains(&0) {
            return Err(Error::InvalidDims(extents.to_vec()));
        }
        let mut padded = [1; MAX_RANK];
        padded[..extents.len()].copy_from_slice(extents);
        Ok(Self {
            extents: padded,
            rank: extents.len(),
        })
    }

    pub fn d1(n: usize) -> Result<Self> {
        Self::new(&[n])
    }

    pub fn d2(n1: usize, n2: usize) -> Result<Self> {
        Self::new(&[n1, n2])
    }

    pub fn d3(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        Self::new(&[n1, n2, n3])
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn extents(&self) -> &[usize] {
        &self.extents[..self.rank]
    }

    #[inline]
    pub fn extent(&self, axis: usize) -> usize {
        self.extents[axis]
    }

    /// Total number of samples `n`.
    #[inline]
    pub fn len(&self) -> usize {
        self.extents().iter().product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Distance in the flat buffer between neighbours along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.extents()[axis + 1..].iter().product()
    }

    /// Flat index of a coordinate; coordinates are reduced modulo the extents.
    pub fn index_of(&self, coords: &[isize]) -> usize {
        debug_assert_eq!(coords.len(), self.rank);
        let mut index = 0;
        for (axis, &c) in coords.iter().enumerate() {
            let n = self.extents[axis] as isize;
            index = index * self.extents[axis] + c.rem_euclid(n) as usize;
        }
        index
    }

    /// Coordinates of a flat index (unused trailing axes are zero).
    pub fn coords_of(&self, mut index: usize) -> [usize; MAX_RANK] {
        let mut coords = [0; MAX_RANK];
        for axis in (0..self.rank).rev() {
            coords[axis] = index % self.extents[axis];
            index /= self.extents[axis];
        }
        coords
    }

    /// Signed representative of a periodic coordinate, in `(-n/2, n/2]`.
    #[inline]
    pub fn centered(&self, axis: usize, coord: usize) -> isize {
        let n = self.extents[axis];
        if 2 * coord > n {
            coord as isize - n as isize
        } else {
            coord as isize
        }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.extents().iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

impl fmt::Debug for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dims({self})")
    }
}

/// Samples on a periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    dims: Dims,
    data: Vec<T>,
}

impl<T: Copy> Grid<T> {
    pub fn new(dims: Dims, data: Vec<T>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::DataLength {
                dims,
                expected: dims.len(),
                found: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn filled(dims: Dims, value: T) -> Self {
        Self {
            dims,
            data: vec![value; dims.len()],
        }
    }

    /// Builds a grid by evaluating `f` at every coordinate.
    pub fn from_fn(dims: Dims, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let data = (0..dims.len())
            .map(|i| {
                let c = dims.coords_of(i);
                f(&c[..dims.rank()])
            })
            .collect();
        Self { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Value at a (wrapped) coordinate.
    pub fn at(&self, coords: &[isize]) -> T {
        self.data[self.dims.index_of(coords)]
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> Grid<U> {
        Grid {
            dims: self.dims,
            data: self.data.iter().copied().map(f).collect(),
        }
    }

    pub fn zip_map<U: Copy, V: Copy>(&self, other: &Grid<U>, mut f: impl FnMut(T, U) -> V) -> Result<Grid<V>> {
        self.ensure_same_dims(other.dims)?;
        Ok(Grid {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn ensure_same_dims(&self, other: Dims) -> Result<()> {
        if self.dims != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                found: other,
            });
        }
        Ok(())
    }
}

impl<T: Real> Grid<T> {
    pub fn zeros(dims: Dims) -> Self {
        Self::filled(dims, T::zero())
    }

    /// Unit impulse at the origin scaled by `amplitude`.
    pub fn impulse(dims: Dims, amplitude: T) -> Self {
        let mut g = Self::zeros(dims);
        g.data[0] = amplitude;
        g
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        self.sum() / T::from_usize_lossy(self.len())
    }

    /// `u - u^mean`.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dims, other.dims);
        self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum()
    }

    pub fn norm2(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn norm1(&self) -> T {
        self.data.iter().map(|&v| v.abs()).sum()
    }

    pub fn norm_inf(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// `sum |u|^p` raised to `1/p`.
    pub fn norm_p(&self, p: T) -> T {
        self.data.iter().map(|&v| v.abs().powf(p)).sum::<T>().powf(p.recip())
    }

    pub fn scaled(&self, factor: T) -> Self {
        self.map(|v| v * factor)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: T, other: &Self) {
        debug_assert_eq!(self.dims, other.dims);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn is_constant(&self) -> bool {
        let first = self.data[0];
        self.data.iter().all(|&v| v == first)
    }

    /// Lifts to a complex grid with zero imaginary part.
    pub fn to_complex(&self) -> Grid<Complex<T>> {
        self.map(|v| Complex::new(v, T::zero()))
    }

    /// Mirror image `u(-x)`.
    pub fn reflected(&self) -> Self {
        let dims = self.dims;
        Self::from_fn(dims, |c| {
            let neg: Vec<isize> = c.iter().map(|&x| -(x as isize)).collect();
            self.at(&neg)
        })
    }
}

impl<T: Real> Grid<Complex<T>> {
    pub fn re(&self) -> Grid<T> {
        self.map(|z| z.re)
    }

    pub fn norm2(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_modulus(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }
}

/// Which isotropic norm to take over a vector field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PNorm {
    One,
    Two,
    Inf,
}

/// `d` channels of per-pixel vectors sharing one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    channels: Vec<Grid<T>>,
}

impl<T: Copy> Field<T> {
    pub fn new(channels: Vec<Grid<T>>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or(Error::ChannelCount { expected: 1, found: 0 })?;
        let dims = first.dims();
        if channels.len() != dims.rank() {
            return Err(Error::ChannelCount {
                expected: dims.rank(),
                found: channels.len(),
            });
        }
        for c in &channels[1..] {
            first.ensure_same_dims(c.dims())?;
        }
        Ok(Self { channels })
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.channels[0].dims()
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.channels.len()
    }

    #[inline]
    pub fn channel(&self, k: usize) -> &Grid<T> {
        &self.channels[k]
    }

    #[inline]
    pub fn channel_mut(&mut self, k: usize) -> &mut Grid<T> {
        &mut self.channels[k]
    }

    pub fn channels(&self) -> &[Grid<T>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Grid<T>> {
        self.channels
    }
}

impl<T: Real> Field<T> {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            channels: (0..dims.rank()).map(|_| Grid::zeros(dims)).collect(),
        }
    }

    /// Per-pixel Euclidean magnitude `sqrt(q_1^2 + ... + q_d^2)`.
    pub fn magnitude(&self) -> Grid<T> {
        let dims = self.dims();
        let mut out = vec![T::zero(); dims.len()];
        for c in &self.channels {
            for (o, &v) in out.iter_mut().zip(c.data()) {
                *o += v * v;
            }
        }
        for o in &mut out {
            *o = o.sqrt();
        }
        Grid { dims, data: out }
    }

    /// Isotropic norm `|| |q| ||_p`.
    pub fn iso_norm(&self, p: PNorm) -> T {
        let mag = self.magnitude();
        match p {
            PNorm::One => mag.norm1(),
            PNorm::Two => mag.norm2(),
            PNorm::Inf => mag.norm_inf(),
        }
    }

    pub fn dot(&self, other: &Self) -> T {
        self.channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            channels: self.channels.iter().map(|c| c.scaled(factor)).collect(),
        }
    }

    pub fn axpy(&mut self, factor: T, other: &Self) {
        for (a, b) in self.channels.iter_mut().zip(&other.channels) {
            a.axpy(factor, b);
        }
    }

    /// Pixelwise projection onto the unit Euclidean ball.
    pub fn project_unit_ball(&mut self) {
        let n = self.dims().len();
        for i in 0..n {
            let mut sq = T::zero();
            for c in &self.channels {
                sq += c.data[i] * c.data[i];
            }
            if sq > T::one() {
                let inv = sq.sqrt().recip();
                for c in &mut self.channels {
                    c.data[i] *= inv;
                }
            }
        }
    }
}
