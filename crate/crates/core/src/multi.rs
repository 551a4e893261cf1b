//! Banks of noise filters `(ψ_i, α_i)` and their reduction to one filter.
//!
//! Under the quadratic prior the sum `Σ ψ_i ⋆ λ_i` of independent colored
//! noises has the same covariance as `ψ ⋆ λ` with
//! `|ψ̂|² = Σ |ψ̂_i|² / α_i` and `α = 1`, so one solve with the merged filter
//! replaces the `m`-variable problem. [`split_components`] recovers the
//! individual noises afterwards.

use num_complex::Complex;

use crate::engine::{Stacked, Synthesis};
use crate::error::{Error, Result};
use crate::grid::{Dims, Field, Grid};
use crate::ops::circular_convolve;
use crate::scalar::Real;
use crate::solver::{Prior, SolverConfig};
use crate::spectral::{hermitian_part, FourierPlan, Spectrum};

/// Filters `ψ_i` with weights `α_i > 0` on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank<T: Real> {
    filters: Vec<Grid<T>>,
    alphas: Vec<T>,
}

impl<T: Real> FilterBank<T> {
    pub fn new(entries: Vec<(Grid<T>, T)>) -> Result<Self> {
        let Some((first, _)) = entries.first() else {
            return Err(Error::InvalidParameter("a filter bank needs at least one filter".into()));
        };
        let dims = first.dims();
        for (psi, alpha) in &entries {
            psi.ensure_same_dims(dims)?;
            if !(*alpha > T::zero()) || !alpha.is_finite() {
                return Err(Error::InvalidParameter(format!("filter weight must be positive, got {alpha}")));
            }
        }
        let (filters, alphas) = entries.into_iter().unzip();
        Ok(Self { filters, alphas })
    }

    /// A bank holding a single filter.
    pub fn single(psi: Grid<T>, alpha: T) -> Result<Self> {
        Self::new(vec![(psi, alpha)])
    }

    pub fn dims(&self) -> Dims {
        self.filters[0].dims()
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn filters(&self) -> &[Grid<T>] {
        &self.filters
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    /// The same filters with every weight multiplied by `factor`.
    pub fn rescaled(&self, factor: T) -> Result<Self> {
        Self::new(
            self.filters
                .iter()
                .cloned()
                .zip(self.alphas.iter().map(|&a| a * factor))
                .collect(),
        )
    }

    pub(crate) fn spectra(&self, plan: &FourierPlan<T>) -> Vec<Spectrum<T>> {
        self.filters.iter().map(|f| plan.forward(f)).collect()
    }

    /// `Σ_i |ψ̂_i(ξ)|² / α_i` for every frequency.
    pub fn weighted_power(&self) -> Grid<T> {
        let plan = FourierPlan::new(self.dims());
        weighted_power(&self.spectra(&plan), &self.alphas, self.dims())
    }
}

pub(crate) fn weighted_power<T: Real>(spectra: &[Spectrum<T>], alphas: &[T], dims: Dims) -> Grid<T> {
    let mut out = Grid::zeros(dims);
    for (s, &a) in spectra.iter().zip(alphas) {
        for (o, v) in out.data_mut().iter_mut().zip(s.data()) {
            *o += v.norm_sqr() / a;
        }
    }
    out
}

/// Single filter equivalent to a bank, paired with its weight.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedFilter<T: Real> {
    pub psi: Grid<T>,
    pub alpha: T,
}

/// Filter with the real nonnegative spectrum `sqrt(Σ |ψ̂_i|² / α_i)`, with
/// weight `1`.
pub fn merge_bank<T: Real>(bank: &FilterBank<T>) -> Result<MergedFilter<T>> {
    let dims = bank.dims();
    let plan = FourierPlan::new(dims);
    let power = bank.weighted_power();
    let spectrum = Grid::new(dims, power.data().iter().map(|&p| Complex::new(p.sqrt(), T::zero())).collect())?;
    let psi = plan.inverse_real_checked(&spectrum)?;
    Ok(MergedFilter { psi, alpha: T::one() })
}

/// One recovered noise component `b_i = ψ_i ⋆ λ_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Component<T: Real> {
    pub lambda: Grid<T>,
    pub b: Grid<T>,
}

/// Splits a total noise `b` into the bank's components.
///
/// Per frequency, `λ̂_i = conj(ψ̂_i) b̂ / (α_i Σ_j |ψ̂_j|² / α_j)`, the split of
/// least weighted energy `Σ α_i ||λ_i||²` with `Σ ψ_i ⋆ λ_i = b`. Where every
/// `ψ̂_j` vanishes the components are set to zero.
pub fn split_components<T: Real>(b: &Grid<T>, bank: &FilterBank<T>) -> Result<Vec<Component<T>>> {
    let dims = bank.dims();
    b.ensure_same_dims(dims)?;
    let plan = FourierPlan::new(dims);
    let spectra = bank.spectra(&plan);
    let power = weighted_power(&spectra, bank.alphas(), dims);
    let b_hat = plan.forward(b);
    let floor = T::spectral_floor() * power.norm_inf();
    spectra
        .iter()
        .zip(bank.alphas())
        .zip(bank.filters())
        .map(|((s, &alpha), psi)| {
            let mut hat = b_hat.clone();
            for ((h, p), si) in hat.data_mut().iter_mut().zip(power.data()).zip(s.data()) {
                *h = if *p > floor {
                    si.conj() * *h / (alpha * *p)
                } else {
                    Complex::default()
                };
            }
            let lambda = plan.inverse_real_checked(&hermitian_part(&hat))?;
            let b = circular_convolve(&lambda, psi)?;
            Ok(Component { lambda, b })
        })
        .collect()
}

/// Solution of the stacked problem in every `λ_i` at once.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSolution<T: Real> {
    pub components: Vec<Component<T>>,
    /// `Σ_i b_i`.
    pub b: Grid<T>,
    pub u: Grid<T>,
    pub q: Field<T>,
    pub iterations: usize,
    pub primal_value: T,
    pub dual_value: T,
    pub gap: T,
    pub converged: bool,
    pub gap_history: Vec<(usize, T)>,
}

/// Solves `min ||∇(u0 − Σ ψ_i ⋆ λ_i)||_1 + Σ α_i/2 ||λ_i||²` directly over
/// all components. Intended as a reference for the merged solve.
pub fn solve_multi_direct<T: Real>(u0: &Grid<T>, bank: &FilterBank<T>, cfg: &SolverConfig<T>) -> Result<MultiSolution<T>> {
    cfg.validate()?;
    u0.ensure_same_dims(bank.dims())?;
    let refs: Vec<&Grid<T>> = bank.filters().iter().collect();
    let raw = Stacked {
        u0,
        synth: Synthesis::new(&refs),
        alphas: bank.alphas().to_vec(),
        prior: Prior::L2,
    }
    .chambolle_pock(cfg, None, None);
    let mut total = Grid::zeros(u0.dims());
    let mut components = Vec::with_capacity(bank.len());
    for (lambda, psi) in raw.lambdas.into_iter().zip(bank.filters()) {
        let b = circular_convolve(&lambda, psi)?;
        total.axpy(T::one(), &b);
        components.push(Component { lambda, b });
    }
    Ok(MultiSolution {
        u: u0.sub(&total)?,
        b: total,
        components,
        q: raw.q,
        iterations: raw.iterations,
        primal_value: raw.primal,
        dual_value: raw.dual,
        gap: raw.primal - raw.dual,
        converged: raw.converged,
        gap_history: raw.history,
    })
}
