//! Analytical control of the removed noise `b(α) = ψ ⋆ λ(α)`.
//!
//! The filters `h_k = ψ ⋆ ψ̃ ⋆ d̃_k` (spectrum `ĥ_k = |ψ̂|² conj(d̂_k)`) drive
//! everything here: the norm of `q ↦ ΨΨᵀ∇ᵀq` from `ℓ^∞` fields to `ℓ²` is
//! `√n max_{k,ξ} |ĥ_k(ξ)|`, which bounds `||b(α)||_2` by that value over `α`
//! and turns a target noise fraction into a weight `α`. At the other end,
//! small weights remove everything but the mean of `u0`, in closed form.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{Dims, Field, Grid, PNorm};
use crate::multi::FilterBank;
use crate::ops::{circular_convolve, gradient_adjoint};
use crate::scalar::Real;
use crate::solver::{solve_from, Problem, Solution, SolverConfig};
use crate::spectral::{difference_symbols, laplacian_symbol, FourierPlan, Spectrum};

/// The filters `h_k` and the two sup bounds built from them.
#[derive(Clone, Debug, PartialEq)]
pub struct HFilters<T: Real> {
    /// `h_k` in the spatial domain, one per axis.
    pub spatial: Vec<Grid<T>>,
    /// `ĥ_k = |ψ̂|² conj(d̂_k)`.
    pub spectra: Vec<Spectrum<T>>,
    /// `max_{k,ξ} |ĥ_k(ξ)|`.
    pub bound_paper: T,
    /// `max_ξ sqrt(Σ_k |ĥ_k(ξ)|²)`.
    pub bound_tight: T,
    /// Axis and flat frequency index where `bound_paper` is attained.
    pub argmax: (usize, usize),
}

impl<T: Real> HFilters<T> {
    pub fn dims(&self) -> Dims {
        self.spectra[0].dims()
    }

    fn sqrt_n(&self) -> T {
        T::from_usize_lossy(self.dims().len()).sqrt()
    }

    /// `√n · bound_paper`.
    pub fn opnorm(&self) -> T {
        self.sqrt_n() * self.bound_paper
    }

    /// `√n · bound_tight`.
    pub fn opnorm_upper(&self) -> T {
        self.sqrt_n() * self.bound_tight
    }
}

pub fn compute_h_filters<T: Real>(psi: &Grid<T>) -> Result<HFilters<T>> {
    let dims = psi.dims();
    let plan = FourierPlan::new(dims);
    let power = plan.forward(psi).map(|c| c.norm_sqr());
    let spectra: Vec<Spectrum<T>> = difference_symbols::<T>(dims)
        .iter()
        .map(|d| d.zip_map(&power, |dk, p| dk.conj() * p).expect("same dims"))
        .collect();
    let spatial = spectra
        .iter()
        .map(|s| plan.inverse_real_checked(s))
        .collect::<Result<Vec<_>>>()?;
    let mut bound_paper = T::zero();
    let mut argmax = (0, 0);
    let mut bound_tight = T::zero();
    for i in 0..dims.len() {
        let mut sq = T::zero();
        for (k, s) in spectra.iter().enumerate() {
            let m = s.data()[i].norm();
            if m > bound_paper {
                bound_paper = m;
                argmax = (k, i);
            }
            sq += m * m;
        }
        bound_tight = bound_tight.max(sq.sqrt());
    }
    Ok(HFilters {
        spatial,
        spectra,
        bound_paper,
        bound_tight,
        argmax,
    })
}

/// `ΨΨᵀ∇ᵀq`, evaluated with two circular convolutions.
pub fn psi_psit_gradt<T: Real>(psi: &Grid<T>, q: &Field<T>) -> Result<Grid<T>> {
    let w = gradient_adjoint(q);
    circular_convolve(&circular_convolve(&w, &psi.reflected())?, psi)
}

/// [`psi_psit_gradt`] extended to complex fields by linearity.
pub fn psi_psit_gradt_complex<T: Real>(psi: &Grid<T>, channels: &[Grid<Complex<T>>]) -> Result<Grid<Complex<T>>> {
    let part = |f: fn(&Complex<T>) -> T| -> Result<Grid<T>> {
        let q = Field::new(channels.iter().map(|c| c.map(|v| f(&v))).collect())?;
        psi_psit_gradt(psi, &q)
    };
    let re = part(|c| c.re)?;
    let im = part(|c| c.im)?;
    re.zip_map(&im, Complex::new)
}

/// `||ΨΨᵀ∇ᵀ||_{∞→2}` and the Fourier field attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorNorm<T: Real> {
    /// `√n · max_{k,ξ} |ĥ_k(ξ)|`.
    pub value: T,
    /// `√n · max_ξ sqrt(Σ_k |ĥ_k(ξ)|²)`, an upper bound over all real fields.
    pub upper: T,
    pub axis: usize,
    pub frequency: Vec<usize>,
    /// `e^{2πi <ξ, x/n>}` in channel `axis`, zero elsewhere. Its pointwise
    /// modulus is 1 and the operator maps it to `ĥ_axis(ξ) e^{2πi <ξ, x/n>}`.
    pub witness: Vec<Grid<Complex<T>>>,
}

impl<T: Real> OperatorNorm<T> {
    /// Real part of the witness, a cosine wave with sup norm 1.
    pub fn real_witness(&self) -> Field<T> {
        Field::new(self.witness.iter().map(|c| c.map(|v| v.re)).collect()).expect("channels share dims")
    }
}

pub fn opnorm_infty_to_2<T: Real>(psi: &Grid<T>) -> Result<OperatorNorm<T>> {
    let h = compute_h_filters(psi)?;
    let dims = psi.dims();
    let (axis, index) = h.argmax;
    let coords = dims.coords_of(index);
    let frequency = coords[..dims.rank()].to_vec();
    let wave = Grid::from_fn(dims, |x| {
        let phase: T = (0..dims.rank())
            .map(|j| {
                let t = (frequency[j] * x[j]) % dims.extent(j);
                T::two() * T::PI() * T::from_usize_lossy(t) / T::from_usize_lossy(dims.extent(j))
            })
            .sum();
        Complex::new(phase.cos(), phase.sin())
    });
    let witness = (0..dims.rank())
        .map(|k| if k == axis { wave.clone() } else { Grid::filled(dims, Complex::default()) })
        .collect();
    Ok(OperatorNorm {
        value: h.opnorm(),
        upper: h.opnorm_upper(),
        axis,
        frequency,
        witness,
    })
}

/// Weight chosen so the bound on `||b(α)||_2` equals `η ||u0||_2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaSelection<T> {
    pub eta: T,
    pub alpha: T,
    /// `min(√n · bound_paper / α, cap_norm)`.
    pub predicted_b_norm: T,
    /// `||u0 − mean(u0)||_2`.
    pub cap_norm: T,
    pub bound_paper: T,
    pub bound_tight: T,
    pub sqrt_n: T,
}

impl<T: Real> AlphaSelection<T> {
    /// `min(√n · bound_tight / α, cap_norm)`.
    pub fn certified_b_norm(&self) -> T {
        (self.sqrt_n * self.bound_tight / self.alpha).min(self.cap_norm)
    }
}

/// `α = √n · bound_paper / (η ||u0||_2)`.
pub fn alpha_for_target<T: Real>(u0: &Grid<T>, psi: &Grid<T>, eta: T) -> Result<AlphaSelection<T>> {
    u0.ensure_same_dims(psi.dims())?;
    if !(eta > T::zero() && eta < T::one()) {
        return Err(Error::InvalidParameter(format!("noise fraction must lie in (0, 1), got {eta}")));
    }
    let norm = u0.norm2();
    if norm == T::zero() {
        return Err(Error::ZeroImage);
    }
    let h = compute_h_filters(psi)?;
    let sqrt_n = T::from_usize_lossy(u0.len()).sqrt();
    let alpha = sqrt_n * h.bound_paper / (norm * eta);
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::ZeroKernel);
    }
    let cap_norm = u0.centered().norm2();
    Ok(AlphaSelection {
        eta,
        alpha,
        predicted_b_norm: (sqrt_n * h.bound_paper / alpha).min(cap_norm),
        cap_norm,
        bound_paper: h.bound_paper,
        bound_tight: h.bound_tight,
        sqrt_n,
    })
}

fn frequency_of(dims: Dims, index: usize) -> Vec<usize> {
    dims.coords_of(index)[..dims.rank()].to_vec()
}

/// Limit of `λ_i(α)` for small weights, in closed form.
///
/// `λ̂_i(ξ) = conj(ψ̂_i) û0 / (α_i Σ_j |ψ̂_j|² / α_j)` for `ξ ≠ 0` and
/// `λ̂_i(0) = 0`, so that `Σ_i ψ_i ⋆ λ_i = u0 − mean(u0)`. Fails when every
/// filter spectrum vanishes at some nonzero frequency.
pub fn lambda0_closed_form<T: Real>(u0: &Grid<T>, bank: &FilterBank<T>) -> Result<Vec<Grid<T>>> {
    let dims = bank.dims();
    u0.ensure_same_dims(dims)?;
    let plan = FourierPlan::new(dims);
    let spectra = bank.spectra(&plan);
    let power = crate::multi::weighted_power(&spectra, bank.alphas(), dims);
    let floor = T::spectral_floor() * power.norm_inf();
    if let Some(i) = (1..dims.len()).find(|&i| !(power.data()[i] > floor)) {
        return Err(Error::RankDeficient {
            frequency: frequency_of(dims, i),
        });
    }
    let u_hat = plan.forward(u0);
    spectra
        .iter()
        .zip(bank.alphas())
        .map(|(s, &alpha)| {
            let mut hat = u_hat.zip_map(s, |u, p| p.conj() * u)?;
            for (h, &p) in hat.data_mut().iter_mut().zip(power.data()) {
                *h = *h / (alpha * p);
            }
            hat.data_mut()[0] = Complex::default();
            plan.inverse_real_checked(&hat)
        })
        .collect()
}

/// Ingredients of the large-weight lower bound.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerBound<T: Real> {
    /// `(1/α) min|ψ̂| ||b_1||_2 / ||A⁺b_1||_∞`; zero when `b_1 = 0`.
    pub bound: T,
    /// `1 / ||A⁺b_1||_∞`; the bound holds for `α` at or above this value.
    pub alpha_min_validity: T,
    pub applicable: bool,
    /// Zero-mean part of `Ψ⁻¹u0`.
    pub b1: Grid<T>,
    /// Minimal-norm `q` with `Ψᵀ∇ᵀq = b_1`.
    pub preimage: Field<T>,
    pub min_psi_modulus: T,
}

/// `b_1` and `A⁺b_1` for `A = Ψᵀ∇ᵀ`, computed per frequency.
fn preimage<T: Real>(u0: &Grid<T>, psi: &Grid<T>) -> Result<(Grid<T>, Field<T>, T)> {
    let dims = psi.dims();
    u0.ensure_same_dims(dims)?;
    let plan = FourierPlan::new(dims);
    let psi_hat = plan.forward(psi);
    let max = psi_hat.max_modulus();
    if max == T::zero() {
        return Err(Error::ZeroKernel);
    }
    let (mut min, mut at) = (T::infinity(), 0);
    for (i, v) in psi_hat.data().iter().enumerate() {
        if v.norm() < min {
            min = v.norm();
            at = i;
        }
    }
    if !(min > T::spectral_floor() * max) {
        return Err(Error::VanishingSpectrum {
            frequency: frequency_of(dims, at),
        });
    }
    let u_hat = plan.forward(u0);
    let mut b1_hat = u_hat.zip_map(&psi_hat, |u, p| u / p)?;
    b1_hat.data_mut()[0] = Complex::default();
    let b1 = plan.inverse_real_checked(&b1_hat)?;

    let lap = laplacian_symbol::<T>(dims);
    let mut core = u_hat.clone();
    for ((c, p), &l) in core.data_mut().iter_mut().zip(psi_hat.data()).zip(lap.data()) {
        *c = if l > T::zero() { *c / (p.norm_sqr() * l) } else { Complex::default() };
    }
    let channels = difference_symbols::<T>(dims)
        .iter()
        .map(|d| plan.inverse_real_checked(&d.zip_map(&core, |a, b| a * b).expect("same dims")))
        .collect::<Result<Vec<_>>>()?;
    Ok((b1, Field::new(channels)?, min))
}

pub fn lower_bound<T: Real>(u0: &Grid<T>, psi: &Grid<T>, alpha: T) -> Result<LowerBound<T>> {
    if !(alpha > T::zero()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let (b1, preimage, min_psi_modulus) = preimage(u0, psi)?;
    let q_inf = preimage.iso_norm(PNorm::Inf);
    let b1_norm = b1.norm2();
    let (bound, alpha_min_validity) = if q_inf > T::zero() {
        (min_psi_modulus * b1_norm / (alpha * q_inf), q_inf.recip())
    } else {
        (T::zero(), T::zero())
    };
    Ok(LowerBound {
        bound,
        alpha_min_validity,
        applicable: alpha >= alpha_min_validity,
        b1,
        preimage,
        min_psi_modulus,
    })
}

/// Outcome of the search for the largest weight still in the small-α regime.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallAlphaThreshold<T> {
    /// Largest probed `α` satisfying the predicate; infinite for constant `u0`.
    pub alpha: T,
    /// Smallest probed `α` violating it.
    pub first_failure: T,
    /// Every probe `(α, predicate)` in order.
    pub probes: Vec<(T, bool)>,
}

/// Relative tolerance of the small-α predicate.
pub const SMALL_ALPHA_TOLERANCE: f64 = 1e-4;

/// Solves at `alpha` from the closed-form small-α pair and reports whether
/// `||b(α) − (u0 − mean)||_2 <= 1e-4 ||u0 − mean||_2`.
pub fn small_alpha_predicate<T: Real>(
    u0: &Grid<T>,
    psi: &Grid<T>,
    alpha: T,
    cfg: &SolverConfig<T>,
) -> Result<(bool, Solution<T>)> {
    let target = u0.centered();
    let p = Problem::l2(u0.clone(), psi.clone(), alpha)?;
    let lambda0 = lambda0_closed_form(u0, &FilterBank::single(psi.clone(), alpha)?)?;
    let (_, q_star, _) = preimage(u0, psi)?;
    let mut q0 = q_star.scaled(-alpha);
    q0.project_unit_ball();
    let sol = solve_from(&p, cfg, Some(&lambda0[0]), Some(&q0))?;
    let err = sol.b.sub(&target)?.norm2();
    Ok((err <= T::lit(SMALL_ALPHA_TOLERANCE) * target.norm2(), sol))
}

/// Largest `α` for which the solver output still removes all of
/// `u0 − mean(u0)`, up to the relative tolerance [`SMALL_ALPHA_TOLERANCE`].
///
/// Probing starts at `√n · bound_tight / ||u0 − mean||`, where the upper
/// bound meets the cap, moves by decades until the predicate changes, and
/// then bisects on `log α` until consecutive probes differ by less than 1%.
/// Each solve is warm started from the closed-form small-α pair.
pub fn small_alpha_threshold<T: Real>(
    u0: &Grid<T>,
    psi: &Grid<T>,
    cfg: &SolverConfig<T>,
) -> Result<SmallAlphaThreshold<T>> {
    u0.ensure_same_dims(psi.dims())?;
    let cap = u0.centered().norm2();
    if cap == T::zero() {
        return Ok(SmallAlphaThreshold {
            alpha: T::infinity(),
            first_failure: T::infinity(),
            probes: Vec::new(),
        });
    }
    let h = compute_h_filters(psi)?;
    let start = h.opnorm_upper() / cap;
    let ten = T::lit(10.0);
    let mut probes = Vec::new();
    let mut probe = |alpha: T| -> Result<bool> {
        let (ok, _) = small_alpha_predicate(u0, psi, alpha, cfg)?;
        probes.push((alpha, ok));
        Ok(ok)
    };

    let (mut lo, mut hi);
    if probe(start)? {
        lo = start;
        hi = start * ten;
        let mut steps = 0;
        while probe(hi)? {
            lo = hi;
            hi = hi * ten;
            steps += 1;
            if steps == 12 {
                return Ok(SmallAlphaThreshold {
                    alpha: lo,
                    first_failure: T::infinity(),
                    probes,
                });
            }
        }
    } else {
        hi = start;
        lo = start / ten;
        let floor = start * T::lit(1e-12);
        while !probe(lo)? {
            hi = lo;
            lo = lo / ten;
            if lo < floor {
                return Err(Error::ThresholdNotFound {
                    alpha: lo.to_f64().unwrap_or(0.0),
                });
            }
        }
    }
    let resolution = T::lit(1.01);
    while hi / lo > resolution {
        let mid = (lo * hi).sqrt();
        if probe(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SmallAlphaThreshold {
        alpha: lo,
        first_failure: hi,
        probes,
    })
}
