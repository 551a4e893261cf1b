//! TV–ℓ² and TV–ℓ¹ removal of a single stationary noise component.
//!
//! Given an observation `u0` and a filter `ψ`, [`solve`] returns the noise
//! weights `λ` minimizing
//!
//! ```text
//! ||∇(u0 − ψ ⋆ λ)||_1 + α/2 ||λ||_2^2      (Prior::L2)
//! ||∇(u0 − ψ ⋆ λ)||_1 + α ||λ||_1          (Prior::L1)
//! ```
//!
//! together with a dual certificate `q` and the duality gap.

use crate::engine::{EngineResult, Stacked, Synthesis};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, PNorm};
use crate::ops::{circular_convolve, gradient, gradient_adjoint};
use crate::scalar::Real;

pub use crate::engine::shrink;

/// Regularizer applied to the noise weights `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prior {
    L2,
    L1,
}

/// Iteration that produced a [`Solution`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Primal–dual proximal splitting.
    ChambollePock,
    /// Accelerated projected gradient on the dual (L2 prior only).
    DualGradient,
}

/// A single-filter denoising problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem<T: Real> {
    pub u0: Grid<T>,
    pub psi: Grid<T>,
    pub alpha: T,
    pub prior: Prior,
}

impl<T: Real> Problem<T> {
    pub fn new(u0: Grid<T>, psi: Grid<T>, alpha: T, prior: Prior) -> Result<Self> {
        let p = Self { u0, psi, alpha, prior };
        p.validate()?;
        Ok(p)
    }

    pub fn l2(u0: Grid<T>, psi: Grid<T>, alpha: T) -> Result<Self> {
        Self::new(u0, psi, alpha, Prior::L2)
    }

    pub fn validate(&self) -> Result<()> {
        self.u0.ensure_same_dims(self.psi.dims())?;
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }

    fn stacked(&self) -> Stacked<'_, T> {
        Stacked {
            u0: &self.u0,
            synth: Synthesis::new(&[&self.psi]),
            alphas: vec![self.alpha],
            prior: self.prior,
        }
    }
}

/// Stopping and step-size settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub max_iterations: usize,
    /// Stop once `gap / (1 + |primal|)` falls to this value.
    pub gap_tolerance: T,
    /// Strong-convexity step schedule; ignored for the L1 prior.
    pub accelerate: bool,
    /// `r` in `τ = r / L`, `σ = 1 / (r L)`.
    pub step_ratio: T,
}

impl<T: Real> SolverConfig<T> {
    /// Tolerance used by the command-line tools.
    pub fn cli() -> Self {
        Self {
            gap_tolerance: T::lit(1e-5),
            ..Self::default()
        }
    }

    /// Long high-precision run used as a reference solution.
    pub fn oracle() -> Self {
        Self {
            max_iterations: 1_000_000,
            gap_tolerance: T::lit(1e-12),
            ..Self::default()
        }
    }

    pub fn with_tolerance(self, gap_tolerance: T) -> Self {
        Self { gap_tolerance, ..self }
    }

    pub fn with_max_iterations(self, max_iterations: usize) -> Self {
        Self { max_iterations, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.gap_tolerance > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "gap_tolerance must be positive, got {}",
                self.gap_tolerance
            )));
        }
        if !(self.step_ratio > T::zero()) || !self.step_ratio.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "step_ratio must be positive, got {}",
                self.step_ratio
            )));
        }
        Ok(())
    }
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            gap_tolerance: T::lit(1e-8),
            accelerate: true,
            step_ratio: T::one(),
        }
    }
}

/// Output of a solver run. `b` and `u` are recomputed from `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution<T: Real> {
    pub lambda: Grid<T>,
    pub b: Grid<T>,
    pub u: Grid<T>,
    pub q: Field<T>,
    pub iterations: usize,
    pub primal_value: T,
    pub dual_value: T,
    pub gap: T,
    pub converged: bool,
    /// `(iteration, gap)` at every certificate evaluation.
    pub gap_history: Vec<(usize, T)>,
    pub tau: T,
    pub sigma: T,
    pub op_norm: T,
    pub method: Method,
    pub accelerated: bool,
}

impl<T: Real> Solution<T> {
    /// `gap / (1 + |primal|)`.
    pub fn relative_gap(&self) -> T {
        self.gap / (T::one() + self.primal_value.abs())
    }
}

/// `||∇ ∘ Ψ||_{2→2} = max_ξ |ψ̂(ξ)| sqrt(Σ_k |d̂_k(ξ)|²)`.
pub fn operator_norm_k<T: Real>(psi: &Grid<T>) -> T {
    Synthesis::new(&[psi]).gradient_operator_norm()
}

/// Distance to the L2 minimizer implied by a duality gap: the objective is
/// `α`-strongly convex, so `||λ − λ*||_2 <= sqrt(2 gap / α)`.
pub fn lambda_error_bound<T: Real>(alpha: T, gap: T) -> T {
    (T::two() * gap.max(T::zero()) / alpha).sqrt()
}

pub fn solve<T: Real>(p: &Problem<T>, cfg: &SolverConfig<T>) -> Result<Solution<T>> {
    solve_from(p, cfg, None, None)
}

/// [`solve`] started from the given iterates instead of `λ = 0, q = 0`.
pub fn solve_from<T: Real>(
    p: &Problem<T>,
    cfg: &SolverConfig<T>,
    lambda: Option<&Grid<T>>,
    q: Option<&Field<T>>,
) -> Result<Solution<T>> {
    p.validate()?;
    cfg.validate()?;
    if let Some(l) = lambda {
        l.ensure_same_dims(p.u0.dims())?;
    }
    if let Some(q) = q {
        if q.dims() != p.u0.dims() {
            return Err(Error::DimensionMismatch {
                expected: p.u0.dims(),
                found: q.dims(),
            });
        }
    }
    let op_norm = operator_norm_k(&p.psi);
    let raw = p
        .stacked()
        .chambolle_pock(cfg, lambda.map(|l| vec![l.clone()]), q.cloned());
    let accelerated = cfg.accelerate && p.prior == Prior::L2;
    finish(p, raw, op_norm, accelerated)
}

/// Reference solve of the L2 problem by an accelerated projected gradient
/// method on the dual, independent of the primal–dual iteration.
pub fn solve_oracle<T: Real>(p: &Problem<T>, cfg: &SolverConfig<T>) -> Result<Solution<T>> {
    p.validate()?;
    cfg.validate()?;
    if p.prior != Prior::L2 {
        return Err(Error::RequiresL2Prior);
    }
    let op_norm = operator_norm_k(&p.psi);
    let raw = p.stacked().dual_gradient(cfg);
    finish(p, raw, op_norm, true)
}

fn finish<T: Real>(p: &Problem<T>, mut raw: EngineResult<T>, op_norm: T, accelerated: bool) -> Result<Solution<T>> {
    let lambda = raw.lambdas.swap_remove(0);
    let b = circular_convolve(&lambda, &p.psi)?;
    let u = p.u0.sub(&b)?;
    Ok(Solution {
        lambda,
        b,
        u,
        q: raw.q,
        iterations: raw.iterations,
        primal_value: raw.primal,
        dual_value: raw.dual,
        gap: raw.primal - raw.dual,
        converged: raw.converged,
        gap_history: raw.history,
        tau: raw.tau,
        sigma: raw.sigma,
        op_norm,
        method: raw.method,
        accelerated,
    })
}

/// Primal objective at `lambda`.
pub fn primal_value<T: Real>(p: &Problem<T>, lambda: &Grid<T>) -> Result<T> {
    let residual = p.u0.sub(&circular_convolve(lambda, &p.psi)?)?;
    let fidelity = gradient(&residual).iso_norm(PNorm::One);
    let penalty = match p.prior {
        Prior::L2 => p.alpha / T::two() * lambda.dot(lambda),
        Prior::L1 => p.alpha * lambda.norm1(),
    };
    Ok(fidelity + penalty)
}

fn psi_adjoint<T: Real>(psi: &Grid<T>, w: &Grid<T>) -> Result<Grid<T>> {
    circular_convolve(w, &psi.reflected())
}

/// Dual objective at a field with `||q||_∞ <= 1`.
///
/// For the L2 prior this is `−<u0, ∇ᵀq> − ||Ψᵀ∇ᵀq||²/(2α)`. For the L1 prior
/// the dual is finite only when `||Ψᵀ∇ᵀq||_∞ <= α`; `q` is first shrunk by
/// the largest factor in `(0, 1]` that achieves this and the linear term is
/// evaluated there.
pub fn dual_value<T: Real>(p: &Problem<T>, q: &Field<T>) -> Result<T> {
    let norm = q.iso_norm(PNorm::Inf);
    if norm > T::one() + T::lit(1e-12) {
        return Err(Error::InfeasibleDual {
            norm: norm.to_f64().unwrap_or(f64::INFINITY),
        });
    }
    let w = gradient_adjoint(q);
    let v = psi_adjoint(&p.psi, &w)?;
    let linear = -p.u0.dot(&w);
    Ok(match p.prior {
        Prior::L2 => linear - v.dot(&v) / (T::two() * p.alpha),
        Prior::L1 => {
            let s = v.norm_inf();
            let t = if s > p.alpha { p.alpha / s } else { T::one() };
            t * linear
        }
    })
}

/// Dual value at `sol.q` and the gap to the primal value at `sol.lambda`.
pub fn dual_value_and_gap<T: Real>(p: &Problem<T>, sol: &Solution<T>) -> Result<(T, T)> {
    let dual = dual_value(p, &sol.q)?;
    let primal = primal_value(p, &sol.lambda)?;
    Ok((dual, primal - dual))
}

/// Residuals of the L2 optimality conditions.
///
/// The first is `||λ + Ψᵀ∇ᵀq/α|| / ||λ||` (absolute when `λ = 0`). The second
/// is the largest misalignment between `q` and the unit normal
/// `∇(b − u0)/|∇(b − u0)|`, over pixels where that gradient exceeds
/// `1e-6` of its maximum.
pub fn optimality_residuals<T: Real>(p: &Problem<T>, sol: &Solution<T>) -> Result<(T, T)> {
    if p.prior != Prior::L2 {
        return Err(Error::RequiresL2Prior);
    }
    let v = psi_adjoint(&p.psi, &gradient_adjoint(&sol.q))?;
    let mismatch = sol.lambda.zip_map(&v, |l, g| l + g / p.alpha)?.norm2();
    let scale = sol.lambda.norm2();
    let r_primal = if scale > T::zero() { mismatch / scale } else { mismatch };

    let b = circular_convolve(&sol.lambda, &p.psi)?;
    let g = gradient(&b.sub(&p.u0)?);
    let mag = g.magnitude();
    let theta = T::lit(1e-6) * mag.norm_inf();
    let mut r_dual = T::zero();
    for (i, &m) in mag.data().iter().enumerate() {
        if m > theta && m > T::zero() {
            let e: T = (0..g.rank())
                .map(|k| {
                    let d = sol.q.channel(k).data()[i] - g.channel(k).data()[i] / m;
                    d * d
                })
                .sum();
            r_dual = r_dual.max(e.sqrt());
        }
    }
    Ok((r_primal, r_dual))
}
