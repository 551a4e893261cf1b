//! Parametric noise kernels and the shape functionals used to judge how
//! Gaussian a filtered white noise is.

use crate::error::{Error, Result};
use crate::grid::{Dims, Grid};
use crate::scalar::Real;

/// Description of a noise filter `ψ`.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec<T> {
    /// Impulse at the origin.
    Dirac { amplitude: T },
    /// Axis-aligned `C exp(-sum x_k^2 / 2σ_k^2)`, one `σ` per axis.
    Gaussian { sigmas: Vec<T>, amplitude: T },
    /// Constant on `|x_k| <= h_k`, zero elsewhere.
    IndicatorBox { half_extents: Vec<usize>, amplitude: T },
    /// Radial `C max(|x|, ε)^a`.
    PowerDecay { exponent: T, cutoff: T, amplitude: T },
    /// A sampled filter loaded from elsewhere, origin at index 0.
    FromGrid(Grid<T>),
}

impl<T: Real> KernelSpec<T> {
    pub fn dirac() -> Self {
        Self::Dirac { amplitude: T::one() }
    }

    pub fn gaussian(sigmas: &[T]) -> Self {
        Self::Gaussian {
            sigmas: sigmas.to_vec(),
            amplitude: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Self::Dirac { .. } | Self::FromGrid(_) => Ok(()),
            Self::Gaussian { sigmas, amplitude } => {
                if sigmas.is_empty() || sigmas.iter().any(|s| !(*s > T::zero())) {
                    return bad(format!("gaussian sigmas must be positive, got {sigmas:?}"));
                }
                if !(*amplitude > T::zero()) {
                    return bad(format!("gaussian amplitude must be positive, got {amplitude}"));
                }
                Ok(())
            }
            Self::IndicatorBox { half_extents, .. } => {
                if half_extents.is_empty() {
                    return bad("box needs one half-extent per axis".into());
                }
                Ok(())
            }
            Self::PowerDecay { cutoff, .. } => {
                if !(*cutoff >= T::one()) {
                    return bad(format!("power-decay cutoff must be >= 1, got {cutoff}"));
                }
                Ok(())
            }
        }
    }
}

/// Samples `spec` on `dims`. Offsets are taken in `(-n/2, n/2]` and stored
/// periodically, so offset `x` lands at index `x mod n`.
pub fn sample_kernel<T: Real>(spec: &KernelSpec<T>, dims: Dims) -> Result<Grid<T>> {
    spec.validate()?;
    let rank = dims.rank();
    let check_rank = |found: usize| {
        if found != rank {
            Err(Error::InvalidParameter(format!(
                "kernel has {found} axes but the grid has {rank}"
            )))
        } else {
            Ok(())
        }
    };
    let offsets = |c: &[usize]| -> [T; 3] {
        let mut x = [T::zero(); 3];
        for (k, &ck) in c.iter().enumerate() {
            x[k] = T::from_isize(dims.centered(k, ck)).expect("offset fits");
        }
        x
    };
    match spec {
        KernelSpec::Dirac { amplitude } => Ok(Grid::impulse(dims, *amplitude)),
        KernelSpec::Gaussian { sigmas, amplitude } => {
            check_rank(sigmas.len())?;
            Ok(Grid::from_fn(dims, |c| {
                let x = offsets(c);
                let e: T = sigmas
                    .iter()
                    .zip(&x)
                    .map(|(&s, &xk)| xk * xk / (T::two() * s * s))
                    .sum();
                *amplitude * (-e).exp()
            }))
        }
        KernelSpec::IndicatorBox {
            half_extents,
            amplitude,
        } => {
            check_rank(half_extents.len())?;
            for (k, &h) in half_extents.iter().enumerate() {
                if 2 * h + 1 > dims.extent(k) {
                    return Err(Error::InvalidParameter(format!(
                        "box half-extent {h} does not fit axis {k} of length {}",
                        dims.extent(k)
                    )));
                }
            }
            Ok(Grid::from_fn(dims, |c| {
                let inside = c
                    .iter()
                    .enumerate()
                    .all(|(k, &ck)| dims.centered(k, ck).unsigned_abs() <= half_extents[k]);
                if inside {
                    *amplitude
                } else {
                    T::zero()
                }
            }))
        }
        KernelSpec::PowerDecay {
            exponent,
            cutoff,
            amplitude,
        } => Ok(Grid::from_fn(dims, |c| {
            let x = offsets(c);
            let r = x[..rank].iter().map(|&v| v * v).sum::<T>().sqrt();
            *amplitude * r.max(*cutoff).powf(*exponent)
        })),
        KernelSpec::FromGrid(g) => {
            g.ensure_same_dims(dims)?;
            Ok(g.clone())
        }
    }
}

/// `||ψ||_3^3 / ||ψ||_2^3`, the kernel factor of the Berry–Esseen bound.
pub fn kernel_ratio_f<T: Real>(psi: &Grid<T>) -> Result<T> {
    let (cubes, squares) = psi.data().iter().fold((T::zero(), T::zero()), |(c, s), &v| {
        let a = v.abs();
        (c + a * a * a, s + a * a)
    });
    if squares == T::zero() {
        return Err(Error::ZeroKernel);
    }
    Ok(cubes / (squares * squares.sqrt()))
}

/// `g(σ) = (1 + σ sqrt(2π/3)) / max(1, σ sqrt(π) - 1)^{3/2}`.
pub fn gaussian_g<T: Real>(sigma: T) -> T {
    let num = T::one() + sigma * (T::two() * T::PI() / T::lit(3.0)).sqrt();
    let den = T::one().max(sigma * T::PI().sqrt() - T::one());
    num / (den * den.sqrt())
}

/// Product bound `prod_i g(σ_i)` on the kernel ratio of a unit-amplitude
/// axis-aligned Gaussian sampled on all of `Z^d`.
pub fn gaussian_g_bound<T: Real>(sigmas: &[T]) -> T {
    sigmas.iter().map(|&s| gaussian_g(s)).fold(T::one(), |a, b| a * b)
}

/// Kernel ratio on a grid large enough that doubling every extent moves it
/// by less than `1e-4`. Returns the ratio and the grid it was computed on.
pub fn converged_kernel_ratio<T: Real>(spec: &KernelSpec<T>, start: Dims) -> Result<(T, Dims)> {
    const MAX_SAMPLES: usize = 1 << 26;
    let tol = T::lit(1e-4);
    let mut dims = start;
    let mut f = kernel_ratio_f(&sample_kernel(spec, dims)?)?;
    loop {
        let doubled: Vec<usize> = dims.extents().iter().map(|n| 2 * n).collect();
        let next = Dims::new(&doubled)?;
        if next.len() > MAX_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "kernel ratio did not converge before reaching {dims}"
            )));
        }
        let g = kernel_ratio_f(&sample_kernel(spec, next)?)?;
        let done = (g - f).abs() < tol;
        dims = next;
        f = g;
        if done {
            return Ok((f, dims));
        }
    }
}

/// Starting grid for [`converged_kernel_ratio`] on a Gaussian: about four
/// standard deviations each side, rounded up to a power of two.
pub fn gaussian_start_dims<T: Real>(sigmas: &[T]) -> Result<Dims> {
    let extents: Vec<usize> = sigmas
        .iter()
        .map(|s| {
            let want = (T::lit(8.0) * *s).ceil().to_usize().unwrap_or(8).max(8);
            want.next_power_of_two()
        })
        .collect();
    Dims::new(&extents)
}
