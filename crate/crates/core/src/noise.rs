//! White-noise marginals, stationary noise `B = ψ ⋆ Λ`, and how far a single
//! pixel of `B` is from a Gaussian.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{Dims, Grid};
use crate::kernels::kernel_ratio_f;
use crate::ops::circular_convolve;
use crate::scalar::Real;

/// Berry–Esseen constant.
pub const BERRY_ESSEEN_C0: f64 = 0.56;

/// Generator behind every seeded draw in the crate.
pub type NoiseRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> NoiseRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zero-mean law of the white-noise samples `Λ(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Marginal {
    Gaussian { sigma: f64 },
    Uniform { half_width: f64 },
    /// Zero with probability `1 - γ`, uniform on `[-1, 1]` otherwise.
    BernoulliUniform { gamma: f64 },
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Gaussian { sigma } => sigma > 0.0 && sigma.is_finite(),
            Marginal::Uniform { half_width } => half_width > 0.0 && half_width.is_finite(),
            Marginal::BernoulliUniform { gamma } => gamma > 0.0 && gamma <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid marginal {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Gaussian { sigma } => Normal::new(0.0, sigma).expect("validated sigma").sample(rng),
            Marginal::Uniform { half_width } => rng.random_range(-half_width..=half_width),
            Marginal::BernoulliUniform { gamma } => {
                if rng.random::<f64>() < gamma {
                    rng.random_range(-1.0..=1.0)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Second moment `σ²` and third absolute moment `ρ`, in closed form.
pub fn marginal_moments(m: &Marginal) -> (f64, f64) {
    match *m {
        Marginal::Gaussian { sigma } => (sigma * sigma, sigma.powi(3) * (8.0 / std::f64::consts::PI).sqrt()),
        Marginal::Uniform { half_width: a } => (a * a / 3.0, a.powi(3) / 4.0),
        Marginal::BernoulliUniform { gamma } => (gamma / 3.0, gamma / 4.0),
    }
}

/// `C_0 ρ / σ³`, the marginal part of the bound.
pub fn berry_esseen_coefficient(m: &Marginal) -> f64 {
    let (var, rho) = marginal_moments(m);
    BERRY_ESSEEN_C0 * rho / var.powf(1.5)
}

/// `min(1, C_0 (ρ/σ³) ||ψ||_3^3 / ||ψ||_2^3)`.
pub fn berry_esseen_bound<T: Real>(m: &Marginal, psi: &Grid<T>) -> Result<f64> {
    m.validate()?;
    let f = kernel_ratio_f(psi)?.to_f64().expect("finite ratio");
    Ok((berry_esseen_coefficient(m) * f).min(1.0))
}

/// i.i.d. draws of `m` on every pixel of `dims`.
pub fn sample_white<T: Real, R: Rng + ?Sized>(m: &Marginal, dims: Dims, rng: &mut R) -> Grid<T> {
    let data = (0..dims.len()).map(|_| T::lit(m.sample(rng))).collect();
    Grid::new(dims, data).expect("length matches dims")
}

/// White noise `λ` drawn from `seed` and the stationary field `b = ψ ⋆ λ`.
pub fn sample_stationary<T: Real>(m: &Marginal, psi: &Grid<T>, seed: u64) -> Result<(Grid<T>, Grid<T>)> {
    m.validate()?;
    let mut rng = seeded_rng(seed);
    let lambda = sample_white(m, psi.dims(), &mut rng);
    let b = circular_convolve(&lambda, psi)?;
    Ok((lambda, b))
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov distance between the empirical cdf of `samples` and `Φ`.
pub fn ks_distance_to_normal(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // ties jump the empirical cdf in one step
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let phi = normal_cdf(x);
        d = d.max((phi - i as f64 / n).abs()).max((j as f64 / n - phi).abs());
        i = j;
    }
    Ok(d)
}

/// Dvoretzky–Kiefer–Wolfowitz radius: with probability `1 - δ` the empirical
/// cdf of `n` i.i.d. samples is within this distance of the true cdf.
pub fn dkw_slack(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Outcome of a Monte-Carlo Gaussianity check.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianityReport {
    pub bound: f64,
    pub ks_distance: f64,
    pub sample_count: usize,
    pub seed: u64,
}

/// Pixels of independent realizations of `ψ ⋆ Λ`, divided by `s = σ ||ψ||_2`.
///
/// Each realization contributes the pixels of a sublattice with the given
/// per-axis spacing; the spacing should exceed the kernel's correlation
/// length so the collected samples are close to independent.
pub fn standardized_pixel_samples<T: Real>(
    m: &Marginal,
    psi: &Grid<T>,
    seed: u64,
    count: usize,
    spacing: &[usize],
) -> Result<Vec<f64>> {
    m.validate()?;
    let dims = psi.dims();
    if spacing.len() != dims.rank() || spacing.contains(&0) {
        return Err(Error::InvalidParameter(format!("bad sublattice spacing {spacing:?}")));
    }
    let (var, _) = marginal_moments(m);
    let s = var.sqrt() * psi.norm2().to_f64().expect("finite norm");
    if s == 0.0 {
        return Err(Error::ZeroKernel);
    }
    let sites: Vec<usize> = (0..dims.len())
        .filter(|&i| {
            let c = dims.coords_of(i);
            (0..dims.rank()).all(|k| c[k] % spacing[k] == 0)
        })
        .collect();
    let plan = crate::spectral::FourierPlan::new(dims);
    let kernel = plan.forward(psi);
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let lambda: Grid<T> = sample_white(m, dims, &mut rng);
        let mut spec = plan.forward(&lambda);
        for (a, b) in spec.data_mut().iter_mut().zip(kernel.data()) {
            *a *= *b;
        }
        let b = plan.inverse_real(&spec);
        for &i in &sites {
            if out.len() == count {
                break;
            }
            out.push(b.data()[i].to_f64().expect("finite sample") / s);
        }
    }
    Ok(out)
}

/// Berry–Esseen bound next to the empirical KS distance of `count`
/// standardized pixel samples.
pub fn gaussianity_report<T: Real>(
    m: &Marginal,
    psi: &Grid<T>,
    seed: u64,
    count: usize,
    spacing: &[usize],
) -> Result<GaussianityReport> {
    let bound = berry_esseen_bound(m, psi)?;
    let samples = standardized_pixel_samples(m, psi, seed, count, spacing)?;
    Ok(GaussianityReport {
        bound,
        ks_distance: ks_distance_to_normal(&samples)?,
        sample_count: samples.len(),
        seed,
    })
}
