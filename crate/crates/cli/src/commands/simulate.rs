//! Synthetic noisy images with known ground truth.

use serde::Serialize;
use stripefree::noise::{sample_stationary, Marginal};
use stripefree::{Dims, Grid};

use super::{load_filters, report_path, OutputDir};
use crate::config::{KernelConfig, PhantomKind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::image_io::read_image;
use crate::metrics::anisotropy_ratio;
use crate::phantom::shapes;
use crate::report::write_json;

/// Extents used when neither `dims` nor `input` is configured.
pub const DEFAULT_DIMS: [usize; 2] = [64, 64];

/// `ψ_i ⋆ λ_i` for every filter, filter `i` (from 0) drawn with seed
/// `seed + i`.
pub fn stationary_components(filters: &[Grid<f64>], marginal: &Marginal, seed: u64) -> CliResult<Vec<Grid<f64>>> {
    filters
        .iter()
        .enumerate()
        .map(|(i, psi)| Ok(sample_stationary(marginal, psi, seed.wrapping_add(i as u64))?.1))
        .collect()
}

/// Factor that brings `||b||` to `fraction · ||clean − mean(clean)||`; one
/// when `b` vanishes.
pub fn fraction_scale(clean: &Grid<f64>, b: &Grid<f64>, fraction: f64) -> f64 {
    let norm = b.norm2();
    if norm == 0.0 {
        1.0
    } else {
        fraction * clean.centered().norm2() / norm
    }
}

/// `clean + b`, or `clean · exp(b)` in multiplicative mode.
pub fn corrupt(clean: &Grid<f64>, b: &Grid<f64>, multiplicative: bool) -> CliResult<Grid<f64>> {
    Ok(if multiplicative {
        clean.zip_map(b, |u, n| u * n.exp())?
    } else {
        clean.add(b)?
    })
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub clean: Grid<f64>,
    pub noisy: Grid<f64>,
    pub noise: Grid<f64>,
    pub components: Vec<Grid<f64>>,
}

/// Builds the clean image, the noise and the observation described by `cfg`.
pub fn simulate(cfg: &RunConfig) -> CliResult<Simulation> {
    if cfg.filters.is_empty() {
        return Err(CliError::Config("simulate needs at least one [filter]".into()));
    }
    let clean = match (&cfg.input, &cfg.simulate.dims) {
        (Some(path), _) => read_image(path)?,
        (None, dims) => {
            let dims = Dims::new(dims.as_deref().unwrap_or(&DEFAULT_DIMS))?;
            match cfg.simulate.phantom {
                PhantomKind::Shapes => shapes(dims, cfg.simulate.texture)?,
                PhantomKind::Flat => Grid::filled(dims, 1.0),
            }
        }
    };
    if let (Some(_), Some(d)) = (&cfg.input, &cfg.simulate.dims) {
        if d.as_slice() != clean.dims().extents() {
            return Err(CliError::Config(format!(
                "dims {d:?} disagree with the input image {}",
                clean.dims()
            )));
        }
    }
    let psis = load_filters(&cfg.filters, clean.dims())?;
    let mut components = stationary_components(&psis, &cfg.simulate.marginal, cfg.seed)?;
    let mut noise = Grid::zeros(clean.dims());
    for c in &components {
        noise.axpy(1.0, c);
    }
    if let Some(fraction) = cfg.simulate.noise_fraction {
        let s = fraction_scale(&clean, &noise, fraction);
        noise = noise.scaled(s);
        components = components.iter().map(|c| c.scaled(s)).collect();
    }
    let noisy = corrupt(&clean, &noise, cfg.multiplicative)?;
    Ok(Simulation {
        clean,
        noisy,
        noise,
        components,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateMetadata<'a> {
    pub config: &'a RunConfig,
    pub seed: u64,
    pub gamma: Option<f64>,
    pub sigmas: Vec<Option<Vec<f64>>>,
    pub noise_norm: f64,
    pub noisy_norm: f64,
    /// `||b|| / ||u0||`.
    pub noise_fraction_of_noisy: f64,
    /// Mean squared increment of `b` along the last axis over that along
    /// axis 0; large for streaks parallel to axis 0.
    pub anisotropy_ratio: f64,
    pub outputs: Vec<String>,
    pub output_sha256: String,
}

#[derive(Clone, Debug)]
pub struct SimulateOutcome {
    pub simulation: Simulation,
    pub anisotropy_ratio: f64,
    pub metadata_path: std::path::PathBuf,
    pub output_sha256: String,
}

pub fn run(cfg: &RunConfig) -> CliResult<SimulateOutcome> {
    let sim = simulate(cfg)?;
    let mut out = OutputDir::create(cfg)?;
    let mut outputs = vec![
        out.image("clean", &sim.clean)?,
        out.image("noisy", &sim.noisy)?,
        out.image("noise", &sim.noise)?,
    ];
    if sim.components.len() > 1 {
        for (i, c) in sim.components.iter().enumerate() {
            outputs.push(out.image(&format!("noise_{}", i + 1), c)?);
        }
    }
    let anisotropy = anisotropy_ratio(&sim.noise);
    let hash = out.hash();
    let gamma = match cfg.simulate.marginal {
        Marginal::BernoulliUniform { gamma } => Some(gamma),
        _ => None,
    };
    let meta = SimulateMetadata {
        config: cfg,
        seed: cfg.seed,
        gamma,
        sigmas: cfg
            .filters
            .iter()
            .map(|f| match &f.kernel {
                KernelConfig::Gaussian { sigmas, .. } => Some(sigmas.clone()),
                _ => None,
            })
            .collect(),
        noise_norm: sim.noise.norm2(),
        noisy_norm: sim.noisy.norm2(),
        noise_fraction_of_noisy: sim.noise.norm2() / sim.noisy.norm2(),
        anisotropy_ratio: anisotropy,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        output_sha256: hash.clone(),
    };
    let path = report_path(cfg, &out, "metadata.json");
    write_json(&path, &meta)?;
    Ok(SimulateOutcome {
        simulation: sim,
        anisotropy_ratio: anisotropy,
        metadata_path: path,
        output_sha256: hash,
    })
}
