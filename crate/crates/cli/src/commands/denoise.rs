//! End-to-end removal of a bank of stationary noises.
//!
//! Each filter gets a weight `α_i`, either given or derived from a noise
//! fraction `η_i`. Under the quadratic prior the bank is merged into one
//! filter, solved once at weight 1, and the removed noise is split back into
//! its components. Multiplicative mode runs the same pipeline on `ln u0`.

use serde::Serialize;
use stripefree::bounds::{alpha_for_target, compute_h_filters};
use stripefree::multi::{merge_bank, split_components, FilterBank};
use stripefree::solver::{solve, Prior, Problem, SolverConfig};
use stripefree::Grid;

use super::{load_filters, report_path, require_input, OutputDir};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::image_io::read_image;
use crate::metrics::{psnr, snr};
use crate::report::write_json;

/// How the weight of one filter is fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    /// Target fraction `||b_i|| / ||u0||`.
    Eta(f64),
    Alpha(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterReport {
    pub eta: Option<f64>,
    pub alpha: f64,
    /// `√n max_{k,ξ} |ĥ_k(ξ)|`.
    pub sqrt_n_max_axis_bound: f64,
    /// `√n max_ξ (Σ_k |ĥ_k(ξ)|²)^{1/2}`, valid for every dual field.
    pub sqrt_n_tight_bound: f64,
    /// `min(√n max_axis / α, ||u0 − mean||)`.
    pub predicted_b_norm: f64,
    pub certified_b_norm: f64,
    pub b_norm: f64,
}

#[derive(Clone, Debug)]
pub struct Denoised {
    pub u: Grid<f64>,
    pub b: Grid<f64>,
    pub components: Vec<Grid<f64>>,
    pub filters: Vec<FilterReport>,
    pub iterations: usize,
    pub gap: f64,
    pub relative_gap: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub converged: bool,
}

/// Removes the noise described by `bank` from `u0` (already in the working
/// domain).
pub fn denoise_image(
    u0: &Grid<f64>,
    bank: &[(Grid<f64>, Weight)],
    prior: Prior,
    cfg: &SolverConfig<f64>,
) -> CliResult<Denoised> {
    if bank.is_empty() {
        return Err(CliError::Config("at least one [filter] is required".into()));
    }
    if prior == Prior::L1 && bank.len() > 1 {
        return Err(CliError::Config("the l1 prior handles a single filter".into()));
    }
    let cap = u0.centered().norm2();
    let sqrt_n = (u0.len() as f64).sqrt();
    let mut reports = Vec::with_capacity(bank.len());
    for (psi, weight) in bank {
        let h = compute_h_filters(psi)?;
        let (eta, alpha) = match *weight {
            Weight::Eta(eta) => (Some(eta), alpha_for_target(u0, psi, eta)?.alpha),
            Weight::Alpha(alpha) => (None, alpha),
        };
        reports.push(FilterReport {
            eta,
            alpha,
            sqrt_n_max_axis_bound: h.opnorm(),
            sqrt_n_tight_bound: h.opnorm_upper(),
            predicted_b_norm: (sqrt_n * h.bound_paper / alpha).min(cap),
            certified_b_norm: (sqrt_n * h.bound_tight / alpha).min(cap),
            b_norm: 0.0,
        });
    }
    let filters = FilterBank::new(bank.iter().zip(&reports).map(|((psi, _), r)| (psi.clone(), r.alpha)).collect())?;

    let problem = match prior {
        Prior::L2 => {
            let merged = merge_bank(&filters)?;
            Problem::new(u0.clone(), merged.psi, merged.alpha, Prior::L2)?
        }
        Prior::L1 => Problem::new(u0.clone(), bank[0].0.clone(), reports[0].alpha, Prior::L1)?,
    };
    let sol = solve(&problem, cfg)?;
    let components: Vec<Grid<f64>> = match prior {
        Prior::L2 => split_components(&sol.b, &filters)?.into_iter().map(|c| c.b).collect(),
        Prior::L1 => vec![sol.b.clone()],
    };
    for (r, c) in reports.iter_mut().zip(&components) {
        r.b_norm = c.norm2();
    }
    Ok(Denoised {
        relative_gap: sol.relative_gap(),
        u: sol.u,
        b: sol.b,
        components,
        filters: reports,
        iterations: sol.iterations,
        gap: sol.gap,
        primal_value: sol.primal_value,
        dual_value: sol.dual_value,
        converged: sol.converged,
    })
}

/// Natural log of a strictly positive image.
pub fn log_image(u: &Grid<f64>) -> CliResult<Grid<f64>> {
    if let Some(v) = u.data().iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
        return Err(CliError::Config(format!(
            "multiplicative mode needs strictly positive pixels, found {v}"
        )));
    }
    Ok(u.map(f64::ln))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    pub snr_db: f64,
    pub psnr_db: f64,
    pub input_snr_db: f64,
    pub input_psnr_db: f64,
    pub definition: &'static str,
}

pub const QUALITY_DEFINITION: &str = "SNR = 20 log10(||ref - mean(ref)|| / ||u - ref||); \
PSNR = 10 log10(range(ref)^2 / mean((u - ref)^2)); both in dB";

#[derive(Clone, Debug, Serialize)]
pub struct DenoiseReport<'a> {
    pub config: &'a RunConfig,
    /// `additive`, or `log` when the solver ran on `ln u0`.
    pub domain: &'static str,
    pub filters: Vec<FilterReport>,
    pub u0_norm: f64,
    pub b_norm: f64,
    pub iterations: usize,
    pub gap: f64,
    pub relative_gap: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub converged: bool,
    pub quality: Option<QualityReport>,
    pub outputs: Vec<String>,
    pub output_sha256: String,
}

/// Result of [`run`].
#[derive(Clone, Debug)]
pub struct DenoiseOutcome {
    pub denoised: Denoised,
    pub quality: Option<QualityReport>,
    pub report_path: std::path::PathBuf,
    pub output_sha256: String,
}

pub fn run(cfg: &RunConfig) -> CliResult<DenoiseOutcome> {
    let input = require_input(cfg)?;
    let observed = read_image(input)?;
    if cfg.filters.is_empty() {
        return Err(CliError::Config("at least one [filter] is required".into()));
    }
    let mut weights = Vec::with_capacity(cfg.filters.len());
    for (i, f) in cfg.filters.iter().enumerate() {
        weights.push(match (f.eta, f.alpha) {
            (Some(eta), None) => Weight::Eta(eta),
            (None, Some(alpha)) => Weight::Alpha(alpha),
            _ => return Err(CliError::Config(format!("filter {}: give exactly one of eta or alpha", i + 1))),
        });
    }
    let reference = cfg.reference.as_deref().map(read_image).transpose()?;
    if let Some(r) = &reference {
        r.ensure_same_dims(observed.dims())?;
    }
    let u0 = if cfg.multiplicative { log_image(&observed)? } else { observed.clone() };
    let psis = load_filters(&cfg.filters, u0.dims())?;
    let bank: Vec<_> = psis.into_iter().zip(weights).collect();
    let result = denoise_image(&u0, &bank, cfg.prior, &cfg.solver.to_core())?;

    let mut out = OutputDir::create(cfg)?;
    let mut outputs = Vec::new();
    let u = if cfg.multiplicative { result.u.map(f64::exp) } else { result.u.clone() };
    outputs.push(out.image("u", &u)?);
    outputs.push(out.image("b", &result.b)?);
    if cfg.multiplicative {
        outputs.push(out.image("factor", &result.b.map(f64::exp))?);
    }
    if result.components.len() > 1 {
        for (i, c) in result.components.iter().enumerate() {
            outputs.push(out.image(&format!("b_{}", i + 1), c)?);
        }
    }
    let quality = match &reference {
        Some(r) => Some(QualityReport {
            snr_db: snr(&u, r)?,
            psnr_db: psnr(&u, r)?,
            input_snr_db: snr(&observed, r)?,
            input_psnr_db: psnr(&observed, r)?,
            definition: QUALITY_DEFINITION,
        }),
        None => None,
    };
    let hash = out.hash();
    let report = DenoiseReport {
        config: cfg,
        domain: if cfg.multiplicative { "log" } else { "additive" },
        filters: result.filters.clone(),
        u0_norm: u0.norm2(),
        b_norm: result.b.norm2(),
        iterations: result.iterations,
        gap: result.gap,
        relative_gap: result.relative_gap,
        primal_value: result.primal_value,
        dual_value: result.dual_value,
        converged: result.converged,
        quality: quality.clone(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        output_sha256: hash.clone(),
    };
    let path = report_path(cfg, &out, "report.json");
    write_json(&path, &report)?;
    if !result.converged {
        return Err(CliError::NotConverged(format!(
            "relative gap {:.3e} after {} iterations (tolerance {:.1e}); outputs written",
            result.relative_gap, result.iterations, cfg.solver.gap_tolerance
        )));
    }
    Ok(DenoiseOutcome {
        denoised: result,
        quality,
        report_path: path,
        output_sha256: hash,
    })
}
