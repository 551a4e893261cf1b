//! Removed-noise norm as a function of the weight `α`, against its bounds.
//!
//! The curve always uses the quadratic prior, for which the bounds hold. When
//! a reference image is configured, a golden-section search on `log10 α`
//! looks for the weight with the best SNR under the configured prior.

use serde::Serialize;
use stripefree::bounds::{compute_h_filters, lower_bound};
use stripefree::solver::{solve, solve_from, Prior, Problem, Solution, SolverConfig};
use stripefree::Grid;

use super::{load_filters, report_path, require_input, OutputDir};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::image_io::read_image;
use crate::metrics::{best_probe, golden_section_max, psnr, snr};
use crate::report::{write_csv, write_json};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub b_norm: f64,
    /// `√n max_ξ (Σ_k |ĥ_k(ξ)|²)^{1/2} / α`.
    pub upper_bound: f64,
    /// `√n max_{k,ξ} |ĥ_k(ξ)| / α`.
    pub upper_bound_max_axis: f64,
    /// `||u0 − mean(u0)||`.
    pub cap: f64,
    /// Present where the lower bound is valid.
    pub lower_bound: Option<f64>,
    /// `min(upper_bound, cap) / b_norm`.
    pub ratio: f64,
    pub gap: f64,
    pub relative_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Weight at which the tight upper bound meets the cap.
pub fn cap_alpha(u0: &Grid<f64>, psi: &Grid<f64>) -> CliResult<f64> {
    let cap = u0.centered().norm2();
    if cap == 0.0 {
        return Err(CliError::Core(stripefree::Error::ZeroImage));
    }
    Ok(compute_h_filters(psi)?.opnorm_upper() / cap)
}

/// `count` log-spaced weights from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}

/// Solves at every weight, largest first, each run warm started from the
/// previous one. Rows come back in increasing `α`.
pub fn sweep_curve(u0: &Grid<f64>, psi: &Grid<f64>, alphas: &[f64], cfg: &SolverConfig<f64>) -> CliResult<Vec<SweepRow>> {
    let h = compute_h_filters(psi)?;
    let cap = u0.centered().norm2();
    let mut order: Vec<f64> = alphas.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::with_capacity(order.len());
    let mut warm: Option<Solution<f64>> = None;
    for alpha in order {
        let p = Problem::l2(u0.clone(), psi.clone(), alpha)?;
        let sol = match &warm {
            Some(w) => solve_from(&p, cfg, Some(&w.lambda), Some(&w.q))?,
            None => solve(&p, cfg)?,
        };
        let upper = h.opnorm_upper() / alpha;
        let lower = match lower_bound(u0, psi, alpha) {
            Ok(l) if l.applicable => Some(l.bound),
            _ => None,
        };
        let b_norm = sol.b.norm2();
        rows.push(SweepRow {
            alpha,
            b_norm,
            upper_bound: upper,
            upper_bound_max_axis: h.opnorm() / alpha,
            cap,
            lower_bound: lower,
            ratio: upper.min(cap) / b_norm,
            gap: sol.gap,
            relative_gap: sol.relative_gap(),
            iterations: sol.iterations,
            converged: sol.converged,
        });
        warm = Some(sol);
    }
    rows.reverse();
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyRow {
    pub evaluation: usize,
    pub alpha: f64,
    pub snr_db: f64,
    pub psnr_db: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Golden-section search for the SNR-optimal weight over `[lo, hi]` using
/// `evaluations` cold solves.
#[allow(clippy::too_many_arguments)]
pub fn dichotomy(
    u0: &Grid<f64>,
    psi: &Grid<f64>,
    reference: &Grid<f64>,
    prior: Prior,
    lo: f64,
    hi: f64,
    evaluations: usize,
    cfg: &SolverConfig<f64>,
) -> CliResult<Vec<DichotomyRow>> {
    let mut rows = Vec::with_capacity(evaluations);
    golden_section_max(
        |x| -> CliResult<f64> {
            let alpha = 10f64.powf(x);
            let sol = solve(&Problem::new(u0.clone(), psi.clone(), alpha, prior)?, cfg)?;
            let value = snr(&sol.u, reference)?;
            rows.push(DichotomyRow {
                evaluation: rows.len() + 1,
                alpha,
                snr_db: value,
                psnr_db: psnr(&sol.u, reference)?,
                iterations: sol.iterations,
                converged: sol.converged,
            });
            Ok(value)
        },
        lo.log10(),
        hi.log10(),
        evaluations,
    )?;
    Ok(rows)
}

/// Row with the highest SNR.
pub fn best_row(rows: &[DichotomyRow]) -> Option<&DichotomyRow> {
    let probes: Vec<_> = rows
        .iter()
        .map(|r| crate::metrics::Probe {
            x: r.alpha,
            value: r.snr_db,
        })
        .collect();
    let best = best_probe(&probes)?;
    rows.iter().find(|r| r.alpha == best.x)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary<'a> {
    pub config: &'a RunConfig,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub cap_alpha: f64,
    pub points: usize,
    pub unconverged_points: usize,
    pub max_ratio_below_cap: Option<f64>,
    pub best: Option<DichotomyRow>,
    pub snr_definition: &'static str,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub curve: Vec<SweepRow>,
    pub dichotomy: Vec<DichotomyRow>,
    pub best: Option<DichotomyRow>,
}

pub fn run(cfg: &RunConfig) -> CliResult<SweepOutcome> {
    let u0 = read_image(require_input(cfg)?)?;
    if cfg.filters.len() != 1 {
        return Err(CliError::Config(format!("sweep takes exactly one [filter], got {}", cfg.filters.len())));
    }
    let psi = load_filters(&cfg.filters, u0.dims())?.remove(0);
    let reference = cfg.reference.as_deref().map(read_image).transpose()?;
    if let Some(r) = &reference {
        r.ensure_same_dims(u0.dims())?;
    }
    let pivot = cap_alpha(&u0, &psi)?;
    let lo = cfg.sweep.alpha_min.unwrap_or(pivot * 1e-3);
    let hi = cfg.sweep.alpha_max.unwrap_or(pivot * 1e3);
    if lo >= hi {
        return Err(CliError::Config(format!("empty alpha range [{lo}, {hi}]")));
    }
    let solver = cfg.solver.to_core();
    let curve = if cfg.sweep.alpha_count > 0 {
        sweep_curve(&u0, &psi, &log_grid(lo, hi, cfg.sweep.alpha_count), &solver)?
    } else {
        Vec::new()
    };
    let rows = match &reference {
        Some(r) => dichotomy(&u0, &psi, r, cfg.prior, lo, hi, cfg.sweep.dichotomy_evaluations, &solver)?,
        None => Vec::new(),
    };
    let best = best_row(&rows).cloned();

    let out = OutputDir::create(cfg)?;
    if !curve.is_empty() {
        write_csv(&report_path(cfg, &out, "sweep.csv"), &curve)?;
    }
    if !rows.is_empty() {
        write_csv(&out.path("dichotomy.csv"), &rows)?;
    }
    let unconverged = curve.iter().filter(|r| !r.converged).count() + rows.iter().filter(|r| !r.converged).count();
    let summary = SweepSummary {
        config: cfg,
        alpha_min: lo,
        alpha_max: hi,
        cap_alpha: pivot,
        points: curve.len(),
        unconverged_points: unconverged,
        max_ratio_below_cap: curve
            .iter()
            .filter(|r| r.upper_bound < r.cap)
            .map(|r| r.ratio)
            .max_by(f64::total_cmp),
        best: best.clone(),
        snr_definition: super::denoise::QUALITY_DEFINITION,
    };
    write_json(&out.path("sweep.json"), &summary)?;
    if unconverged > 0 {
        return Err(CliError::NotConverged(format!(
            "{unconverged} solves stopped before the gap tolerance; outputs written"
        )));
    }
    Ok(SweepOutcome {
        curve,
        dichotomy: rows,
        best,
    })
}
