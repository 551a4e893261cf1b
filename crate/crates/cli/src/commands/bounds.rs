//! Tables of the Gaussianity bound and of the operator-norm bounds.

use serde::Serialize;
use stripefree::bounds::{alpha_for_target, compute_h_filters};
use stripefree::kernels::{converged_kernel_ratio, gaussian_start_dims, KernelSpec};
use stripefree::noise::{berry_esseen_coefficient, Marginal};
use stripefree::Dims;

use super::{load_filters, report_path, OutputDir};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::image_io::read_image;
use crate::report::write_csv;

/// Published capped bounds for Bernoulli–uniform noise filtered by a Gaussian
/// with `σ_2 = 2`; rows `γ`, columns `σ_1`.
pub const PUBLISHED_GAMMAS: [f64; 6] = [0.001, 0.01, 0.05, 0.1, 0.5, 1.0];
pub const PUBLISHED_SIGMA1S: [f64; 5] = [2.0, 8.0, 32.0, 64.0, 128.0];
pub const PUBLISHED_TABLE: [[f64; 5]; 6] = [
    [1.00, 1.00, 1.00, 1.00, 1.00],
    [1.00, 1.00, 0.98, 0.82, 0.69],
    [0.88, 0.62, 0.44, 0.37, 0.31],
    [0.62, 0.44, 0.31, 0.26, 0.22],
    [0.28, 0.20, 0.14, 0.12, 0.10],
    [0.20, 0.14, 0.10, 0.08, 0.07],
];

fn published(gamma: f64, sigma1: f64, sigma2: f64) -> Option<f64> {
    if sigma2 != 2.0 {
        return None;
    }
    let r = PUBLISHED_GAMMAS.iter().position(|&g| g == gamma)?;
    let c = PUBLISHED_SIGMA1S.iter().position(|&s| s == sigma1)?;
    Some(PUBLISHED_TABLE[r][c])
}

/// One `(γ, σ_1)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableCell {
    pub gamma: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// `0.56 ρ / σ³` of the marginal.
    pub coefficient: f64,
    /// `||ψ||_3^3 / ||ψ||_2^3` on a grid large enough to be converged.
    pub kernel_ratio: f64,
    pub grid: String,
    /// `min(1, coefficient · kernel_ratio)`.
    pub bound: f64,
    pub published: Option<f64>,
}

/// Cells in row-major order (`γ` outer, `σ_1` inner).
pub fn bound_table(gammas: &[f64], sigma1s: &[f64], sigma2: f64) -> CliResult<Vec<TableCell>> {
    let mut ratios = Vec::with_capacity(sigma1s.len());
    for &s1 in sigma1s {
        let sigmas = [s1, sigma2];
        let spec = KernelSpec::gaussian(&sigmas);
        let (f, dims) = converged_kernel_ratio(&spec, gaussian_start_dims(&sigmas)?)?;
        ratios.push((f, dims));
    }
    let mut cells = Vec::with_capacity(gammas.len() * sigma1s.len());
    for &gamma in gammas {
        let coefficient = berry_esseen_coefficient(&Marginal::BernoulliUniform { gamma });
        for (&sigma1, &(f, dims)) in sigma1s.iter().zip(&ratios) {
            cells.push(TableCell {
                gamma,
                sigma1,
                sigma2,
                coefficient,
                kernel_ratio: f,
                grid: dims.to_string(),
                bound: (coefficient * f).min(1.0),
                published: published(gamma, sigma1, sigma2),
            });
        }
    }
    Ok(cells)
}

/// Bounds and suggested weight of one filter at one noise fraction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterRow {
    pub filter: usize,
    pub sqrt_n_max_axis_bound: f64,
    pub sqrt_n_tight_bound: f64,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BoundsOutcome {
    pub table: Vec<TableCell>,
    pub filters: Vec<FilterRow>,
    pub table_path: std::path::PathBuf,
}

pub fn run(cfg: &RunConfig) -> CliResult<BoundsOutcome> {
    let b = &cfg.bounds;
    let table = bound_table(&b.gammas, &b.sigma1s, b.sigma2)?;
    let out = OutputDir::create(cfg)?;
    let table_path = report_path(cfg, &out, "table1.csv");
    write_csv(&table_path, &table)?;

    let mut rows = Vec::new();
    if !cfg.filters.is_empty() {
        let image = cfg.input.as_deref().map(read_image).transpose()?;
        let dims = match (&image, &cfg.simulate.dims) {
            (Some(u), _) => u.dims(),
            (None, Some(d)) => Dims::new(d)?,
            (None, None) => {
                return Err(CliError::Config(
                    "filter bounds need an `input` image or `dims`".into(),
                ))
            }
        };
        for (i, psi) in load_filters(&cfg.filters, dims)?.iter().enumerate() {
            let h = compute_h_filters(psi)?;
            let row = |eta: Option<f64>, alpha: Option<f64>| FilterRow {
                filter: i + 1,
                sqrt_n_max_axis_bound: h.opnorm(),
                sqrt_n_tight_bound: h.opnorm_upper(),
                eta,
                alpha,
            };
            match &image {
                Some(u0) => {
                    for &eta in &b.etas {
                        rows.push(row(Some(eta), Some(alpha_for_target(u0, psi, eta)?.alpha)));
                    }
                }
                None => rows.push(row(None, None)),
            }
        }
        write_csv(&out.path("filters.csv"), &rows)?;
    }
    Ok(BoundsOutcome {
        table,
        filters: rows,
        table_path,
    })
}
