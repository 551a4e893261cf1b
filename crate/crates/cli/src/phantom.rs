//! Synthetic ground-truth images.

use stripefree::kernels::{sample_kernel, KernelSpec};
use stripefree::noise::{sample_stationary, Marginal};
use stripefree::{Dims, Grid, Result};

/// Seed of the smooth random texture; fixed so that every phantom of a given
/// size is the same image.
pub const TEXTURE_SEED: u64 = 99;

/// Positive piecewise-smooth test image.
///
/// On a 64² grid: a background of 1, a disc of height 1 and squared radius 200
/// at the centre, a 12 × 16 rectangle of height 0.5, a ramp of 0.3 along axis
/// 1, and `texture` times a smooth Gaussian texture normalized to unit peak.
/// Other sizes rescale the geometry to the unit cube.
pub fn shapes(dims: Dims, texture: f64) -> Result<Grid<f64>> {
    let rank = dims.rank();
    let last = rank - 1;
    let base = Grid::from_fn(dims, |c| {
        let s: Vec<f64> = (0..rank).map(|k| c[k] as f64 * 64.0 / dims.extent(k) as f64).collect();
        let r2: f64 = s.iter().map(|v| (v - 32.0) * (v - 32.0)).sum();
        let in_rect = if rank == 1 {
            (40.0..56.0).contains(&s[0])
        } else {
            (8.0..20.0).contains(&s[0]) && (40.0..56.0).contains(&s[1])
        };
        let shape = if r2 < 200.0 {
            1.0
        } else if in_rect {
            0.5
        } else {
            0.0
        };
        1.0 + shape + 0.3 * c[last] as f64 / dims.extent(last) as f64
    });
    if texture == 0.0 {
        return Ok(base);
    }
    let kernel = sample_kernel(&KernelSpec::gaussian(&vec![1.0; rank]), dims)?;
    let (_, tex) = sample_stationary(&Marginal::Gaussian { sigma: 1.0 }, &kernel, TEXTURE_SEED)?;
    let peak = tex.norm_inf();
    let mut out = base;
    out.axpy(texture / peak, &tex);
    Ok(out)
}
