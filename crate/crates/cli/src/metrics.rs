//! Image quality measures and the one-dimensional search used to tune `α`.

use stripefree::{Grid, Result};

/// `20 log10(||ref − mean(ref)|| / ||u − ref||)`, in dB.
pub fn snr(u: &Grid<f64>, reference: &Grid<f64>) -> Result<f64> {
    let err = u.sub(reference)?.norm2();
    Ok(20.0 * (reference.centered().norm2() / err).log10())
}

/// Peak SNR with the dynamic range of `reference` as peak, in dB.
pub fn psnr(u: &Grid<f64>, reference: &Grid<f64>) -> Result<f64> {
    let err = u.sub(reference)?;
    let mse = err.dot(&err) / err.len() as f64;
    let (lo, hi) = reference
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(10.0 * ((hi - lo) * (hi - lo) / mse).log10())
}

/// Mean squared increment along the last axis divided by the mean squared
/// increment along axis 0.
///
/// A field made of long streaks parallel to axis 0 varies slowly along axis 0
/// and quickly across it, so the ratio is large.
pub fn anisotropy_ratio(b: &Grid<f64>) -> f64 {
    let dims = b.dims();
    let last = dims.rank() - 1;
    let increment = |axis: usize| {
        let mut sum = 0.0;
        for i in 0..b.len() {
            let c = dims.coords_of(i);
            let mut next: Vec<isize> = c[..dims.rank()].iter().map(|&v| v as isize).collect();
            next[axis] += 1;
            let d = b.at(&next) - b.data()[i];
            sum += d * d;
        }
        sum / b.len() as f64
    };
    increment(last) / increment(0)
}

/// One evaluation of a [`golden_section_max`] run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for a maximum of `f` on `[lo, hi]` using exactly
/// `evaluations` calls. Returns every probe in call order; the best one is the
/// maximum over the returned list.
pub fn golden_section_max<E>(
    mut f: impl FnMut(f64) -> std::result::Result<f64, E>,
    mut lo: f64,
    mut hi: f64,
    evaluations: usize,
) -> std::result::Result<Vec<Probe>, E> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut probes = Vec::with_capacity(evaluations);
    let mut eval = |x: f64, probes: &mut Vec<Probe>| -> std::result::Result<f64, E> {
        let value = f(x)?;
        probes.push(Probe { x, value });
        Ok(value)
    };
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let mut fc = eval(c, &mut probes)?;
    if evaluations < 2 {
        return Ok(probes);
    }
    let mut fd = eval(d, &mut probes)?;
    while probes.len() < evaluations {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = eval(c, &mut probes)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = eval(d, &mut probes)?;
        }
    }
    Ok(probes)
}

/// Probe with the largest value; NaN values never win.
pub fn best_probe(probes: &[Probe]) -> Option<Probe> {
    probes
        .iter()
        .copied()
        .filter(|p| !p.value.is_nan())
        .max_by(|a, b| a.value.total_cmp(&b.value))
}
