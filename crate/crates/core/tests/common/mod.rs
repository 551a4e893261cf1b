#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stripefree::{Dims, Field, Grid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform samples in `[-1, 1]`.
pub fn random_grid(dims: Dims, seed: u64) -> Grid<f64> {
    let mut r = rng(seed);
    Grid::from_fn(dims, |_| r.random_range(-1.0..=1.0))
}

pub fn random_field(dims: Dims, seed: u64) -> Field<f64> {
    Field::new((0..dims.rank()).map(|k| random_grid(dims, seed.wrapping_mul(31).wrapping_add(k as u64))).collect()).unwrap()
}

/// Random field scaled into the isotropic unit ball.
pub fn random_feasible_field(dims: Dims, seed: u64) -> Field<f64> {
    let mut q = random_field(dims, seed);
    q.project_unit_ball();
    q
}

fn coords(d: Dims, i: usize) -> Vec<isize> {
    d.coords_of(i)[..d.rank()].iter().map(|&c| c as isize).collect()
}

/// `Σ_y u(y) ψ(x − y)` evaluated pointwise.
pub fn direct_convolve(u: &Grid<f64>, psi: &Grid<f64>) -> Grid<f64> {
    let d = u.dims();
    let mut out = Grid::zeros(d);
    for x in 0..d.len() {
        let cx = coords(d, x);
        let mut acc = 0.0;
        for y in 0..d.len() {
            let cy = coords(d, y);
            let diff: Vec<isize> = cx.iter().zip(&cy).map(|(a, b)| a - b).collect();
            acc += u.data()[y] * psi.at(&diff);
        }
        out.data_mut()[x] = acc;
    }
    out
}

/// `u(x + e_k) − u(x)` read off coordinates.
pub fn direct_gradient(u: &Grid<f64>) -> Field<f64> {
    let d = u.dims();
    let channels = (0..d.rank())
        .map(|k| {
            Grid::from_fn(d, |c| {
                let mut c: Vec<isize> = c.iter().map(|&v| v as isize).collect();
                let here = u.at(&c);
                c[k] += 1;
                u.at(&c) - here
            })
        })
        .collect();
    Field::new(channels).unwrap()
}

pub fn rel(a: &Grid<f64>, b: &Grid<f64>) -> f64 {
    a.sub(b).unwrap().norm2() / b.norm2().max(f64::MIN_POSITIVE)
}

/// Largest singular value of a linear map, by power iteration on `AᵀA`.
pub fn power_iteration(
    dims: Dims,
    seed: u64,
    iterations: usize,
    apply: impl Fn(&Grid<f64>) -> Field<f64>,
    adjoint: impl Fn(&Field<f64>) -> Grid<f64>,
) -> f64 {
    let mut x = random_grid(dims, seed);
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let n = x.norm2();
        x = x.scaled(1.0 / n);
        let y = adjoint(&apply(&x));
        estimate = y.dot(&x).sqrt();
        x = y;
    }
    estimate
}

/// Dense Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Matrix of `λ ↦ ψ ⋆ λ`, column `j` being the response to the `j`-th impulse.
pub fn convolution_matrix(psi: &Grid<f64>) -> Vec<Vec<f64>> {
    let d = psi.dims();
    let n = d.len();
    let mut m = vec![vec![0.0; n]; n];
    for x in 0..n {
        let cx = coords(d, x);
        for y in 0..n {
            let cy = coords(d, y);
            let diff: Vec<isize> = cx.iter().zip(&cy).map(|(a, b)| a - b).collect();
            m[x][y] = psi.at(&diff);
        }
    }
    m
}

/// Indicator of a centered box covering about a quarter of each axis.
pub fn block_image(d: Dims) -> Grid<f64> {
    Grid::from_fn(d, |c| {
        let inside = c.iter().enumerate().all(|(k, &ck)| {
            let n = d.extent(k);
            ck >= n / 4 && ck < n / 4 + n.div_ceil(3)
        });
        if inside {
            1.0
        } else {
            0.0
        }
    })
}

/// `block_image + ψ ⋆ λ` with uniform white noise `λ`, the noise rescaled to
/// `level` times the centered norm of the clean image. Returns `(u0, ψ)`.
pub fn noisy_instance(d: Dims, spec: &stripefree::kernels::KernelSpec<f64>, seed: u64, level: f64) -> (Grid<f64>, Grid<f64>) {
    use stripefree::noise::{sample_stationary, Marginal};
    let psi = stripefree::kernels::sample_kernel(spec, d).unwrap();
    let clean = block_image(d);
    let (_, b) = sample_stationary(&Marginal::Uniform { half_width: 1.0 }, &psi, seed).unwrap();
    let scale = level * clean.centered().norm2() / b.norm2();
    (clean.add(&b.scaled(scale)).unwrap(), psi)
}
