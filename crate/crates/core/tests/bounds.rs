mod common;

use common::*;
use num_complex::Complex;
use stripefree::bounds::*;
use stripefree::kernels::{sample_kernel, KernelSpec};
use stripefree::multi::FilterBank;
use stripefree::ops::{circular_convolve, gradient_adjoint};
use stripefree::solver::{solve, solve_from, Problem, SolverConfig};
use stripefree::{Dims, Error, Field, Grid, PNorm};

fn box_kernel(d: Dims) -> Grid<f64> {
    sample_kernel(
        &KernelSpec::IndicatorBox {
            half_extents: vec![1, 0],
            amplitude: 1.0,
        },
        d,
    )
    .unwrap()
}

/// `u0 = block + box ⋆ λ`, the setting where the small- and large-α regimes
/// are reachable in a few thousand iterations.
fn box_instance(seed: u64) -> (Grid<f64>, Grid<f64>) {
    noisy_instance(
        Dims::d2(16, 16).unwrap(),
        &KernelSpec::IndicatorBox {
            half_extents: vec![1, 0],
            amplitude: 1.0,
        },
        seed,
        0.3,
    )
}

fn shifted_difference(d: Dims, axis: usize) -> Grid<f64> {
    // d̃_k = δ_{e_k} − δ_0
    let mut g = Grid::zeros(d);
    let mut e = vec![0isize; d.rank()];
    e[axis] = 1;
    g.data_mut()[d.index_of(&e)] += 1.0;
    g.data_mut()[0] -= 1.0;
    g
}

#[test]
fn dirac_bounds() {
    let h = compute_h_filters(&Grid::impulse(Dims::d1(10).unwrap(), 1.0f64)).unwrap();
    assert!((h.bound_paper - 2.0).abs() < 1e-12);
    let h = compute_h_filters(&Grid::impulse(Dims::d2(6, 8).unwrap(), 1.0f64)).unwrap();
    assert!((h.bound_paper - 2.0).abs() < 1e-12);
    assert!((h.bound_tight - 8f64.sqrt()).abs() < 1e-12);
    let op = opnorm_infty_to_2(&Grid::impulse(Dims::d1(4).unwrap(), 1.0f64)).unwrap();
    assert!((op.value - 4.0).abs() < 1e-12);
    assert_eq!(op.frequency, vec![2]);
}

#[test]
fn h_filters_match_triple_convolution() {
    let d = Dims::d2(16, 16).unwrap();
    for seed in 0..3 {
        let psi = random_grid(d, seed);
        let h = compute_h_filters(&psi).unwrap();
        let pp = direct_convolve(&psi, &psi.reflected());
        for k in 0..2 {
            let direct = direct_convolve(&pp, &shifted_difference(d, k));
            assert!(rel(&h.spatial[k], &direct) < 1e-10);
        }
        assert!(h.bound_paper <= h.bound_tight + 1e-12);
        assert!(h.bound_tight <= 2f64.sqrt() * h.bound_paper + 1e-12);
    }
}

fn witness_dims() -> Vec<Dims> {
    vec![Dims::d2(16, 16).unwrap(), Dims::d3(8, 8, 8).unwrap(), Dims::d1(64).unwrap()]
}

#[test]
fn fourier_witness_attains_the_norm() {
    for (i, d) in witness_dims().into_iter().enumerate() {
        for seed in 0..4 {
            let psi = random_grid(d, 40 + seed + 10 * i as u64);
            let op = opnorm_infty_to_2(&psi).unwrap();
            for (k, c) in op.witness.iter().enumerate() {
                let expected = if k == op.axis { 1.0 } else { 0.0 };
                assert!(c.data().iter().all(|z| (z.norm() - expected).abs() < 1e-12));
            }
            let image = psi_psit_gradt_complex(&psi, &op.witness).unwrap();
            let ratio = image.norm2() / op.value;
            assert!((ratio - 1.0).abs() <= 1e-10, "{d}: {ratio}");

            let real = op.real_witness();
            assert!(real.iso_norm(PNorm::Inf) <= 1.0 + 1e-12);
            let achieved = psi_psit_gradt(&psi, &real).unwrap().norm2();
            assert!(achieved <= op.value * (1.0 + 1e-10));
            assert!(achieved >= op.value / 2f64.sqrt() * (1.0 - 1e-10));
        }
    }
}

#[test]
fn random_fields_respect_the_tight_bound() {
    for (i, d) in witness_dims().into_iter().enumerate() {
        let psi = random_grid(d, 90 + i as u64);
        let op = opnorm_infty_to_2(&psi).unwrap();
        for seed in 0..100 {
            let mut q = random_field(d, seed);
            // push most samples to the sphere, where the norm is largest
            for c in 0..d.rank() {
                q.channel_mut(c).data_mut().iter_mut().for_each(|v| *v *= 10.0);
            }
            q.project_unit_ball();
            assert!(psi_psit_gradt(&psi, &q).unwrap().norm2() <= op.upper * (1.0 + 1e-12));
        }
    }
}

#[test]
fn alpha_formula() {
    let d = Dims::d2(12, 12).unwrap();
    let (u0, psi) = noisy_instance(d, &KernelSpec::gaussian(&[3.0, 1.0]), 3, 0.5);
    let a = alpha_for_target(&u0, &psi, 0.1).unwrap();
    let h = compute_h_filters(&psi).unwrap();
    assert!((12.0 * h.bound_paper / a.alpha - 0.1 * u0.norm2()).abs() < 1e-12 * u0.norm2());
    assert_eq!(a.predicted_b_norm, (0.1 * u0.norm2()).min(a.cap_norm));
    let b = alpha_for_target(&u0, &psi, 0.2).unwrap();
    assert!((a.alpha / b.alpha - 2.0).abs() < 1e-12);
    assert!(a.certified_b_norm() >= a.predicted_b_norm);
    assert!(alpha_for_target(&u0, &psi, 1.0).is_err());
    assert!(alpha_for_target(&u0, &psi, 0.0).is_err());
    assert_eq!(alpha_for_target(&Grid::zeros(d), &psi, 0.5), Err(Error::ZeroImage));
}

#[test]
fn alpha_selection_end_to_end() {
    let d = Dims::d2(64, 64).unwrap();
    let (u0, psi) = noisy_instance(d, &KernelSpec::gaussian(&[16.0, 1.0]), 21, 0.4);
    let eta = 0.3;
    let sel = alpha_for_target(&u0, &psi, eta).unwrap();
    let sol = solve(&Problem::l2(u0.clone(), psi, sel.alpha).unwrap(), &SolverConfig::default().with_tolerance(1e-6)).unwrap();
    let target = eta * u0.norm2();
    let b = sol.b.norm2();
    assert!(b <= sel.certified_b_norm() * (1.0 + 1e-3));
    assert!(b <= target * (1.0 + 1e-3));
    assert!(b >= target / 10.0, "{b} vs {target}");
}

#[test]
fn lambda0_examples() {
    let d = Dims::d2(8, 6).unwrap();
    let u0 = random_grid(d, 1);
    let l = lambda0_closed_form(&u0, &FilterBank::single(Grid::impulse(d, 1.0), 1.0).unwrap()).unwrap();
    assert!(rel(&l[0], &u0.centered()) < 1e-12);

    let psi = random_grid(d, 2);
    let bank = FilterBank::new(vec![(psi.clone(), 0.5), (random_grid(d, 3), 2.0)]).unwrap();
    let flat = lambda0_closed_form(&Grid::filled(d, 4.0), &bank).unwrap();
    assert!(flat.iter().all(|g| g.norm_inf() < 1e-12));

    let parts = lambda0_closed_form(&u0, &bank).unwrap();
    let mut total = Grid::zeros(d);
    for (l, f) in parts.iter().zip(bank.filters()) {
        total.axpy(1.0, &circular_convolve(l, f).unwrap());
    }
    assert!(total.mean().abs() < 1e-12);
    assert!(total.sub(&u0.centered()).unwrap().norm_inf() < 1e-10);
}

#[test]
fn lambda0_is_the_minimum_energy_split() {
    let d = Dims::d2(4, 4).unwrap();
    let u0 = random_grid(d, 7);
    let filters = [random_grid(d, 8), random_grid(d, 9)];
    let alphas = [0.7, 1.9];
    let bank = FilterBank::new(filters.iter().cloned().zip(alphas).collect()).unwrap();
    let closed = lambda0_closed_form(&u0, &bank).unwrap();

    // minimize Σ α_i ||λ_i||² subject to Σ Ψ_i λ_i = u0 − mean: λ_i = Ψ_iᵀ μ / α_i
    // with (Σ Ψ_i Ψ_iᵀ / α_i) μ = u0 − mean
    let n = d.len();
    let mats: Vec<Vec<Vec<f64>>> = filters.iter().map(convolution_matrix).collect();
    let mut m = vec![vec![0.0; n]; n];
    for (a, &alpha) in mats.iter().zip(&alphas) {
        for r in 0..n {
            for c in 0..n {
                m[r][c] += (0..n).map(|k| a[r][k] * a[c][k]).sum::<f64>() / alpha;
            }
        }
    }
    let mu = solve_dense(m, u0.centered().data().to_vec());
    for ((a, &alpha), l) in mats.iter().zip(&alphas).zip(&closed) {
        let dense: Vec<f64> = (0..n).map(|c| (0..n).map(|r| a[r][c] * mu[r]).sum::<f64>() / alpha).collect();
        let dense = Grid::new(d, dense).unwrap();
        assert!(rel(l, &dense) < 1e-10, "{}", rel(l, &dense));
    }
}

#[test]
fn lambda0_rank_deficiency_is_reported() {
    let d = Dims::d1(4).unwrap();
    let psi = Grid::new(d, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
    let err = lambda0_closed_form(&random_grid(d, 1), &FilterBank::single(psi, 1.0).unwrap()).unwrap_err();
    assert_eq!(err, Error::RankDeficient { frequency: vec![1] });
}

#[test]
fn lower_bound_pieces() {
    let d = Dims::d2(16, 16).unwrap();
    let psi = box_kernel(d);
    let flat = lower_bound(&Grid::filled(d, 3.0), &psi, 1.0).unwrap();
    assert_eq!(flat.bound, 0.0);
    assert_eq!(flat.b1.norm_inf(), 0.0);

    let (u0, _) = box_instance(1);
    let lb = lower_bound(&u0, &psi, 1.0).unwrap();
    let image = circular_convolve(&gradient_adjoint(&lb.preimage), &psi.reflected()).unwrap();
    assert!(image.sub(&lb.b1).unwrap().norm_inf() <= 1e-10 * lb.b1.norm_inf());
    assert!(lb.b1.mean().abs() < 1e-12);
    let psi_hat = stripefree::spectral::forward(&psi);
    let min = psi_hat.data().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    assert!((lb.min_psi_modulus - min).abs() < 1e-12);
    assert!((lb.alpha_min_validity - 1.0 / lb.preimage.iso_norm(PNorm::Inf)).abs() < 1e-12);

    let stripes = Grid::from_fn(d, |c| if c[0] % 3 == 0 { 1.0 } else { 0.0 });
    let err = lower_bound(&random_grid(d, 2), &stripes, 1.0).unwrap_err();
    assert!(matches!(err, Error::VanishingSpectrum { .. }));
}

#[test]
fn lower_bound_holds_at_large_alpha() {
    for seed in 1..4 {
        let (u0, psi) = box_instance(seed);
        let validity = lower_bound(&u0, &psi, 1.0).unwrap().alpha_min_validity;
        for factor in [1.0, 10.0, 100.0] {
            let alpha = factor * validity;
            let lb = lower_bound(&u0, &psi, alpha).unwrap();
            assert!(lb.applicable);
            let sol = solve(&Problem::l2(u0.clone(), psi.clone(), alpha).unwrap(), &SolverConfig::default()).unwrap();
            assert!(sol.converged);
            assert!(sol.b.norm2() >= lb.bound, "seed {seed} x{factor}: {} < {}", sol.b.norm2(), lb.bound);
        }
        assert!(!lower_bound(&u0, &psi, 0.5 * validity).unwrap().applicable);
    }
}

#[test]
fn closed_form_is_optimal_below_validity() {
    let (u0, psi) = box_instance(2);
    let validity = lower_bound(&u0, &psi, 1.0).unwrap().alpha_min_validity;
    let alpha = 0.5 * validity;
    let p = Problem::l2(u0.clone(), psi.clone(), alpha).unwrap();
    let l0 = lambda0_closed_form(&u0, &FilterBank::single(psi, alpha).unwrap()).unwrap();
    let cold = solve(&p, &SolverConfig::default()).unwrap();
    assert!(rel(&cold.lambda, &l0[0]) < 1e-4);
    assert!(cold.b.sub(&u0.centered()).unwrap().norm2() <= 1e-4 * u0.centered().norm2());
}

#[test]
fn small_alpha_threshold_behaviour() {
    let (u0, psi) = box_instance(3);
    let cfg = SolverConfig::default();
    let t = small_alpha_threshold(&u0, &psi, &cfg).unwrap();
    assert!(t.alpha.is_finite() && t.first_failure > t.alpha);
    assert!(t.first_failure / t.alpha <= 1.01 + 1e-12);
    let target = u0.centered();
    for factor in [0.99, 0.5, 0.1] {
        let alpha = factor * t.alpha;
        let l0 = lambda0_closed_form(&u0, &FilterBank::single(psi.clone(), alpha).unwrap()).unwrap();
        let sol = solve(&Problem::l2(u0.clone(), psi.clone(), alpha).unwrap(), &cfg).unwrap();
        assert!(sol.b.sub(&target).unwrap().norm2() <= 1e-4 * target.norm2());
        assert!(rel(&sol.lambda, &l0[0]) <= 1e-4, "{factor}: {}", rel(&sol.lambda, &l0[0]));
    }

    let doubled = small_alpha_threshold(&u0.scaled(2.0), &psi, &cfg).unwrap();
    let ratio = t.alpha / doubled.alpha;
    assert!((ratio / 2.0 - 1.0).abs() <= 0.02, "{ratio}");

    let flat = small_alpha_threshold(&Grid::filled(u0.dims(), 1.0), &psi, &cfg).unwrap();
    assert!(flat.alpha.is_infinite());
}

#[test]
fn upper_bound_and_decay_on_a_small_sweep() {
    let (u0, psi) = box_instance(5);
    let h = compute_h_filters(&psi).unwrap();
    let cap = u0.centered().norm2();
    let base = h.opnorm_upper() / cap;
    let cfg = SolverConfig::default().with_tolerance(1e-7);
    let mut warm: Option<(Grid<f64>, Field<f64>)> = None;
    let mut norms = Vec::new();
    for e in (0..13).rev() {
        let alpha = base * 10f64.powf(e as f64 / 2.0 - 3.0);
        let p = Problem::l2(u0.clone(), psi.clone(), alpha).unwrap();
        let sol = match &warm {
            Some((l, q)) => solve_from(&p, &cfg, Some(l), Some(q)).unwrap(),
            None => solve(&p, &cfg).unwrap(),
        };
        let b = sol.b.norm2();
        assert!(b <= (h.opnorm_upper() / alpha).min(cap) * (1.0 + 1e-3), "{alpha}: {b}");
        assert!(b <= (h.opnorm() / alpha).min(cap) * (1.0 + 1e-3));
        norms.push((alpha, b));
        warm = Some((sol.lambda, sol.q));
    }
    let (_, smallest) = norms.last().unwrap();
    assert!((smallest / cap - 1.0).abs() < 1e-3, "{smallest} vs {cap}");
}

#[test]
fn complex_extension_is_linear() {
    let d = Dims::d2(6, 5).unwrap();
    let psi = random_grid(d, 1);
    let re = random_field(d, 2);
    let im = random_field(d, 3);
    let channels: Vec<Grid<Complex<f64>>> = (0..2)
        .map(|k| re.channel(k).zip_map(im.channel(k), Complex::new).unwrap())
        .collect();
    let out = psi_psit_gradt_complex(&psi, &channels).unwrap();
    assert!(rel(&out.map(|z| z.re), &psi_psit_gradt(&psi, &re).unwrap()) < 1e-14);
    assert!(rel(&out.map(|z| z.im), &psi_psit_gradt(&psi, &im).unwrap()) < 1e-14);
}
