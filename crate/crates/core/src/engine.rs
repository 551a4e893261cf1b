//! Primal–dual iterations shared by the single-filter solver and the stacked
//! multi-filter solver.
//!
//! The problem is
//!
//! ```text
//! min_{λ_1..λ_m}  ||∇(Σ ψ_i ⋆ λ_i − u0)||_1 + Σ φ_i(λ_i)
//! ```
//!
//! with `φ_i = α_i/2 ||·||²` (L2) or `α_i ||·||_1` (L1), written as the saddle
//! point `min_λ max_{||q||_∞ <= 1} <∇(Ψλ − u0), q> + φ(λ)`. With this sign the
//! optimal pair satisfies `λ_i = −Ψ_iᵀ∇ᵀq / α_i` and `q` is the unit normal
//! `∇(b − u0) / |∇(b − u0)|`.

use num_complex::Complex;

use crate::grid::{Field, Grid, PNorm};
use crate::ops::{gradient_adjoint_into, gradient_into};
use crate::scalar::Real;
use crate::solver::{Method, Prior, SolverConfig};
use crate::spectral::{laplacian_symbol, FourierPlan};

/// The linear map `λ ↦ Σ ψ_i ⋆ λ_i` and its adjoint, evaluated spectrally.
pub(crate) struct Synthesis<T: Real> {
    plan: FourierPlan<T>,
    spectra: Vec<Vec<Complex<T>>>,
    acc: Vec<Complex<T>>,
    buf: Vec<Complex<T>>,
}

impl<T: Real> Synthesis<T> {
    pub fn new(filters: &[&Grid<T>]) -> Self {
        let dims = filters[0].dims();
        let plan = FourierPlan::new(dims);
        let spectra = filters.iter().map(|f| plan.forward(f).into_data()).collect();
        Self {
            plan,
            spectra,
            acc: vec![Complex::default(); dims.len()],
            buf: vec![Complex::default(); dims.len()],
        }
    }

    pub fn components(&self) -> usize {
        self.spectra.len()
    }

    /// `Σ ψ_i ⋆ λ_i` into `out`.
    pub fn synthesize(&mut self, lambdas: &[Grid<T>], out: &mut Grid<T>) {
        self.acc.fill(Complex::default());
        for (lambda, spectrum) in lambdas.iter().zip(&self.spectra) {
            for (b, &v) in self.buf.iter_mut().zip(lambda.data()) {
                *b = Complex::new(v, T::zero());
            }
            self.plan.forward_in_place(&mut self.buf);
            for ((a, b), s) in self.acc.iter_mut().zip(&self.buf).zip(spectrum) {
                *a += *b * *s;
            }
        }
        self.plan.inverse_in_place(&mut self.acc);
        for (o, a) in out.data_mut().iter_mut().zip(&self.acc) {
            *o = a.re;
        }
    }

    /// `Ψ_iᵀ w` for every component, into `outs`.
    pub fn analyze(&mut self, w: &Grid<T>, outs: &mut [Grid<T>]) {
        for (b, &v) in self.acc.iter_mut().zip(w.data()) {
            *b = Complex::new(v, T::zero());
        }
        self.plan.forward_in_place(&mut self.acc);
        for (out, spectrum) in outs.iter_mut().zip(&self.spectra) {
            for ((b, a), s) in self.buf.iter_mut().zip(&self.acc).zip(spectrum) {
                *b = *a * s.conj();
            }
            self.plan.inverse_in_place(&mut self.buf);
            for (o, b) in out.data_mut().iter_mut().zip(&self.buf) {
                *o = b.re;
            }
        }
    }

    /// Forward transform of a real image into `out`.
    pub fn transform(&self, w: &Grid<T>, out: &mut [Complex<T>]) {
        for (o, &v) in out.iter_mut().zip(w.data()) {
            *o = Complex::new(v, T::zero());
        }
        self.plan.forward_in_place(out);
    }

    /// Real part of the inverse transform of `x` into `out`.
    pub fn inverse_real_into(&mut self, x: &[Complex<T>], out: &mut Grid<T>) {
        self.buf.copy_from_slice(x);
        self.plan.inverse_in_place(&mut self.buf);
        for (o, b) in out.data_mut().iter_mut().zip(&self.buf) {
            *o = b.re;
        }
    }

    /// `Σ ψ_i ⋆ λ_i` from the spectra `λ̂_i`.
    pub fn synthesize_spectral(&mut self, hats: &[Vec<Complex<T>>], out: &mut Grid<T>) {
        self.acc.fill(Complex::default());
        for (hat, spectrum) in hats.iter().zip(&self.spectra) {
            for ((a, h), s) in self.acc.iter_mut().zip(hat).zip(spectrum) {
                *a += *h * *s;
            }
        }
        self.plan.inverse_in_place(&mut self.acc);
        for (o, a) in out.data_mut().iter_mut().zip(&self.acc) {
            *o = a.re;
        }
    }

    pub fn spectrum(&self, component: usize) -> &[Complex<T>] {
        &self.spectra[component]
    }

    /// Largest singular value of `λ ↦ ∇(Σ ψ_i ⋆ λ_i)`:
    /// `max_ξ sqrt(Σ_i |ψ̂_i|²) sqrt(Σ_k |d̂_k|²)`.
    pub fn gradient_operator_norm(&self) -> T {
        self.weighted_gradient_norm_sq(None).sqrt()
    }

    /// `max_ξ (Σ_i w_i |ψ̂_i(ξ)|²) Σ_k |d̂_k(ξ)|²`, with unit weights when `None`.
    pub fn weighted_gradient_norm_sq(&self, weights: Option<&[T]>) -> T {
        let lap = laplacian_symbol::<T>(self.plan.dims());
        let mut best = T::zero();
        for (i, &l) in lap.data().iter().enumerate() {
            let e: T = self
                .spectra
                .iter()
                .enumerate()
                .map(|(c, s)| s[i].norm_sqr() * weights.map_or(T::one(), |w| w[c]))
                .sum();
            best = best.max(e * l);
        }
        best
    }
}

/// A stacked problem ready to iterate on.
pub(crate) struct Stacked<'a, T: Real> {
    pub u0: &'a Grid<T>,
    pub synth: Synthesis<T>,
    pub alphas: Vec<T>,
    pub prior: Prior,
}

/// Raw result of an engine run.
pub(crate) struct EngineResult<T: Real> {
    pub lambdas: Vec<Grid<T>>,
    pub q: Field<T>,
    pub iterations: usize,
    pub primal: T,
    pub dual: T,
    pub converged: bool,
    pub history: Vec<(usize, T)>,
    pub tau: T,
    pub sigma: T,
    pub method: Method,
}

/// Scratch buffers used while evaluating objectives.
struct Workspace<T: Real> {
    image: Grid<T>,
    grad: Field<T>,
    comps: Vec<Grid<T>>,
}

impl<T: Real> Workspace<T> {
    fn new(u0: &Grid<T>, m: usize) -> Self {
        let dims = u0.dims();
        Self {
            image: Grid::zeros(dims),
            grad: Field::zeros(dims),
            comps: vec![Grid::zeros(dims); m],
        }
    }
}

/// Tracks the best certified upper and lower bounds seen so far.
struct Certificate<T: Real> {
    best_primal: T,
    best_lambdas: Vec<Grid<T>>,
    best_dual: T,
    best_q: Field<T>,
    history: Vec<(usize, T)>,
}

impl<T: Real> Certificate<T> {
    fn new(lambdas: &[Grid<T>], q: &Field<T>) -> Self {
        Self {
            best_primal: T::infinity(),
            best_lambdas: lambdas.to_vec(),
            best_dual: T::neg_infinity(),
            best_q: q.clone(),
            history: Vec::new(),
        }
    }

    fn offer_primal(&mut self, value: T, lambdas: &[Grid<T>]) {
        if value < self.best_primal {
            self.best_primal = value;
            self.best_lambdas.clone_from_slice(lambdas);
        }
    }

    fn offer_dual(&mut self, value: T, q: &Field<T>, scale: T) {
        if value > self.best_dual {
            self.best_dual = value;
            self.best_q = if scale == T::one() { q.clone() } else { q.scaled(scale) };
        }
    }

    fn gap(&self) -> T {
        self.best_primal - self.best_dual
    }

    fn record(&mut self, iteration: usize) -> T {
        let gap = self.gap();
        self.history.push((iteration, gap));
        gap / (T::one() + self.best_primal.abs())
    }
}

impl<T: Real> Stacked<'_, T> {
    fn m(&self) -> usize {
        self.synth.components()
    }

    fn penalty(&self, lambdas: &[Grid<T>]) -> T {
        lambdas
            .iter()
            .zip(&self.alphas)
            .map(|(l, &a)| match self.prior {
                Prior::L2 => a / T::two() * l.dot(l),
                Prior::L1 => a * l.norm1(),
            })
            .sum()
    }

    /// Primal objective; leaves `Σ ψ_i ⋆ λ_i` in `ws.image`.
    fn primal(&mut self, lambdas: &[Grid<T>], ws: &mut Workspace<T>) -> T {
        self.synth.synthesize(lambdas, &mut ws.image);
        for (v, &u) in ws.image.data_mut().iter_mut().zip(self.u0.data()) {
            *v -= u;
        }
        gradient_into(&ws.image, &mut ws.grad);
        ws.grad.iso_norm(PNorm::One) + self.penalty(lambdas)
    }

    /// Dual objective at `q` given `w = ∇ᵀq` and `v_i = Ψ_iᵀ w`. Returns the
    /// value and the factor `q` must be scaled by to be dual feasible.
    fn dual(&self, w: &Grid<T>, v: &[Grid<T>]) -> (T, T) {
        let linear = -self.u0.dot(w);
        match self.prior {
            Prior::L2 => {
                let quad: T = v
                    .iter()
                    .zip(&self.alphas)
                    .map(|(vi, &a)| vi.dot(vi) / (T::two() * a))
                    .sum();
                (linear - quad, T::one())
            }
            Prior::L1 => {
                let mut t = T::one();
                for (vi, &a) in v.iter().zip(&self.alphas) {
                    let s = vi.norm_inf();
                    if s > a {
                        t = t.min(a / s);
                    }
                }
                (t * linear, t)
            }
        }
    }

    fn prox(&self, value: T, step: T, alpha: T) -> T {
        match self.prior {
            Prior::L2 => value / (T::one() + step * alpha),
            Prior::L1 => shrink(value, step * alpha),
        }
    }

    /// Primal from dual for the L2 prior, `λ_i = −v_i / α_i`.
    fn lambdas_from_dual(&self, v: &[Grid<T>], out: &mut [Grid<T>]) {
        for ((o, vi), &a) in out.iter_mut().zip(v).zip(&self.alphas) {
            for (x, &y) in o.data_mut().iter_mut().zip(vi.data()) {
                *x = -y / a;
            }
        }
    }

    /// Evaluates the certificate at the current iterate pair.
    fn certify(
        &mut self,
        lambdas: &[Grid<T>],
        q: &Field<T>,
        w: &Grid<T>,
        v: &[Grid<T>],
        ws: &mut Workspace<T>,
        cert: &mut Certificate<T>,
    ) {
        let p = self.primal(lambdas, ws);
        cert.offer_primal(p, lambdas);
        let (d, scale) = self.dual(w, v);
        cert.offer_dual(d, q, scale);
        if self.prior == Prior::L2 {
            let mut from_dual = std::mem::take(&mut ws.comps);
            self.lambdas_from_dual(v, &mut from_dual);
            let p = self.primal(&from_dual, ws);
            cert.offer_primal(p, &from_dual);
            ws.comps = from_dual;
        }
    }

    fn finish(self, cert: Certificate<T>, iterations: usize, converged: bool, tau: T, sigma: T, method: Method) -> EngineResult<T> {
        EngineResult {
            primal: cert.best_primal,
            dual: cert.best_dual,
            lambdas: cert.best_lambdas,
            q: cert.best_q,
            iterations,
            converged,
            history: cert.history,
            tau,
            sigma,
            method,
        }
    }

    /// Chambolle–Pock iterations, dual step first. The L2 prior is handed to
    /// the spectral variant, which also carries the strong-convexity
    /// acceleration.
    pub fn chambolle_pock(
        mut self,
        cfg: &SolverConfig<T>,
        start_lambdas: Option<Vec<Grid<T>>>,
        start_q: Option<Field<T>>,
    ) -> EngineResult<T> {
        if self.prior == Prior::L2 {
            return self.chambolle_pock_spectral(cfg, start_lambdas, start_q);
        }
        let dims = self.u0.dims();
        let m = self.m();
        let op_norm = self.synth.gradient_operator_norm().max(T::min_positive_value());
        let tau0 = cfg.step_ratio / op_norm;
        let sigma0 = T::one() / (cfg.step_ratio * op_norm);
        let (tau, sigma) = (tau0, sigma0);

        let mut lambdas = start_lambdas.unwrap_or_else(|| vec![Grid::zeros(dims); m]);
        let mut q = start_q.unwrap_or_else(|| Field::zeros(dims));
        q.project_unit_ball();
        let mut bar = lambdas.clone();
        let mut prev = lambdas.clone();
        let mut synth_img = Grid::zeros(dims);
        let mut grad = Field::zeros(dims);
        let mut w = Grid::zeros(dims);
        let mut v = vec![Grid::zeros(dims); m];
        let mut ws = Workspace::new(self.u0, m);
        let mut cert = Certificate::new(&lambdas, &q);

        for it in 1..=cfg.max_iterations {
            // dual ascent on q
            self.synth.synthesize(&bar, &mut synth_img);
            for (s, &u) in synth_img.data_mut().iter_mut().zip(self.u0.data()) {
                *s -= u;
            }
            gradient_into(&synth_img, &mut grad);
            q.axpy(sigma, &grad);
            q.project_unit_ball();

            // primal proximal step
            gradient_adjoint_into(&q, &mut w);
            self.synth.analyze(&w, &mut v);
            prev.clone_from_slice(&lambdas);
            for ((l, vi), &a) in lambdas.iter_mut().zip(&v).zip(&self.alphas) {
                for (x, &g) in l.data_mut().iter_mut().zip(vi.data()) {
                    *x = self.prox(*x - tau * g, tau, a);
                }
            }

            for ((b, l), p) in bar.iter_mut().zip(&lambdas).zip(&prev) {
                for ((x, &y), &z) in b.data_mut().iter_mut().zip(l.data()).zip(p.data()) {
                    *x = y + y - z;
                }
            }

            if should_check(it, cfg.max_iterations) {
                self.certify(&lambdas, &q, &w, &v, &mut ws, &mut cert);
                if cert.record(it) <= cfg.gap_tolerance {
                    return self.finish(cert, it, true, tau0, sigma0, Method::ChambollePock);
                }
            }
        }
        self.finish(cert, cfg.max_iterations, false, tau0, sigma0, Method::ChambollePock)
    }

    /// L2 variant of [`Stacked::chambolle_pock`]. The proximal step is linear,
    /// so `λ` is kept as its spectrum and each iteration costs one forward and
    /// one inverse transform whatever the number of components.
    ///
    /// With acceleration on, steps follow the strongly convex schedule
    /// `θ = 1/sqrt(1 + 2ατ)`, `τ ← θτ`, `σ ← σ/θ`, restarted from the initial
    /// steps whenever the certified gap has fallen tenfold since the last
    /// restart.
    fn chambolle_pock_spectral(
        mut self,
        cfg: &SolverConfig<T>,
        start_lambdas: Option<Vec<Grid<T>>>,
        start_q: Option<Field<T>>,
    ) -> EngineResult<T> {
        let dims = self.u0.dims();
        let n = dims.len();
        let m = self.m();
        let op_norm = self.synth.gradient_operator_norm().max(T::min_positive_value());
        let tau0 = cfg.step_ratio / op_norm;
        let sigma0 = T::one() / (cfg.step_ratio * op_norm);
        let (mut tau, mut sigma) = (tau0, sigma0);
        let gamma = self.alphas.iter().copied().fold(T::infinity(), T::min);

        let mut lambdas = start_lambdas.unwrap_or_else(|| vec![Grid::zeros(dims); m]);
        let mut q = start_q.unwrap_or_else(|| Field::zeros(dims));
        q.project_unit_ball();
        let mut hats: Vec<Vec<Complex<T>>> = lambdas
            .iter()
            .map(|l| {
                let mut h = vec![Complex::default(); n];
                self.synth.transform(l, &mut h);
                h
            })
            .collect();
        let mut bar = hats.clone();
        let mut w_hat = vec![Complex::default(); n];
        let mut synth_img = Grid::zeros(dims);
        let mut grad = Field::zeros(dims);
        let mut w = Grid::zeros(dims);
        let mut v = vec![Grid::zeros(dims); m];
        let mut v_hat = vec![Complex::default(); n];
        let mut ws = Workspace::new(self.u0, m);
        let mut cert = Certificate::new(&lambdas, &q);
        let mut restart_gap = T::infinity();

        for it in 1..=cfg.max_iterations {
            self.synth.synthesize_spectral(&bar, &mut synth_img);
            for (s, &u) in synth_img.data_mut().iter_mut().zip(self.u0.data()) {
                *s -= u;
            }
            gradient_into(&synth_img, &mut grad);
            q.axpy(sigma, &grad);
            q.project_unit_ball();

            gradient_adjoint_into(&q, &mut w);
            self.synth.transform(&w, &mut w_hat);
            let theta = if cfg.accelerate {
                T::one() / (T::one() + T::two() * gamma * tau).sqrt()
            } else {
                T::one()
            };
            for (c, (hat, b)) in hats.iter_mut().zip(bar.iter_mut()).enumerate() {
                let shrink = T::one() / (T::one() + tau * self.alphas[c]);
                let spectrum = self.synth.spectrum(c);
                for j in 0..n {
                    let old = hat[j];
                    let new = (old - w_hat[j] * spectrum[j].conj() * tau) * shrink;
                    hat[j] = new;
                    b[j] = new + (new - old) * theta;
                }
            }
            if cfg.accelerate {
                tau = tau * theta;
                sigma = sigma / theta;
            }

            if should_check(it, cfg.max_iterations) {
                for c in 0..m {
                    self.synth.inverse_real_into(&hats[c], &mut lambdas[c]);
                    for ((o, a), s) in v_hat.iter_mut().zip(&w_hat).zip(self.synth.spectrum(c)) {
                        *o = *a * s.conj();
                    }
                    self.synth.inverse_real_into(&v_hat, &mut v[c]);
                }
                self.certify(&lambdas, &q, &w, &v, &mut ws, &mut cert);
                let rel = cert.record(it);
                if rel <= cfg.gap_tolerance {
                    return self.finish(cert, it, true, tau0, sigma0, Method::ChambollePock);
                }
                // the growing dual step stalls the late iterations, so the
                // schedule starts over each time the gap drops a decade
                if cfg.accelerate && rel <= T::lit(RESTART_FACTOR) * restart_gap {
                    restart_gap = rel;
                    tau = tau0;
                    sigma = sigma0;
                    bar.clone_from(&hats);
                }
            }
        }
        self.finish(cert, cfg.max_iterations, false, tau0, sigma0, Method::ChambollePock)
    }

    /// Accelerated projected gradient on the dual of the L2 problem, with
    /// adaptive restart. Independent of [`Stacked::chambolle_pock`].
    pub fn dual_gradient(mut self, cfg: &SolverConfig<T>) -> EngineResult<T> {
        assert_eq!(self.prior, Prior::L2, "dual gradient needs a smooth dual");
        let dims = self.u0.dims();
        let m = self.m();
        let inv_alphas: Vec<T> = self.alphas.iter().map(|a| a.recip()).collect();
        let lipschitz = self
            .synth
            .weighted_gradient_norm_sq(Some(&inv_alphas))
            .max(T::min_positive_value());
        let step = lipschitz.recip();

        let mut q = Field::zeros(dims);
        let mut y = q.clone();
        let mut q_prev = q.clone();
        let mut t = T::one();
        let mut w = Grid::zeros(dims);
        let mut v = vec![Grid::zeros(dims); m];
        let mut lam = vec![Grid::zeros(dims); m];
        let mut img = Grid::zeros(dims);
        let mut grad = Field::zeros(dims);
        let mut ws = Workspace::new(self.u0, m);
        let mut cert = Certificate::new(&lam, &q);

        for it in 1..=cfg.max_iterations {
            // gradient of the dual objective at y is ∇(u0 − Σ ψ_i ⋆ λ_i(y))
            gradient_adjoint_into(&y, &mut w);
            self.synth.analyze(&w, &mut v);
            self.lambdas_from_dual(&v, &mut lam);
            self.synth.synthesize(&lam, &mut img);
            for (s, &u) in img.data_mut().iter_mut().zip(self.u0.data()) {
                *s = u - *s;
            }
            gradient_into(&img, &mut grad);
            q_prev.clone_from(&q);
            q.clone_from(&y);
            q.axpy(-step, &grad);
            q.project_unit_ball();

            // restart when the momentum points uphill
            let mut uphill = T::zero();
            for k in 0..dims.rank() {
                let yk = y.channel(k).data();
                let qk = q.channel(k).data();
                let pk = q_prev.channel(k).data();
                for i in 0..dims.len() {
                    uphill += (yk[i] - qk[i]) * (qk[i] - pk[i]);
                }
            }
            let t_next = if uphill > T::zero() {
                T::one()
            } else {
                (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::two()
            };
            let beta = if uphill > T::zero() { T::zero() } else { (t - T::one()) / t_next };
            t = t_next;
            y.clone_from(&q);
            if beta != T::zero() {
                let mut diff = q.clone();
                diff.axpy(-T::one(), &q_prev);
                y.axpy(beta, &diff);
            }

            if should_check(it, cfg.max_iterations) {
                gradient_adjoint_into(&q, &mut w);
                self.synth.analyze(&w, &mut v);
                self.lambdas_from_dual(&v, &mut lam);
                let p = self.primal(&lam, &mut ws);
                cert.offer_primal(p, &lam);
                let (d, _) = self.dual(&w, &v);
                cert.offer_dual(d, &q, T::one());
                if cert.record(it) <= cfg.gap_tolerance {
                    return self.finish(cert, it, true, step, T::zero(), Method::DualGradient);
                }
            }
        }
        self.finish(cert, cfg.max_iterations, false, step, T::zero(), Method::DualGradient)
    }
}

/// Gap reduction that triggers a restart of the accelerated step schedule.
const RESTART_FACTOR: f64 = 0.1;

#[inline]
fn should_check(it: usize, max: usize) -> bool {
    it <= 10 || it % 10 == 0 || it == max
}

/// Soft thresholding `sign(v) max(|v| − t, 0)`.
#[inline]
pub fn shrink<T: Real>(value: T, threshold: T) -> T {
    let a = value.abs() - threshold;
    if a > T::zero() {
        a.copysign(value)
    } else {
        T::zero()
    }
}
