//! Semi-implicit three-level time stepping of the NV system in Fourier space.
//!
//! With `c` the Fourier coefficients of `u`, the semi-discrete system is
//! `4 dc/dt = D c + F(c)` where `D = i(ξ³ − 3ξη²)` is diagonal and
//! `F(c) = 3iξ·F[uv] + 3iη·F[uw]`. One step of the θ-scheme solves
//!
//! ```text
//! (2 − θΔt D) c⁺ = (1 − 2θ)Δt D c + (2 + θΔt D) c⁻ + Δt F(c)
//! ```
//!
//! mode by mode. `θ = 1/2` is the Crank–Nicolson variant.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NvError, Result};
use crate::grid::{
    dealias_keep, linear_symbol, solve_auxiliary, AuxMean, Fft2, RealField, SpectralField,
    TorusGrid,
};

/// Growth of `max|ĉ|` beyond this factor of its initial value aborts a run.
pub const DIVERGENCE_FACTOR: f64 = 1e8;

/// Closed-form solution sampled at a time, used for the first step.
pub type ReferenceSampler = Arc<dyn Fn(&TorusGrid, f64) -> RealField + Send + Sync>;

/// How `c⁻¹` is produced for the first three-level step.
#[derive(Clone, Default)]
pub enum FirstStep {
    /// `c⁻¹ = c⁰`.
    #[default]
    CopyPrevious,
    /// `c⁻¹` sampled from a known solution at `t0 − Δt`.
    ExactReference(ReferenceSampler),
}

impl fmt::Debug for FirstStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FirstStep::CopyPrevious => f.write_str("CopyPrevious"),
            FirstStep::ExactReference(_) => f.write_str("ExactReference(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemeParams {
    pub theta: f64,
    pub dt: f64,
    pub dealias: bool,
    pub aux_mean: AuxMean,
    pub first_step: FirstStep,
}

impl SchemeParams {
    /// Crank–Nicolson, no dealiasing, `c⁻¹ = c⁰`.
    pub fn new(dt: f64) -> Self {
        Self {
            theta: 0.5,
            dt,
            dealias: false,
            aux_mean: AuxMean::default(),
            first_step: FirstStep::CopyPrevious,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn with_reference(mut self, sampler: ReferenceSampler) -> Self {
        self.first_step = FirstStep::ExactReference(sampler);
        self
    }

    pub fn with_aux_mean(mut self, aux_mean: AuxMean) -> Self {
        self.aux_mean = aux_mean;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(NvError::Config(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(NvError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Field triple at one instant; `v` and `w` are slaved to `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct NvState {
    pub t: f64,
    pub u: RealField,
    pub v: RealField,
    pub w: RealField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub time: f64,
    pub l2_norm: f64,
    pub mean: f64,
    pub max_abs: f64,
}

pub fn diagnostics(state: &NvState) -> Diagnostics {
    Diagnostics {
        time: state.t,
        l2_norm: state.u.l2_norm(),
        mean: state.u.mean(),
        max_abs: state.u.max_abs(),
    }
}

/// Writes the `t,l2_norm,mean,max_abs` stream.
pub fn write_diagnostics_csv<W: Write>(out: W, rows: &[Diagnostics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "l2_norm", "mean", "max_abs"])?;
    for d in rows {
        w.write_record([
            fmt17(d.time),
            fmt17(d.l2_norm),
            fmt17(d.mean),
            fmt17(d.max_abs),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Precomputed multipliers for one grid.
#[derive(Debug, Clone)]
pub struct NvSystem {
    grid: TorusGrid,
    fft: Fft2,
    symbol: Vec<Complex64>,
    dx3: Vec<Complex64>,
    dy3: Vec<Complex64>,
    conj_index: Vec<usize>,
    keep: Option<Vec<bool>>,
    aux_mean: AuxMean,
}

impl NvSystem {
    pub fn new(grid: &TorusGrid, dealias: bool, aux_mean: AuxMean) -> Self {
        let g = *grid;
        let n = g.len();
        let mut dx3 = vec![Complex64::new(0.0, 0.0); n];
        let mut dy3 = vec![Complex64::new(0.0, 0.0); n];
        let mut conj_index = vec![0; n];
        let mut keep = vec![true; n];
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let idx = g.index(i, j);
                conj_index[idx] = g.index((g.nx() - i) % g.nx(), (g.ny() - j) % g.ny());
                keep[idx] = dealias_keep(&g, i, j);
                if !g.is_unpaired(i, j) {
                    dx3[idx] = Complex64::new(0.0, 3.0 * g.xi(i));
                    dy3[idx] = Complex64::new(0.0, 3.0 * g.eta(j));
                }
            }
        }
        Self {
            grid: g,
            fft: Fft2::new(&g),
            symbol: linear_symbol(&g).as_slice().to_vec(),
            dx3,
            dy3,
            conj_index,
            keep: dealias.then_some(keep),
            aux_mean,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn aux_mean(&self) -> AuxMean {
        self.aux_mean
    }

    fn mask(&self, data: &mut [Complex64]) {
        if let Some(keep) = &self.keep {
            for (c, k) in data.iter_mut().zip(keep) {
                if !k {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// `F(ĉ) = 3iξ·F[uv] + 3iη·F[uw]` with `v`, `w` from the auxiliary solve.
    pub fn nonlinear_term(&self, u_hat: &SpectralField) -> SpectralField {
        let mut a = u_hat.clone();
        self.mask(a.as_mut_slice());
        let (v_hat, w_hat) = solve_auxiliary(&a, self.aux_mean);
        let i_unit = Complex64::new(0.0, 1.0);
        // both spectra are Hermitian, so one complex inverse yields u and v
        let mut uv: Vec<Complex64> = a
            .as_slice()
            .iter()
            .zip(v_hat.as_slice())
            .map(|(u, v)| u + i_unit * v)
            .collect();
        self.fft.inverse_in_place(&mut uv);
        let mut w = w_hat.as_slice().to_vec();
        self.fft.inverse_in_place(&mut w);
        let mut prod: Vec<Complex64> = uv
            .iter()
            .zip(&w)
            .map(|(z, w)| Complex64::new(z.re * z.im, z.re * w.re))
            .collect();
        self.fft.forward_in_place(&mut prod);
        let mut out = vec![Complex64::new(0.0, 0.0); prod.len()];
        for (k, o) in out.iter_mut().enumerate() {
            let z = prod[k];
            let zc = prod[self.conj_index[k]].conj();
            let a = 0.5 * (z + zc);
            let b = (z - zc) * Complex64::new(0.0, -0.5);
            *o = self.dx3[k] * a + self.dy3[k] * b;
        }
        self.mask(&mut out);
        SpectralField::from_vec(self.grid, out).expect("grid-sized buffer")
    }

    /// Time derivative `(D ĉ + F(ĉ))/4` of the semi-discrete system.
    pub fn rhs(&self, c: &SpectralField) -> SpectralField {
        let f = self.nonlinear_term(c);
        let data = c
            .as_slice()
            .iter()
            .zip(f.as_slice())
            .zip(&self.symbol)
            .map(|((c, f), d)| 0.25 * (d * c + f))
            .collect();
        SpectralField::from_vec(self.grid, data).expect("grid-sized buffer")
    }

    /// θ-scheme update with an explicit forcing in place of `F(ĉⁿ)`.
    pub fn step_with_forcing(
        &self,
        c_now: &SpectralField,
        c_prev: &SpectralField,
        forcing: &SpectralField,
        theta: f64,
        dt: f64,
    ) -> SpectralField {
        let data = c_now
            .as_slice()
            .iter()
            .zip(c_prev.as_slice())
            .zip(forcing.as_slice())
            .zip(&self.symbol)
            .map(|(((now, prev), f), d)| {
                let rhs = (1.0 - 2.0 * theta) * dt * d * now + (2.0 + theta * dt * d) * prev + dt * f;
                rhs / (2.0 - theta * dt * d)
            })
            .collect();
        SpectralField::from_vec(self.grid, data).expect("grid-sized buffer")
    }

    /// One full step `ĉⁿ⁺¹` from `(ĉⁿ, ĉⁿ⁻¹)`.
    pub fn step(
        &self,
        c_now: &SpectralField,
        c_prev: &SpectralField,
        theta: f64,
        dt: f64,
    ) -> Result<SpectralField> {
        if c_now.grid() != &self.grid || c_prev.grid() != &self.grid {
            return Err(NvError::Contract("step inputs live on a different grid".into()));
        }
        if !c_now.is_finite() || !c_prev.is_finite() {
            return Err(NvError::Contract("step input contains NaN or infinity".into()));
        }
        let f = self.nonlinear_term(c_now);
        Ok(self.step_with_forcing(c_now, c_prev, &f, theta, dt))
    }

    /// Physical `(u, v, w)` of a spectrum.
    pub fn state(&self, t: f64, c: &SpectralField) -> NvState {
        let (v_hat, w_hat) = solve_auxiliary(c, self.aux_mean);
        let inv = |s: &SpectralField| self.fft.inverse(s).expect("grid matches");
        NvState {
            t,
            u: inv(c),
            v: inv(&v_hat),
            w: inv(&w_hat),
        }
    }
}

/// Builds a state from `u`, recomputing `v` and `w`.
pub fn state_from_u(t: f64, u: RealField, aux_mean: AuxMean) -> NvState {
    let fft = Fft2::new(u.grid());
    let c = fft.forward(&u).expect("grid matches");
    let (v_hat, w_hat) = solve_auxiliary(&c, aux_mean);
    NvState {
        t,
        v: fft.inverse(&v_hat).expect("grid matches"),
        w: fft.inverse(&w_hat).expect("grid matches"),
        u,
    }
}

/// Stateful three-level integrator.
#[derive(Debug, Clone)]
pub struct Evolver {
    system: NvSystem,
    params: SchemeParams,
    prev: SpectralField,
    now: SpectralField,
    steps: usize,
    t0: f64,
    initial_max: f64,
}

impl Evolver {
    pub fn new(u0: &RealField, t0: f64, params: SchemeParams) -> Result<Self> {
        params.validate()?;
        if !u0.is_finite() {
            return Err(NvError::Contract("initial data contains NaN or infinity".into()));
        }
        let system = NvSystem::new(u0.grid(), params.dealias, params.aux_mean);
        let now = system.fft().forward(u0)?;
        let prev = match &params.first_step {
            FirstStep::CopyPrevious => now.clone(),
            FirstStep::ExactReference(sampler) => {
                let back = sampler(u0.grid(), t0 - params.dt);
                system.fft().forward(&back)?
            }
        };
        let initial_max = now.max_abs();
        Ok(Self {
            system,
            params,
            prev,
            now,
            steps: 0,
            t0,
            initial_max,
        })
    }

    pub fn system(&self) -> &NvSystem {
        &self.system
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.steps as f64 * self.params.dt
    }

    pub fn spectrum(&self) -> &SpectralField {
        &self.now
    }

    pub fn state(&self) -> NvState {
        self.system.state(self.time(), &self.now)
    }

    pub fn advance(&mut self) -> Result<()> {
        let next = self
            .system
            .step(&self.now, &self.prev, self.params.theta, self.params.dt)?;
        let step = self.steps + 1;
        let limit = DIVERGENCE_FACTOR * self.initial_max.max(f64::MIN_POSITIVE);
        if !next.is_finite() || next.max_abs() > limit {
            return Err(NvError::Divergence {
                step,
                time: self.t0 + step as f64 * self.params.dt,
            });
        }
        self.prev = std::mem::replace(&mut self.now, next);
        self.steps = step;
        Ok(())
    }
}

/// Number of steps needed to reach `t_final`.
pub fn step_count(t_final: f64, dt: f64) -> usize {
    (t_final / dt - 1e-9).ceil().max(0.0) as usize
}

/// Runs to `t_final`, emitting the initial state, every `observer_stride`-th
/// state and the final state.
pub fn evolve(
    u0: &RealField,
    t_final: f64,
    params: SchemeParams,
    observer_stride: usize,
) -> Result<Vec<(NvState, Diagnostics)>> {
    let mut out = Vec::new();
    evolve_with(u0, t_final, params, observer_stride, |state, diag| {
        out.push((state.clone(), *diag));
        Ok(())
    })?;
    Ok(out)
}

/// Like [`evolve`] but hands each emitted state to a callback.
pub fn evolve_with<F>(
    u0: &RealField,
    t_final: f64,
    params: SchemeParams,
    observer_stride: usize,
    mut observer: F,
) -> Result<Evolver>
where
    F: FnMut(&NvState, &Diagnostics) -> Result<()>,
{
    if !(t_final > 0.0) {
        return Err(NvError::Config(format!("t_final must be positive, got {t_final}")));
    }
    if observer_stride == 0 {
        return Err(NvError::Config("observer stride must be at least 1".into()));
    }
    let n = step_count(t_final, params.dt);
    let mut ev = Evolver::new(u0, 0.0, params)?;
    let emit = |ev: &Evolver, observer: &mut F| {
        let s = ev.state();
        let d = diagnostics(&s);
        observer(&s, &d)
    };
    emit(&ev, &mut observer)?;
    for k in 1..=n {
        ev.advance()?;
        if k % observer_stride == 0 || k == n {
            emit(&ev, &mut observer)?;
        }
    }
    Ok(ev)
}

/// Sufficient Crank–Nicolson step bound `4Δx/(3|α|π)` for the linearization
/// about the constant state `α`; `+∞` when `α = 0`.
pub fn max_stable_dt(alpha_lin: f64, dx: f64) -> f64 {
    debug_assert!(dx > 0.0);
    if alpha_lin == 0.0 {
        return f64::INFINITY;
    }
    4.0 * dx / (3.0 * alpha_lin.abs() * std::f64::consts::PI)
}

/// `min(1e-3, 0.5·max_stable_dt(2·max|u0|, dx))`.
pub fn default_dt(u0: &RealField) -> f64 {
    let bound = max_stable_dt(2.0 * u0.max_abs(), u0.grid().dx());
    1e-3_f64.min(0.5 * bound)
}

/// Roots of `z² − (b₂/b̄₁)z − b₁/b̄₁` with `b₁ = 2 + iθλΔt`,
/// `b₂ = i((1−2θ)λ + γ)Δt`.
pub fn amplification_eigenvalues(
    theta: f64,
    lambda: f64,
    gamma_coef: f64,
    dt: f64,
) -> (Complex64, Complex64) {
    let b1 = Complex64::new(2.0, theta * lambda * dt);
    let b2 = Complex64::new(0.0, ((1.0 - 2.0 * theta) * lambda + gamma_coef) * dt);
    let p = b2 / b1.conj();
    let q = b1 / b1.conj();
    let disc = (p * p + 4.0 * q).sqrt();
    (0.5 * (p + disc), 0.5 * (p - disc))
}

/// `b₂ ∈ iℝ` and `|b₂| ≤ 2|b₁|`.
pub fn stability_condition_holds(theta: f64, lambda: f64, gamma_coef: f64, dt: f64) -> bool {
    let b1 = Complex64::new(2.0, theta * lambda * dt);
    let b2 = ((1.0 - 2.0 * theta) * lambda + gamma_coef) * dt;
    b2.abs() <= 2.0 * b1.norm()
}
