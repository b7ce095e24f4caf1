//! Plane-wave solutions: NV fields that depend only on `s = cos(α)x + sin(α)y`
//! are time-rescaled, frame-shifted KdV solutions with speed factor
//! `κ(α) = cos(3α)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{NvError, Result};
use crate::grid::{RealField, TorusGrid};

/// `cos(3α)`.
pub fn kappa(alpha: f64) -> f64 {
    (3.0 * alpha).cos()
}

/// Translation speed of the planar soliton of speed `c` travelling along angle `alpha`.
pub fn planar_speed(c: f64, alpha: f64) -> f64 {
    c * kappa(alpha)
}

/// The single-soliton solution `u = v = −2c·sech²(√c(x − x0 − ct))`, `w = 0`
/// of the y-independent NV equation `4u_t = −u_xxx + 6uu_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdvSoliton {
    c: f64,
    x0: f64,
}

pub fn kdv_soliton(c: f64, x0: f64) -> Result<KdvSoliton> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(NvError::Domain(format!("soliton speed must be positive, got {c}")));
    }
    Ok(KdvSoliton { c, x0 })
}

impl KdvSoliton {
    pub fn speed(&self) -> f64 {
        self.c
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn u(&self, x: f64, t: f64) -> f64 {
        let z = self.c.sqrt() * (x - self.x0 - self.c * t);
        -2.0 * self.c / z.cosh().powi(2)
    }

    pub fn v(&self, x: f64, t: f64) -> f64 {
        self.u(x, t)
    }

    pub fn w(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }

    /// Same profile expressed as a solution `q(t, x)` of `q_t = −q''' + 6qq'`.
    pub fn standard_kdv(&self) -> impl Fn(f64, f64) -> f64 + Copy {
        let this = *self;
        move |t, x| this.u(x, 4.0 * t)
    }

    /// Periodic sum of images, so the sampled profile is smooth across the seam.
    pub fn u_periodic(&self, x: f64, t: f64, period: f64) -> f64 {
        (-2..=2).map(|n| self.u(x + n as f64 * period, t)).sum()
    }

    /// Samples the soliton on a grid, constant in y, wrapped periodically in x.
    pub fn sample(&self, grid: &TorusGrid, t: f64) -> RealField {
        let wx = grid.wx();
        RealField::from_fn(*grid, |x, _| self.u_periodic(x, t, wx))
    }
}

/// Direction and offset constants of a planar solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarParams {
    pub alpha: f64,
    pub kappa: f64,
    pub c1_offset: f64,
    pub c2_offset: f64,
    pub beta: f64,
    pub k1: f64,
    pub k2: f64,
}

impl PlanarParams {
    /// Fixes `k1` from `3β/4 = k1 + k2·3κ/2`.
    pub fn new(alpha: f64, c1_offset: f64, c2_offset: f64, k2: f64) -> Self {
        let kappa = kappa(alpha);
        let beta = c1_offset * alpha.cos() + c2_offset * alpha.sin();
        let k1 = 0.75 * beta - 1.5 * k2 * kappa;
        Self {
            alpha,
            kappa,
            c1_offset,
            c2_offset,
            beta,
            k1,
            k2,
        }
    }

    /// Zero offsets, the convention used by the solver's auxiliary solve.
    pub fn along(alpha: f64) -> Self {
        Self::new(alpha, 0.0, 0.0, 0.0)
    }

    pub fn constraint_defect(&self) -> f64 {
        (0.75 * self.beta - self.k1 - 1.5 * self.k2 * self.kappa).abs()
    }

    pub fn direction(&self) -> (f64, f64) {
        (self.alpha.cos(), self.alpha.sin())
    }
}

/// A planar NV solution built from a KdV solution `q(t, x)`.
#[derive(Clone, Copy)]
pub struct PlanarSolution<Q> {
    q: Q,
    params: PlanarParams,
}

impl<Q> std::fmt::Debug for PlanarSolution<Q> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlanarSolution")
            .field("params", &self.params)
            .finish()
    }
}

/// Maps `q` to `u(t, s) = q(κt/4, s + k1·t) − k2` and the slaved auxiliary fields.
pub fn planar_from_kdv<Q>(q: Q, params: PlanarParams) -> Result<PlanarSolution<Q>>
where
    Q: Fn(f64, f64) -> f64,
{
    if params.kappa.abs() < 1e-12 {
        return Err(NvError::DegenerateDirection {
            alpha: params.alpha,
        });
    }
    Ok(PlanarSolution { q, params })
}

impl<Q> PlanarSolution<Q>
where
    Q: Fn(f64, f64) -> f64,
{
    pub fn params(&self) -> &PlanarParams {
        &self.params
    }

    /// `u` as a function of time and the coordinate along the direction.
    pub fn u_s(&self, t: f64, s: f64) -> f64 {
        (self.q)(0.25 * self.params.kappa * t, s + self.params.k1 * t) - self.params.k2
    }

    pub fn s(&self, x: f64, y: f64) -> f64 {
        let (n1, n2) = self.params.direction();
        n1 * x + n2 * y
    }

    pub fn u(&self, t: f64, x: f64, y: f64) -> f64 {
        self.u_s(t, self.s(x, y))
    }

    pub fn v(&self, t: f64, x: f64, y: f64) -> f64 {
        let (n1, n2) = self.params.direction();
        (n1 * n1 - n2 * n2) * self.u(t, x, y) + self.params.c1_offset
    }

    pub fn w(&self, t: f64, x: f64, y: f64) -> f64 {
        let (n1, n2) = self.params.direction();
        -2.0 * n1 * n2 * self.u(t, x, y) + self.params.c2_offset
    }

    /// Discrete L² residual of `(4/κ)u_t + u''' − 6uu' − (3β/κ)u'` at time `t`,
    /// sampled on `n` points of the periodic window `[s_lo, s_lo + width)`.
    ///
    /// Space derivatives are spectral, the time derivative a sixth-order
    /// central difference with step `dt`.
    pub fn kdv_form_residual(&self, t: f64, s_lo: f64, width: f64, n: usize, dt: f64) -> f64 {
        let ds = width / n as f64;
        let s: Vec<f64> = (0..n).map(|i| s_lo + i as f64 * ds).collect();
        let u: Vec<f64> = s.iter().map(|&s| self.u_s(t, s)).collect();
        let weights = [(1.0, 3.0 / 4.0), (2.0, -3.0 / 20.0), (3.0, 1.0 / 60.0)];
        let u_t: Vec<f64> = s
            .iter()
            .map(|&si| {
                weights
                    .iter()
                    .map(|&(m, wgt)| wgt * (self.u_s(t + m * dt, si) - self.u_s(t - m * dt, si)))
                    .sum::<f64>()
                    / dt
            })
            .collect();
        let d1 = periodic_derivative(&u, width, 1);
        let d3 = periodic_derivative(&u, width, 3);
        let (kappa, beta) = (self.params.kappa, self.params.beta);
        let sum: f64 = (0..n)
            .map(|i| {
                let r = 4.0 / kappa * u_t[i] + d3[i] - 6.0 * u[i] * d1[i] - 3.0 * beta / kappa * d1[i];
                r * r
            })
            .sum();
        (sum * ds).sqrt()
    }

    /// Samples `(u, v, w)` at time `t` on a grid.
    pub fn sample(&self, grid: &TorusGrid, t: f64) -> (RealField, RealField, RealField) {
        (
            RealField::from_fn(*grid, |x, y| self.u(t, x, y)),
            RealField::from_fn(*grid, |x, y| self.v(t, x, y)),
            RealField::from_fn(*grid, |x, y| self.w(t, x, y)),
        )
    }
}

/// Spectral `d^order/ds^order` of periodic samples on a window of length `width`.
pub fn periodic_derivative(samples: &[f64], width: f64, order: u32) -> Vec<f64> {
    let n = samples.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (i, c) in buf.iter_mut().enumerate() {
        let p = TorusGrid::signed_index(i, n);
        if order % 2 == 1 && i == n / 2 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        *c *= Complex64::new(0.0, 2.0 * PI * p as f64 / width).powu(order);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// One row of the speed-profile table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SpeedSample {
    pub alpha: f64,
    pub kappa: f64,
    pub speed: f64,
}

/// `n` equally spaced angles on `[0, 2π)`.
pub fn speed_profile(c: f64, n: usize) -> Vec<SpeedSample> {
    (0..n)
        .map(|i| {
            let alpha = 2.0 * PI * i as f64 / n as f64;
            SpeedSample {
                alpha,
                kappa: kappa(alpha),
                speed: planar_speed(c, alpha),
            }
        })
        .collect()
}
