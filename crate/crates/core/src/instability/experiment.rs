//! Perturbed soliton initial data and the measurements taken on its evolution.

use serde::{Deserialize, Serialize};

use super::comoving::comoving_transform;
use super::ode::soliton_profile;
use super::shape::PerturbationShape;
use crate::error::{NvError, Result};
use crate::evolver::NvState;
use crate::grid::{RealField, TorusGrid};

/// Largest neglected periodic image allowed in sampled profiles.
pub const TAIL_TOLERANCE: f64 = 1e-10;
const MAX_IMAGES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    pub k: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub x_match: f64,
    /// Speed of the base soliton.
    pub c: f64,
    /// Initial soliton centre.
    pub x0: f64,
}

impl PerturbationParams {
    pub fn new(k: f64, gamma: f64, epsilon: f64) -> Self {
        Self {
            k,
            gamma,
            epsilon,
            x_match: 12.0,
            c: 1.0,
            x0: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_match > 0.0) {
            return Err(NvError::Config(format!("x_match must be positive, got {}", self.x_match)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(NvError::Config(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if !(self.c > 0.0) {
            return Err(NvError::Config(format!("soliton speed must be positive, got {}", self.c)));
        }
        if !(self.k >= 0.0) {
            return Err(NvError::Config(format!("k must be nonnegative, got {}", self.k)));
        }
        Ok(())
    }
}

fn check_period(grid: &TorusGrid, k: f64, c: f64) -> Result<()> {
    if k == 0.0 {
        return Ok(());
    }
    let period = comoving_transform(c)?.period_y(k);
    let ratio = grid.wy() / period;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        let lo = (ratio.floor().max(1.0)) * period;
        let hi = (ratio.ceil().max(1.0)) * period;
        return Err(NvError::Config(format!(
            "y-width {} is not a multiple of the perturbation period {period}; nearest admissible widths are {lo} and {hi}",
            grid.wy()
        )));
    }
    Ok(())
}

/// Number of periodic images needed so the next one is below the tolerance.
fn images_needed(wx: f64, scale: f64, tail: impl Fn(f64) -> f64) -> Result<usize> {
    for n in 1..=MAX_IMAGES {
        if tail(scale * n as f64 * wx) < TAIL_TOLERANCE {
            return Ok(n);
        }
    }
    Err(NvError::Config(format!(
        "profile tails do not decay below {TAIL_TOLERANCE} within {MAX_IMAGES} periods of the x-width {wx}"
    )))
}

/// `u = c[u₀ + ε f cos(k̃y)]`, `v = c[u₀ + ε g cos(k̃y)]`,
/// `w = −c ε h_imag sin(k̃y)` with `x̃ = √c(x − x₀)`, `k̃ = k√c`, all profiles
/// summed over periodic images in `x`.
pub fn perturbed_initial_state(
    shape: &PerturbationShape,
    params: &PerturbationParams,
    grid: &TorusGrid,
) -> Result<NvState> {
    params.validate()?;
    if (shape.k - params.k).abs() > 1e-12 {
        return Err(NvError::Contract(format!(
            "shape computed at k = {} used with k = {}",
            shape.k, params.k
        )));
    }
    check_period(grid, params.k, params.c)?;
    let c = params.c;
    let sc = c.sqrt();
    let wx = grid.wx();
    let eps = params.epsilon;
    let n_sol = images_needed(wx, sc, |d| 2.0 * c / (0.5 * d).cosh().powi(2))?;
    let n_shape = if eps > 0.0 {
        images_needed(wx, sc, |d| eps * c * shape.tail_magnitude((0.5 * d - shape.x_match).max(0.0)))?
    } else {
        0
    };
    let n_img = n_sol.max(n_shape) as i64;

    let mut base = vec![0.0; grid.nx()];
    let mut fx = vec![0.0; grid.nx()];
    let mut gx = vec![0.0; grid.nx()];
    let mut hx = vec![0.0; grid.nx()];
    for l in 0..grid.nx() {
        for n in -n_img..=n_img {
            let xt = sc * (grid.x(l) - params.x0 + n as f64 * wx);
            base[l] += soliton_profile(xt);
            if eps > 0.0 {
                let s = shape.eval(xt);
                fx[l] += s.f;
                gx[l] += s.g;
                hx[l] += s.h_imag;
            }
        }
    }
    let kt = params.k * sc;
    let mut u = RealField::zeros(*grid);
    let mut v = RealField::zeros(*grid);
    let mut w = RealField::zeros(*grid);
    for m in 0..grid.ny() {
        let (sn, cs) = (kt * grid.y(m)).sin_cos();
        for l in 0..grid.nx() {
            let idx = grid.index(l, m);
            u.as_mut_slice()[idx] = c * (base[l] + eps * fx[l] * cs);
            v.as_mut_slice()[idx] = c * (base[l] + eps * gx[l] * cs);
            w.as_mut_slice()[idx] = -c * eps * hx[l] * sn;
        }
    }
    Ok(NvState { t: 0.0, u, v, w })
}

/// Periodic soliton of speed `c` centred at `center`, y-independent profile.
fn soliton_line(grid: &TorusGrid, c: f64, center: f64) -> Vec<f64> {
    let sc = c.sqrt();
    let n_img = images_needed(grid.wx(), sc, |d| 2.0 * c / (0.5 * d).cosh().powi(2)).unwrap_or(MAX_IMAGES) as i64;
    (0..grid.nx())
        .map(|l| {
            (-n_img..=n_img)
                .map(|n| c * soliton_profile(sc * (grid.x(l) - center + n as f64 * grid.wx())))
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    /// Discrete L² norm of `u − soliton`.
    pub l2: f64,
    /// Best-fit displacement of the comparison soliton from `center`.
    pub shift: f64,
}

/// Distance from `u` to the speed-`c` soliton near `center`, after the
/// x-shift within `±max_shift` that minimizes it.
pub fn deviation_from_soliton(u: &RealField, c: f64, center: f64, max_shift: f64) -> Deviation {
    let grid = *u.grid();
    let mean = u.y_average();
    let misfit = |s: f64| -> f64 {
        soliton_line(&grid, c, center + s)
            .iter()
            .zip(&mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };
    let inv_phi = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (-max_shift, max_shift);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (misfit(x1), misfit(x2));
    while hi - lo > 1e-9 * (1.0 + max_shift) {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = misfit(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = misfit(x2);
        }
    }
    let shift = 0.5 * (lo + hi);
    let line = soliton_line(&grid, c, center + shift);
    let mut sum = 0.0;
    for m in 0..grid.ny() {
        for l in 0..grid.nx() {
            let d = u.at(l, m) - line[l];
            sum += d * d;
        }
    }
    Deviation {
        l2: (sum * grid.dx() * grid.dy()).sqrt(),
        shift,
    }
}

/// Pearson correlation between the `cos(k√c y)` component of `u − soliton`
/// and the shape's `f`, both on the x-grid around `center`.
pub fn shape_correlation(
    u: &RealField,
    shape: &PerturbationShape,
    c: f64,
    center: f64,
) -> f64 {
    let grid = *u.grid();
    let sc = c.sqrt();
    let line = soliton_line(&grid, c, center);
    let kt = shape.k * sc;
    let ny = grid.ny() as f64;
    let profile: Vec<f64> = (0..grid.nx())
        .map(|l| {
            (0..grid.ny())
                .map(|m| (u.at(l, m) - line[l]) * (kt * grid.y(m)).cos())
                .sum::<f64>()
                * 2.0
                / ny
        })
        .collect();
    let n_img = 3i64;
    let model: Vec<f64> = (0..grid.nx())
        .map(|l| {
            (-n_img..=n_img)
                .map(|n| shape.eval(sc * (grid.x(l) - center + n as f64 * grid.wx())).f)
                .sum()
        })
        .collect();
    pearson(&profile, &model)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub gamma: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares slope of `log d` against `t`, optionally restricted to a
/// time window.
pub fn growth_rate_fit(samples: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<GrowthFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(t, _)| window.map_or(true, |(a, b)| *t >= a && *t <= b))
        .collect();
    if pts.len() < 5 {
        return Err(NvError::Domain(format!(
            "growth fit needs at least 5 samples, got {}",
            pts.len()
        )));
    }
    if let Some((t, d)) = pts.iter().find(|(_, d)| !(*d > 0.0)) {
        return Err(NvError::Domain(format!("nonpositive deviation {d} at t = {t}")));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut stt, mut stl, mut sll) = (0.0, 0.0, 0.0);
    for (t, d) in &pts {
        let (a, b) = (t - mt, d.ln() - ml);
        stt += a * a;
        stl += a * b;
        sll += b * b;
    }
    if stt == 0.0 {
        return Err(NvError::Domain("growth fit needs distinct sample times".into()));
    }
    let gamma = stl / stt;
    let ss_res: f64 = pts
        .iter()
        .map(|(t, d)| {
            let r = d.ln() - (ml + gamma * (t - mt));
            r * r
        })
        .sum();
    let r_squared = if sll == 0.0 { 1.0 } else { 1.0 - ss_res / sll };
    Ok(GrowthFit {
        gamma,
        intercept: ml - gamma * mt,
        r_squared,
    })
}
