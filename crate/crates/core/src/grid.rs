//! Periodic rectangular grids, the 2-D discrete Fourier transform pair and
//! the spectral multipliers used by the evolution scheme.
//!
//! Samples are stored with the x index fastest: sample `(l, m)` lives at
//! `m * nx + l`. Spectral coefficients use the same layout in FFT order, so
//! index `i < n/2` carries wavenumber index `p = i` and `i >= n/2` carries
//! `p = i - n`. The single unpaired index `p = -n/2` is the Nyquist mode.
//!
//! The transform convention is the unnormalized forward sum
//! `û[p,q] = Σ u[l,m] exp(-i(ξ_p x_l + η_q y_m))`, with the `1/(L·M)` factor on
//! the inverse.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{NvError, Result};

/// Periodic grid on `[0, wx) × [0, wy)` with `nx × ny` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    wx: f64,
    wy: f64,
    nx: usize,
    ny: usize,
}

impl TorusGrid {
    /// Both counts must be powers of two and at least 8; widths must be positive.
    pub fn new(wx: f64, wy: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(wx.is_finite() && wx > 0.0 && wy.is_finite() && wy > 0.0) {
            return Err(NvError::Config(format!(
                "domain widths must be positive and finite, got ({wx}, {wy})"
            )));
        }
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if !n.is_power_of_two() || n < 8 {
                return Err(NvError::Config(format!(
                    "{name} = {n} must be a power of two and at least 8"
                )));
            }
        }
        Ok(Self { wx, wy, nx, ny })
    }

    pub fn wx(&self) -> f64 {
        self.wx
    }

    pub fn wy(&self) -> f64 {
        self.wy
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.wx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.wy / self.ny as f64
    }

    pub fn x(&self, l: usize) -> f64 {
        l as f64 * self.dx()
    }

    pub fn y(&self, m: usize) -> f64 {
        m as f64 * self.dy()
    }

    pub fn index(&self, l: usize, m: usize) -> usize {
        m * self.nx + l
    }

    /// Signed wavenumber index for FFT-ordered position `i` of an `n`-point axis.
    pub fn signed_index(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// ξ at FFT-ordered x position `i`.
    pub fn xi(&self, i: usize) -> f64 {
        2.0 * PI * Self::signed_index(i, self.nx) as f64 / self.wx
    }

    /// η at FFT-ordered y position `j`.
    pub fn eta(&self, j: usize) -> f64 {
        2.0 * PI * Self::signed_index(j, self.ny) as f64 / self.wy
    }

    pub fn is_nyquist_x(&self, i: usize) -> bool {
        i == self.nx / 2
    }

    pub fn is_nyquist_y(&self, j: usize) -> bool {
        j == self.ny / 2
    }

    /// True when either axis index is the unpaired Nyquist mode.
    pub fn is_unpaired(&self, i: usize, j: usize) -> bool {
        self.is_nyquist_x(i) || self.is_nyquist_y(j)
    }

    /// The wavenumber lattice along x in ascending order (`p = -nx/2 .. nx/2-1`).
    pub fn xi_lattice(&self) -> Vec<f64> {
        let half = self.nx as i64 / 2;
        (-half..half)
            .map(|p| 2.0 * PI * p as f64 / self.wx)
            .collect()
    }

    pub fn eta_lattice(&self) -> Vec<f64> {
        let half = self.ny as i64 / 2;
        (-half..half)
            .map(|q| 2.0 * PI * q as f64 / self.wy)
            .collect()
    }

    /// FFT-ordered position of signed index `p` on an `n`-point axis.
    pub fn position(p: i64, n: usize) -> usize {
        p.rem_euclid(n as i64) as usize
    }
}

/// Real samples on a [`TorusGrid`].
#[derive(Clone, PartialEq)]
pub struct RealField {
    grid: TorusGrid,
    data: Vec<f64>,
}

impl fmt::Debug for RealField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealField")
            .field("grid", &self.grid)
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

impl RealField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn from_vec(grid: TorusGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(NvError::Shape {
                expected: grid.len(),
                got: data.len(),
            });
        }
        Ok(Self { grid, data })
    }

    /// Samples `f(x_l, y_m)` at every grid point.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for m in 0..grid.ny() {
            let y = grid.y(m);
            for l in 0..grid.nx() {
                data.push(f(grid.x(l), y));
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn at(&self, l: usize, m: usize) -> f64 {
        self.data[self.grid.index(l, m)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// `sqrt(dx·dy·Σ u²)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.data.iter().map(|v| v * v).sum();
        (s * self.grid.dx() * self.grid.dy()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sub(&self, other: &RealField) -> Result<RealField> {
        same_grid(&self.grid, &other.grid)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(RealField {
            grid: self.grid,
            data,
        })
    }

    /// Mean over y for every x column; the x-profile of the field.
    pub fn y_average(&self) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut out = vec![0.0; nx];
        for m in 0..ny {
            for (l, o) in out.iter_mut().enumerate() {
                *o += self.data[m * nx + l];
            }
        }
        out.iter_mut().for_each(|o| *o /= ny as f64);
        out
    }
}

/// Complex Fourier coefficients on a [`TorusGrid`] in FFT order.
#[derive(Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    data: Vec<Complex64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_vec(grid: TorusGrid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(NvError::Shape {
                expected: grid.len(),
                got: data.len(),
            });
        }
        Ok(Self { grid, data })
    }

    /// Builds coefficients from `f(i, j)` over FFT-ordered positions.
    pub fn from_modes(grid: TorusGrid, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                data.push(f(i, j));
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Coefficient for signed wavenumber indices `(p, q)`.
    pub fn mode(&self, p: i64, q: i64) -> Complex64 {
        let i = TorusGrid::position(p, self.grid.nx());
        let j = TorusGrid::position(q, self.grid.ny());
        self.data[self.grid.index(i, j)]
    }

    pub fn set_mode(&mut self, p: i64, q: i64, value: Complex64) {
        let i = TorusGrid::position(p, self.grid.nx());
        let j = TorusGrid::position(q, self.grid.ny());
        let idx = self.grid.index(i, j);
        self.data[idx] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Pointwise product with a multiplier evaluated at `(ξ, η)`.
    pub fn multiply_by(&self, symbol: impl Fn(f64, f64) -> Complex64) -> SpectralField {
        let g = self.grid;
        let mut out = self.clone();
        for j in 0..g.ny() {
            let eta = g.eta(j);
            for i in 0..g.nx() {
                let idx = g.index(i, j);
                out.data[idx] *= symbol(g.xi(i), eta);
            }
        }
        out
    }

    /// Largest violation of `û[-p,-q] = conj(û[p,q])` over paired modes.
    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        let mut worst = 0.0_f64;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if g.is_unpaired(i, j) {
                    continue;
                }
                let ci = (g.nx() - i) % g.nx();
                let cj = (g.ny() - j) % g.ny();
                let a = self.data[g.index(i, j)];
                let b = self.data[g.index(ci, cj)].conj();
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }
}

fn same_grid(a: &TorusGrid, b: &TorusGrid) -> Result<()> {
    if a != b {
        return Err(NvError::Contract(format!(
            "fields live on different grids: {a:?} vs {b:?}"
        )));
    }
    Ok(())
}

/// Planned 2-D transforms for one grid.
#[derive(Clone)]
pub struct Fft2 {
    grid: TorusGrid,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("grid", &self.grid).finish()
    }
}

impl Fft2 {
    pub fn new(grid: &TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: *grid,
            fwd_x: planner.plan_fft_forward(grid.nx()),
            fwd_y: planner.plan_fft_forward(grid.ny()),
            inv_x: planner.plan_fft_inverse(grid.nx()),
            inv_y: planner.plan_fft_inverse(grid.ny()),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn check(&self, grid: &TorusGrid) -> Result<()> {
        same_grid(&self.grid, grid)
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (fx, fy) = if inverse {
            (&self.inv_x, &self.inv_y)
        } else {
            (&self.fwd_x, &self.fwd_y)
        };
        // rows are contiguous; the transform processes each chunk of length nx
        fx.process(buf);
        let mut cols = vec![Complex64::new(0.0, 0.0); nx * ny];
        for m in 0..ny {
            for l in 0..nx {
                cols[l * ny + m] = buf[m * nx + l];
            }
        }
        fy.process(&mut cols);
        for l in 0..nx {
            for m in 0..ny {
                buf[m * nx + l] = cols[l * ny + m];
            }
        }
    }

    /// Unnormalized forward transform of a complex buffer in grid layout.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.grid.len());
        self.transform(buf, false);
    }

    /// Normalized inverse transform of a complex buffer in grid layout.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.grid.len());
        self.transform(buf, true);
        let scale = 1.0 / self.grid.len() as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, field: &RealField) -> Result<SpectralField> {
        self.check(field.grid())?;
        let mut buf: Vec<Complex64> = field
            .as_slice()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.transform(&mut buf, false);
        Ok(SpectralField {
            grid: self.grid,
            data: buf,
        })
    }

    /// Inverse transform including the `1/(L·M)` factor, keeping all components.
    pub fn inverse_complex(&self, spec: &SpectralField) -> Result<Vec<Complex64>> {
        self.check(spec.grid())?;
        let mut buf = spec.as_slice().to_vec();
        self.transform(&mut buf, true);
        let scale = 1.0 / self.grid.len() as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        Ok(buf)
    }

    /// Inverse transform returning the real part.
    pub fn inverse(&self, spec: &SpectralField) -> Result<RealField> {
        let buf = self.inverse_complex(spec)?;
        Ok(RealField {
            grid: self.grid,
            data: buf.into_iter().map(|v| v.re).collect(),
        })
    }
}

/// How the undetermined mean values of `v` and `w` are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxMean {
    /// `v̂₀₀ = û₀₀`, `ŵ₀₀ = 0`: the auxiliary offsets vanish for waves along x,
    /// so `v = u` exactly for y-independent data.
    #[default]
    FollowU,
    /// `v̂₀₀ = ŵ₀₀ = 0`.
    Zero,
}

/// Diagonal of the linear operator: `i(ξ³ − 3ξη²)`, zero on unpaired modes.
pub fn linear_symbol(grid: &TorusGrid) -> SpectralField {
    SpectralField::from_modes(*grid, |i, j| {
        if grid.is_unpaired(i, j) {
            return Complex64::new(0.0, 0.0);
        }
        let (xi, eta) = (grid.xi(i), grid.eta(j));
        Complex64::new(0.0, xi * xi * xi - 3.0 * xi * eta * eta)
    })
}

/// Multipliers `((ξ²−η²)/(ξ²+η²), −2ξη/(ξ²+η²))` mapping `û` to `(v̂, ŵ)`.
pub fn auxiliary_multipliers(xi: f64, eta: f64) -> Option<(f64, f64)> {
    let r2 = xi * xi + eta * eta;
    if r2 == 0.0 {
        return None;
    }
    Some(((xi * xi - eta * eta) / r2, -2.0 * xi * eta / r2))
}

/// Solves the ∂̄ system for `(v̂, ŵ)` given `û`.
pub fn solve_auxiliary(u_hat: &SpectralField, mean: AuxMean) -> (SpectralField, SpectralField) {
    let g = *u_hat.grid();
    let mut v = SpectralField::zeros(g);
    let mut w = SpectralField::zeros(g);
    for j in 0..g.ny() {
        let eta = g.eta(j);
        for i in 0..g.nx() {
            let idx = g.index(i, j);
            let u = u_hat.data[idx];
            match auxiliary_multipliers(g.xi(i), eta) {
                Some((mv, mw)) => {
                    v.data[idx] = u * mv;
                    w.data[idx] = u * mw;
                }
                None => {
                    if mean == AuxMean::FollowU {
                        v.data[idx] = u;
                    }
                }
            }
        }
    }
    (v, w)
}

/// Spectral derivative `∂x^ax ∂y^ay`, with unpaired modes zeroed for odd orders.
pub fn derivative(spec: &SpectralField, ax: u32, ay: u32) -> SpectralField {
    let g = *spec.grid();
    let mut out = spec.clone();
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let idx = g.index(i, j);
            if (ax % 2 == 1 && g.is_nyquist_x(i)) || (ay % 2 == 1 && g.is_nyquist_y(j)) {
                out.data[idx] = Complex64::new(0.0, 0.0);
                continue;
            }
            let factor = Complex64::new(0.0, g.xi(i)).powu(ax) * Complex64::new(0.0, g.eta(j)).powu(ay);
            out.data[idx] *= factor;
        }
    }
    out
}

/// True for modes kept by the 2/3 rule.
pub fn dealias_keep(grid: &TorusGrid, i: usize, j: usize) -> bool {
    let p = TorusGrid::signed_index(i, grid.nx()).unsigned_abs() as usize;
    let q = TorusGrid::signed_index(j, grid.ny()).unsigned_abs() as usize;
    3 * p <= grid.nx() && 3 * q <= grid.ny()
}

/// Zeroes every mode outside the 2/3-rule box.
pub fn apply_dealias(spec: &mut SpectralField) {
    let g = *spec.grid();
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            if !dealias_keep(&g, i, j) {
                let idx = g.index(i, j);
                spec.data[idx] = Complex64::new(0.0, 0.0);
            }
        }
    }
}
