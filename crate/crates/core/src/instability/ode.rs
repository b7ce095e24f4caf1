//! Linearized profile equations about the unit soliton and their integration.
//!
//! The 5-component state is `(f, f', f'', g, g')` with
//!
//! ```text
//! f''' = (−4γ + 3u₀')f + (4 − 3k²)f' + 3u₀'g + 6u₀g'
//! g''  = k²g + f'' + k²f
//! ```
//!
//! and `u₀ = −2 sech²x`. At `k = 0` the bounded solutions have `g = f` and the
//! state reduces to `(f, f', f'')` with `f''' = (−4γ + 6u₀')f + (4 + 6u₀)f'`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{NvError, Result};

pub fn soliton_profile(x: f64) -> f64 {
    let s = 1.0 / x.cosh();
    -2.0 * s * s
}

pub fn soliton_slope(x: f64) -> f64 {
    let s = 1.0 / x.cosh();
    4.0 * s * s * x.tanh()
}

/// A linear system `y' = A(x) y`.
pub trait LinearOde: Sync {
    fn dim(&self) -> usize;
    fn fill(&self, x: f64, a: &mut DMatrix<f64>);

    fn matrix(&self, x: f64) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.dim(), self.dim());
        self.fill(x, &mut a);
        a
    }
}

/// The 5×5 system at transverse wavenumber `k` and growth rate `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearized {
    pub k: f64,
    pub gamma: f64,
    /// Drop the soliton coefficients, leaving the constant far-field system.
    pub far_field: bool,
}

impl Linearized {
    pub fn new(k: f64, gamma: f64) -> Self {
        Self {
            k,
            gamma,
            far_field: false,
        }
    }

    pub fn far_field(k: f64, gamma: f64) -> Self {
        Self {
            k,
            gamma,
            far_field: true,
        }
    }
}

impl LinearOde for Linearized {
    fn dim(&self) -> usize {
        5
    }

    fn fill(&self, x: f64, a: &mut DMatrix<f64>) {
        let (u0, u0p) = if self.far_field {
            (0.0, 0.0)
        } else {
            (soliton_profile(x), soliton_slope(x))
        };
        let k2 = self.k * self.k;
        a.fill(0.0);
        a[(0, 1)] = 1.0;
        a[(1, 2)] = 1.0;
        a[(2, 0)] = -4.0 * self.gamma + 3.0 * u0p;
        a[(2, 1)] = 4.0 - 3.0 * k2;
        a[(2, 3)] = 3.0 * u0p;
        a[(2, 4)] = 6.0 * u0;
        a[(3, 4)] = 1.0;
        a[(4, 0)] = k2;
        a[(4, 2)] = 1.0;
        a[(4, 3)] = k2;
    }
}

/// The reduced 3×3 system at `k = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedK0 {
    pub gamma: f64,
    pub far_field: bool,
}

impl LinearizedK0 {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            far_field: false,
        }
    }
}

impl LinearOde for LinearizedK0 {
    fn dim(&self) -> usize {
        3
    }

    fn fill(&self, x: f64, a: &mut DMatrix<f64>) {
        let (u0, u0p) = if self.far_field {
            (0.0, 0.0)
        } else {
            (soliton_profile(x), soliton_slope(x))
        };
        a.fill(0.0);
        a[(0, 1)] = 1.0;
        a[(1, 2)] = 1.0;
        a[(2, 0)] = -4.0 * self.gamma + 6.0 * u0p;
        a[(2, 1)] = 4.0 + 6.0 * u0;
    }
}

/// Coefficient function `x ↦ A(x)` of the 5×5 system.
pub fn linearized_rhs(k: f64, gamma: f64) -> impl Fn(f64) -> DMatrix<f64> {
    let sys = Linearized::new(k, gamma);
    move |x| sys.matrix(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OdeMethod {
    /// Dormand–Prince 5(4) with error control.
    Adaptive { rtol: f64, atol: f64 },
    /// Classical RK4 with steps no longer than `max_step`.
    FixedRk4 { max_step: f64 },
}

impl Default for OdeMethod {
    fn default() -> Self {
        OdeMethod::Adaptive {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

const MAX_STEPS: usize = 2_000_000;

// Dormand–Prince tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrator state carried across consecutive intervals.
pub struct Integrator<'a> {
    sys: &'a dyn LinearOde,
    method: OdeMethod,
    a: DMatrix<f64>,
    h: f64,
}

impl<'a> Integrator<'a> {
    pub fn new(sys: &'a dyn LinearOde, method: OdeMethod) -> Self {
        let n = sys.dim();
        Self {
            sys,
            method,
            a: DMatrix::zeros(n, n),
            h: 0.01,
        }
    }

    fn deriv(&mut self, x: f64, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.sys.fill(x, &mut self.a);
        &self.a * y
    }

    /// Advances `y` from `x0` to `x1` (either direction).
    pub fn advance(&mut self, y: &mut DMatrix<f64>, x0: f64, x1: f64) -> Result<()> {
        if x0 == x1 {
            return Ok(());
        }
        match self.method {
            OdeMethod::FixedRk4 { max_step } => self.rk4(y, x0, x1, max_step),
            OdeMethod::Adaptive { rtol, atol } => self.dopri(y, x0, x1, rtol, atol),
        }
    }

    fn rk4(&mut self, y: &mut DMatrix<f64>, x0: f64, x1: f64, max_step: f64) -> Result<()> {
        if !(max_step > 0.0) {
            return Err(NvError::Config("RK4 step must be positive".into()));
        }
        let n = ((x1 - x0).abs() / max_step).ceil().max(1.0) as usize;
        let h = (x1 - x0) / n as f64;
        for i in 0..n {
            let x = x0 + i as f64 * h;
            let k1 = self.deriv(x, y);
            let k2 = self.deriv(x + 0.5 * h, &(&*y + &k1 * (0.5 * h)));
            let k3 = self.deriv(x + 0.5 * h, &(&*y + &k2 * (0.5 * h)));
            let k4 = self.deriv(x + h, &(&*y + &k3 * h));
            *y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        Ok(())
    }

    fn dopri(&mut self, y: &mut DMatrix<f64>, x0: f64, x1: f64, rtol: f64, atol: f64) -> Result<()> {
        let dir = (x1 - x0).signum();
        let mut x = x0;
        let mut h = self.h.abs().min((x1 - x0).abs()) * dir;
        let mut k1 = self.deriv(x, y);
        for _ in 0..MAX_STEPS {
            if (x1 - x) * dir <= 0.0 {
                return Ok(());
            }
            let last = (x + 1.01 * h - x1) * dir >= 0.0;
            if last {
                h = x1 - x;
            }
            let k2 = self.deriv(x + C[1] * h, &(&*y + &k1 * (A2[0] * h)));
            let k3 = self.deriv(x + C[2] * h, &(&*y + (&k1 * A3[0] + &k2 * A3[1]) * h));
            let k4 = self.deriv(
                x + C[3] * h,
                &(&*y + (&k1 * A4[0] + &k2 * A4[1] + &k3 * A4[2]) * h),
            );
            let k5 = self.deriv(
                x + C[4] * h,
                &(&*y + (&k1 * A5[0] + &k2 * A5[1] + &k3 * A5[2] + &k4 * A5[3]) * h),
            );
            let k6 = self.deriv(
                x + C[5] * h,
                &(&*y + (&k1 * A6[0] + &k2 * A6[1] + &k3 * A6[2] + &k4 * A6[3] + &k5 * A6[4]) * h),
            );
            let y_new = &*y
                + (&k1 * B[0] + &k3 * B[2] + &k4 * B[3] + &k5 * B[4] + &k6 * B[5]) * h;
            let k7 = self.deriv(x + h, &y_new);
            let err_vec =
                (&k1 * E[0] + &k3 * E[2] + &k4 * E[3] + &k5 * E[4] + &k6 * E[5] + &k7 * E[6]) * h;
            let mut err: f64 = 0.0;
            for ((e, a), b) in err_vec.iter().zip(y.iter()).zip(y_new.iter()) {
                let sc = atol + rtol * a.abs().max(b.abs());
                err = err.max(e.abs() / sc);
            }
            if !err.is_finite() {
                return Err(NvError::Integrator {
                    x,
                    reason: "non-finite error estimate".into(),
                });
            }
            if err <= 1.0 {
                x = if last { x1 } else { x + h };
                *y = y_new;
                k1 = k7;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= fac;
                if !last {
                    self.h = h;
                }
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h.abs() < 1e-14 * (1.0 + x.abs()) {
                    return Err(NvError::Integrator {
                        x,
                        reason: "step size underflow".into(),
                    });
                }
            }
        }
        Err(NvError::Integrator {
            x,
            reason: format!("more than {MAX_STEPS} steps"),
        })
    }
}

/// Solution of `y' = A y` from `x0` to `x1` for a block of initial columns.
pub fn integrate(
    sys: &dyn LinearOde,
    y0: &DMatrix<f64>,
    x0: f64,
    x1: f64,
    method: OdeMethod,
) -> Result<DMatrix<f64>> {
    let mut y = y0.clone();
    Integrator::new(sys, method).advance(&mut y, x0, x1)?;
    Ok(y)
}

/// Flow map `T` of the 5×5 system across `[−x_match, x_match]`.
pub fn flow_map(k: f64, gamma: f64, x_match: f64, method: OdeMethod) -> Result<DMatrix<f64>> {
    if !(x_match > 0.0) {
        return Err(NvError::Config(format!("x_match must be positive, got {x_match}")));
    }
    integrate(
        &Linearized::new(k, gamma),
        &DMatrix::identity(5, 5),
        -x_match,
        x_match,
        method,
    )
}

/// Thin QR with a positive diagonal in `R`, so orientation is preserved.
pub fn qr_positive(b: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = b.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows() {
        if r[(i, i)] < 0.0 {
            for row in 0..q.nrows() {
                q[(row, i)] = -q[(row, i)];
            }
            for col in 0..r.ncols() {
                r[(i, col)] = -r[(i, col)];
            }
        }
    }
    (q, r)
}

/// One re-orthonormalized sweep of a solution block across an interval.
///
/// Records every sample so that a combination of the final columns can be
/// traced back to any sample point.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub start_basis: DMatrix<f64>,
    /// `R` of the initial orthonormalization.
    pub r0: DMatrix<f64>,
    pub end: DMatrix<f64>,
    pub to: f64,
    segments: Vec<Segment>,
}

#[derive(Debug, Clone)]
struct Segment {
    xs: Vec<f64>,
    ys: Vec<DMatrix<f64>>,
    r_end: DMatrix<f64>,
}

impl Sweep {
    /// Integrates `basis` from `from` to `to`, re-orthonormalizing on segments
    /// of length at most `reortho`. With `samples_per_segment > 0` each segment
    /// is split into that many equal pieces and the block is recorded at each.
    pub fn run(
        sys: &dyn LinearOde,
        basis: DMatrix<f64>,
        from: f64,
        to: f64,
        reortho: f64,
        samples_per_segment: usize,
        method: OdeMethod,
    ) -> Result<Sweep> {
        let len = (to - from).abs();
        let nseg = (len / reortho).ceil().max(1.0) as usize;
        let seg = (to - from) / nseg as f64;
        let m = samples_per_segment.max(1);
        let (mut q, r0) = qr_positive(basis.clone());
        let mut integ = Integrator::new(sys, method);
        let mut segments = Vec::with_capacity(nseg);
        for j in 0..nseg {
            let a = from + j as f64 * seg;
            let mut y = q.clone();
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            if samples_per_segment > 0 {
                xs.push(a);
                ys.push(y.clone());
            }
            let mut x = a;
            for i in 1..=m {
                let xn = if i == m { from + (j + 1) as f64 * seg } else { a + i as f64 * seg / m as f64 };
                integ.advance(&mut y, x, xn)?;
                x = xn;
                if samples_per_segment > 0 && i < m {
                    xs.push(x);
                    ys.push(y.clone());
                }
            }
            let (qn, r) = qr_positive(y);
            q = qn;
            segments.push(Segment { xs, ys, r_end: r });
        }
        Ok(Sweep {
            start_basis: basis,
            r0,
            end: q,
            to,
            segments,
        })
    }

    /// Traces the solution whose end state is `end · coeffs` back through
    /// every recorded sample. Returns `(x, state)` in sweep order, ending at
    /// the final point, together with the coefficients on `start_basis`.
    pub fn trace_back(&self, coeffs: &DMatrix<f64>) -> (Vec<(f64, Vec<f64>)>, DMatrix<f64>) {
        let mut c = coeffs.clone();
        let mut rev: Vec<Vec<(f64, Vec<f64>)>> = Vec::with_capacity(self.segments.len());
        for s in self.segments.iter().rev() {
            c = s
                .r_end
                .clone()
                .solve_upper_triangular(&c)
                .unwrap_or_else(|| DMatrix::from_element(c.nrows(), c.ncols(), f64::NAN));
            let pts = s
                .xs
                .iter()
                .zip(&s.ys)
                .map(|(x, y)| (*x, (y * &c).column(0).iter().copied().collect()))
                .collect();
            rev.push(pts);
        }
        let start = self
            .r0
            .clone()
            .solve_upper_triangular(&c)
            .unwrap_or_else(|| DMatrix::from_element(c.nrows(), c.ncols(), f64::NAN));
        let mut out: Vec<(f64, Vec<f64>)> = rev.into_iter().rev().flatten().collect();
        out.push((self.to, (&self.end * coeffs).column(0).iter().copied().collect()));
        (out, start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn peak_row_and_trace() {
        let a = linearized_rhs(0.7, 0.2)(0.0);
        let row: Vec<f64> = (0..5).map(|j| a[(2, j)]).collect();
        assert_abs_diff_eq!(row[0], -0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(row[1], 4.0 - 3.0 * 0.49, epsilon = 1e-15);
        assert_eq!((row[2], row[3], row[4]), (0.0, 0.0, -12.0));
        for x in [-3.0, 0.0, 0.4, 7.0] {
            assert_eq!(linearized_rhs(0.3, 0.1)(x).trace(), 0.0);
        }
    }

    #[test]
    fn far_limit_is_constant_block() {
        let a = Linearized::new(0.6, 0.3).matrix(40.0);
        let b = Linearized::far_field(0.6, 0.3).matrix(0.0);
        assert!((a - b).amax() < 1e-15);
    }

    #[test]
    fn known_k0_solution_is_transported() {
        // f = sech²x tanh x solves the k = 0, γ = 0 system
        let state = |x: f64| {
            let s = 1.0 / x.cosh();
            let t = x.tanh();
            let f = s * s * t;
            let fp = s * s * (1.0 - 3.0 * t * t);
            let fpp = s * s * t * (6.0 * t * t - 6.0 * s * s - 2.0);
            DMatrix::from_column_slice(3, 1, &[f, fp, fpp])
        };
        // second derivative oracle by central differences of the first
        let h = 1e-5;
        let x = 0.7;
        let s = state(x);
        let fpp_fd = (state(x + h)[1] - state(x - h)[1]) / (2.0 * h);
        assert_abs_diff_eq!(s[2], fpp_fd, epsilon = 1e-8);

        let xm = 6.0;
        let y = integrate(&LinearizedK0::new(0.0), &state(-xm), -xm, xm, OdeMethod::Adaptive { rtol: 1e-12, atol: 1e-14 }).unwrap();
        let expect = state(xm);
        let err = (y - expect).amax();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn fixed_and_adaptive_agree() {
        let sys = Linearized::new(0.5, 0.2);
        let y0 = DMatrix::identity(5, 5);
        let a = integrate(&sys, &y0, -2.0, 2.0, OdeMethod::default()).unwrap();
        let b = integrate(&sys, &y0, -2.0, 2.0, OdeMethod::FixedRk4 { max_step: 1e-3 }).unwrap();
        assert!((&a - &b).amax() / a.amax() < 1e-9);
        // backwards integration inverts the forward one
        let back = integrate(&sys, &a, 2.0, -2.0, OdeMethod::default()).unwrap();
        assert!((back - y0).amax() < 1e-8);
    }

    #[test]
    fn qr_keeps_orientation() {
        let b = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -2.0, 0.0, 0.0]);
        let (q, r) = qr_positive(b.clone());
        assert!(r[(0, 0)] > 0.0 && r[(1, 1)] > 0.0);
        assert!((q * r - b).amax() < 1e-15);
    }
}
