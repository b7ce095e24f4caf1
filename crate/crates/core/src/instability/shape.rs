//! Perturbation profiles `(f, g, h)` spanning the kernel of the matching matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::matching::{bidirectional, bidirectional_k0, far_mode_state, Bidirectional, FarMode, MatchConfig, Side};
use super::ode::soliton_profile;
use super::roots::characteristic_roots;
use crate::error::{NvError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeOptions {
    pub matching: MatchConfig,
    /// Upper bound on the sample spacing.
    pub sample_step: f64,
    /// Largest normalized `|D|` accepted as a point on the zero curve.
    pub on_curve_threshold: f64,
    /// Largest pointwise residual of the linearized equations.
    pub kernel_tolerance: f64,
    /// Minimum ratio between the two smallest singular values.
    pub degeneracy_ratio: f64,
}

impl Default for ShapeOptions {
    fn default() -> Self {
        Self {
            matching: MatchConfig::default(),
            sample_step: 0.01,
            on_curve_threshold: 1e-3,
            kernel_tolerance: 1e-6,
            degeneracy_ratio: 1e3,
        }
    }
}

impl ShapeOptions {
    /// Skips the on-curve and kernel-residual gates, keeping the smallest
    /// singular direction whatever its size.
    pub fn unchecked(mut self) -> Self {
        self.on_curve_threshold = f64::INFINITY;
        self.kernel_tolerance = f64::INFINITY;
        self.degeneracy_ratio = 1.0;
        self
    }
}

/// Far-field coefficients: `f₋ = c1 e^{p1x} + c2 e^{p2x}`, `f₊ = c3 e^{p3x}`,
/// `g` carrying `β1 e^{kx}` on the left and `β2 e^{−kx}` on the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tails {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub beta1: f64,
    pub beta2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeValue {
    pub f: f64,
    pub g: f64,
    pub h_imag: f64,
}

#[derive(Debug, Clone)]
enum FarData {
    Full {
        left: Vec<(FarMode, f64)>,
        right: Vec<(FarMode, f64)>,
    },
    K0 {
        left: Vec<(f64, f64)>,
        right: Vec<(f64, f64)>,
    },
}

/// Profiles of a bounded perturbation, normalized to `max|f| = 1` with `f`
/// positive at its extremum. The transverse field is `h = i·h_imag`.
#[derive(Debug, Clone)]
pub struct PerturbationShape {
    pub k: f64,
    pub gamma: f64,
    pub x_match: f64,
    pub xs: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h_imag: Vec<f64>,
    pub tails: Option<Tails>,
    /// Normalized `|D|` at `(k, γ)`.
    pub residual: f64,
    /// Largest pointwise residual of the linearized equations.
    pub kernel_residual: f64,
    /// Singular values of the matching matrix, descending.
    pub singular_values: Vec<f64>,
    fp: Vec<f64>,
    gp: Vec<f64>,
    hp: Vec<f64>,
    far: FarData,
}

struct Kernel {
    left: DMatrix<f64>,
    right: DMatrix<f64>,
    singular: Vec<f64>,
}

fn kernel(b: &Bidirectional, ratio: f64) -> Result<Kernel> {
    let svd = b.matrix.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, c| svd.singular_values[*c].total_cmp(&svd.singular_values[*a]));
    let singular: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let n = singular.len();
    let (smallest, next) = (singular[n - 1], singular[n - 2]);
    if next < ratio * smallest {
        return Err(NvError::DegenerateKernel { smallest, next });
    }
    let v: Vec<f64> = v_t.row(order[n - 1]).iter().copied().collect();
    let nl = b.left.end.ncols();
    let left = DMatrix::from_column_slice(nl, 1, &v[..nl]);
    let right = DMatrix::from_column_slice(n - nl, 1, &v[nl..]) * -1.0;
    Ok(Kernel {
        left,
        right,
        singular,
    })
}

fn samples_per_segment(opts: &ShapeOptions) -> Result<usize> {
    let cfg = &opts.matching;
    cfg.validate()?;
    if !(opts.sample_step > 0.0) {
        return Err(NvError::Config("sample_step must be positive".into()));
    }
    let nseg = (cfg.x_match / cfg.reortho).ceil().max(1.0);
    let seg = cfg.x_match / nseg;
    Ok((seg / opts.sample_step).ceil().max(1.0) as usize)
}

/// Joins the two traced halves into ascending samples of the state.
fn join(b: &Bidirectional, kern: &Kernel) -> (Vec<f64>, Vec<Vec<f64>>, DMatrix<f64>, DMatrix<f64>) {
    let (lpts, dl) = b.left.trace_back(&kern.left);
    let (rpts, dr) = b.right.trace_back(&kern.right);
    let mut xs = Vec::with_capacity(lpts.len() + rpts.len());
    let mut ys = Vec::with_capacity(lpts.len() + rpts.len());
    for (x, y) in lpts {
        xs.push(x);
        ys.push(y);
    }
    for (x, y) in rpts.into_iter().rev().skip(1) {
        xs.push(x);
        ys.push(y);
    }
    (xs, ys, dl, dr)
}

const D1: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D3: [f64; 9] = [
    -7.0 / 240.0,
    3.0 / 10.0,
    -169.0 / 120.0,
    61.0 / 30.0,
    0.0,
    -61.0 / 30.0,
    169.0 / 120.0,
    -3.0 / 10.0,
    7.0 / 240.0,
];

fn fd(v: &[f64], i: usize, h: f64, stencil: &[f64], power: i32) -> f64 {
    let r = stencil.len() / 2;
    stencil
        .iter()
        .enumerate()
        .map(|(j, c)| c * v[i + j - r])
        .sum::<f64>()
        / h.powi(power)
}

/// Largest pointwise residual of the three linearized equations, using
/// sixth-order differences of the sampled profiles. Stencils straddling the
/// matching point are skipped: the jump there is what `D` measures.
fn kernel_residual(k: f64, gamma: f64, xs: &[f64], f: &[f64], g: &[f64], h: &[f64]) -> f64 {
    let n = xs.len();
    if n < 9 {
        return f64::INFINITY;
    }
    let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    let uf: Vec<f64> = xs.iter().zip(f).map(|(x, f)| soliton_profile(*x) * f).collect();
    let ug: Vec<f64> = xs.iter().zip(g).map(|(x, g)| soliton_profile(*x) * g).collect();
    let mut worst: f64 = 0.0;
    for i in 4..n - 4 {
        if xs[i - 4] <= 0.0 && xs[i + 4] > 0.0 {
            continue;
        }
        let fp = fd(f, i, dx, &D1, 1);
        let gp = fd(g, i, dx, &D1, 1);
        let hp = fd(h, i, dx, &D1, 1);
        let f3 = fd(f, i, dx, &D3, 3);
        let u0 = soliton_profile(xs[i]);
        let r1 = -4.0 * gamma * f[i] + (4.0 - 3.0 * k * k) * fp - f3
            + 3.0 * fd(&ug, i, dx, &D1, 1)
            + 3.0 * fd(&uf, i, dx, &D1, 1)
            - 3.0 * k * u0 * h[i];
        let r2 = fp - gp - k * h[i];
        let r3 = k * (f[i] + g[i]) + hp;
        worst = worst.max(r1.abs()).max(r2.abs()).max(r3.abs());
    }
    worst
}

fn uniform(xs: &[f64]) -> bool {
    let n = xs.len();
    let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    xs.windows(2).all(|w| ((w[1] - w[0]) - dx).abs() < 1e-9 * dx.max(1.0))
}

pub fn perturbation_shape(k: f64, gamma: f64, opts: &ShapeOptions) -> Result<PerturbationShape> {
    let m = samples_per_segment(opts)?;
    let cfg = &opts.matching;
    let x = cfg.x_match;
    let roots = characteristic_roots(k, gamma)?;
    let (b, far_modes) = if k == 0.0 {
        (bidirectional_k0(gamma, cfg, m)?.0, None)
    } else {
        let (b, split) = bidirectional(k, gamma, cfg, m)?;
        (b, Some(split))
    };
    let residual = b.mismatch().residual();
    if residual > opts.on_curve_threshold {
        return Err(NvError::OffCurve { k, gamma, residual });
    }
    let kern = kernel(&b, opts.degeneracy_ratio)?;
    let (xs, ys, dl, dr) = join(&b, &kern);

    let n = xs.len();
    let (mut f, mut fp, mut g, mut gp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut fpp = vec![0.0; n];
    for (i, y) in ys.iter().enumerate() {
        f[i] = y[0];
        fp[i] = y[1];
        fpp[i] = y[2];
        if k == 0.0 {
            g[i] = y[0];
            gp[i] = y[1];
        } else {
            g[i] = y[3];
            gp[i] = y[4];
        }
    }
    let imax = (0..n).max_by(|a, c| f[*a].abs().total_cmp(&f[*c].abs())).unwrap_or(0);
    // peak between samples from the local Taylor expansion
    let delta = if fpp[imax] != 0.0 { (-fp[imax] / fpp[imax]).clamp(-opts.sample_step, opts.sample_step) } else { 0.0 };
    let peak = f[imax] + fp[imax] * delta + 0.5 * fpp[imax] * delta * delta;
    let scale = if peak != 0.0 { 1.0 / peak } else { 1.0 };
    for v in [&mut f, &mut fp, &mut fpp, &mut g, &mut gp] {
        v.iter_mut().for_each(|e| *e *= scale);
    }
    let (h_imag, hp): (Vec<f64>, Vec<f64>) = if k == 0.0 {
        (vec![0.0; n], vec![0.0; n])
    } else {
        (
            (0..n).map(|i| (fp[i] - gp[i]) / k).collect(),
            (0..n).map(|i| -k * (f[i] + g[i])).collect(),
        )
    };
    let dl: Vec<f64> = dl.iter().map(|d| d * scale).collect();
    let dr: Vec<f64> = dr.iter().map(|d| d * scale).collect();

    let (far, tails) = match far_modes {
        None => {
            let tails = Tails {
                c1: dl[0] * (roots.p1 * x).exp(),
                c2: dl[1] * (roots.p2 * x).exp(),
                c3: dr[0] * (-roots.p3 * x).exp(),
                beta1: 0.0,
                beta2: 0.0,
            };
            (
                FarData::K0 {
                    left: vec![(roots.p1, dl[0]), (roots.p2, dl[1])],
                    right: vec![(roots.p3, dr[0])],
                },
                Some(tails),
            )
        }
        Some(split) => {
            let left: Vec<(FarMode, f64)> = split.left.iter().copied().zip(dl.iter().copied()).collect();
            let right: Vec<(FarMode, f64)> = split.right.iter().copied().zip(dr.iter().copied()).collect();
            let tails = (!roots.is_resonant()).then(|| {
                let mut t = Tails {
                    c1: 0.0,
                    c2: 0.0,
                    c3: 0.0,
                    beta1: 0.0,
                    beta2: 0.0,
                };
                let slot = |t: &mut Tails, p: f64, c: f64| {
                    if p == roots.p1 {
                        t.c1 = c;
                    } else if p == roots.p2 {
                        t.c2 = c;
                    } else {
                        t.c3 = c;
                    }
                };
                let ek = (k * x).exp();
                for (mode, d) in &left {
                    match *mode {
                        FarMode::Coupled(p) => {
                            slot(&mut t, p, d * (p + k) * (p * x).exp());
                            t.beta1 -= d * (p * p + k * k) / (p - k) * ek;
                        }
                        FarMode::Transverse => t.beta1 += d * ek,
                    }
                }
                for (mode, d) in &right {
                    match *mode {
                        FarMode::Coupled(p) => {
                            slot(&mut t, p, d * (p - k) * (-p * x).exp());
                            t.beta2 -= d * (p * p + k * k) / (p + k) * ek;
                        }
                        FarMode::Transverse => t.beta2 += d * ek,
                    }
                }
                t
            });
            (FarData::Full { left, right }, tails)
        }
    };

    let kernel_residual = if uniform(&xs) {
        kernel_residual(k, gamma, &xs, &f, &g, &h_imag)
    } else {
        f64::INFINITY
    };
    if kernel_residual > opts.kernel_tolerance {
        return Err(NvError::OffCurve {
            k,
            gamma,
            residual: kernel_residual,
        });
    }
    Ok(PerturbationShape {
        k,
        gamma,
        x_match: x,
        xs,
        f,
        g,
        h_imag,
        tails,
        residual,
        kernel_residual,
        singular_values: kern.singular,
        fp,
        gp,
        hp,
        far,
    })
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

impl PerturbationShape {
    /// Profiles at any `x`: cubic Hermite inside the sampled interval,
    /// far-field modes outside.
    pub fn eval(&self, x: f64) -> ShapeValue {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return self.far_field(x);
        }
        let i = match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => {
                return ShapeValue {
                    f: self.f[i],
                    g: self.g[i],
                    h_imag: self.h_imag[i],
                }
            }
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let (a, b) = (self.xs[i], self.xs[i + 1]);
        ShapeValue {
            f: hermite(a, b, self.f[i], self.f[i + 1], self.fp[i], self.fp[i + 1], x),
            g: hermite(a, b, self.g[i], self.g[i + 1], self.gp[i], self.gp[i + 1], x),
            h_imag: hermite(a, b, self.h_imag[i], self.h_imag[i + 1], self.hp[i], self.hp[i + 1], x),
        }
    }

    /// Far-field continuation from the anchors at `±x_match`.
    pub fn far_field(&self, x: f64) -> ShapeValue {
        let xm = self.x_match;
        match &self.far {
            FarData::K0 { left, right } => {
                let (modes, d) = if x < 0.0 { (left, x + xm) } else { (right, x - xm) };
                let f: f64 = modes.iter().map(|(p, c)| c * (p * d).exp()).sum();
                ShapeValue { f, g: f, h_imag: 0.0 }
            }
            FarData::Full { left, right } => {
                let (modes, side, d) = if x < 0.0 {
                    (left, Side::Left, x + xm)
                } else {
                    (right, Side::Right, x - xm)
                };
                let mut s = [0.0; 5];
                for (mode, c) in modes {
                    let y = far_mode_state(self.k, *mode, side, d);
                    for i in 0..5 {
                        s[i] += c * y[i];
                    }
                }
                ShapeValue {
                    f: s[0],
                    g: s[3],
                    h_imag: (s[1] - s[4]) / self.k,
                }
            }
        }
    }

    /// Largest `|f|` of the far-field continuation at distance `d` beyond the
    /// sampled interval on either side.
    pub fn tail_magnitude(&self, d: f64) -> f64 {
        let l = self.far_field(-self.x_match - d);
        let r = self.far_field(self.x_match + d);
        [l.f, l.g, l.h_imag, r.f, r.g, r.h_imag]
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    /// Writes `x,f,g,h_imag`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        use crate::evolver::fmt17;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "f", "g", "h_imag"])?;
        for i in 0..self.xs.len() {
            w.write_record([
                fmt17(self.xs[i]),
                fmt17(self.f[i]),
                fmt17(self.g[i]),
                fmt17(self.h_imag[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn explicit_solution_at_k_one() {
        let s = perturbation_shape(1.0, 0.0, &ShapeOptions::default()).unwrap();
        assert!(s.residual < 1e-6, "residual {}", s.residual);
        let mut worst: f64 = 0.0;
        for i in 0..s.xs.len() {
            let x = s.xs[i];
            worst = worst
                .max((s.f[i] - sech(x).powi(3)).abs())
                .max((s.g[i] + sech(x) * x.tanh().powi(2)).abs())
                .max((s.h_imag[i] + sech(x) * x.tanh()).abs());
        }
        assert!(worst < 1e-6, "worst {worst}");
        assert!(s.kernel_residual < 1e-6);
        assert!(s.tails.is_none());
        // continuity into the far field
        for x in [-s.x_match, s.x_match] {
            let inner = s.eval(x);
            let outer = s.far_field(x);
            assert_abs_diff_eq!(inner.f, outer.f, epsilon = 1e-6);
            assert_abs_diff_eq!(inner.g, outer.g, epsilon = 1e-6);
            assert_abs_diff_eq!(inner.h_imag, outer.h_imag, epsilon = 1e-6);
        }
        let v = s.eval(0.3456);
        assert_abs_diff_eq!(v.f, sech(0.3456).powi(3), epsilon = 1e-8);
    }

    #[test]
    fn neutral_mode_at_origin() {
        let s = perturbation_shape(0.0, 0.0, &ShapeOptions::default()).unwrap();
        let peak = 2.0 / (3.0 * 3f64.sqrt());
        for i in 0..s.xs.len() {
            let x = s.xs[i];
            let expect = sech(x).powi(2) * x.tanh() / peak;
            assert!((s.f[i].abs() - expect.abs()).abs() < 1e-6, "x = {x}: {} vs {expect}", s.f[i]);
            assert_eq!(s.f[i], s.g[i]);
            assert_eq!(s.h_imag[i], 0.0);
        }
        assert!(s.kernel_residual < 1e-6);
    }

    #[test]
    fn off_curve_points_are_rejected() {
        let err = perturbation_shape(0.2, 0.45, &ShapeOptions::default()).unwrap_err();
        assert!(matches!(err, NvError::OffCurve { .. }));
    }

    #[test]
    fn on_curve_shape_satisfies_the_equations() {
        let k = 0.6;
        let gamma = k * (1.0 - k) * (2.0 - k);
        let s = perturbation_shape(k, gamma, &ShapeOptions::default()).unwrap();
        assert!(s.kernel_residual < 1e-6, "{}", s.kernel_residual);
        let t = s.tails.unwrap();
        // the left tail follows c1 e^{p1 x} + c2 e^{p2 x}
        let r = characteristic_roots(k, gamma).unwrap();
        let x = -s.x_match;
        let f = t.c1 * (r.p1 * x).exp() + t.c2 * (r.p2 * x).exp();
        assert_abs_diff_eq!(f, s.f[0], epsilon = 1e-6);
        let x = s.x_match;
        assert_abs_diff_eq!(t.c3 * (r.p3 * x).exp(), *s.f.last().unwrap(), epsilon = 1e-6);
    }
}
