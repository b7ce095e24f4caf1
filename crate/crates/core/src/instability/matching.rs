//! Far-field bases, matching matrices and the mismatch determinant.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ode::{integrate, Linearized, LinearizedK0, LinearOde, OdeMethod, Sweep};
use super::roots::{characteristic_roots, AsymptoticRoots, RESONANCE_GAP};
use crate::error::{NvError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetMethod {
    /// `det(T·T₋ − T₊)` with the flow map across the whole interval.
    OneSided,
    /// Decaying subspaces integrated from both ends and matched at `x = 0`.
    #[default]
    Bidirectional,
}

impl DetMethod {
    pub fn name(&self) -> &'static str {
        match self {
            DetMethod::OneSided => "one_sided",
            DetMethod::Bidirectional => "bidirectional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub x_match: f64,
    /// Re-orthonormalization interval of the bidirectional sweeps.
    pub reortho: f64,
    pub ode: OdeMethod,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            x_match: 12.0,
            reortho: 0.5,
            ode: OdeMethod::default(),
        }
    }
}

impl MatchConfig {
    pub fn with_x_match(mut self, x_match: f64) -> Self {
        self.x_match = x_match;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_match > 0.0) || !(self.reortho > 0.0) {
            return Err(NvError::Config(format!(
                "x_match and reortho must be positive, got {} and {}",
                self.x_match, self.reortho
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A far-field solution that decays away from the soliton on its side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FarMode {
    /// `f ∝ e^{px}` with the g-response that carries no growing part.
    Coupled(f64),
    /// `f = 0`, `g = e^{±kx}`.
    Transverse,
}

fn phi(s: f64, d: f64) -> f64 {
    if s == 0.0 {
        d
    } else {
        (s * d).exp_m1() / s
    }
}

/// State `(f, f', f'', g, g')` of a far-field mode at offset `d` from its
/// anchor (`d ≤ 0` on the left, `d ≥ 0` on the right).
///
/// The coupled modes start with `g = 0` at the anchor and stay finite through
/// the resonance `p² = k²`.
pub fn far_mode_state(k: f64, mode: FarMode, side: Side, d: f64) -> [f64; 5] {
    let sk = match side {
        Side::Left => k,
        Side::Right => -k,
    };
    match mode {
        FarMode::Transverse => {
            let e = (sk * d).exp();
            [0.0, 0.0, 0.0, e, sk * e]
        }
        FarMode::Coupled(p) => {
            let f = (p + sk) * (p * d).exp();
            let s = p - sk;
            let ph = phi(s, d);
            let e = (sk * d).exp();
            let q = p * p + k * k;
            [f, p * f, p * p * f, q * e * ph, q * e * (sk * ph + (s * d).exp())]
        }
    }
}

/// Decaying modes on each side. For `γ < 0` the `p1` mode decays to the right
/// and is matched there.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSplit {
    pub left: Vec<FarMode>,
    pub right: Vec<FarMode>,
}

pub fn mode_split(roots: &AsymptoticRoots) -> ModeSplit {
    use FarMode::*;
    if roots.gamma >= 0.0 {
        ModeSplit {
            left: vec![Coupled(roots.p1), Coupled(roots.p2), Transverse],
            right: vec![Coupled(roots.p3), Transverse],
        }
    } else {
        ModeSplit {
            left: vec![Coupled(roots.p2), Transverse],
            right: vec![Coupled(roots.p1), Coupled(roots.p3), Transverse],
        }
    }
}

fn basis(k: f64, modes: &[FarMode], side: Side) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(5, modes.len());
    for (j, m) in modes.iter().enumerate() {
        let s = far_mode_state(k, *m, side, 0.0);
        for i in 0..5 {
            b[(i, j)] = s[i];
        }
    }
    b
}

fn k0_basis(ps: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(3, ps.len(), |i, j| ps[j].powi(i as i32))
}

/// The split for the reduced `k = 0` system.
pub fn k0_split(roots: &AsymptoticRoots) -> (Vec<f64>, Vec<f64>) {
    (vec![roots.p1, roots.p2], vec![roots.p3])
}

fn require_positive_k(k: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(NvError::Domain(format!(
            "the five-component system needs k > 0, got {k}; use the k = 0 path"
        )));
    }
    Ok(())
}

fn check_resonance(roots: &AsymptoticRoots) -> Result<()> {
    let (root, gap) = roots.resonance_gap();
    if gap < RESONANCE_GAP {
        return Err(NvError::Resonance {
            k: roots.k,
            gamma: roots.gamma,
            root,
            gap,
        });
    }
    Ok(())
}

fn asymptotic_column(p: f64, k: f64, x: f64) -> [f64; 5] {
    let e = (p * x).exp();
    let g = (p * p + k * k) / (p * p - k * k);
    [e, p * e, p * p * e, g * e, g * p * e]
}

/// The explicit asymptotic matrices `(T₋, T₊)` acting on `(c1, c2, c3, β1, β2)`.
///
/// For `γ < 0` the `c1` column moves from `T₋` to `T₊`, where `e^{p1 x}` is the
/// decaying choice.
pub fn asymptotic_matrices(k: f64, gamma: f64, x_match: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    require_positive_k(k)?;
    let roots = characteristic_roots(k, gamma)?;
    check_resonance(&roots)?;
    let mut tm = DMatrix::zeros(5, 5);
    let mut tp = DMatrix::zeros(5, 5);
    let set = |t: &mut DMatrix<f64>, j: usize, col: [f64; 5]| {
        for i in 0..5 {
            t[(i, j)] = col[i];
        }
    };
    let x = x_match;
    if gamma >= 0.0 {
        set(&mut tm, 0, asymptotic_column(roots.p1, k, -x));
    } else {
        set(&mut tp, 0, asymptotic_column(roots.p1, k, x));
    }
    set(&mut tm, 1, asymptotic_column(roots.p2, k, -x));
    set(&mut tp, 2, asymptotic_column(roots.p3, k, x));
    let e = (-k * x).exp();
    set(&mut tm, 3, [0.0, 0.0, 0.0, e, k * e]);
    set(&mut tp, 4, [0.0, 0.0, 0.0, e, -k * e]);
    Ok((tm, tp))
}

/// Everything that enters the one-sided determinant.
#[derive(Debug, Clone)]
pub struct MatchingSystem {
    pub t_minus: DMatrix<f64>,
    pub t_plus: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub mismatch: f64,
    /// Product of the column norms of `T·T₋ − T₊`.
    pub normalization: f64,
}

impl MatchingSystem {
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.t * &self.t_minus - &self.t_plus
    }

    pub fn normalized(&self) -> f64 {
        self.mismatch / self.normalization
    }
}

fn column_norm_product(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.norm()).product()
}

pub fn matching_system(k: f64, gamma: f64, cfg: &MatchConfig) -> Result<MatchingSystem> {
    cfg.validate()?;
    let (t_minus, t_plus) = asymptotic_matrices(k, gamma, cfg.x_match)?;
    let t = integrate(
        &Linearized::new(k, gamma),
        &DMatrix::identity(5, 5),
        -cfg.x_match,
        cfg.x_match,
        cfg.ode,
    )?;
    let m = &t * &t_minus - &t_plus;
    Ok(MatchingSystem {
        mismatch: m.determinant(),
        normalization: column_norm_product(&m),
        t_minus,
        t_plus,
        t,
    })
}

/// Determinant value and its scale-free form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub value: f64,
    /// `value` divided by the product of column norms; signed.
    pub normalized: f64,
}

impl Mismatch {
    pub fn residual(&self) -> f64 {
        self.normalized.abs()
    }
}

/// Decaying subspaces from both ends, matched at `x = 0`.
#[derive(Debug, Clone)]
pub struct Bidirectional {
    pub left: Sweep,
    pub right: Sweep,
    /// `[Q_L Q_R]` at the matching point.
    pub matrix: DMatrix<f64>,
}

impl Bidirectional {
    pub fn mismatch(&self) -> Mismatch {
        let value = self.matrix.determinant();
        Mismatch {
            value,
            normalized: value / column_norm_product(&self.matrix),
        }
    }
}

fn run_bidirectional(
    sys: &dyn LinearOde,
    left: DMatrix<f64>,
    right: DMatrix<f64>,
    cfg: &MatchConfig,
    samples_per_segment: usize,
) -> Result<Bidirectional> {
    cfg.validate()?;
    let x = cfg.x_match;
    let l = Sweep::run(sys, left, -x, 0.0, cfg.reortho, samples_per_segment, cfg.ode)?;
    let r = Sweep::run(sys, right, x, 0.0, cfg.reortho, samples_per_segment, cfg.ode)?;
    let (nl, nr) = (l.end.ncols(), r.end.ncols());
    let n = nl + nr;
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), (n, nl)).copy_from(&l.end);
    m.view_mut((0, nl), (n, nr)).copy_from(&r.end);
    Ok(Bidirectional {
        left: l,
        right: r,
        matrix: m,
    })
}

pub fn bidirectional(
    k: f64,
    gamma: f64,
    cfg: &MatchConfig,
    samples_per_segment: usize,
) -> Result<(Bidirectional, ModeSplit)> {
    require_positive_k(k)?;
    let roots = characteristic_roots(k, gamma)?;
    let split = mode_split(&roots);
    let b = run_bidirectional(
        &Linearized::new(k, gamma),
        basis(k, &split.left, Side::Left),
        basis(k, &split.right, Side::Right),
        cfg,
        samples_per_segment,
    )?;
    Ok((b, split))
}

pub fn bidirectional_k0(
    gamma: f64,
    cfg: &MatchConfig,
    samples_per_segment: usize,
) -> Result<(Bidirectional, AsymptoticRoots)> {
    require_nonnegative_gamma(gamma)?;
    let roots = characteristic_roots(0.0, gamma)?;
    let (l, r) = k0_split(&roots);
    let b = run_bidirectional(
        &LinearizedK0::new(gamma),
        k0_basis(&l),
        k0_basis(&r),
        cfg,
        samples_per_segment,
    )?;
    Ok((b, roots))
}

fn require_nonnegative_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) {
        return Err(NvError::Domain(format!("the k = 0 path needs gamma >= 0, got {gamma}")));
    }
    Ok(())
}

/// Mismatch determinant `D(k, γ)`.
pub fn det_mismatch(k: f64, gamma: f64, cfg: &MatchConfig, method: DetMethod) -> Result<Mismatch> {
    match method {
        DetMethod::OneSided => {
            let s = matching_system(k, gamma, cfg)?;
            Ok(Mismatch {
                value: s.mismatch,
                normalized: s.normalized(),
            })
        }
        DetMethod::Bidirectional => Ok(bidirectional(k, gamma, cfg, 0)?.0.mismatch()),
    }
}

/// Mismatch determinant of the reduced `k = 0` system.
pub fn det_mismatch_k0(gamma: f64, cfg: &MatchConfig, method: DetMethod) -> Result<Mismatch> {
    match method {
        DetMethod::Bidirectional => Ok(bidirectional_k0(gamma, cfg, 0)?.0.mismatch()),
        DetMethod::OneSided => {
            require_nonnegative_gamma(gamma)?;
            cfg.validate()?;
            let roots = characteristic_roots(0.0, gamma)?;
            let x = cfg.x_match;
            let col = |p: f64, at: f64| {
                let e = (p * at).exp();
                [e, p * e, p * p * e]
            };
            let mut tm = DMatrix::zeros(3, 3);
            let mut tp = DMatrix::zeros(3, 3);
            for (j, c) in [col(roots.p1, -x), col(roots.p2, -x)].iter().enumerate() {
                for i in 0..3 {
                    tm[(i, j)] = c[i];
                }
            }
            let c = col(roots.p3, x);
            for i in 0..3 {
                tp[(i, 2)] = c[i];
            }
            let t = integrate(&LinearizedK0::new(gamma), &DMatrix::identity(3, 3), -x, x, cfg.ode)?;
            let m = &t * &tm - &tp;
            let value = m.determinant();
            Ok(Mismatch {
                value,
                normalized: value / column_norm_product(&m),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn far_modes_solve_the_constant_system() {
        let k = 0.6;
        let gamma = 0.2;
        let a = Linearized::far_field(k, gamma).matrix(0.0);
        let roots = characteristic_roots(k, gamma).unwrap();
        let split = mode_split(&roots);
        let h = 1e-5;
        for (side, modes, d) in [(Side::Left, &split.left, -1.3), (Side::Right, &split.right, 0.8)] {
            for m in modes {
                let y = far_mode_state(k, *m, side, d);
                let yp = far_mode_state(k, *m, side, d + h);
                let ym = far_mode_state(k, *m, side, d - h);
                let ay = &a * DMatrix::from_column_slice(5, 1, &y);
                for i in 0..5 {
                    let fd = (yp[i] - ym[i]) / (2.0 * h);
                    assert_abs_diff_eq!(fd, ay[i], epsilon = 1e-7);
                }
            }
        }
    }

    #[test]
    fn resonant_mode_is_finite() {
        let s = far_mode_state(1.0, FarMode::Coupled(-1.0), Side::Right, 2.0);
        assert!(s.iter().all(|v| v.is_finite()));
        let near = far_mode_state(1.0, FarMode::Coupled(-1.0 + 1e-9), Side::Right, 2.0);
        for i in 0..5 {
            assert_abs_diff_eq!(s[i], near[i], epsilon = 1e-7);
        }
    }

    #[test]
    fn asymptotic_matrix_structure() {
        let (tm, tp) = asymptotic_matrices(0.5, 0.2, 12.0).unwrap();
        for j in [2, 4] {
            assert_eq!(tm.column(j).amax(), 0.0);
        }
        for j in [0, 1, 3] {
            assert_eq!(tp.column(j).amax(), 0.0);
        }
        let sub = DMatrix::from_fn(5, 3, |i, j| tm[(i, [0, 1, 3][j])]);
        assert_eq!(sub.rank(1e-300), 3);
        let roots = characteristic_roots(0.5, 0.2).unwrap();
        let decay = (roots.p3 * 12.0).exp();
        let bound = 1.0f64.max(roots.p3 * roots.p3).max(3.0);
        for v in tp.column(2).iter() {
            assert!(v.abs() <= bound * decay);
        }
        assert!(matches!(
            asymptotic_matrices(1.0, 0.0, 6.0),
            Err(NvError::Resonance { .. })
        ));
    }

    #[test]
    fn one_sided_and_bidirectional_share_a_zero() {
        let cfg = MatchConfig::default().with_x_match(6.0);
        let g = |k: f64| k * (1.0 - k) * (2.0 - k);
        for method in [DetMethod::OneSided, DetMethod::Bidirectional] {
            let a = det_mismatch(0.7, g(0.7) - 0.01, &cfg, method).unwrap().normalized;
            let b = det_mismatch(0.7, g(0.7) + 0.01, &cfg, method).unwrap().normalized;
            assert!(a * b < 0.0, "{method:?}: {a} {b}");
        }
    }

    #[test]
    fn k_zero_is_routed_elsewhere() {
        assert!(matches!(
            det_mismatch(0.0, 0.1, &MatchConfig::default(), DetMethod::Bidirectional),
            Err(NvError::Domain(_))
        ));
    }
}
