//! Roots of the far-field characteristic cubic `λ³ + (3k² − 4)λ + 4γ = 0`.

use std::f64::consts::PI;

use crate::error::{NvError, Result};

/// Resonance threshold on `|p² − k²|`.
pub const RESONANCE_GAP: f64 = 1e-6;

/// `4γ² + (3k² − 4)³/27`; the cubic has three distinct real roots iff this is negative.
pub fn discriminant(k: f64, gamma: f64) -> f64 {
    let a = 3.0 * k * k - 4.0;
    4.0 * gamma * gamma + a * a * a / 27.0
}

/// Largest `|γ|` with three real roots at this `k` (zero for `k ≥ 2/√3`).
pub fn max_gamma(k: f64) -> f64 {
    let a = 3.0 * k * k - 4.0;
    if a >= 0.0 {
        0.0
    } else {
        (-a * a * a / 108.0).sqrt()
    }
}

/// Ordered so that `p3 ≤ p1 ≤ p2`; `p1` is the root that vanishes with `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticRoots {
    pub k: f64,
    pub gamma: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl AsymptoticRoots {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p1, self.p2, self.p3]
    }

    /// Eigenvalues `±k` of the transverse g-system.
    pub fn transverse(&self) -> (f64, f64) {
        (self.k, -self.k)
    }

    /// Smallest `|p² − k²|` over the three roots, with the root attaining it.
    pub fn resonance_gap(&self) -> (f64, f64) {
        self.as_array()
            .into_iter()
            .map(|p| (p, (p * p - self.k * self.k).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("three roots")
    }

    pub fn is_resonant(&self) -> bool {
        self.resonance_gap().1 < RESONANCE_GAP
    }

    pub fn cubic_residual(&self, p: f64) -> f64 {
        p * p * p + (3.0 * self.k * self.k - 4.0) * p + 4.0 * self.gamma
    }
}

/// The g-coupling `(p² + k²)/(p² − k²)` of a far-field mode `e^{px}`.
pub fn g_coupling(p: f64, k: f64) -> Result<f64> {
    let gap = p * p - k * k;
    if gap.abs() < RESONANCE_GAP {
        return Err(NvError::Resonance {
            k,
            gamma: f64::NAN,
            root: p,
            gap: gap.abs(),
        });
    }
    Ok((p * p + k * k) / gap)
}

pub fn characteristic_roots(k: f64, gamma: f64) -> Result<AsymptoticRoots> {
    if !k.is_finite() || !gamma.is_finite() || discriminant(k, gamma) >= 0.0 {
        return Err(NvError::ComplexRoots { k, gamma });
    }
    let a = 3.0 * k * k - 4.0;
    let b = 4.0 * gamma;
    let mut r = if gamma == 0.0 {
        let s = (-a).sqrt();
        [-s, 0.0, s]
    } else {
        let m = 2.0 * (-a / 3.0).sqrt();
        let arg = (3.0 * b / (a * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let mut r = [0.0; 3];
        for (j, root) in r.iter_mut().enumerate() {
            let mut z = m * (phi - 2.0 * PI * j as f64 / 3.0).cos();
            for _ in 0..2 {
                let d = 3.0 * z * z + a;
                if d != 0.0 {
                    z -= (z * z * z + a * z + b) / d;
                }
            }
            *root = z;
        }
        r.sort_by(f64::total_cmp);
        r
    };
    if gamma == 0.0 {
        r.sort_by(f64::total_cmp);
    }
    Ok(AsymptoticRoots {
        k,
        gamma,
        p3: r[0],
        p1: r[1],
        p2: r[2],
    })
}

/// First-order small-`γ` expansions `(p1, p2, p3)`.
pub fn small_gamma_roots(k: f64, gamma: f64) -> (f64, f64, f64) {
    let q = 4.0 - 3.0 * k * k;
    let s = q.sqrt();
    (
        4.0 * gamma / q,
        s - 2.0 * gamma / q,
        -s - 2.0 * gamma / q,
    )
}
