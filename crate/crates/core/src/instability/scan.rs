//! Parallel evaluation of the mismatch determinant over parameter windows.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matching::{det_mismatch, det_mismatch_k0, DetMethod, MatchConfig};
use super::roots::{characteristic_roots, discriminant};
use crate::error::{NvError, Result};
use crate::evolver::fmt17;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub k_min: f64,
    pub k_max: f64,
    pub nk: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub ngamma: usize,
}

impl Default for ScanWindow {
    fn default() -> Self {
        Self {
            k_min: 0.0,
            k_max: 1.0,
            nk: 101,
            gamma_min: 0.0,
            gamma_max: 0.5,
            ngamma: 51,
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

impl ScanWindow {
    pub fn validate(&self) -> Result<()> {
        if self.nk == 0 || self.ngamma == 0 {
            return Err(NvError::Config("scan resolution must be at least 1".into()));
        }
        if !(self.k_min >= 0.0 && self.k_max >= self.k_min && self.gamma_max >= self.gamma_min) {
            return Err(NvError::Config(format!("invalid scan window {self:?}")));
        }
        Ok(())
    }

    pub fn ks(&self) -> Vec<f64> {
        linspace(self.k_min, self.k_max, self.nk)
    }

    pub fn gammas(&self) -> Vec<f64> {
        linspace(self.gamma_min, self.gamma_max, self.ngamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// Some root has `|p² − k²| < 1e−6`.
    Resonant,
    /// The cubic has complex roots; no value.
    ComplexRoots,
    /// Evaluation failed; no value.
    Failed,
}

impl CellStatus {
    pub fn name(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Resonant => "resonant",
            CellStatus::ComplexRoots => "complex_roots",
            CellStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub k: f64,
    pub gamma: f64,
    /// Signed normalized determinant, NaN when unavailable.
    pub normalized: f64,
    pub method: &'static str,
    pub status: CellStatus,
}

impl ScanCell {
    pub fn abs_d(&self) -> f64 {
        self.normalized.abs()
    }
}

fn cell(k: f64, gamma: f64, cfg: &MatchConfig, method: DetMethod) -> ScanCell {
    let mut out = ScanCell {
        k,
        gamma,
        normalized: f64::NAN,
        method: if k == 0.0 { "k0" } else { method.name() },
        status: CellStatus::Ok,
    };
    if discriminant(k, gamma) >= 0.0 {
        out.status = CellStatus::ComplexRoots;
        return out;
    }
    let resonant = k > 0.0 && characteristic_roots(k, gamma).map(|r| r.is_resonant()).unwrap_or(false);
    let value = if k == 0.0 {
        det_mismatch_k0(gamma, cfg, method)
    } else {
        det_mismatch(k, gamma, cfg, method)
    };
    match value {
        Ok(m) => out.normalized = m.normalized,
        Err(NvError::Resonance { .. }) => {}
        Err(_) => out.status = CellStatus::Failed,
    }
    if resonant {
        out.status = CellStatus::Resonant;
    }
    out
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(NvError::Config("workers must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| NvError::Config(e.to_string()))
}

/// Evaluates every `(k, γ)` node of the window, k-major.
pub fn scan_determinant(
    window: &ScanWindow,
    cfg: &MatchConfig,
    method: DetMethod,
    workers: Option<usize>,
) -> Result<Vec<ScanCell>> {
    window.validate()?;
    cfg.validate()?;
    let nodes: Vec<(f64, f64)> = window
        .ks()
        .into_iter()
        .flat_map(|k| window.gammas().into_iter().map(move |g| (k, g)))
        .collect();
    Ok(pool(workers)?.install(|| nodes.par_iter().map(|&(k, g)| cell(k, g, cfg, method)).collect()))
}

/// The reduced determinant along `k = 0`.
pub fn scan_k0(
    gamma_min: f64,
    gamma_max: f64,
    n: usize,
    cfg: &MatchConfig,
    method: DetMethod,
    workers: Option<usize>,
) -> Result<Vec<ScanCell>> {
    let window = ScanWindow {
        k_min: 0.0,
        k_max: 0.0,
        nk: 1,
        gamma_min,
        gamma_max,
        ngamma: n,
    };
    if gamma_min < 0.0 {
        return Err(NvError::Config("the k = 0 scan needs gamma >= 0".into()));
    }
    scan_determinant(&window, cfg, method, workers)
}

/// Writes `k,gamma,normalized_absD,method,status`.
pub fn write_scan_csv<W: Write>(out: W, cells: &[ScanCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "gamma", "normalized_absD", "method", "status"])?;
    for c in cells {
        w.write_record([
            fmt17(c.k),
            fmt17(c.gamma),
            fmt17(c.abs_d()),
            c.method.to_string(),
            c.status.name().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_window_statuses() {
        let w = ScanWindow {
            k_min: 0.0,
            k_max: 1.0,
            nk: 3,
            gamma_min: 0.0,
            gamma_max: 0.5,
            ngamma: 3,
        };
        let cells = scan_determinant(&w, &MatchConfig::default(), DetMethod::Bidirectional, Some(2)).unwrap();
        assert_eq!(cells.len(), 9);
        assert_eq!(cells[0].method, "k0");
        assert!(cells[0].abs_d() < 1e-6);
        let corner = cells.iter().find(|c| c.k == 1.0 && c.gamma == 0.0).unwrap();
        assert_eq!(corner.status, CellStatus::Resonant);
        assert!(corner.abs_d() < 1e-6);
        let top = cells.iter().find(|c| c.k == 1.0 && c.gamma == 0.5).unwrap();
        assert_eq!(top.status, CellStatus::ComplexRoots);
        assert!(top.normalized.is_nan());
    }
}
