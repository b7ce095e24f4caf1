//! Run configuration: one TOML section per subcommand, every key defaulted.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{NvError, Result};
use crate::grid::{AuxMean, TorusGrid};
use crate::instability::{DetMethod, MatchConfig, OdeMethod, ScanWindow, ShapeOptions, TraceOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory.
    pub out: PathBuf,
    /// Worker threads for parallel commands; 0 uses every core.
    pub workers: usize,
    pub evolve: EvolveConfig,
    pub scan: ScanConfig,
    pub trace: TraceConfig,
    pub perturb: PerturbConfig,
    pub speed_profile: SpeedProfileConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("nvlab-out"),
            workers: 0,
            evolve: EvolveConfig::default(),
            scan: ScanConfig::default(),
            trace: TraceConfig::default(),
            perturb: PerturbConfig::default(),
            speed_profile: SpeedProfileConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    Soliton,
    Zero,
    /// An NVGRID1 file given by `snapshot_path`.
    Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstStepKind {
    /// `c⁻¹ = c⁰`.
    Copy,
    /// Sample the known solution at `−Δt` where one exists, else copy.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub initial: InitialData,
    pub snapshot_path: PathBuf,
    pub c: f64,
    pub x0: f64,
    pub nx: usize,
    pub ny: usize,
    pub wx: f64,
    pub wy: f64,
    pub theta: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Steps between written snapshots.
    pub stride: usize,
    pub dealias: bool,
    pub aux_mean: AuxMean,
    pub first_step: FirstStepKind,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            initial: InitialData::Soliton,
            snapshot_path: PathBuf::new(),
            c: 1.0,
            x0: 10.0,
            nx: 512,
            ny: 8,
            wx: 12.0 * PI,
            wy: 2.0 * PI,
            theta: 0.5,
            dt: 1e-3,
            t_final: 5.0,
            stride: 1000,
            dealias: false,
            aux_mean: AuxMean::FollowU,
            first_step: FirstStepKind::Exact,
        }
    }
}

impl EvolveConfig {
    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.wx, self.wy, self.nx, self.ny)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        positive("evolve.dt", self.dt)?;
        positive("evolve.t_final", self.t_final)?;
        positive("evolve.c", self.c)?;
        unit_interval("evolve.theta", self.theta)?;
        if self.stride == 0 {
            return Err(NvError::Config("evolve.stride must be at least 1".into()));
        }
        if self.initial == InitialData::Snapshot && self.snapshot_path.as_os_str().is_empty() {
            return Err(NvError::Config("evolve.initial = \"snapshot\" needs evolve.snapshot_path".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub nk: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub ngamma: usize,
    pub method: DetMethod,
    pub x_match: f64,
    pub reortho: f64,
    /// γ range and resolution of the `k = 0` profile.
    pub k0_gamma_max: f64,
    pub k0_points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let w = ScanWindow::default();
        let m = MatchConfig::default();
        Self {
            k_min: w.k_min,
            k_max: w.k_max,
            nk: w.nk,
            gamma_min: w.gamma_min,
            gamma_max: w.gamma_max,
            ngamma: w.ngamma,
            method: DetMethod::Bidirectional,
            x_match: m.x_match,
            reortho: m.reortho,
            k0_gamma_max: 0.5,
            k0_points: 200,
        }
    }
}

impl ScanConfig {
    pub fn window(&self) -> ScanWindow {
        ScanWindow {
            k_min: self.k_min,
            k_max: self.k_max,
            nk: self.nk,
            gamma_min: self.gamma_min,
            gamma_max: self.gamma_max,
            ngamma: self.ngamma,
        }
    }

    pub fn matching(&self) -> MatchConfig {
        MatchConfig {
            x_match: self.x_match,
            reortho: self.reortho,
            ode: OdeMethod::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.window().validate()?;
        self.matching().validate()?;
        if self.k0_points == 0 || !(self.k0_gamma_max >= 0.0) {
            return Err(NvError::Config("scan.k0_points must be positive and k0_gamma_max nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    /// Axis point `(seed_k, 0)` the γ > 0 arc starts from.
    pub seed_k: f64,
    pub step: f64,
    pub search_half_width: f64,
    pub search_samples: usize,
    pub refine_tol: f64,
    pub accept_threshold: f64,
    pub seed_threshold: f64,
    pub max_points: usize,
    pub k_floor: f64,
    pub x_match: f64,
    pub reortho: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        let t = TraceOptions::default();
        Self {
            seed_k: 1.0,
            step: t.step,
            search_half_width: t.search_half_width,
            search_samples: t.search_samples,
            refine_tol: t.refine_tol,
            accept_threshold: t.accept_threshold,
            seed_threshold: t.seed_threshold,
            max_points: t.max_points,
            k_floor: t.k_floor,
            x_match: t.matching.x_match,
            reortho: t.matching.reortho,
        }
    }
}

impl TraceConfig {
    pub fn options(&self) -> TraceOptions {
        TraceOptions {
            step: self.step,
            search_half_width: self.search_half_width,
            search_samples: self.search_samples,
            refine_tol: self.refine_tol,
            accept_threshold: self.accept_threshold,
            seed_threshold: self.seed_threshold,
            max_points: self.max_points,
            k_floor: self.k_floor,
            matching: MatchConfig {
                x_match: self.x_match,
                reortho: self.reortho,
                ode: OdeMethod::default(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("trace.step", self.step)?;
        positive("trace.search_half_width", self.search_half_width)?;
        positive("trace.refine_tol", self.refine_tol)?;
        positive("trace.accept_threshold", self.accept_threshold)?;
        if self.search_samples < 3 || self.max_points == 0 {
            return Err(NvError::Config("trace.search_samples must be at least 3 and max_points positive".into()));
        }
        if !(self.seed_k > 0.0 && self.seed_k <= 1.0) {
            return Err(NvError::Config(format!("trace.seed_k must lie in (0, 1], got {}", self.seed_k)));
        }
        self.options().matching.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbConfig {
    pub k: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub c: f64,
    pub x0: f64,
    pub x_match: f64,
    pub nx: usize,
    pub ny: usize,
    pub wx: f64,
    /// The y-width is this many perturbation periods `2π/(k√c)`.
    pub y_periods: usize,
    /// y-width used when `k = 0`.
    pub wy_k0: f64,
    pub theta: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Steps between deviation samples.
    pub sample_stride: usize,
    pub fit_start: f64,
    pub fit_end: f64,
    /// Largest soliton shift searched by the deviation metric.
    pub max_shift: f64,
    /// Refuse `(k, γ)` whose normalized determinant exceeds the on-curve
    /// threshold.
    pub check_on_curve: bool,
    pub dealias: bool,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            k: 0.504,
            gamma: 0.296,
            epsilon: 0.01,
            c: 1.0,
            x0: 10.0,
            x_match: 12.0,
            nx: 256,
            ny: 64,
            wx: 12.0 * PI,
            y_periods: 2,
            wy_k0: 2.0 * PI,
            theta: 0.5,
            dt: 1e-3,
            t_final: 5.0,
            sample_stride: 50,
            fit_start: 0.0,
            fit_end: 5.0,
            max_shift: 0.5,
            check_on_curve: true,
            dealias: false,
        }
    }
}

impl PerturbConfig {
    pub fn grid(&self) -> Result<TorusGrid> {
        positive("perturb.c", self.c)?;
        let wy = if self.k > 0.0 {
            if self.y_periods == 0 {
                return Err(NvError::Config("perturb.y_periods must be at least 1".into()));
            }
            self.y_periods as f64 * 2.0 * PI / (self.k * self.c.sqrt())
        } else {
            self.wy_k0
        };
        TorusGrid::new(self.wx, wy, self.nx, self.ny)
    }

    pub fn shape_options(&self) -> ShapeOptions {
        let opts = ShapeOptions {
            matching: MatchConfig::default().with_x_match(self.x_match),
            ..ShapeOptions::default()
        };
        if self.check_on_curve {
            opts
        } else {
            opts.unchecked()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0) {
            return Err(NvError::Config(format!("perturb.k must be nonnegative, got {}", self.k)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(NvError::Config(format!("perturb.epsilon must be nonnegative, got {}", self.epsilon)));
        }
        self.grid()?;
        positive("perturb.dt", self.dt)?;
        positive("perturb.t_final", self.t_final)?;
        positive("perturb.x_match", self.x_match)?;
        positive("perturb.max_shift", self.max_shift)?;
        unit_interval("perturb.theta", self.theta)?;
        if self.sample_stride == 0 {
            return Err(NvError::Config("perturb.sample_stride must be at least 1".into()));
        }
        if !(self.fit_end > self.fit_start) {
            return Err(NvError::Config(format!(
                "perturb fit window [{}, {}] is empty",
                self.fit_start, self.fit_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedProfileConfig {
    pub samples: usize,
    pub c: f64,
}

impl Default for SpeedProfileConfig {
    fn default() -> Self {
        Self { samples: 360, c: 1.0 }
    }
}

impl SpeedProfileConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(NvError::Config("speed_profile.samples must be at least 1".into()));
        }
        positive("speed_profile.c", self.c)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(NvError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(NvError::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Parses `text` after applying `section.key=value` overrides, where each
    /// value is a TOML literal (bare words are taken as strings).
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text)?;
        for item in overrides {
            let (path, raw) = item
                .split_once('=')
                .ok_or_else(|| NvError::Config(format!("override `{item}` is not of the form key=value")))?;
            let value = parse_value(raw.trim());
            let keys: Vec<&str> = path.trim().split('.').collect();
            let (last, parents) = keys.split_last().expect("split yields one item");
            let mut node = &mut table;
            for key in parents {
                node = node
                    .entry(key.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| NvError::Config(format!("`{key}` in `{path}` is not a section")))?;
            }
            node.insert(last.to_string(), value);
        }
        Ok(table.try_into()?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is serializable")
    }

    pub fn workers(&self) -> Option<usize> {
        (self.workers > 0).then_some(self.workers)
    }

    pub fn validate(&self) -> Result<()> {
        self.evolve.validate()?;
        self.scan.validate()?;
        self.trace.validate()?;
        self.perturb.validate()?;
        self.speed_profile.validate()
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml();
        assert!(text.contains("[perturb]") && text.contains("[speed_profile]"));
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_files_keep_defaults() {
        let cfg = RunConfig::from_toml_str("[scan]\nnk = 11\n").unwrap();
        assert_eq!(cfg.scan.nk, 11);
        assert_eq!(cfg.scan.ngamma, 51);
        assert_eq!(cfg.perturb, PerturbConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("[scan]\nnkk = 11\n").is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let cfg = RunConfig::from_toml_with_overrides(
            "[perturb]\nk = 0.6\n",
            &["perturb.k=0.7".into(), "scan.method=one_sided".into(), "out=/tmp/x".into()],
        )
        .unwrap();
        assert_eq!(cfg.perturb.k, 0.7);
        assert_eq!(cfg.scan.method, DetMethod::OneSided);
        assert_eq!(cfg.out, PathBuf::from("/tmp/x"));
        assert!(RunConfig::from_toml_with_overrides("", &["nonsense".into()]).is_err());
    }

    #[test]
    fn perturbation_domain_spans_whole_periods() {
        let p = PerturbConfig::default();
        let g = p.grid().unwrap();
        assert!((g.wy() - 2.0 * 2.0 * PI / 0.504).abs() < 1e-12);
        assert_eq!((g.nx(), g.ny()), (256, 64));
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut cfg = RunConfig::default();
        cfg.evolve.theta = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.perturb.fit_end = -1.0;
        assert!(cfg.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
