//! Subcommand bodies. Each writes its files under the configured output
//! directory and returns a short report for the terminal.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{FirstStepKind, InitialData, RunConfig};
use super::perturb::{run_perturbation, write_deviation_csv, PerturbSummary};
use crate::error::{NvError, Result};
use crate::evolver::{evolve_with, fmt17, write_diagnostics_csv, Diagnostics, SchemeParams};
use crate::grid::RealField;
use crate::instability::{
    band_summary, scan_determinant, scan_k0, trace_closed_curve_from, write_scan_csv,
    write_trace_csv, Band, CellStatus,
};
use crate::planar::{kdv_soliton, speed_profile};
use crate::snapshot;

/// Process exit status for an error: 2 usage, 3 divergence, 4 trace lost,
/// 5 off-curve, 1 anything else.
pub fn exit_code(err: &NvError) -> i32 {
    match err {
        NvError::Config(_)
        | NvError::Toml(_)
        | NvError::Shape { .. }
        | NvError::Domain(_)
        | NvError::Contract(_)
        | NvError::ComplexRoots { .. }
        | NvError::Resonance { .. }
        | NvError::DegenerateDirection { .. } => 2,
        NvError::Divergence { .. } => 3,
        NvError::TraceLost { .. } => 4,
        NvError::OffCurve { .. } | NvError::DegenerateKernel { .. } => 5,
        NvError::Integrator { .. } | NvError::Io(_) | NvError::Csv(_) | NvError::Json(_) => 1,
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveReport {
    pub steps: usize,
    pub snapshots: Vec<PathBuf>,
    pub diagnostics: PathBuf,
    pub last: Diagnostics,
}

/// Writes `evolve/u_<step>.nvgrid` (+ JSON sidecar) and a row of
/// `evolve/diagnostics.csv` every `stride` steps and at the end.
pub fn cmd_evolve(cfg: &RunConfig) -> Result<EvolveReport> {
    let e = &cfg.evolve;
    e.validate()?;
    let grid = e.grid()?;
    let u0 = match e.initial {
        InitialData::Soliton => kdv_soliton(e.c, e.x0)?.sample(&grid, 0.0),
        InitialData::Zero => RealField::zeros(grid),
        InitialData::Snapshot => {
            let (u, _) = snapshot::read(&e.snapshot_path)?;
            if *u.grid() != grid {
                return Err(NvError::Config(format!(
                    "snapshot grid {}x{} on {}x{} differs from the configured grid",
                    u.grid().nx(),
                    u.grid().ny(),
                    u.grid().wx(),
                    u.grid().wy()
                )));
            }
            u
        }
    };
    let mut scheme = SchemeParams::new(e.dt)
        .with_theta(e.theta)
        .with_dealias(e.dealias)
        .with_aux_mean(e.aux_mean);
    if e.first_step == FirstStepKind::Exact {
        match e.initial {
            InitialData::Soliton => {
                let sol = kdv_soliton(e.c, e.x0)?;
                scheme = scheme.with_reference(Arc::new(move |g, t| sol.sample(g, t)));
            }
            InitialData::Zero => {
                scheme = scheme.with_reference(Arc::new(|g, _| RealField::zeros(*g)));
            }
            InitialData::Snapshot => {}
        }
    }
    let dir = cfg.out.join("evolve");
    fs::create_dir_all(&dir)?;
    let mut snapshots = Vec::new();
    let mut rows = Vec::new();
    let ev = evolve_with(&u0, e.t_final, scheme, e.stride, |state, diag| {
        let step = (state.t / e.dt).round() as usize;
        snapshots.push(snapshot::write(&dir, &format!("u_{step:07}"), "u", &state.u, state.t)?);
        rows.push(*diag);
        Ok(())
    });
    let diagnostics = dir.join("diagnostics.csv");
    write_diagnostics_csv(BufWriter::new(File::create(&diagnostics)?), &rows)?;
    let ev = ev?;
    Ok(EvolveReport {
        steps: ev.steps(),
        snapshots,
        diagnostics,
        last: *rows.last().expect("initial state is always emitted"),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub path: PathBuf,
    pub rows: usize,
    pub non_ok: usize,
    /// Smallest normalized `|D|` among usable cells and where it occurs.
    pub min_cell: Option<(f64, f64, f64)>,
}

/// Writes `scan.csv` over the configured window, or `scan_k0.csv` for the
/// reduced `k = 0` determinant.
pub fn cmd_scan(cfg: &RunConfig, k0: bool) -> Result<ScanReport> {
    let s = &cfg.scan;
    s.validate()?;
    let cells = if k0 {
        scan_k0(0.0, s.k0_gamma_max, s.k0_points, &s.matching(), s.method, cfg.workers())?
    } else {
        scan_determinant(&s.window(), &s.matching(), s.method, cfg.workers())?
    };
    let name = if k0 { "scan_k0.csv" } else { "scan.csv" };
    write_scan_csv(create(&cfg.out, name)?, &cells)?;
    let usable = cells.iter().filter(|c| c.status == CellStatus::Ok);
    let min_cell = usable
        .min_by(|a, b| a.abs_d().total_cmp(&b.abs_d()))
        .map(|c| (c.k, c.gamma, c.abs_d()));
    Ok(ScanReport {
        path: cfg.out.join(name),
        rows: cells.len(),
        non_ok: cells.iter().filter(|c| c.status != CellStatus::Ok).count(),
        min_cell,
    })
}

/// Axis seed from a prior scan CSV: the `γ = 0` cell with `k ≥ 0.5` and the
/// smallest normalized `|D|`. Resonant cells count; the matching is
/// resonance-free and the flag only marks the far-field formulas.
pub fn seed_from_scan(path: &Path) -> Result<f64> {
    #[derive(Deserialize)]
    struct Row {
        k: f64,
        gamma: f64,
        #[serde(rename = "normalized_absD")]
        abs_d: f64,
        status: String,
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut best: Option<(f64, f64)> = None;
    for row in rdr.deserialize::<Row>() {
        let r = row?;
        if !(r.status == "ok" || r.status == "resonant") || r.gamma != 0.0 || r.k < 0.5 || !r.abs_d.is_finite() {
            continue;
        }
        if best.map_or(true, |(_, d)| r.abs_d < d) {
            best = Some((r.k, r.abs_d));
        }
    }
    best.map(|(k, _)| k).ok_or_else(|| {
        NvError::Config(format!(
            "{} has no usable gamma = 0 cell with k >= 0.5 to seed the trace",
            path.display()
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub path: PathBuf,
    pub points: usize,
    pub closed: bool,
    pub band: Option<Band>,
    pub seed_k: f64,
}

/// Writes `trace.csv` and `band.csv` (`k_min,k_max,closed`).
pub fn cmd_trace(cfg: &RunConfig, seed_from: Option<&Path>) -> Result<TraceReport> {
    let t = &cfg.trace;
    t.validate()?;
    let seed_k = match seed_from {
        Some(path) => seed_from_scan(path)?,
        None => t.seed_k,
    };
    let opts = t.options();
    let trace = trace_closed_curve_from(seed_k, &opts)?;
    write_trace_csv(create(&cfg.out, "trace.csv")?, &trace.points)?;
    let band = band_summary(&trace.points[..trace.upper_len]);
    let mut w = csv::Writer::from_writer(create(&cfg.out, "band.csv")?);
    w.write_record(["k_min", "k_max", "closed"])?;
    let (lo, hi) = band.map_or((f64::NAN, f64::NAN), |b| (b.k_min, b.k_max));
    w.write_record([fmt17(lo), fmt17(hi), trace.closed.to_string()])?;
    w.flush()?;
    Ok(TraceReport {
        path: cfg.out.join("trace.csv"),
        points: trace.points.len(),
        closed: trace.closed,
        band,
        seed_k,
    })
}

/// Writes `perturb/shape.csv`, `perturb/deviation.csv`,
/// `perturb/summary.json` and the final `u` snapshot.
pub fn cmd_perturb(cfg: &RunConfig) -> Result<PerturbSummary> {
    let p = &cfg.perturb;
    let outcome = run_perturbation(p)?;
    let dir = cfg.out.join("perturb");
    outcome.shape.write_csv(create(&dir, "shape.csv")?)?;
    write_deviation_csv(create(&dir, "deviation.csv")?, &outcome.samples)?;
    snapshot::write(&dir, "u_final", "u", &outcome.final_state.u, outcome.final_state.t)?;
    let summary = PerturbSummary::new(p, &outcome);
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Writes `speed_profile.csv` (`alpha,kappa,speed`).
pub fn cmd_speed_profile(cfg: &RunConfig) -> Result<PathBuf> {
    let s = &cfg.speed_profile;
    s.validate()?;
    let mut w = csv::Writer::from_writer(create(&cfg.out, "speed_profile.csv")?);
    w.write_record(["alpha", "kappa", "speed"])?;
    for r in speed_profile(s.c, s.samples) {
        w.write_record([fmt17(r.alpha), fmt17(r.kappa), fmt17(r.speed)])?;
    }
    w.flush()?;
    Ok(cfg.out.join("speed_profile.csv"))
}
