//! Arc-length tracing of the zero set of `D(k, γ)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::matching::{det_mismatch, det_mismatch_k0, DetMethod, MatchConfig};
use crate::error::{NvError, Result};
use crate::evolver::fmt17;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    pub step: f64,
    /// Half-length of the orthogonal search segment.
    pub search_half_width: f64,
    pub search_samples: usize,
    /// Golden-section tolerance along the search segment.
    pub refine_tol: f64,
    /// Largest normalized `|D|` of an accepted point.
    pub accept_threshold: f64,
    /// Largest normalized `|D|` of a usable seed before it is refined.
    pub seed_threshold: f64,
    pub max_points: usize,
    /// Arcs stop once `k` drops below this value.
    pub k_floor: f64,
    pub matching: MatchConfig,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            step: 0.01,
            search_half_width: 0.05,
            search_samples: 21,
            refine_tol: 1e-8,
            accept_threshold: 1e-3,
            seed_threshold: 1e-1,
            max_points: 2000,
            k_floor: 0.02,
            matching: MatchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub s: f64,
    pub k: f64,
    pub gamma: f64,
    pub residual: f64,
}

fn eval(k: f64, gamma: f64, cfg: &MatchConfig) -> Option<f64> {
    if !(k > 0.0) {
        return None;
    }
    det_mismatch(k, gamma, cfg, DetMethod::Bidirectional)
        .ok()
        .map(|m| m.normalized)
        .filter(|v| v.is_finite())
}

struct Tracer<'a> {
    opts: &'a TraceOptions,
    /// +1 traces the γ > 0 half-plane, −1 the γ < 0 one.
    side: f64,
}

const GAMMA_EPS: f64 = 1e-9;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

impl Tracer<'_> {
    fn admissible(&self, k: f64, gamma: f64) -> bool {
        k > 0.0 && k <= 1.0 + 1e-12 && self.side * gamma > GAMMA_EPS
    }

    fn value(&self, k: f64, gamma: f64) -> Option<f64> {
        if !self.admissible(k, gamma) {
            return None;
        }
        eval(k, gamma, &self.opts.matching)
    }

    /// Zero of `D` on the segment `q + t·n`, `|t| ≤ w`, nearest to `q`.
    fn orthogonal_zero(&self, q: (f64, f64), n: (f64, f64), w: f64) -> Option<(f64, f64, f64)> {
        let m = self.opts.search_samples.max(3);
        let at = |t: f64| (q.0 + t * n.0, q.1 + t * n.1);
        let ts: Vec<f64> = (0..m).map(|i| -w + 2.0 * w * i as f64 / (m - 1) as f64).collect();
        let vals: Vec<Option<f64>> = ts
            .iter()
            .map(|&t| {
                let (k, g) = at(t);
                self.value(k, g)
            })
            .collect();
        let mut best: Option<(f64, f64)> = None;
        let mut best_mid = f64::INFINITY;
        for i in 0..m - 1 {
            if let (Some(a), Some(b)) = (vals[i], vals[i + 1]) {
                let mid = 0.5 * (ts[i] + ts[i + 1]);
                if a * b <= 0.0 && mid.abs() < best_mid {
                    best_mid = mid.abs();
                    best = Some((ts[i], ts[i + 1]));
                }
            }
        }
        let (mut lo, mut hi) = best?;
        let abs_at = |t: f64| {
            let (k, g) = at(t);
            self.value(k, g).map_or(f64::INFINITY, f64::abs)
        };
        let mut c = hi - INV_PHI * (hi - lo);
        let mut d = lo + INV_PHI * (hi - lo);
        let (mut fc, mut fd) = (abs_at(c), abs_at(d));
        while (hi - lo).abs() > self.opts.refine_tol {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - INV_PHI * (hi - lo);
                fc = abs_at(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + INV_PHI * (hi - lo);
                fd = abs_at(d);
            }
        }
        let t = 0.5 * (lo + hi);
        let (k, g) = at(t);
        let r = self.value(k, g)?.abs();
        (r < self.opts.accept_threshold).then_some((k, g, r))
    }
}

fn normalize(v: (f64, f64)) -> (f64, f64) {
    let n = v.0.hypot(v.1);
    (v.0 / n, v.1 / n)
}

/// Traces one arc from `start` in `direction`, staying in the half-plane of
/// `γ` the first step points into. Stops below `k_floor`, on leaving the
/// window `0 < k ≤ 1`, on closure, or after `max_points`.
pub fn trace_instability_curve(
    start: (f64, f64),
    direction: (f64, f64),
    opts: &TraceOptions,
) -> Result<Vec<CurvePoint>> {
    if !(opts.step > 0.0) || opts.max_points == 0 {
        return Err(NvError::Config("trace step and max_points must be positive".into()));
    }
    let mut dir = normalize(direction);
    let probe = start.1 + opts.step * dir.1;
    let side = if probe != 0.0 { probe.signum() } else { 1.0 };
    let tr = Tracer { opts, side };
    let cfg = &opts.matching;

    let seed_residual = if start.1 == 0.0 {
        det_mismatch(start.0, 0.0, cfg, DetMethod::Bidirectional)
            .map(|m| m.residual())
            .unwrap_or(f64::INFINITY)
    } else {
        eval(start.0, start.1, cfg).map_or(f64::INFINITY, f64::abs)
    };
    let mut p = start;
    let mut residual = seed_residual;
    if seed_residual > opts.accept_threshold {
        if seed_residual > opts.seed_threshold {
            return Err(NvError::TraceLost {
                points: 0,
                k: start.0,
                gamma: start.1,
            });
        }
        let n = (-dir.1, dir.0);
        let (k, g, r) = tr
            .orthogonal_zero(start, n, opts.search_half_width)
            .ok_or(NvError::TraceLost {
                points: 0,
                k: start.0,
                gamma: start.1,
            })?;
        p = (k, g);
        residual = r;
    }
    let mut pts = vec![CurvePoint {
        s: 0.0,
        k: p.0,
        gamma: p.1,
        residual,
    }];
    let mut s = 0.0;
    while pts.len() < opts.max_points {
        let mut h = opts.step;
        let mut next = None;
        for _ in 0..4 {
            let q = (p.0 + h * dir.0, p.1 + h * dir.1);
            if q.0 < opts.k_floor || tr.side * q.1 <= 0.0 {
                break;
            }
            let n = (-dir.1, dir.0);
            if let Some(z) = tr.orthogonal_zero(q, n, opts.search_half_width.max(h)) {
                next = Some(z);
                break;
            }
            h *= 0.5;
        }
        let Some((k, g, r)) = next else {
            let last = pts.last().expect("seed point");
            if last.k < opts.k_floor + 2.0 * opts.step || tr.side * (p.1 + h * dir.1) <= 0.0 {
                break;
            }
            return Err(NvError::TraceLost {
                points: pts.len(),
                k: last.k,
                gamma: last.gamma,
            });
        };
        let ds = (k - p.0).hypot(g - p.1);
        s += ds;
        dir = normalize((k - p.0, g - p.1));
        p = (k, g);
        pts.push(CurvePoint {
            s,
            k,
            gamma: g,
            residual: r,
        });
        if k < opts.k_floor {
            break;
        }
        if pts.len() > 3 && (k - start.0).hypot(g - start.1) < 0.5 * opts.step {
            break;
        }
    }
    Ok(pts)
}

/// The full closed zero curve through `(1, 0)` and the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedTrace {
    pub points: Vec<CurvePoint>,
    pub closed: bool,
    /// Number of points on the `γ > 0` arc, including the seed.
    pub upper_len: usize,
}

/// Traces the `γ > 0` arc from `(1, 0)`, bridges through the origin with the
/// reduced `k = 0` determinant, and completes the `γ < 0` arc by the
/// symmetry `x → −x, γ → −γ`, re-validating each mirrored point.
pub fn trace_closed_curve(opts: &TraceOptions) -> Result<ClosedTrace> {
    trace_closed_curve_from(1.0, opts)
}

/// Root of `D(k, 0)` within the search half-width of `k_seed`: the sign
/// change of the signed determinant nearest the seed, refined by bisection.
/// `k = 1`, the window edge, counts when `|D|` vanishes there.
pub fn refine_axis_seed(k_seed: f64, opts: &TraceOptions) -> Result<CurvePoint> {
    let cfg = &opts.matching;
    let lost = NvError::TraceLost {
        points: 0,
        k: k_seed,
        gamma: 0.0,
    };
    let signed = |k: f64| {
        det_mismatch(k, 0.0, cfg, DetMethod::Bidirectional)
            .ok()
            .map(|m| m.normalized)
            .filter(|v| v.is_finite())
    };
    let lo = (k_seed - opts.search_half_width).max(opts.k_floor);
    let hi = (k_seed + opts.search_half_width).min(1.0);
    if !(lo < hi) {
        return Err(lost);
    }
    let m = opts.search_samples.max(3);
    let ks: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    let vals: Vec<Option<f64>> = ks.iter().map(|&k| signed(k)).collect();
    let mut best: Option<f64> = None;
    let mut consider = |k: f64| {
        if best.map_or(true, |b| (k - k_seed).abs() < (b - k_seed).abs()) {
            best = Some(k);
        }
    };
    for i in 0..m - 1 {
        if let (Some(mut fa), Some(fb)) = (vals[i], vals[i + 1]) {
            if fa * fb > 0.0 {
                continue;
            }
            let (mut a, mut b) = (ks[i], ks[i + 1]);
            while b - a > opts.refine_tol {
                let mid = 0.5 * (a + b);
                let Some(fm) = signed(mid) else { break };
                if fa * fm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            consider(0.5 * (a + b));
        }
    }
    if hi == 1.0 && vals[m - 1].is_some_and(|v| v.abs() < opts.accept_threshold * 1e-3) {
        consider(1.0);
    }
    let k = best.ok_or(lost)?;
    let residual = signed(k).map_or(f64::INFINITY, f64::abs);
    if residual < opts.accept_threshold {
        Ok(CurvePoint {
            s: 0.0,
            k,
            gamma: 0.0,
            residual,
        })
    } else {
        Err(NvError::TraceLost {
            points: 0,
            k: k_seed,
            gamma: 0.0,
        })
    }
}

/// As [`trace_closed_curve`], starting from the axis root nearest `k_seed`.
pub fn trace_closed_curve_from(k_seed: f64, opts: &TraceOptions) -> Result<ClosedTrace> {
    let seed = if k_seed == 1.0 {
        (1.0, 0.0)
    } else {
        let p = refine_axis_seed(k_seed, opts)?;
        (p.k, 0.0)
    };
    let upper = trace_instability_curve(seed, (-1.0, 1.0), opts)?;
    let cfg = &opts.matching;
    let origin = det_mismatch_k0(0.0, cfg, DetMethod::Bidirectional)?.residual();
    if origin > opts.accept_threshold {
        return Err(NvError::OffCurve {
            k: 0.0,
            gamma: 0.0,
            residual: origin,
        });
    }
    let mut points = upper.clone();
    let upper_len = points.len();
    let mut s = points.last().map_or(0.0, |p| p.s);
    let mut push = |points: &mut Vec<CurvePoint>, k: f64, g: f64, r: f64| {
        let last = points.last().expect("non-empty");
        s += (k - last.k).hypot(g - last.gamma);
        points.push(CurvePoint { s, k, gamma: g, residual: r });
    };
    push(&mut points, 0.0, 0.0, origin);
    let lower = Tracer { opts, side: -1.0 };
    for (i, q) in upper.iter().enumerate().rev() {
        let (k, g) = (q.k, -q.gamma);
        if g == 0.0 {
            let r = det_mismatch(k, 0.0, cfg, DetMethod::Bidirectional)?.residual();
            push(&mut points, k, 0.0, r);
            continue;
        }
        // orthogonal direction of the mirrored arc
        let nb = if i + 1 < upper.len() { &upper[i + 1] } else { &upper[i - 1] };
        let t = normalize((nb.k - q.k, -(nb.gamma - q.gamma)));
        let n = (-t.1, t.0);
        let d = 10.0 * opts.refine_tol.max(1e-6);
        let a = lower.value(k + d * n.0, g + d * n.1);
        let b = lower.value(k - d * n.0, g - d * n.1);
        let r = lower.value(k, g).map(f64::abs);
        match (a, b, r) {
            (Some(a), Some(b), Some(r)) if a * b <= 0.0 && r < opts.accept_threshold => {
                push(&mut points, k, g, r)
            }
            _ => {
                let last = points.last().expect("non-empty");
                return Err(NvError::TraceLost {
                    points: points.len(),
                    k: last.k,
                    gamma: last.gamma,
                });
            }
        }
    }
    let first = points[0];
    let last = *points.last().expect("non-empty");
    let closed = (last.k - first.k).hypot(last.gamma - first.gamma) < 0.5 * opts.step;
    Ok(ClosedTrace {
        points,
        closed,
        upper_len,
    })
}

/// Extent of the `γ > 0` arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    /// Where the arc returns to `γ = 0`, extrapolated from its last two points.
    pub k_min: f64,
    pub k_max: f64,
}

pub fn band_summary(points: &[CurvePoint]) -> Option<Band> {
    let upper: Vec<&CurvePoint> = points.iter().filter(|p| p.gamma > 0.0).collect();
    if upper.is_empty() {
        return None;
    }
    let k_max = points
        .iter()
        .filter(|p| p.gamma >= 0.0 && p.k > 0.0)
        .map(|p| p.k)
        .fold(f64::MIN, f64::max);
    let lowest = upper.iter().min_by(|a, b| a.k.total_cmp(&b.k)).expect("non-empty");
    let mut k_min = lowest.k;
    if upper.len() >= 2 {
        let mut by_k = upper.clone();
        by_k.sort_by(|a, b| a.k.total_cmp(&b.k));
        let (a, b) = (by_k[0], by_k[1]);
        if b.gamma != a.gamma {
            let k0 = a.k - a.gamma * (b.k - a.k) / (b.gamma - a.gamma);
            if k0.is_finite() && k0 <= a.k {
                k_min = k0.max(0.0);
            }
        }
    }
    Some(Band { k_min, k_max })
}

/// Distance from `(k, γ)` to the polyline through `points`.
pub fn curve_distance(points: &[CurvePoint], k: f64, gamma: f64) -> f64 {
    if points.len() == 1 {
        return (points[0].k - k).hypot(points[0].gamma - gamma);
    }
    points
        .windows(2)
        .map(|w| {
            let (ax, ay, bx, by) = (w[0].k, w[0].gamma, w[1].k, w[1].gamma);
            let (dx, dy) = (bx - ax, by - ay);
            let l2 = dx * dx + dy * dy;
            let t = if l2 > 0.0 {
                (((k - ax) * dx + (gamma - ay) * dy) / l2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (ax + t * dx - k).hypot(ay + t * dy - gamma)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Writes `s,k,gamma,residual`.
pub fn write_trace_csv<W: Write>(out: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "k", "gamma", "residual"])?;
    for p in points {
        w.write_record([fmt17(p.s), fmt17(p.k), fmt17(p.gamma), fmt17(p.residual)])?;
    }
    w.flush()?;
    Ok(())
}
