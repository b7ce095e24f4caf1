//! Traces the closed zero curve of the determinant and reports the unstable band.

use nvlab::instability::{band_summary, trace_closed_curve, TraceOptions};

fn main() -> nvlab::Result<()> {
    let trace = trace_closed_curve(&TraceOptions::default())?;
    println!("{} points, closed = {}", trace.points.len(), trace.closed);
    if let Some(band) = band_summary(&trace.points[..trace.upper_len]) {
        println!("unstable band: {:.4} < k <= {:.4}", band.k_min, band.k_max);
    }
    for p in trace.points[..trace.upper_len].iter().step_by(10) {
        let cubic = p.k * (1.0 - p.k) * (2.0 - p.k);
        println!("s = {:.3}  k = {:.4}  gamma = {:.6}  k(1-k)(2-k) = {cubic:.6}", p.s, p.k, p.gamma);
    }
    Ok(())
}
