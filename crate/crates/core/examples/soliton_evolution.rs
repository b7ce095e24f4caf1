//! Evolves the unit-speed line soliton and compares with the exact travelling wave.

use std::f64::consts::PI;
use std::sync::Arc;

use nvlab::planar::kdv_soliton;
use nvlab::{evolve, SchemeParams, TorusGrid};

fn main() -> nvlab::Result<()> {
    let grid = TorusGrid::new(12.0 * PI, 2.0 * PI, 256, 8)?;
    let sol = kdv_soliton(1.0, 10.0)?;
    let u0 = sol.sample(&grid, 0.0);
    let scheme = SchemeParams::new(1e-3).with_reference(Arc::new(move |g, t| sol.sample(g, t)));
    for (state, diag) in evolve(&u0, 2.0, scheme, 500)? {
        let err = state.u.sub(&sol.sample(&grid, state.t))?.max_abs();
        println!("t = {:.2}  L2 = {:.6}  max|u - exact| = {err:.2e}", state.t, diag.l2_norm);
    }
    Ok(())
}
