//! Bounded perturbation profiles at a point of the zero curve.

use nvlab::instability::{perturbation_shape, ShapeOptions};

fn main() -> nvlab::Result<()> {
    let k: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.6);
    let gamma = k * (1.0 - k) * (2.0 - k);
    let s = perturbation_shape(k, gamma, &ShapeOptions::default())?;
    println!("k = {k}, gamma = {gamma:.6}, |D| = {:.2e}, kernel residual = {:.2e}", s.residual, s.kernel_residual);
    for x in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
        let v = s.eval(x);
        println!("x = {x:5.1}  f = {:+.5}  g = {:+.5}  h/i = {:+.5}", v.f, v.g, v.h_imag);
    }
    Ok(())
}
