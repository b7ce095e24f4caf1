//! Builds an oblique planar soliton from a KdV solution and checks it on a grid.

use nvlab::planar::{kdv_soliton, planar_from_kdv, PlanarParams};

fn main() -> nvlab::Result<()> {
    let q = kdv_soliton(1.0, 0.0)?.standard_kdv();
    for deg in [0.0, 10.0, 20.0, 40.0] {
        let alpha = f64::to_radians(deg);
        let sol = planar_from_kdv(q, PlanarParams::along(alpha))?;
        let res = sol.kdv_form_residual(0.3, -10.0, 20.0, 256, 1e-4);
        println!("alpha = {deg:4.1}°  kappa = {:+.4}  residual = {res:.2e}", sol.params().kappa);
    }
    Ok(())
}
