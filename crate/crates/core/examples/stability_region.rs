//! Largest amplification factor of the θ-scheme over `(θ, λΔt)`.

use nvlab::evolver::{amplification_eigenvalues, stability_condition_holds};

fn main() {
    let thetas = [0.0, 0.1, 0.25, 0.4, 0.5, 0.75, 1.0];
    print!("{:>8}", "λΔt");
    for t in thetas {
        print!("{t:>10}");
    }
    println!();
    for ldt in [0.1, 0.5, 1.0, 2.0, 4.0, 10.0, 100.0] {
        print!("{ldt:>8}");
        for theta in thetas {
            let (z1, z2) = amplification_eigenvalues(theta, ldt, 0.0, 1.0);
            let mark = if stability_condition_holds(theta, ldt, 0.0, 1.0) { ' ' } else { '*' };
            print!("{:>9.4}{mark}", z1.norm().max(z2.norm()));
        }
        println!();
    }
    println!("* marks steps outside the sufficient bound");
}
