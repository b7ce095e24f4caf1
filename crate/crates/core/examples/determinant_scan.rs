//! Coarse scan of the normalized mismatch determinant over `(k, γ)`.

use nvlab::instability::{scan_determinant, CellStatus, DetMethod, MatchConfig, ScanWindow};

fn main() -> nvlab::Result<()> {
    let window = ScanWindow { k_min: 0.3, k_max: 1.0, nk: 8, gamma_min: 0.0, gamma_max: 0.4, ngamma: 5 };
    let cells = scan_determinant(&window, &MatchConfig::default(), DetMethod::Bidirectional, None)?;
    print!("{:>6}", "k\\γ");
    for g in window.gammas() {
        print!("{g:>10.2}");
    }
    println!();
    for row in cells.chunks(window.ngamma) {
        print!("{:>6.2}", row[0].k);
        for c in row {
            match c.status {
                CellStatus::ComplexRoots | CellStatus::Failed => print!("{:>10}", "-"),
                _ => print!("{:>10.2e}", c.abs_d()),
            }
        }
        println!();
    }
    Ok(())
}
