//! Discretisation defects of one Reeb mode on refining grids.

use heisenberg_adiabatic::complex_ops::probe_defects;
use heisenberg_adiabatic::heisenberg::{boundary_commutator_residual, ModeGrid};
use heisenberg_adiabatic::linalg;

fn main() -> heisenberg_adiabatic::Result<()> {
    let n: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let (mut sq, mut br) = (Vec::new(), Vec::new());
    println!("{:>4} {:>12} {:>12} {:>12}", "N", "|d_eps^2|", "bracket", "twist");
    for size in [8, 16, 32] {
        let grid = ModeGrid::new(1, n, size)?;
        let d = probe_defects(&grid, 0.5)?;
        println!("{size:>4} {:>12.3e} {:>12.3e} {:>12.1e}", d.d_eps_squared, d.bracket, boundary_commutator_residual(n, size, 0));
        sq.push(d.d_eps_squared);
        br.push(d.bracket);
    }
    println!("observed orders: d_eps^2 {:.2?}, bracket {:.2?}", linalg::observed_orders(&sq), linalg::observed_orders(&br));
    Ok(())
}
