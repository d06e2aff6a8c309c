//! Left-invariant forms: d_ε, its square, and the Laplacian spectrum per degree.

use heisenberg_adiabatic::complex_ops::EpsilonFamily;
use heisenberg_adiabatic::heisenberg::InvariantModel;
use heisenberg_adiabatic::linalg::{self, NullTol};

fn main() -> heisenberg_adiabatic::Result<()> {
    let m = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let inv = InvariantModel::new(m);
    let fam = EpsilonFamily::new(&inv.model())?;
    println!("m = {m}, fiber dims {:?}", inv.dims());
    for eps in [1.0, 0.5, 0.125] {
        println!("ε = {eps}");
        for k in 0..=inv.model().top() {
            let sq = if k + 1 < inv.model().top() { fam.d_eps(k + 1, eps)?.matmul(&fam.d_eps(k, eps)?).max_abs() } else { 0.0 };
            let lap = fam.laplacian_dense(k, eps)?;
            let vals = linalg::hermitian_eig(&lap).0;
            let kernel = linalg::nullity(&lap, NullTol::INVARIANT);
            let shown: Vec<String> = vals.iter().map(|v| format!("{v:.3}")).collect();
            println!("  k={k}  |d_ε²|={sq:.1e}  dim ker={kernel}  spec=[{}]", shown.join(" "));
        }
    }
    Ok(())
}
