//! Wedge, interior and Lefschetz on the coframe e_1..e_2m, ξ.

use heisenberg_adiabatic::exterior::{d21_pointwise, hodge_star, interior, lefschetz_l, wedge};
use heisenberg_adiabatic::{CoframeLabel, ExteriorAlgebra, PointForm};

fn show(alg: &ExteriorAlgebra, name: &str, f: &PointForm) {
    let terms: Vec<String> = alg
        .basis(f.k)
        .iter()
        .zip(&f.coeffs)
        .filter(|(_, c)| c.norm() > 1e-14)
        .map(|(&mask, c)| format!("{:+} {}", c.re, alg.label_name(mask)))
        .collect();
    println!("{name:>24} = {}", if terms.is_empty() { "0".into() } else { terms.join(" ") });
}

fn main() -> heisenberg_adiabatic::Result<()> {
    let alg = ExteriorAlgebra::new(1);
    let (e1, e2, xi) = (CoframeLabel::A(0), CoframeLabel::A(1), CoframeLabel::Xi);
    for k in 0..=alg.top() {
        let names: Vec<String> = alg.basis(k).iter().map(|&m| alg.label_name(m)).collect();
        println!("Λ^{k}: {}", names.join(", "));
    }

    let omega = PointForm::monomial(&alg, &[e2, xi]);
    let a = PointForm::label(&alg, e1);
    show(&alg, "ω", &omega);
    show(&alg, "e1 ∧ ω", &wedge(&alg, &a, &omega)?);
    show(&alg, "i(v) ω", &interior(&alg, xi, &omega));
    let anti = interior(&alg, xi, &wedge(&alg, &a, &omega)?).add(&wedge(&alg, &a, &interior(&alg, xi, &omega))?);
    show(&alg, "i(v)(e1∧ω) + e1∧i(v)ω", &anti);
    show(&alg, "dξ", &alg.dxi());
    show(&alg, "L(e1)", &lefschetz_l(&alg, &a)?);
    show(&alg, "d21 ω", &d21_pointwise(&alg, &omega)?);
    show(&alg, "*ω", &hodge_star(&alg, &omega));
    Ok(())
}
