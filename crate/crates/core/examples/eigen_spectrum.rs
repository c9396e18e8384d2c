//! Dirichlet eigenvalues on an interval and on two disjoint intervals,
//! with the even subspace of the symmetric domain.

use fraclab::analysis::spectrum_report;
use fraclab::assembly::AssembledForms;
use fraclab::domain::{Domain1D, Mesh1D, DEFAULT_GRADING};

fn main() -> fraclab::error::Result<()> {
    let s = 0.5;
    for domain in [Domain1D::ball(1.0)?, Domain1D::new(vec![(-2.0, -0.5), (0.5, 2.0)])?] {
        let mesh = Mesh1D::make(&domain, 256, DEFAULT_GRADING)?;
        let forms = AssembledForms::new(&mesh, s)?;
        println!("domain {:?}", domain.intervals());
        for even_only in [false, true] {
            let r = spectrum_report(&forms, 6, even_only, 1e-6)?;
            let lambdas: Vec<String> = r.lambdas.iter().map(|l| format!("{l:.6}")).collect();
            println!("  even_only = {even_only:5}: {} (largest cluster {})", lambdas.join(" "), r.max_cluster());
        }
    }
    Ok(())
}
