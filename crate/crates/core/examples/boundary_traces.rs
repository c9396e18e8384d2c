//! Boundary traces `ψ = lim u/δ^s` of the first eigenfunction on an
//! annulus, under mesh refinement.

use fraclab::analysis::traces;
use fraclab::assembly::AssembledForms;
use fraclab::domain::{Domain1D, Mesh1D, DEFAULT_GRADING};
use fraclab::solve::eigenpairs;

fn main() -> fraclab::error::Result<()> {
    let domain = Domain1D::annulus(0.5, 1.5)?;
    let s = 0.4;
    for n in [64, 128, 256, 512] {
        let forms = AssembledForms::new(&Mesh1D::make(&domain, n, DEFAULT_GRADING)?, s)?;
        let pair = eigenpairs(&forms.mesh, &forms.stiffness, 1, false)?.remove(0);
        let tr = traces(&forms.mesh, &forms.mesh.expand(&pair.coeffs), s)?;
        let psi: Vec<String> = tr.iter().map(|t| format!("{:+.1}:{:.6}", t.point.x, t.psi)).collect();
        println!("n = {n:4}: {}", psi.join("  "));
    }
    Ok(())
}
