//! Boundary-trace identities for eigenfunctions under mesh refinement:
//! the Pohozaev identity with `X = x` and with a non-affine field, on two
//! unequal intervals so that the quadratic part of the field contributes.

use fraclab::analysis::{pohozaev_check, ros_oton_serra_check, with_refinement};
use fraclab::assembly::{AssembledForms, Nonlinearity};
use fraclab::domain::{Domain1D, Mesh1D, DEFAULT_GRADING};
use fraclab::fields::VectorField;
use fraclab::solve::eigenpairs;

fn main() -> fraclab::error::Result<()> {
    let domain = Domain1D::new(vec![(-1.0, -0.2), (0.1, 1.0)])?;
    let field = VectorField::parse(&["x + 0.25x^2"], None, vec![(-3.0, 3.0)])?;
    let ns = [64, 128, 256, 512];
    for s in [0.3, 0.5, 0.7] {
        let forms_at = |n: usize| AssembledForms::new(&Mesh1D::make(&domain, n, DEFAULT_GRADING)?, s);
        let radial = with_refinement(&ns, |n| {
            let f = forms_at(n)?;
            let pair = eigenpairs(&f.mesh, &f.stiffness, 1, false)?.remove(0);
            ros_oton_serra_check(&f, &pair)
        })?;
        let general = with_refinement(&ns, |n| {
            let f = forms_at(n)?;
            let pair = eigenpairs(&f.mesh, &f.stiffness, 1, false)?.remove(0);
            pohozaev_check(&f, &pair.coeffs, Nonlinearity::Linear { lambda: pair.lambda }, &field)
        })?;
        println!("s = {s}");
        for (name, r) in [("X = x", &radial), ("X = x + x^2/4", &general)] {
            let hist: Vec<String> = r.history.iter().map(|(n, e)| format!("{n}:{e:.2e}")).collect();
            println!("  {name:14} lhs {:.6} rhs {:.6} residuals {} ({:?})", r.lhs, r.rhs, hist.join(" "), r.trend());
        }
    }
    Ok(())
}
