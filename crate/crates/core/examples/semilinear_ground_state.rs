//! Positive solution of `(-Δ)^s u = u^{p-1}` on an interval and its
//! Pohozaev residual with `X = x`.

use fraclab::analysis::pohozaev_check;
use fraclab::assembly::{AssembledForms, Nonlinearity};
use fraclab::domain::{Domain1D, Mesh1D, DEFAULT_GRADING};
use fraclab::fields::VectorField;
use fraclab::solve::{critical_exponent, solve_semilinear};

fn main() -> fraclab::error::Result<()> {
    let domain = Domain1D::ball(1.0)?;
    let id = VectorField::identity(vec![(-2.0, 2.0)])?;
    for (s, p) in [(0.3, 3.0), (0.5, 4.0), (0.75, 6.0)] {
        let forms = AssembledForms::new(&Mesh1D::make(&domain, 256, DEFAULT_GRADING)?, s)?;
        let sol = solve_semilinear(&forms, p, 1e-10, 500)?;
        let r = pohozaev_check(&forms, &sol.coeffs, Nonlinearity::Power { p }, &id)?;
        let max = sol.coeffs.iter().copied().fold(0.0, f64::max);
        println!(
            "s = {s}, p = {p} (bound {:.3}): {} iterations, max u = {max:.6}, Pohozaev rel residual {:.2e}",
            critical_exponent(s),
            sol.iterations,
            r.rel_residual
        );
    }
    Ok(())
}
