//! `E_X(U, U)` by direct quadrature of the deformation kernel against
//! `-2∫U' X (-Δ)^s U`, for a smooth bump.

use fraclab::analysis::{lemma21_check, Bump};
use fraclab::domain::Domain1D;
use fraclab::fields::VectorField;

fn main() -> fraclab::error::Result<()> {
    let domain = Domain1D::ball(1.0)?;
    let bump = Bump { center: 0.1, radius: 0.35 };
    for f in ["x", "x + 0.25x^2", "1 - x^3"] {
        let field = VectorField::parse(&[f], None, vec![(-2.0, 2.0)])?;
        for s in [0.25, 0.75] {
            let r = lemma21_check(&domain, &bump, &field, s, 1e-8)?;
            println!("X = {f:12} s = {s}: {:.12} vs {:.12} (rel {:.1e})", r.lhs, r.rhs, r.rel_residual);
        }
    }
    Ok(())
}
