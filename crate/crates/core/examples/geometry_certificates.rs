//! Sampled structural certificates for vector fields on planar domains and
//! the resulting nonexistence exponents.

use fraclab::domain::ImplicitDomain2D;
use fraclab::fields::{
    check_c1_c2, check_c_condition, min_flux, nonexistence_threshold, VectorField, DEFAULT_SAMPLES, DEFAULT_SEED,
};

fn main() -> fraclab::error::Result<()> {
    let field = VectorField::parse(&["5x - 4y", "5y + 4x"], None, vec![(-1.5, 1.5); 2])?;
    let cert = check_c_condition(&field, DEFAULT_SAMPLES, DEFAULT_SEED)?;
    let dom = ImplicitDomain2D::new("x^2 + 10(y^3 + x)^2 - 1", [-1.5, 1.5, -1.5, 1.5])?;
    let flux = min_flux(&field, &dom.sample_boundary(400)?)?;
    let c = cert.constants[0];
    println!("X = 5x + 4Jx: c = {c:.9} ({:?}), min X.nu = {flux:.4}", cert.verdict);
    for s in [0.25, 0.5, 0.75] {
        println!("  s = {s}: p* = {:.6}", nonexistence_threshold(2.0 * c, c, 2, s)?);
    }

    let field = VectorField::parse(&["0.5x", "y"], None, vec![(-2.5, 2.5), (-1.5, 1.5)])?;
    let cert = check_c1_c2(&field, DEFAULT_SAMPLES, DEFAULT_SEED)?;
    let dom = ImplicitDomain2D::new("3x^2 - 5x^4 + x^6 - 1 + 4y^4", [-2.5, 2.5, -1.5, 1.5])?;
    let flux = min_flux(&field, &dom.sample_boundary(400)?)?;
    let (c1, c2) = (cert.constants[0], cert.constants[1]);
    println!("X = (x/2, y): c1 = {c1:.9}, c2 = {c2:.9} ({:?}), min X.nu = {flux:.4}", cert.verdict);
    for s in [0.1, 0.25, 0.4] {
        println!("  s = {s}: p* = {:.6}", nonexistence_threshold(c1, c2, 2, s)?);
    }
    Ok(())
}
