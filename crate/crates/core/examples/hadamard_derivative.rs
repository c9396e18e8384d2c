//! Finite-difference eigenvalue derivative under moving one endpoint,
//! compared with the boundary-trace formula.

use fraclab::analysis::hadamard_check;
use fraclab::domain::Domain1D;

fn main() -> fraclab::error::Result<()> {
    let domain = Domain1D::ball(1.0)?;
    let right = &domain.boundary_points()[1];
    for k in 1..=3 {
        let r = hadamard_check(&domain, 0.5, k, right, 1e-3, 512, false)?;
        println!(
            "k = {k}: lambda {:.6}, slope {:.6}, formula {:.6}, rel error {:.2e}",
            r.lambda, r.fd_slope, r.formula, r.rel_error
        );
    }
    let two = Domain1D::new(vec![(-2.0, -1.0), (1.0, 2.0)])?;
    let outer = &two.boundary_points()[3];
    let r = hadamard_check(&two, 0.5, 1, outer, 1e-3, 256, true)?;
    println!("two intervals, both outer ends moved: slope {:.6}, formula {:.6}", r.fd_slope, r.formula);
    Ok(())
}
