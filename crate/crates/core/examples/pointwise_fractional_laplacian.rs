//! Pointwise `(-Δ)^s` of `(1 - x²)_+^s`, which is constant on `(-1, 1)`.

use fraclab::assembly::{frac_laplacian_pointwise, FracLapOptions};

fn main() -> fraclab::error::Result<()> {
    for s in [0.25f64, 0.5, 0.75] {
        let phi = |x: f64| if x.abs() < 1.0 { (1.0 - x * x).powf(s) } else { 0.0 };
        let exact = 4f64.powf(s) * libm::tgamma(1.0 + s) * libm::tgamma(0.5 + s) / libm::tgamma(0.5);
        let opts = FracLapOptions { radius: 20.0, tol: 1e-8, sup_abs: Some(1.0), support: Some((-1.0, 1.0)), max_panels: 200_000 };
        for x in [0.0, 0.5, 0.9] {
            let e = frac_laplacian_pointwise(phi, s, x, &opts)?;
            println!("s = {s}, x = {x}: {:.10} (exact {exact:.10}, error estimate {:.1e})", e.value, e.error);
        }
    }
    Ok(())
}
