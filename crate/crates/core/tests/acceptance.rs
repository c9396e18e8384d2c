//! Acceptance gate: one PASS/FAIL line per criterion; exits non-zero if any
//! criterion fails.

use std::time::{Duration, Instant};

use fraclab::analysis::{
    hadamard_check, ibp_check, l2_identity_check, lemma21_check, pohozaev_check, richardson, ros_oton_serra_check,
    spectrum_report, Bump,
};
use fraclab::assembly::{AssembledForms, Nonlinearity};
use fraclab::domain::{Domain1D, ImplicitDomain2D, Mesh1D, DEFAULT_GRADING};
use fraclab::fields::{
    check_c1_c2, check_c_condition, eval_kernel_kx, frac_constant, min_flux, nonexistence_threshold, VectorField,
    DEFAULT_SAMPLES, DEFAULT_SEED,
};
use fraclab::solve::{eigenpairs, solve_semilinear};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// λ₁ on (−1, 1) at s = 1/2 from a single n = 2048 run with the default
/// grading (recomputed by the ignored test `reference_lambda_recompute`).
const LAMBDA1_N2048: f64 = 1.157_773_952_165_465_5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ball() -> Domain1D {
    Domain1D::ball(1.0).unwrap()
}

fn forms(d: &Domain1D, s: f64, n: usize) -> AssembledForms {
    AssembledForms::new(&Mesh1D::make(d, n, DEFAULT_GRADING).unwrap(), s).unwrap()
}

fn kernel_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut worst_zero = 0.0f64;
    let mut worst_id = 0.0f64;
    for n in 1..=3usize {
        let bbox = vec![(-2.0, 2.0); n];
        let mut zero_fields = vec![VectorField::constant(&vec![0.7; n].iter().enumerate().map(|(i, v)| v - i as f64).collect::<Vec<_>>(), bbox.clone()).unwrap()];
        for i in 0..n {
            for j in i + 1..n {
                zero_fields.push(VectorField::rotation_generator(i, j, bbox.clone()).unwrap());
            }
        }
        let id = VectorField::identity(bbox).unwrap();
        for _ in 0..1000 {
            let s = rng.gen_range(0.05..0.95);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let nf = n as f64;
            let base = 0.5 * frac_constant(n, s) * r.powf(-nf - 2.0 * s);
            let scale = base * (nf + 2.0 * s) * 2.0;
            for f in &zero_fields {
                let k = eval_kernel_kx(f, s, n, &x, &y).unwrap();
                worst_zero = worst_zero.max(k.abs() / scale);
            }
            let want = base * (nf - 2.0 * s);
            let k = eval_kernel_kx(&id, s, n, &x, &y).unwrap();
            worst_id = worst_id.max((k - want).abs() / want.abs());
        }
    }
    outcome(
        worst_zero <= 1e-12 && worst_id <= 1e-12,
        format!("max |K|/scale (constant, rotations) = {worst_zero:.2e}; X = id rel = {worst_id:.2e}"),
    )
}

fn lemma21() -> Outcome {
    let d = ball();
    let bbox = vec![(-2.0, 2.0)];
    let bumps = [Bump { center: 0.0, radius: 0.5 }, Bump { center: 0.1, radius: 0.35 }];
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for bump in bumps {
        for f in ["x", "x + 0.25x^2", "1.5"] {
            let field = VectorField::parse(&[f], None, bbox.clone()).unwrap();
            for s in [0.25, 0.5, 0.75] {
                let t = Instant::now();
                let r = lemma21_check(&d, &bump, &field, s, 1e-8).unwrap();
                slowest = slowest.max(t.elapsed());
                // analytically zero on both sides: constant fields, and any
                // field of degree ≤ 2 at s = 1/2 (the kernel bracket vanishes)
                let degenerate = f == "1.5" || s == 0.5;
                let pass = if degenerate {
                    let abs_tol = if f == "1.5" { 1e-6 } else { 1e-4 };
                    r.lhs.abs().max(r.rhs.abs()) <= abs_tol && r.scaled_residual() <= 1e-3
                } else {
                    r.rel_residual <= 1e-3
                };
                if !degenerate {
                    worst = worst.max(r.rel_residual);
                }
                if !pass {
                    println!("    lemma21 X = {f}, s = {s}, bump {bump:?}: lhs {:e} rhs {:e}", r.lhs, r.rhs);
                }
                ok &= pass;
            }
        }
    }
    ok &= slowest <= Duration::from_secs(60);
    outcome(ok, format!("worst rel residual {worst:.2e}; slowest case {slowest:.2?}"))
}

fn refinement_check<F: Fn(&AssembledForms, usize) -> f64>(s: f64, k_max: usize, rel: F) -> (bool, String) {
    let d = ball();
    let coarse = forms(&d, s, 128);
    let fine = forms(&d, s, 512);
    let mut ok = true;
    let mut msg = Vec::new();
    for k in 1..=k_max {
        let (r128, r512) = (rel(&coarse, k), rel(&fine, k));
        ok &= r512 <= 0.05 && r512 < r128;
        msg.push(format!("k={k}: {r128:.2e}->{r512:.2e}"));
    }
    (ok, format!("s={s} {}", msg.join(" ")))
}

fn ros_oton_serra() -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for s in [0.3, 0.5, 0.7] {
        let (pass, m) = refinement_check(s, 3, |f, k| {
            let pairs = eigenpairs(&f.mesh, &f.stiffness, 3, false).unwrap();
            ros_oton_serra_check(f, &pairs[k - 1]).unwrap().rel_residual
        });
        ok &= pass;
        msg.push(m);
    }
    outcome(ok, msg.join("; "))
}

fn generalized_pohozaev() -> Outcome {
    let field = VectorField::parse(&["x + 0.25x^2"], None, vec![(-2.0, 2.0)]).unwrap();
    let (ok, msg) = refinement_check(0.5, 1, |f, k| {
        let pairs = eigenpairs(&f.mesh, &f.stiffness, 1, false).unwrap();
        let p = &pairs[k - 1];
        pohozaev_check(f, &p.coeffs, Nonlinearity::Linear { lambda: p.lambda }, &field).unwrap().rel_residual
    });
    outcome(ok, msg)
}

fn two_function_ibp() -> Outcome {
    let bbox = vec![(-2.0, 2.0)];
    let mut ok = true;
    let mut msg = Vec::new();
    for s in [0.3, 0.5, 0.7] {
        let f = forms(&ball(), s, 512);
        let pairs = eigenpairs(&f.mesh, &f.stiffness, 2, false).unwrap();
        for (name, field) in [("e1", VectorField::constant(&[1.0], bbox.clone()).unwrap()), ("id", VectorField::identity(bbox.clone()).unwrap())] {
            let r = ibp_check(&f, &pairs[0], &pairs[1], &field).unwrap();
            ok &= r.rel_residual <= 0.05;
            msg.push(format!("s={s} X={name}: {:.2e}", r.rel_residual));
        }
    }
    outcome(ok, msg.join(" "))
}

fn hadamard() -> Outcome {
    let d = ball();
    let bps = d.boundary_points();
    let (left, right) = (&bps[0], &bps[1]);
    let s = 0.5;
    let mut ok = true;
    let mut msg = Vec::new();
    for k in 1..=3 {
        let r = hadamard_check(&d, s, k, right, 1e-3, 512, false).unwrap();
        let l = hadamard_check(&d, s, k, left, 1e-3, 512, false).unwrap();
        let want = -2.0 * s * r.lambda / 1.0;
        let dil = ((r.fd_slope + l.fd_slope) - want).abs() / want.abs();
        ok &= r.rel_error <= 0.05 && dil <= 0.05;
        msg.push(format!("k={k}: {:.2e}, dilation {:.2e}", r.rel_error, dil));
    }
    outcome(ok, msg.join("; "))
}

fn l2_identity() -> Outcome {
    let s = 0.5;
    let mut ok = true;
    let mut msg = Vec::new();
    let f = forms(&ball(), s, 512);
    for p in eigenpairs(&f.mesh, &f.stiffness, 3, false).unwrap() {
        let r = l2_identity_check(&f, &p).unwrap();
        let dev = (1.0 - r.rhs).abs();
        ok &= dev <= 0.05;
        msg.push(format!("ball k={}: {dev:.2e}", p.index));
    }
    let ann = Domain1D::annulus(1.0, 2.0).unwrap();
    let f = forms(&ann, s, 512);
    let pts = ann.boundary_points();
    for p in eigenpairs(&f.mesh, &f.stiffness, 3, true).unwrap() {
        let r = l2_identity_check(&f, &p).unwrap();
        let dev = (1.0 - r.rhs).abs();
        let signs = pts.iter().zip(&r.terms).all(|(b, t)| if b.x.abs() > 1.5 { *t > 0.0 } else { *t < 0.0 });
        ok &= dev <= 0.05 && signs;
        msg.push(format!("annulus k={}: {dev:.2e}{}", p.index, if signs { "" } else { " (sign pattern broken)" }));
    }
    outcome(ok, msg.join(" "))
}

fn simplicity() -> Outcome {
    let f = forms(&ball(), 0.5, 512);
    let even = spectrum_report(&f, 7, true, 1e-4).unwrap();
    let min_gap = even.gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let two = Domain1D::new(vec![(-2.0, -0.5), (0.5, 2.0)]).unwrap();
    let f2 = forms(&two, 0.5, 256);
    let full = spectrum_report(&f2, 12, false, 1e-4).unwrap();
    let even2 = spectrum_report(&f2, 6, true, 1e-4).unwrap();
    let biggest = full.max_cluster().max(even2.max_cluster());
    outcome(
        min_gap > 1e-2 && biggest <= 2 && full.components == 2,
        format!("min even gap (k<=6) {min_gap:.3e}; largest cluster on two intervals {biggest}"),
    )
}

fn thresholds() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=4usize {
        for i in 1..20 {
            let s = i as f64 / 20.0;
            let nf = n as f64;
            if 2.0 * s >= nf {
                continue;
            }
            let c = [0.5, 1.0, 1.25, 2.0, 5.0][i % 5];
            let got = nonexistence_threshold(c * nf, c, n, s).unwrap();
            worst = worst.max((got - 2.0 * nf / (nf - 2.0 * s)).abs() / got);
        }
    }
    for i in 1..10 {
        let s = i as f64 / 20.0;
        let got = nonexistence_threshold(1.5, 1.0, 2, s).unwrap();
        worst = worst.max((got - 4.0 / (1.0 - 2.0 * s)).abs() / got);
    }
    outcome(worst <= 4.0 * f64::EPSILON, format!("max relative deviation {worst:.2e}"))
}

fn certificates() -> Outcome {
    let b2 = vec![(-1.5, 1.5), (-1.5, 1.5)];
    let field = VectorField::parse(&["5x1 - 4x2", "5x2 + 4x1"], None, b2).unwrap();
    let cert = check_c_condition(&field, DEFAULT_SAMPLES, DEFAULT_SEED).unwrap();
    let dom = ImplicitDomain2D::new("x^2 + 10(y^3 + x)^2 - 1", [-1.5, 1.5, -1.5, 1.5]).unwrap();
    let flux2 = min_flux(&field, &dom.sample_boundary(400).unwrap()).unwrap();
    let ok2 = cert.verdict.passed() && (cert.constants[0] - 5.0).abs() <= 1e-6 && flux2 >= -1e-6;

    let b3 = vec![(-2.5, 2.5), (-1.5, 1.5)];
    let x_half = VectorField::parse(&["0.5x", "y"], None, b3).unwrap();
    let c12 = check_c1_c2(&x_half, DEFAULT_SAMPLES, DEFAULT_SEED).unwrap();
    let dom3 = ImplicitDomain2D::new("3x^2 - 5x^4 + x^6 - 1 + 4y^4", [-2.5, 2.5, -1.5, 1.5]).unwrap();
    let flux3 = min_flux(&x_half, &dom3.sample_boundary(400).unwrap()).unwrap();
    let ok3 = c12.verdict.passed()
        && (c12.constants[0] - 1.5).abs() <= 1e-6
        && (c12.constants[1] - 1.0).abs() <= 1e-6
        && flux3 >= -1e-6;
    outcome(
        ok2 && ok3,
        format!(
            "c = {:.9}, min flux {flux2:.3e}; (c1, c2) = ({:.9}, {:.9}), min flux {flux3:.3e}",
            cert.constants[0], c12.constants[0], c12.constants[1]
        ),
    )
}

fn lambda_regression() -> Outcome {
    let d = ball();
    let lam: Vec<f64> = [256, 512, 1024]
        .iter()
        .map(|&n| {
            let f = forms(&d, 0.5, n);
            eigenpairs(&f.mesh, &f.stiffness, 1, false).unwrap()[0].lambda
        })
        .collect();
    let extrap = richardson([lam[0], lam[1], lam[2]]);
    let rel = (extrap - LAMBDA1_N2048).abs() / LAMBDA1_N2048;
    outcome(rel <= 5e-3, format!("extrapolated {extrap:.10} vs n=2048 {LAMBDA1_N2048:.10}: rel {rel:.2e}"))
}

fn semilinear() -> Outcome {
    let f = forms(&ball(), 0.75, 512);
    let sol = solve_semilinear(&f, 4.0, 1e-10, 500).unwrap();
    let id = VectorField::identity(vec![(-2.0, 2.0)]).unwrap();
    let r = pohozaev_check(&f, &sol.coeffs, Nonlinearity::Power { p: 4.0 }, &id).unwrap();
    outcome(
        r.rel_residual <= 0.05,
        format!("{} iterations, residual {:.1e}; Pohozaev rel {:.2e}", sol.iterations, sol.residual, r.rel_residual),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("kernel algebra", kernel_algebra),
        ("bump kernel formula", lemma21),
        ("Ros-Oton-Serra identity", ros_oton_serra),
        ("generalized Pohozaev, non-affine field", generalized_pohozaev),
        ("two-function identity", two_function_ibp),
        ("Hadamard derivative", hadamard),
        ("L2 identity, ball and annulus", l2_identity),
        ("simplicity and multiplicity", simplicity),
        ("nonexistence threshold", thresholds),
        ("geometry certificates", certificates),
        ("eigenvalue regression", lambda_regression),
        ("semilinear Pohozaev", semilinear),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{:>2}] {name}: {} ({:.1?})", i + 1, o.detail, t.elapsed());
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
