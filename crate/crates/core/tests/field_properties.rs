use fraclab::analysis::extract_trace;
use fraclab::domain::{Domain1D, ImplicitDomain2D, Mesh1D, DEFAULT_GRADING};
use fraclab::fields::{check_c1_c2, check_c_condition, eval_kernel_kx, frac_constant, VectorField};
use proptest::prelude::*;

fn bbox(n: usize) -> Vec<(f64, f64)> {
    vec![(-3.0, 3.0); n]
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn base_kernel(n: usize, s: f64, x: &[f64], y: &[f64]) -> f64 {
    let r = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    0.5 * frac_constant(n, s) * r.powf(-(n as f64) - 2.0 * s)
}

fn separated(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() > 1e-4
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kernel_is_linear_in_the_field(
        s in 0.05f64..0.95,
        alpha in -3.0f64..3.0,
        x in point(2),
        y in point(2),
    ) {
        prop_assume!(separated(&x, &y));
        let f = VectorField::parse(&["x1^2 - x2", "x1*x2 + 1"], None, bbox(2)).unwrap();
        let g = VectorField::parse(&["x2^2 - 2x1", "x1^3"], None, bbox(2)).unwrap();
        let sum = VectorField::parse(&["x1^2 - x2 + x2^2 - 2x1", "x1*x2 + 1 + x1^3"], None, bbox(2)).unwrap();
        let scaled = VectorField::parse(
            &[&format!("({alpha})*(x1^2 - x2)"), &format!("({alpha})*(x1*x2 + 1)")],
            None,
            bbox(2),
        )
        .unwrap();
        let kf = eval_kernel_kx(&f, s, 2, &x, &y).unwrap();
        let kg = eval_kernel_kx(&g, s, 2, &x, &y).unwrap();
        let ks = eval_kernel_kx(&sum, s, 2, &x, &y).unwrap();
        let ka = eval_kernel_kx(&scaled, s, 2, &x, &y).unwrap();
        let scale = base_kernel(2, s, &x, &y) * 20.0;
        prop_assert!((ks - kf - kg).abs() <= 1e-12 * scale);
        prop_assert!((ka - alpha * kf).abs() <= 1e-12 * scale * alpha.abs().max(1.0));
    }

    #[test]
    fn rotation_generators_have_zero_kernel(
        s in 0.05f64..0.95,
        x in point(3),
        y in point(3),
        i in 0usize..3,
        j in 0usize..3,
    ) {
        prop_assume!(i != j && separated(&x, &y));
        let f = VectorField::rotation_generator(i.min(j), i.max(j), bbox(3)).unwrap();
        let k = eval_kernel_kx(&f, s, 3, &x, &y).unwrap();
        prop_assert!(k.abs() <= 1e-12 * base_kernel(3, s, &x, &y));
    }

    #[test]
    fn c_condition_gives_scaled_base_kernel(
        c in 0.2f64..4.0,
        w in -2.0f64..2.0,
        s in 0.05f64..0.95,
        x in point(2),
        y in point(2),
    ) {
        prop_assume!(separated(&x, &y));
        // c·x plus a rotation and a translation
        let f = VectorField::parse(
            &[&format!("{c}*x1 - ({w})*x2 + 0.3"), &format!("{c}*x2 + ({w})*x1 - 1")],
            None,
            bbox(2),
        )
        .unwrap();
        let cert = check_c_condition(&f, 200, 7).unwrap();
        prop_assert!(cert.verdict.passed());
        prop_assert!((cert.constants[0] - c).abs() <= 1e-9 * c);
        let k = eval_kernel_kx(&f, s, 2, &x, &y).unwrap();
        let want = c * (2.0 - 2.0 * s) * base_kernel(2, s, &x, &y);
        prop_assert!((k - want).abs() <= 1e-9 * want.abs());
    }

    #[test]
    fn sampled_c1_never_exceeds_n_c2(a in 0.1f64..2.0, b in 0.1f64..2.0, q in -0.3f64..0.3) {
        let f = VectorField::parse(
            &[&format!("{a}*x1 + ({q})*x1^3"), &format!("{b}*x2")],
            None,
            bbox(2),
        )
        .unwrap();
        let cert = check_c1_c2(&f, 500, 3).unwrap();
        let (c1, c2) = (cert.constants[0], cert.constants[1]);
        prop_assert!(c1 <= 2.0 * c2 + 1e-12 * c2.abs().max(1.0), "c1 = {c1}, c2 = {c2}");
    }

    #[test]
    fn trace_fit_recovers_two_term_model(
        psi in -5.0f64..5.0,
        c1 in -5.0f64..5.0,
        s in 0.1f64..0.9,
    ) {
        let d = Domain1D::ball(1.0).unwrap();
        let mesh = Mesh1D::new(&d, 64, DEFAULT_GRADING).unwrap();
        let nodal: Vec<f64> = mesh
            .nodes()
            .iter()
            .map(|&x| {
                let delta = d.dist_to_complement(x);
                psi * delta.powf(s) + c1 * psi * delta.powf(s + 1.0)
            })
            .collect();
        for bp in d.boundary_points() {
            let t = extract_trace(&mesh, &nodal, s, &bp).unwrap();
            prop_assert!((t.psi - psi).abs() <= 1e-10 * (1.0 + psi.abs()));
        }
    }

    #[test]
    fn distance_is_one_lipschitz(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let d = Domain1D::new(vec![(-2.0, -0.5), (0.25, 1.75)]).unwrap();
        let gap = (d.dist_to_complement(x) - d.dist_to_complement(y)).abs();
        prop_assert!(gap <= (x - y).abs() + 1e-15);
    }

    #[test]
    fn mesh_nodes_are_increasing_and_hit_endpoints(n_exp in 3u32..9, beta in 1.0f64..3.0) {
        let n = 1usize << n_exp;
        let d = Domain1D::new(vec![(-2.0, -0.5), (0.25, 1.75)]).unwrap();
        let mesh = Mesh1D::new(&d, n, beta).unwrap();
        let nodes = mesh.nodes();
        prop_assert_eq!(nodes.len(), 2 * (n + 1));
        prop_assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        for &(a, b) in d.intervals() {
            prop_assert!(nodes.contains(&a) && nodes.contains(&b));
        }
        prop_assert_eq!(mesh.n_dofs(), 2 * (n - 1));
    }
}

#[test]
fn circle_boundary_samples_are_accurate() {
    let dom = ImplicitDomain2D::new("x^2 + y^2 - 1", [-1.5, 1.5, -1.5, 1.5]).unwrap();
    let samples = dom.sample_boundary(200).unwrap();
    assert!(samples.len() > 200);
    for b in &samples {
        let r = b.point[0].hypot(b.point[1]);
        assert!((r - 1.0).abs() < 1e-12, "radius {r}");
        let dot = b.normal[0] * b.point[0] + b.normal[1] * b.point[1];
        assert!((dot - 1.0).abs() < 1e-12, "normal not radial");
    }
}
