//! Quadrature rules: Gauss–Legendre, Gauss–Jacobi with an algebraic
//! endpoint weight, geometrically graded composite rules and a global
//! adaptive Gauss–Kronrod integrator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::linalg::{tridiagonal_eigenvalues, tridiagonal_eigenvectors, Tridiagonal};

/// Nodes and weights on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss–Legendre with `n` points, mapped to `[0, 1]`.
    pub fn gauss_legendre(n: usize) -> Rule {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
                }
                dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = 0.5 * (1.0 - z);
            nodes[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Rule { nodes, weights }
    }

    /// Gauss–Jacobi rule for `∫_0^1 r^gamma f(r) dr` (Golub–Welsch).
    pub fn gauss_jacobi(n: usize, gamma: f64) -> Rule {
        assert!(n >= 1 && gamma > -1.0);
        let (a, b) = (0.0, gamma);
        let ab = a + b;
        let d: Vec<f64> = (0..n)
            .map(|k| {
                let k = k as f64;
                if k == 0.0 {
                    (b - a) / (ab + 2.0)
                } else {
                    (b * b - a * a) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
                }
            })
            .collect();
        let e: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                let num = 4.0 * k * (k + a) * (k + b) * (k + ab);
                let den = (2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0);
                (num / den).sqrt()
            })
            .collect();
        let t = Tridiagonal { d, e };
        let xs = tridiagonal_eigenvalues(&t).expect("Jacobi matrix eigenvalues");
        let vs = tridiagonal_eigenvectors(&t, &xs, 0x5eed);
        // total mass on [0,1] is 1/(gamma+1)
        let mass = 1.0 / (gamma + 1.0);
        let nodes = xs.iter().map(|x| 0.5 * (1.0 + x)).collect();
        let weights = vs.iter().map(|v| mass * v[0] * v[0]).collect();
        Rule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(a + h * t))
            .sum::<f64>()
            * h
    }
}

/// Composite rule on `[a, b]` with panels shrinking geometrically (ratio
/// 1/2) toward `a` when `toward_a`, else toward `b`. Suited to integrands
/// with an algebraic singularity at that endpoint.
pub fn graded<F: FnMut(f64) -> f64>(rule: &Rule, a: f64, b: f64, toward_a: bool, levels: usize, mut f: F) -> f64 {
    let mut sum = 0.0;
    let h = b - a;
    let mut lo = 0.5;
    let mut hi = 1.0;
    for _ in 0..levels {
        let (p, q) = if toward_a {
            (a + lo * h, a + hi * h)
        } else {
            (b - hi * h, b - lo * h)
        };
        sum += rule.integrate(p, q, &mut f);
        hi = lo;
        lo *= 0.5;
    }
    let (p, q) = if toward_a { (a, a + hi * h) } else { (b - hi * h, b) };
    sum + rule.integrate(p, q, &mut f)
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = WGK[7] * fc;
    let mut rg = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Global adaptive Gauss–Kronrod (7/15) over the panels delimited by
/// `breaks` (sorted, at least two points). Stops once the summed error
/// estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Err(Error::Quadrature("need at least two break points".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        total += v;
        err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, err: e });
    }
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_panels {
            return Err(Error::Quadrature(format!(
                "adaptive refinement exceeded {max_panels} panels (error estimate {err:e})"
            )));
        }
        let p = heap.pop().expect("non-empty heap");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // interval exhausted at machine resolution; keep its estimate
            heap.push(Panel { err: 0.0, ..p });
            err -= p.err;
            continue;
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        evals += 30;
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, err: e2 });
    }
    // re-sum to shed accumulated cancellation from the running updates
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.err).sum();
    Ok(Estimate { value, error, evaluations: evals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let r = Rule::gauss_legendre(8);
        for k in 0..16 {
            let v = r.integrate(0.0, 2.0, |x| x.powi(k));
            let exact = 2f64.powi(k + 1) / (k + 1) as f64;
            assert!((v - exact).abs() < 1e-13 * exact, "k={k}");
        }
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_integrates_weighted_monomials() {
        for gamma in [-0.5, 0.0, 0.4, 1.5] {
            let r = Rule::gauss_jacobi(10, gamma);
            for k in 0..20 {
                let v: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k)).sum();
                let exact = 1.0 / (k as f64 + gamma + 1.0);
                assert!((v - exact).abs() < 1e-12 * exact, "gamma={gamma} k={k}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn graded_rule_handles_endpoint_singularity() {
        let r = Rule::gauss_legendre(10);
        let v = graded(&r, 0.0, 1.0, true, 80, |x| x.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-9);
        let v = graded(&r, 0.0, 1.0, false, 40, |x| (1.0 - x).powf(0.3));
        assert!((v - 1.0 / 1.3).abs() < 1e-13);
    }

    #[test]
    fn adaptive_converges_on_singular_and_oscillatory() {
        let e = adaptive(|x: f64| x.powf(-0.7), &[0.0, 1.0], 1e-10, 0.0, 5000).unwrap();
        assert!((e.value - 1.0 / 0.3).abs() < 1e-8);
        let e = adaptive(|x: f64| (50.0 * x).cos(), &[0.0, 10.0], 1e-12, 0.0, 5000).unwrap();
        assert!((e.value - (500f64).sin() / 50.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_reports_panel_cap() {
        let r = adaptive(|x: f64| 1.0 / x, &[0.0, 1.0], 1e-12, 0.0, 10);
        assert!(matches!(r, Err(Error::Quadrature(_))));
    }
}
