//! Lipschitz vector fields, the fractional deformation kernel `K_X`, and
//! sampling certificates for the structural conditions on `X` that drive
//! the nonexistence results.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::BoundarySample;
use crate::error::{Error, Result};
use crate::expr::Expr;

/// `c_{N,s} = π^{-N/2} s 4^s Γ(N/2 + s) / Γ(1 - s)`, via log-Gamma.
pub fn frac_constant(n: usize, s: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    let key = (n, s.to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("constant cache").get(&key) {
        return *v;
    }
    let nf = n as f64;
    let log = -0.5 * nf * std::f64::consts::PI.ln() + s.ln() + s * 4f64.ln()
        + libm::lgamma(0.5 * nf + s)
        - libm::lgamma(1.0 - s);
    let v = log.exp();
    cache.lock().expect("constant cache").insert(key, v);
    v
}

/// `Γ(1 + s)²`, the boundary-term factor.
pub fn gamma_one_plus_s_sq(s: f64) -> f64 {
    libm::tgamma(1.0 + s).powi(2)
}

/// Surface measure `|S^{N-1}|` (2 for `N = 1`).
pub fn sphere_measure(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    2.0 * std::f64::consts::PI.powf(h) / libm::tgamma(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivSource {
    Supplied,
    Symbolic,
}

/// Closed-form vector field `X: R^N -> R^N` with its divergence, a
/// bounding box, and a sampled Lipschitz bound on that box.
#[derive(Debug, Clone)]
pub struct VectorField {
    dim: usize,
    components: Vec<Expr>,
    jacobian: Vec<Vec<Expr>>,
    div: Expr,
    div_source: DivSource,
    bbox: Vec<(f64, f64)>,
    lip: f64,
}

impl VectorField {
    pub fn new(components: Vec<Expr>, div: Option<Expr>, bbox: Vec<(f64, f64)>) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return Err(Error::Argument("a vector field needs at least one component".into()));
        }
        if bbox.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: bbox.len() });
        }
        if bbox.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::Argument(format!("bad bounding box {bbox:?}")));
        }
        if let Some(c) = components.iter().find(|c| c.arity() > dim) {
            return Err(Error::Argument(format!("component '{c}' uses more than {dim} variables")));
        }
        let jacobian: Vec<Vec<Expr>> = components
            .iter()
            .map(|c| (0..dim).map(|j| c.diff(j)).collect())
            .collect();
        let (div, div_source) = match div {
            Some(d) => (d, DivSource::Supplied),
            None => {
                let mut d = jacobian[0][0].clone();
                for (i, row) in jacobian.iter().enumerate().skip(1) {
                    d = Expr::Add(Box::new(d), Box::new(row[i].clone()));
                }
                (d, DivSource::Symbolic)
            }
        };
        let mut field = VectorField {
            dim,
            components,
            jacobian,
            div,
            div_source,
            bbox,
            lip: 0.0,
        };
        field.lip = field.estimate_lipschitz(4096, 0x11b);
        Ok(field)
    }

    pub fn parse(components: &[&str], div: Option<&str>, bbox: Vec<(f64, f64)>) -> Result<Self> {
        let comps = components.iter().map(|c| Expr::parse(c)).collect::<Result<Vec<_>>>()?;
        let div = div.map(Expr::parse).transpose()?;
        VectorField::new(comps, div, bbox)
    }

    /// `X(x) = x` on the given box.
    pub fn identity(bbox: Vec<(f64, f64)>) -> Result<Self> {
        let comps = (0..bbox.len()).map(Expr::Var).collect();
        VectorField::new(comps, None, bbox)
    }

    pub fn constant(v: &[f64], bbox: Vec<(f64, f64)>) -> Result<Self> {
        VectorField::new(v.iter().map(|&c| Expr::Num(c)).collect(), None, bbox)
    }

    /// Rotation generator `Y^{ij}(x) = x_i e_j - x_j e_i`.
    pub fn rotation_generator(i: usize, j: usize, bbox: Vec<(f64, f64)>) -> Result<Self> {
        let n = bbox.len();
        if i >= n || j >= n || i == j {
            return Err(Error::Argument(format!("bad generator indices ({i}, {j}) in dimension {n}")));
        }
        let mut comps = vec![Expr::Num(0.0); n];
        comps[j] = Expr::Var(i);
        comps[i] = Expr::Neg(Box::new(Expr::Var(j)));
        VectorField::new(comps, None, bbox)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn div_expr(&self) -> &Expr {
        &self.div
    }

    pub fn div_source(&self) -> DivSource {
        self.div_source
    }

    pub fn bbox(&self) -> &[(f64, f64)] {
        &self.bbox
    }

    pub fn lipschitz(&self) -> f64 {
        self.lip
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x);
        }
    }

    pub fn div(&self, x: &[f64]) -> f64 {
        self.div.eval(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.jacobian
            .iter()
            .map(|row| row.iter().map(|e| e.eval(x)).collect())
            .collect()
    }

    /// Whether `x` lies in the closed bounding box.
    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.bbox).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Whether the box contains `[lo, hi]` (first coordinate).
    pub fn box_covers(&self, lo: f64, hi: f64) -> bool {
        self.bbox[0].0 <= lo && hi <= self.bbox[0].1
    }

    /// One-dimensional field extended outside its box by first-order
    /// extrapolation from the nearer box edge. The extension is C¹, globally
    /// Lipschitz with the in-box bound, and reproduces affine fields exactly.
    pub fn extended_1d(&self) -> Result<Field1D> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.dim });
        }
        let (lo, hi) = self.bbox[0];
        let c = &self.components[0];
        Ok(Field1D {
            value: c.clone(),
            deriv: self.div.clone(),
            lo,
            hi,
            edge: [c.eval(&[lo]), self.div.eval(&[lo]), c.eval(&[hi]), self.div.eval(&[hi])],
        })
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.bbox.iter().map(|(lo, hi)| rng.gen_range(*lo..*hi)).collect()
    }

    /// Pairs inside the box: fully random partners alternate with partners
    /// that differ from the base point in one coordinate only.
    fn sample_pairs(&self, m: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|k| {
                let x = self.sample_point(&mut rng);
                let slot = k % (self.dim + 1);
                let y = if slot == 0 {
                    self.sample_point(&mut rng)
                } else {
                    let mut y = x.clone();
                    let (lo, hi) = self.bbox[slot - 1];
                    y[slot - 1] = rng.gen_range(lo..hi);
                    y
                };
                (x, y)
            })
            .collect()
    }

    fn estimate_lipschitz(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts: Vec<Vec<f64>> = (0..samples).map(|_| self.sample_point(&mut rng)).collect();
        // box corners
        for mask in 0..(1usize << self.dim.min(10)) {
            pts.push(
                self.bbox
                    .iter()
                    .enumerate()
                    .map(|(i, (lo, hi))| if mask >> i & 1 == 1 { *hi } else { *lo })
                    .collect(),
            );
        }
        let frob = pts
            .iter()
            .map(|p| {
                self.jacobian(p)
                    .iter()
                    .flatten()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        1.01 * frob + 1e-12
    }

    pub fn sampled_lipschitz_ratio(&self, m: usize, seed: u64) -> f64 {
        self.sample_pairs(m, seed)
            .iter()
            .filter_map(|(x, y)| {
                let d = dist(x, y);
                (d > 0.0).then(|| dist(&self.eval(x), &self.eval(y)) / d)
            })
            .fold(0.0, f64::max)
    }
}

/// Scalar field on the line, extrapolated linearly outside `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Field1D {
    value: Expr,
    deriv: Expr,
    pub lo: f64,
    pub hi: f64,
    /// `X(lo), X'(lo), X(hi), X'(hi)`
    edge: [f64; 4],
}

impl Field1D {
    pub fn value(&self, x: f64) -> f64 {
        if x < self.lo {
            self.edge[0] + self.edge[1] * (x - self.lo)
        } else if x > self.hi {
            self.edge[2] + self.edge[3] * (x - self.hi)
        } else {
            self.value.eval(&[x])
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        if x < self.lo {
            self.edge[1]
        } else if x > self.hi {
            self.edge[3]
        } else {
            self.deriv.eval(&[x])
        }
    }

    /// `(X(lo), X'(lo))` and `(X(hi), X'(hi))`.
    pub fn edges(&self) -> ((f64, f64), (f64, f64)) {
        ((self.edge[0], self.edge[1]), (self.edge[2], self.edge[3]))
    }

    /// Bracket `X'(x) + X'(y) - (1 + 2s)(X(x) - X(y))/(x - y)`, so that
    /// `K_X = (c_{1,s}/2) · bracket · |x - y|^{-1-2s}`. On the diagonal it
    /// tends to `(1 - 2s) X'(x)`.
    pub fn bracket(&self, s: f64, x: f64, y: f64) -> f64 {
        let dxy = x - y;
        if dxy == 0.0 {
            return (1.0 - 2.0 * s) * self.deriv(x);
        }
        self.deriv(x) + self.deriv(y) - (1.0 + 2.0 * s) * (self.value(x) - self.value(y)) / dxy
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Fractional deformation kernel
/// `K_X(x,y) = (c_{N,s}/2)[div X(x) + div X(y) - (N+2s)(X(x)-X(y))·(x-y)/|x-y|²] |x-y|^{-N-2s}`.
pub fn eval_kernel_kx(field: &VectorField, s: f64, n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    if field.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: field.dim() });
    }
    if x.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len().min(y.len()) });
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Range(format!("s = {s} outside (0, 1)")));
    }
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let r = r2.sqrt();
    let scale = x.iter().chain(y).fold(1.0f64, |m, v| m.max(v.abs()));
    if r < 1e-14 * scale {
        return Err(Error::CoincidentPoints);
    }
    let xv = field.eval(x);
    let yv = field.eval(y);
    let q = (0..n).map(|i| (xv[i] - yv[i]) * (x[i] - y[i])).sum::<f64>() / r2;
    let nf = n as f64;
    // split so that X = id gives exactly (N - 2s)
    let bracket = (field.div(x) + field.div(y) - 2.0 * nf * q) + (nf - 2.0 * s) * q;
    Ok(0.5 * frac_constant(n, s) * bracket * r.powf(-nf - 2.0 * s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    CCondition,
    C1C2Condition,
    Flux,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCertificate {
    pub kind: CertificateKind,
    pub constants: Vec<f64>,
    pub min_flux: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub verdict: Verdict,
    /// Largest violation of the defining relation over the samples.
    pub max_violation: f64,
    pub div_source: DivSource,
}

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 20_240_611;
const EQ_TOL: f64 = 1e-9;

/// Certifies `(X(x) - X(y))·(x - y) = c|x - y|²` and `div X ≡ cN` on
/// random samples. `c` is read off one pair and then tested on `m` others.
pub fn check_c_condition(field: &VectorField, m: usize, seed: u64) -> Result<ConditionCertificate> {
    if m < 100 {
        return Err(Error::Argument(format!("need at least 100 samples, got {m}")));
    }
    let n = field.dim() as f64;
    let pairs = field.sample_pairs(m + 1, seed);
    let (x0, y0) = &pairs[0];
    let c = quotient(field, x0, y0);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (x, y) in &pairs[1..] {
        let h2 = dist(x, y).powi(2);
        let xv = field.eval(x);
        let yv = field.eval(y);
        let q: f64 = (0..field.dim()).map(|i| (xv[i] - yv[i]) * (x[i] - y[i])).sum();
        let viol = (q - c * h2).abs();
        worst = worst.max(viol);
        ok &= viol <= EQ_TOL * (1.0 + c.abs() * h2);
        let dv = (field.div(x) - c * n).abs();
        worst = worst.max(dv);
        ok &= dv <= EQ_TOL * (1.0 + c.abs() * n);
    }
    Ok(ConditionCertificate {
        kind: CertificateKind::CCondition,
        constants: vec![c],
        min_flux: None,
        samples: m,
        seed,
        verdict: Verdict::from_bool(ok),
        max_violation: worst,
        div_source: field.div_source(),
    })
}

fn quotient(field: &VectorField, x: &[f64], y: &[f64]) -> f64 {
    let xv = field.eval(x);
    let yv = field.eval(y);
    let q: f64 = (0..field.dim()).map(|i| (xv[i] - yv[i]) * (x[i] - y[i])).sum();
    q / dist(x, y).powi(2)
}

/// Sampled constants for `div X ≥ c₁` and
/// `(X(x) - X(y))·(x - y) ≤ c₂|x - y|²`. Passes when the pair is admissible
/// for the nonexistence threshold: `c₂ > 0` and `c₁ ∈ (c₂N/2, c₂N]`.
pub fn check_c1_c2(field: &VectorField, m: usize, seed: u64) -> Result<ConditionCertificate> {
    if m < 100 {
        return Err(Error::Argument(format!("need at least 100 samples, got {m}")));
    }
    let n = field.dim() as f64;
    let pairs = field.sample_pairs(m, seed);
    let c1 = pairs.iter().map(|(x, _)| field.div(x)).fold(f64::INFINITY, f64::min);
    let c2 = pairs
        .iter()
        .filter(|(x, y)| dist(x, y) > 0.0)
        .map(|(x, y)| quotient(field, x, y))
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = EQ_TOL * (1.0 + c2.abs() * n);
    let ok = c2 > 0.0 && c1 > c2 * n / 2.0 && c1 <= c2 * n + tol;
    Ok(ConditionCertificate {
        kind: CertificateKind::C1C2Condition,
        constants: vec![c1, c2],
        min_flux: None,
        samples: m,
        seed,
        verdict: Verdict::from_bool(ok),
        max_violation: (c1 - c2 * n).max(0.0),
        div_source: field.div_source(),
    })
}

/// Exponent `p* = 2N / (2c₁/c₂ - (N + 2s))`; nontrivial solutions of the
/// pure-power problem are excluded for `p > p*` on domains with `X·ν ≥ 0`.
pub fn nonexistence_threshold(c1: f64, c2: f64, n: usize, s: f64) -> Result<f64> {
    let nf = n as f64;
    if !(c2 > 0.0) {
        return Err(Error::Range(format!("c2 = {c2} must be positive")));
    }
    if !(c1 > c2 * nf / 2.0 && c1 <= c2 * nf) {
        return Err(Error::Range(format!("c1 = {c1} outside (c2 N/2, c2 N]")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Range(format!("s = {s} outside (0, 1)")));
    }
    let s_max = c1 / c2 - nf / 2.0;
    if s >= s_max {
        return Err(Error::Range(format!("s = {s} must be below c1/c2 - N/2 = {s_max}")));
    }
    Ok(nf / (s_max - s))
}

/// `min X(p)·ν(p)` over boundary samples.
pub fn min_flux(field: &VectorField, boundary: &[BoundarySample]) -> Result<f64> {
    if field.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: field.dim() });
    }
    if boundary.is_empty() {
        return Err(Error::Argument("empty boundary sample".into()));
    }
    Ok(boundary
        .iter()
        .map(|b| {
            let v = field.eval(&b.point);
            v[0] * b.normal[0] + v[1] * b.normal[1]
        })
        .fold(f64::INFINITY, f64::min))
}

pub const FLUX_TOL: f64 = 1e-6;

pub fn flux_certificate(field: &VectorField, boundary: &[BoundarySample]) -> Result<ConditionCertificate> {
    let mf = min_flux(field, boundary)?;
    Ok(ConditionCertificate {
        kind: CertificateKind::Flux,
        constants: Vec::new(),
        min_flux: Some(mf),
        samples: boundary.len(),
        seed: 0,
        verdict: Verdict::from_bool(mf >= -FLUX_TOL),
        max_violation: (-mf).max(0.0),
        div_source: field.div_source(),
    })
}

/// JSON description of a vector field. `box` lists `[lo, hi]` per axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSpec {
    pub dim: usize,
    pub components: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub div: Option<String>,
    #[serde(rename = "box")]
    pub bbox: Vec<[f64; 2]>,
}

impl FieldSpec {
    pub fn build(&self) -> Result<VectorField> {
        if self.components.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: self.components.len() });
        }
        let comps: Vec<&str> = self.components.iter().map(String::as_str).collect();
        VectorField::parse(&comps, self.div.as_deref(), self.bbox.iter().map(|b| (b[0], b[1])).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box2() -> Vec<(f64, f64)> {
        vec![(-2.0, 2.0), (-2.0, 2.0)]
    }

    #[test]
    fn constant_matches_known_values() {
        // c_{1,1/2} = 1/π, c_{2,1/2} = 1/(2π), c_{3,1/2} = 1/π²
        let pi = std::f64::consts::PI;
        assert!((frac_constant(1, 0.5) - 1.0 / pi).abs() < 1e-15);
        assert!((frac_constant(2, 0.5) - 0.5 / pi).abs() < 1e-15);
        assert!((frac_constant(3, 0.5) - 1.0 / (pi * pi)).abs() < 1e-15);
        assert!((sphere_measure(1) - 2.0).abs() < 1e-15);
        assert!((sphere_measure(2) - 2.0 * pi).abs() < 1e-14);
    }

    #[test]
    fn kernel_examples() {
        let id1 = VectorField::identity(vec![(-2.0, 2.0)]).unwrap();
        assert_eq!(eval_kernel_kx(&id1, 0.5, 1, &[0.3], &[-0.4]).unwrap(), 0.0);
        let e1 = VectorField::constant(&[1.0, 0.0], box2()).unwrap();
        assert_eq!(eval_kernel_kx(&e1, 0.3, 2, &[0.1, 0.2], &[1.0, -0.5]).unwrap(), 0.0);
        let id2 = VectorField::identity(box2()).unwrap();
        let k = eval_kernel_kx(&id2, 0.5, 2, &[0.0, 0.0], &[0.6, 0.8]).unwrap();
        assert!((k - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!(matches!(eval_kernel_kx(&id2, 0.5, 2, &[0.1, 0.1], &[0.1, 0.1]), Err(Error::CoincidentPoints)));
        assert!(matches!(eval_kernel_kx(&id1, 0.5, 2, &[0.0, 0.0], &[1.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn c_condition_examples() {
        let id = VectorField::identity(box2()).unwrap();
        let cert = check_c_condition(&id, 1000, 1).unwrap();
        assert!(cert.verdict.passed());
        assert!((cert.constants[0] - 1.0).abs() < 1e-12);
        let ex = VectorField::parse(&["5x1-4x2", "5x2+4x1"], None, vec![(-1.2, 1.2); 2]).unwrap();
        let cert = check_c_condition(&ex, 1000, 1).unwrap();
        assert!(cert.verdict.passed());
        assert!((cert.constants[0] - 5.0).abs() < 1e-12);
        let xe = VectorField::parse(&["0.5x1", "x2"], None, box2()).unwrap();
        assert_eq!(check_c_condition(&xe, 1000, 1).unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn c1_c2_examples() {
        let xe = VectorField::parse(&["0.5x1", "x2"], None, box2()).unwrap();
        let cert = check_c1_c2(&xe, DEFAULT_SAMPLES, DEFAULT_SEED).unwrap();
        assert!((cert.constants[0] - 1.5).abs() < 1e-12);
        assert!((cert.constants[1] - 1.0).abs() < 1e-12);
        assert!(cert.verdict.passed());
        let id = VectorField::identity(box2()).unwrap();
        let cert = check_c1_c2(&id, 500, 3).unwrap();
        assert!((cert.constants[0] - 2.0).abs() < 1e-12 && (cert.constants[1] - 1.0).abs() < 1e-12);
        let k = VectorField::constant(&[1.0, -3.0], box2()).unwrap();
        let cert = check_c1_c2(&k, 500, 3).unwrap();
        assert_eq!(cert.constants, vec![0.0, 0.0]);
        assert_eq!(cert.verdict, Verdict::Fail);
    }

    #[test]
    fn threshold_examples() {
        for n in 1..4 {
            for s in [0.1, 0.3, 0.45] {
                if (n as f64) <= 2.0 * s {
                    continue;
                }
                let p = nonexistence_threshold(n as f64, 1.0, n, s).unwrap();
                let want = 2.0 * n as f64 / (n as f64 - 2.0 * s);
                assert!((p - want).abs() <= 1e-14 * want);
            }
        }
        assert_eq!(nonexistence_threshold(1.5, 1.0, 2, 0.25).unwrap(), 8.0);
        assert!(matches!(nonexistence_threshold(1.5, 1.0, 2, 0.5), Err(Error::Range(_))));
        assert!(matches!(nonexistence_threshold(1.0, 1.0, 2, 0.1), Err(Error::Range(_))));
    }

    #[test]
    fn flux_on_unit_circle() {
        let samples: Vec<BoundarySample> = (0..64)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 64.0;
                BoundarySample { point: [t.cos(), t.sin()], normal: [t.cos(), t.sin()] }
            })
            .collect();
        let id = VectorField::identity(box2()).unwrap();
        assert!((min_flux(&id, &samples).unwrap() - 1.0).abs() < 1e-12);
        let neg = VectorField::parse(&["-x", "-y"], None, box2()).unwrap();
        assert!((min_flux(&neg, &samples).unwrap() + 1.0).abs() < 1e-12);
        let one = VectorField::identity(vec![(-1.0, 1.0)]).unwrap();
        assert!(matches!(min_flux(&one, &samples), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn extended_field_and_bracket() {
        let f = VectorField::parse(&["x + 0.25x^2"], None, vec![(-2.0, 2.0)]).unwrap();
        let c = f.extended_1d().unwrap();
        assert_eq!(c.value(3.0), 3.0 + 2.0 * 1.0);
        assert_eq!(c.deriv(-3.0), 0.0);
        assert_eq!(c.deriv(5.0), 2.0);
        let id = VectorField::identity(vec![(-1.0, 1.0)]).unwrap().extended_1d().unwrap();
        assert_eq!(id.value(-7.5), -7.5);
        assert!((id.bracket(0.3, 4.0, -6.0) - 0.4).abs() < 1e-15);
        // quadratic field at s = 1/2: the bracket vanishes inside the box
        assert!(c.bracket(0.5, 0.3, -1.1).abs() < 1e-14);
        assert!((c.bracket(0.25, 0.4, 0.4) - 0.5 * 1.2).abs() < 1e-14);
    }

    #[test]
    fn field_spec_json() {
        let spec: FieldSpec = serde_json::from_str(
            r#"{"dim": 2, "components": ["5x1-4x2", "5x2+4x1"], "box": [[-1.2, 1.2], [-1.2, 1.2]]}"#,
        )
        .unwrap();
        let f = spec.build().unwrap();
        assert_eq!(f.div_source(), DivSource::Symbolic);
        assert!((f.div(&[0.3, 0.1]) - 10.0).abs() < 1e-14);
    }
}
