//! Generalized symmetric eigenproblems `A u = λ M u`, restriction to the
//! even subspace of a symmetric mesh, and a Nehari-normalized iteration for
//! the pure-power problem `(-Δ)^s u = u_+^{p-1}`.

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_mass, AssembledForms};
use crate::domain::Mesh1D;
use crate::error::{Error, Result};
use crate::linalg::{dot, tridiagonal_eigenvalues, tridiagonal_eigenvectors, Cholesky, Householder, Matrix};
use crate::quad::Rule;

/// Eigenpair with `uᵀ M u = 1`; `index` is 1-based in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda: f64,
    pub coeffs: Vec<f64>,
    pub index: usize,
}

const EIG_SEED: u64 = 0x5eed_e19e;

/// Lowest `k_max` eigenpairs of `A u = λ M u`, ascending and M-orthonormal.
/// Each vector is signed so that its largest-magnitude entry is positive.
pub fn solve_geig(a: &Matrix, m: &Matrix, k_max: usize) -> Result<Vec<EigenPair>> {
    let n = a.rows();
    if !a.is_square() || m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.rows() });
    }
    if k_max == 0 || k_max > n {
        return Err(Error::Argument(format!("k_max = {k_max} outside 1..={n}")));
    }
    let chol = Cholesky::new(m)?;
    let c = chol.congruence(a);
    let hh = Householder::new(&c);
    let values = tridiagonal_eigenvalues(&hh.tri)?;
    let wanted = &values[..k_max];
    let vectors = tridiagonal_eigenvectors(&hh.tri, wanted, EIG_SEED);
    let mut out = Vec::with_capacity(k_max);
    for (k, (lambda, mut y)) in wanted.iter().zip(vectors).enumerate() {
        hh.back_transform(&mut y);
        chol.backward(&mut y);
        let mu = m.matvec(&y);
        let nrm = dot(&y, &mu).sqrt();
        let big = y.iter().fold(0.0f64, |b, &v| if v.abs() > b.abs() { v } else { b });
        let sign = if big < 0.0 { -1.0 } else { 1.0 };
        y.iter_mut().for_each(|v| *v *= sign / nrm);
        out.push(EigenPair { lambda: *lambda, coeffs: y, index: k + 1 });
    }
    Ok(out)
}

/// Matrices projected onto the span of symmetrized hats `e_i + e_{n-1-i}`
/// (and the center hat when the dof count is odd).
#[derive(Debug, Clone)]
pub struct EvenRestriction {
    pub a: Matrix,
    pub m: Matrix,
    /// For each even basis vector, the full dofs it sums.
    pub basis: Vec<Vec<usize>>,
    n_full: usize,
}

impl EvenRestriction {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Full coefficient vector `P v`.
    pub fn lift(&self, v: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.n_full];
        for (c, dofs) in v.iter().zip(&self.basis) {
            for &d in dofs {
                u[d] = *c;
            }
        }
        u
    }

    /// Lowest even eigenpairs, lifted to full coefficient vectors.
    pub fn solve(&self, k_max: usize) -> Result<Vec<EigenPair>> {
        let pairs = solve_geig(&self.a, &self.m, k_max)?;
        Ok(pairs
            .into_iter()
            .map(|p| EigenPair { coeffs: self.lift(&p.coeffs), ..p })
            .collect())
    }
}

pub fn restrict_even(mesh: &Mesh1D, a: &Matrix, m: &Matrix) -> Result<EvenRestriction> {
    if !mesh.is_symmetric() {
        return Err(Error::AsymmetricMesh);
    }
    let n = mesh.n_dofs();
    if a.rows() != n || m.rows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.rows() });
    }
    let mut basis: Vec<Vec<usize>> = (0..n / 2).map(|i| vec![i, n - 1 - i]).collect();
    if n % 2 == 1 {
        basis.push(vec![n / 2]);
    }
    let project = |x: &Matrix| {
        let k = basis.len();
        let mut out = Matrix::zeros(k, k);
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate() {
                out[(i, j)] = bi.iter().flat_map(|&p| bj.iter().map(move |&q| (p, q))).map(|(p, q)| x[(p, q)]).sum();
            }
        }
        out
    };
    Ok(EvenRestriction { a: project(a), m: project(m), basis: basis.clone(), n_full: n })
}

/// Nonnegative solution of the discrete pure-power problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemilinearSolution {
    pub p: f64,
    pub s: f64,
    pub coeffs: Vec<f64>,
    /// `‖A u - b(u)‖ / ‖A u‖` with `b_j = ∫ u_+^{p-1} φ_j`.
    pub residual: f64,
    pub iterations: usize,
}

/// Upper exponent bound in one dimension: `2/(1 - 2s)` for `s < 1/2`.
pub fn critical_exponent(s: f64) -> f64 {
    if s < 0.5 {
        2.0 / (1.0 - 2.0 * s)
    } else {
        f64::INFINITY
    }
}

/// Iterates `u ← t A⁻¹ b(u)` from the positive ground state, with `t`
/// chosen so that `uᵀ A u = ∫ u_+^p`. At a fixed point `t = 1` and `u`
/// solves `A u = b(u)`.
pub fn solve_semilinear(forms: &AssembledForms, p: f64, tol: f64, max_iter: usize) -> Result<SemilinearSolution> {
    let s = forms.s;
    if !(p > 2.0) {
        return Err(Error::Range(format!("p = {p} must exceed 2")));
    }
    let bound = critical_exponent(s);
    if p >= bound {
        return Err(Error::Supercritical { p, bound });
    }
    let mesh = &forms.mesh;
    let a = &forms.stiffness;
    let ground = solve_geig(a, &forms.mass, 1)?.remove(0);
    let chol = Cholesky::new(a)?;
    let rule = Rule::gauss_legendre(8);
    let nehari = |w: &[f64]| -> Result<Vec<f64>> {
        let energy = a.bilinear(w, w);
        let nodal = mesh.expand(w);
        let pos = power_integral(mesh, &rule, &nodal, p);
        if !(pos > 0.0) {
            return Err(Error::Convergence("iterate lost its positive part".into()));
        }
        let t = (energy / pos).powf(1.0 / (p - 2.0));
        Ok(w.iter().map(|v| t * v).collect())
    };
    let mut u = nehari(&ground.coeffs)?;
    for it in 1..=max_iter {
        let b = load(mesh, &rule, &mesh.expand(&u), p);
        let w = chol.solve(&b);
        let next = nehari(&w)?;
        let change = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        u = next;
        if change < tol {
            let b = load(mesh, &rule, &mesh.expand(&u), p);
            let au = a.matvec(&u);
            let r: f64 = au.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            let residual = r / dot(&au, &au).sqrt();
            return Ok(SemilinearSolution { p, s, coeffs: u, residual, iterations: it });
        }
    }
    Err(Error::Convergence(format!("semilinear iteration did not settle in {max_iter} steps")))
}

/// `∫ u_+^p` for nodal values of a P1 function.
fn power_integral(mesh: &Mesh1D, rule: &Rule, nodal: &[f64], p: f64) -> f64 {
    mesh.elements()
        .iter()
        .enumerate()
        .map(|(e, &[i, j])| {
            let (a, b) = mesh.element_bounds(e);
            rule.integrate(a, b, |x| {
                let t = (x - a) / (b - a);
                (nodal[i] * (1.0 - t) + nodal[j] * t).max(0.0).powf(p)
            })
        })
        .sum()
}

/// Load vector `b_j = ∫ u_+^{p-1} φ_j`.
fn load(mesh: &Mesh1D, rule: &Rule, nodal: &[f64], p: f64) -> Vec<f64> {
    let mut b = vec![0.0; mesh.n_dofs()];
    for (e, &[i, j]) in mesh.elements().iter().enumerate() {
        let (lo, hi) = mesh.element_bounds(e);
        let h = hi - lo;
        let (mut bi, mut bj) = (0.0, 0.0);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = (nodal[i] * (1.0 - t) + nodal[j] * t).max(0.0).powf(p - 1.0);
            bi += w * h * u * (1.0 - t);
            bj += w * h * u * t;
        }
        if let Some(d) = mesh.dof_of_node(i) {
            b[d] += bi;
        }
        if let Some(d) = mesh.dof_of_node(j) {
            b[d] += bj;
        }
    }
    b
}

/// `∫ u_+^p` of a coefficient vector, with the quadrature used by
/// [`solve_semilinear`].
pub fn positive_power_integral(mesh: &Mesh1D, coeffs: &[f64], p: f64) -> f64 {
    power_integral(mesh, &Rule::gauss_legendre(8), &mesh.expand(coeffs), p)
}

/// Mass matrix and eigenpairs straight from a mesh and stiffness matrix.
pub fn eigenpairs(mesh: &Mesh1D, a: &Matrix, k_max: usize, even_only: bool) -> Result<Vec<EigenPair>> {
    let m = assemble_mass(mesh);
    if even_only {
        restrict_even(mesh, a, &m)?.solve(k_max)
    } else {
        solve_geig(a, &m, k_max)
    }
}
