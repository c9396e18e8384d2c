//! Dense row-major matrices and the symmetric kernels the solvers need:
//! profile Cholesky, Householder tridiagonalization, implicit-shift QL and
//! tridiagonal inverse iteration.

use std::fmt;
use std::io::Write;
use std::ops::{Index, IndexMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.row_mut(i).copy_from_slice(row);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `uᵀ A v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, &self.matvec(v))
    }

    pub fn scale(&self, alpha: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| alpha * x).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.scale(-1.0))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Frobenius norm of `A - Aᵀ`.
    pub fn asymmetry(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                let d = self[(i, j)] - self[(j, i)];
                s += 2.0 * d * d;
            }
        }
        s.sqrt()
    }

    /// Plain-text export: first line `rows cols`, then one row per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text(src: &str) -> Result<Matrix> {
        let mut lines = src.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Argument("empty matrix file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Argument(format!("bad header '{header}'"))))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::Argument(format!("bad header '{header}'")));
        }
        let mut m = Matrix::zeros(dims[0], dims[1]);
        for i in 0..dims[0] {
            let line = lines
                .next()
                .ok_or_else(|| Error::Argument(format!("missing row {i}")))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Argument(format!("bad entry '{t}'"))))
                .collect::<Result<_>>()?;
            if vals.len() != dims[1] {
                return Err(Error::Argument(format!("row {i} has {} entries", vals.len())));
            }
            m.row_mut(i).copy_from_slice(&vals);
        }
        Ok(m)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", &self.row(i)[..self.cols.min(8)])?;
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cholesky factor `L` of an SPD matrix, stored with its row profile so
/// banded mass matrices factor and solve in near-linear time.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
    first: Vec<usize>,
}

impl Cholesky {
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: a.cols(),
            });
        }
        let n = a.rows();
        let first: Vec<usize> = (0..n)
            .map(|i| (0..=i).find(|&j| a[(i, j)] != 0.0).unwrap_or(i))
            .collect();
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in first[i]..=i {
                let lo = first[i].max(first[j]);
                let mut s = a[(i, j)];
                for k in lo..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite(i));
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(Cholesky { l, first })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        for i in 0..self.dim() {
            let mut s = b[i];
            for k in self.first[i]..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward(&self, y: &mut [f64]) {
        for i in (0..self.dim()).rev() {
            y[i] /= self.l[(i, i)];
            let yi = y[i];
            for k in self.first[i]..i {
                y[k] -= self.l[(i, k)] * yi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// Row-wise forward substitution `L⁻¹ B` for a full matrix `B`.
    fn forward_rows(&self, b: &Matrix) -> Matrix {
        let n = self.dim();
        let mut w = b.clone();
        for i in 0..n {
            for k in self.first[i]..i {
                let lik = self.l[(i, k)];
                if lik == 0.0 {
                    continue;
                }
                let (head, tail) = w.data.split_at_mut(i * w.cols);
                let rk = &head[k * w.cols..(k + 1) * w.cols];
                for (x, y) in tail[..w.cols].iter_mut().zip(rk) {
                    *x -= lik * y;
                }
            }
            let inv = 1.0 / self.l[(i, i)];
            w.row_mut(i).iter_mut().for_each(|x| *x *= inv);
        }
        w
    }

    /// `L⁻¹ A L⁻ᵀ`, symmetrized.
    pub fn congruence(&self, a: &Matrix) -> Matrix {
        let w = self.forward_rows(a);
        let mut c = self.forward_rows(&w.transpose());
        let n = c.rows();
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (c[(i, j)] + c[(j, i)]);
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        c
    }
}

/// Symmetric tridiagonal matrix with diagonal `d` and subdiagonal `e`
/// (`e[i]` couples rows `i` and `i + 1`).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

/// Householder reduction `A = Q T Qᵀ` of a symmetric matrix. The reflectors
/// are kept so eigenvectors of `T` can be mapped back.
#[derive(Debug, Clone)]
pub struct Householder {
    pub tri: Tridiagonal,
    reflectors: Vec<(Vec<f64>, f64)>,
}

impl Householder {
    pub fn new(a: &Matrix) -> Self {
        let n = a.rows();
        let mut a = a.clone();
        let mut sub = vec![0.0; n];
        let mut reflectors: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 0.0); n];
        let mut p = vec![0.0; n];
        for i in (1..n).rev() {
            let scale: f64 = a.row(i)[..i].iter().map(|x| x.abs()).sum();
            if i == 1 || scale == 0.0 {
                sub[i] = a[(i, i - 1)];
                continue;
            }
            let mut u: Vec<f64> = a.row(i)[..i].iter().map(|x| x / scale).collect();
            let mut h: f64 = u.iter().map(|x| x * x).sum();
            let f = u[i - 1];
            let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
            sub[i] = scale * g;
            h -= f * g;
            u[i - 1] = f - g;
            for j in 0..i {
                p[j] = dot(&a.row(j)[..i], &u) / h;
            }
            let k = dot(&u, &p[..i]) / (2.0 * h);
            for j in 0..i {
                p[j] -= k * u[j];
            }
            for j in 0..i {
                let (pj, uj) = (p[j], u[j]);
                let row = &mut a.row_mut(j)[..i];
                for ((x, uk), pk) in row.iter_mut().zip(&u).zip(&p[..i]) {
                    *x -= pj * uk + uj * pk;
                }
            }
            reflectors[i] = (u, h);
        }
        let d = (0..n).map(|i| a[(i, i)]).collect();
        let e = if n > 0 { sub[1..].to_vec() } else { Vec::new() };
        Householder {
            tri: Tridiagonal { d, e },
            reflectors,
        }
    }

    /// Maps an eigenvector of `T` to one of `A`.
    pub fn back_transform(&self, z: &mut [f64]) {
        for (i, (u, h)) in self.reflectors.iter().enumerate() {
            if u.is_empty() {
                continue;
            }
            let t = dot(u, &z[..i]) / h;
            for (zk, uk) in z[..i].iter_mut().zip(u) {
                *zk -= t * uk;
            }
        }
    }
}

const QL_MAX_ITER: usize = 50;

/// Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL,
/// ascending.
pub fn tridiagonal_eigenvalues(t: &Tridiagonal) -> Result<Vec<f64>> {
    let n = t.d.len();
    let mut d = t.d.clone();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&t.e);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::Convergence(format!(
                    "QL iteration exceeded {QL_MAX_ITER} sweeps for eigenvalue {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.total_cmp(b));
    Ok(d)
}

/// Eigenvectors of `t` for the given (ascending) eigenvalues by inverse
/// iteration, re-orthogonalized inside clusters.
pub fn tridiagonal_eigenvectors(t: &Tridiagonal, values: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let n = t.d.len();
    let tnorm = (0..n)
        .map(|i| {
            t.d[i].abs()
                + if i > 0 { t.e[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { t.e[i].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let cluster_gap = 1e-3 * tnorm;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    for (k, &lam) in values.iter().enumerate() {
        if k > 0 && (lam - values[k - 1]).abs() > cluster_gap {
            cluster_start = k;
        }
        let shift = lam + 4.0 * f64::EPSILON * tnorm * (1 + k - cluster_start) as f64;
        let lu = TridiagLu::new(t, shift, tnorm);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..4 {
            lu.solve(&mut x);
            for prev in &out[cluster_start..k] {
                let c = dot(prev, &x);
                for (xi, pi) in x.iter_mut().zip(prev) {
                    *xi -= c * pi;
                }
            }
            let nrm = norm2(&x);
            if nrm == 0.0 || !nrm.is_finite() {
                x = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                continue;
            }
            x.iter_mut().for_each(|v| *v /= nrm);
        }
        out.push(x);
    }
    out
}

/// LU with partial pivoting of `T - σI` (fill-in limited to two
/// superdiagonals).
struct TridiagLu {
    diag: Vec<f64>,
    up1: Vec<f64>,
    up2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn new(t: &Tridiagonal, sigma: f64, tnorm: f64) -> Self {
        let n = t.d.len();
        let tiny = f64::EPSILON * tnorm;
        let mut diag: Vec<f64> = t.d.iter().map(|d| d - sigma).collect();
        let mut up1: Vec<f64> = (0..n).map(|i| if i + 1 < n { t.e[i] } else { 0.0 }).collect();
        let mut up2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            let below = t.e[i];
            if below.abs() > diag[i].abs() {
                // swap rows i and i+1
                swapped[i] = true;
                let (a0, a1, a2) = (diag[i], up1[i], up2[i]);
                diag[i] = below;
                up1[i] = diag[i + 1];
                up2[i] = up1[i + 1];
                let m = a0 / below;
                mult[i] = m;
                diag[i + 1] = a1 - m * up1[i];
                up1[i + 1] = a2 - m * up2[i];
            } else {
                if diag[i] == 0.0 {
                    diag[i] = tiny;
                }
                let m = below / diag[i];
                mult[i] = m;
                diag[i + 1] -= m * up1[i];
                // up2[i] stays zero; row i+1 superdiagonal unchanged
            }
        }
        if n > 0 && diag[n - 1] == 0.0 {
            diag[n - 1] = tiny;
        }
        for v in diag.iter_mut() {
            if v.abs() < tiny {
                *v = tiny.copysign(*v);
            }
        }
        TridiagLu {
            diag,
            up1,
            up2,
            mult,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.mult[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.up1[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.up2[i] * b[i + 2];
            }
            b[i] = s / self.diag[i];
        }
    }
}
