//! Galerkin assembly for P1 elements on the line: mass matrix, the
//! Gagliardo stiffness matrix over the whole plane, the deformation matrix
//! of `E_X`, density integrals and a pointwise fractional Laplacian.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Mesh1D;
use crate::error::{Error, Result};
use crate::fields::{frac_constant, Field1D, VectorField};
use crate::linalg::Matrix;
use crate::quad::{self, Estimate, Rule};

/// Quadrature parameters used by the assembly routines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Gauss–Legendre order per direction on separated element pairs.
    pub separated_order: usize,
    /// Order of the rules used after singularity-removing transforms.
    pub singular_order: usize,
    /// A separated pair is subdivided while its gap is below this multiple
    /// of the larger element size.
    pub near_ratio: f64,
    /// Subdivision depth cap for near pairs.
    pub max_depth: usize,
    /// Geometric levels on elements touching the boundary.
    pub graded_levels: usize,
    /// Include interactions between `Ω` and its complement.
    pub include_exterior: bool,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            separated_order: 8,
            singular_order: 10,
            near_ratio: 1.0,
            max_depth: 24,
            graded_levels: 14,
            include_exterior: true,
        }
    }
}

/// Mass and stiffness matrices of one mesh and order `s`.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    pub mesh: Mesh1D,
    pub s: f64,
    pub mass: Matrix,
    pub stiffness: Matrix,
    pub options: QuadratureOptions,
}

impl AssembledForms {
    pub fn new(mesh: &Mesh1D, s: f64) -> Result<Self> {
        AssembledForms::with_options(mesh, s, QuadratureOptions::default())
    }

    pub fn with_options(mesh: &Mesh1D, s: f64, options: QuadratureOptions) -> Result<Self> {
        Ok(AssembledForms {
            mesh: mesh.clone(),
            s,
            mass: assemble_mass(mesh),
            stiffness: assemble_gagliardo_with(mesh, s, &options)?,
            options,
        })
    }
}

/// Matrix of `E_X` on the P1 basis: `B_ij = ∬(φ_i(x)-φ_i(y))(φ_j(x)-φ_j(y)) K_X(x,y)`.
#[derive(Debug, Clone)]
pub struct DeformationMatrix {
    pub s: f64,
    pub field: VectorField,
    pub matrix: Matrix,
}

/// Exact P1 mass matrix.
pub fn assemble_mass(mesh: &Mesh1D) -> Matrix {
    let n = mesh.n_dofs();
    let mut m = Matrix::zeros(n, n);
    for (e, nodes) in mesh.elements().iter().enumerate() {
        let (a, b) = mesh.element_bounds(e);
        let h = b - a;
        let local = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        for (p, &na) in nodes.iter().enumerate() {
            let Some(i) = mesh.dof_of_node(na) else { continue };
            for (q, &nb) in nodes.iter().enumerate() {
                if let Some(j) = mesh.dof_of_node(nb) {
                    m[(i, j)] += local[p][q];
                }
            }
        }
    }
    m
}

pub fn assemble_gagliardo(mesh: &Mesh1D, s: f64) -> Result<Matrix> {
    assemble_gagliardo_with(mesh, s, &QuadratureOptions::default())
}

pub fn assemble_gagliardo_with(mesh: &Mesh1D, s: f64, options: &QuadratureOptions) -> Result<Matrix> {
    check_s(s)?;
    Engine::new(mesh, s, Weight::One, options).assemble()
}

pub fn assemble_deformation(mesh: &Mesh1D, field: &VectorField, s: f64) -> Result<DeformationMatrix> {
    assemble_deformation_with(mesh, field, s, &QuadratureOptions::default())
}

pub fn assemble_deformation_with(
    mesh: &Mesh1D,
    field: &VectorField,
    s: f64,
    options: &QuadratureOptions,
) -> Result<DeformationMatrix> {
    check_s(s)?;
    let f1 = field.extended_1d()?;
    if !field.lipschitz().is_finite() {
        return Err(Error::Argument("vector field has no finite Lipschitz bound on its box".into()));
    }
    let matrix = Engine::new(mesh, s, Weight::Field(f1), options).assemble()?;
    Ok(DeformationMatrix { s, field: field.clone(), matrix })
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Range(format!("s = {s} outside (0, 1)")))
    }
}

/// `W(x, y)` in `kernel = (c_{1,s}/2) W(x, y) |x - y|^{-1-2s}`.
enum Weight {
    One,
    Field(Field1D),
}

impl Weight {
    fn at(&self, s: f64, x: f64, y: f64) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::Field(f) => f.bracket(s, x, y),
        }
    }
}

/// Up to four nodes with a dense local matrix over them.
struct Local {
    nodes: [usize; 4],
    len: usize,
    m: [[f64; 4]; 4],
}

impl Local {
    fn new(nodes: &[usize]) -> Self {
        let mut n = [0; 4];
        n[..nodes.len()].copy_from_slice(nodes);
        Local { nodes: n, len: nodes.len(), m: [[0.0; 4]; 4] }
    }

    fn add_outer(&mut self, g: &[f64], w: f64) {
        for a in 0..self.len {
            let ga = w * g[a];
            for b in 0..self.len {
                self.m[a][b] += ga * g[b];
            }
        }
    }
}

struct ElementCache {
    a: f64,
    h: f64,
    x: Vec<f64>,
    w: Vec<f64>,
    xv: Vec<f64>,
    xd: Vec<f64>,
}

struct Engine<'a> {
    mesh: &'a Mesh1D,
    s: f64,
    weight: Weight,
    opts: &'a QuadratureOptions,
    gl: Rule,
    gl_sing: Rule,
    jac_ident: Rule,
    jac_touch: Rule,
    cache: Vec<ElementCache>,
}

impl<'a> Engine<'a> {
    fn new(mesh: &'a Mesh1D, s: f64, weight: Weight, opts: &'a QuadratureOptions) -> Self {
        let gl = Rule::gauss_legendre(opts.separated_order);
        let cache = (0..mesh.elements().len())
            .map(|e| {
                let (a, b) = mesh.element_bounds(e);
                let h = b - a;
                let x: Vec<f64> = gl.nodes.iter().map(|t| a + h * t).collect();
                let (xv, xd) = match &weight {
                    Weight::One => (Vec::new(), Vec::new()),
                    Weight::Field(f) => (x.iter().map(|&p| f.value(p)).collect(), x.iter().map(|&p| f.deriv(p)).collect()),
                };
                ElementCache { a, h, w: gl.weights.iter().map(|w| w * h).collect(), x, xv, xd }
            })
            .collect();
        Engine {
            mesh,
            s,
            gl_sing: Rule::gauss_legendre(opts.singular_order),
            jac_ident: Rule::gauss_jacobi(opts.singular_order, 1.0 - 2.0 * s),
            jac_touch: Rule::gauss_jacobi(opts.singular_order, 2.0 - 2.0 * s),
            gl,
            weight,
            opts,
            cache,
        }
    }

    fn assemble(&self) -> Result<Matrix> {
        let n = self.mesh.n_dofs();
        let ne = self.mesh.elements().len();
        let mut out = Matrix::zeros(n, n);
        let rows: Vec<usize> = (0..ne).collect();
        for chunk in rows.chunks(32) {
            let parts: Vec<Vec<Local>> = chunk
                .par_iter()
                .map(|&e| self.row(e))
                .collect::<Result<Vec<_>>>()?;
            for locals in parts {
                for l in locals {
                    self.scatter(&mut out, &l);
                }
            }
        }
        let half_c = 0.5 * frac_constant(1, self.s);
        for v in out.as_mut_slice() {
            *v *= half_c;
        }
        // exact symmetry: contributions are symmetric up to rounding
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    fn scatter(&self, out: &mut Matrix, l: &Local) {
        for a in 0..l.len {
            let Some(i) = self.mesh.dof_of_node(l.nodes[a]) else { continue };
            for b in 0..l.len {
                if let Some(j) = self.mesh.dof_of_node(l.nodes[b]) {
                    out[(i, j)] += l.m[a][b];
                }
            }
        }
    }

    /// Contributions of all pairs `(e, f)` with `f ≥ e`, plus the exterior
    /// term of `e`; pairs with `f > e` count twice by symmetry.
    fn row(&self, e: usize) -> Result<Vec<Local>> {
        let els = self.mesh.elements();
        let mut out = Vec::with_capacity(els.len() - e + 1);
        out.push(self.identical(e));
        if self.opts.include_exterior {
            out.push(self.exterior(e));
        }
        for f in e + 1..els.len() {
            if els[f][0] == els[e][1] {
                out.push(self.touching(e, f));
            } else {
                out.push(self.separated(e, f)?);
            }
        }
        Ok(out)
    }

    fn identical(&self, e: usize) -> Local {
        let c = &self.cache[e];
        let s = self.s;
        let (a, h) = (c.a, c.h);
        // ∬_{e×e} W |x-y|^{1-2s}
        let integral = match &self.weight {
            Weight::One => 2.0 * h.powf(3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s)),
            Weight::Field(_) => {
                let mut acc = 0.0;
                for (r, wr) in self.jac_ident.nodes.iter().zip(&self.jac_ident.weights) {
                    let len = 1.0 - r;
                    let mut inner = 0.0;
                    for (t, wt) in self.gl_sing.nodes.iter().zip(&self.gl_sing.weights) {
                        let eta = len * t;
                        inner += wt * self.weight.at(s, a + h * (eta + r), a + h * eta);
                    }
                    acc += wr * len * inner;
                }
                2.0 * h.powf(3.0 - 2.0 * s) * acc
            }
        };
        let mut l = Local::new(&self.mesh.elements()[e]);
        let v = integral / (h * h);
        l.m[0][0] = v;
        l.m[1][1] = v;
        l.m[0][1] = -v;
        l.m[1][0] = -v;
        l
    }

    /// `e = [a - h1, a]`, `f = [a, a + h2]`; `x = a - h1 ξ`, `y = a + h2 η`
    /// and Duffy coordinates on the two triangles of the unit square.
    fn touching(&self, e: usize, f: usize) -> Local {
        let s = self.s;
        let h1 = self.cache[e].h;
        let h2 = self.cache[f].h;
        let a = self.cache[f].a;
        let [p, q] = self.mesh.elements()[e];
        let r_node = self.mesh.elements()[f][1];
        let mut l = Local::new(&[p, q, r_node]);
        let expo = -1.0 - 2.0 * s;
        let const_w = matches!(self.weight, Weight::One);
        let u_moment = 1.0 / (3.0 - 2.0 * s);
        for (v, wv) in self.gl_sing.nodes.iter().zip(&self.gl_sing.weights) {
            // triangle ξ ≥ η: ξ = u, η = u v
            let g1 = [1.0, v - 1.0, -v];
            let d1 = (h1 + h2 * v).powf(expo);
            // triangle η ≥ ξ: η = u, ξ = u v
            let g2 = [*v, 1.0 - v, -1.0];
            let d2 = (h1 * v + h2).powf(expo);
            if const_w {
                l.add_outer(&g1, 2.0 * h1 * h2 * wv * d1 * u_moment);
                l.add_outer(&g2, 2.0 * h1 * h2 * wv * d2 * u_moment);
            } else {
                let (mut w1, mut w2) = (0.0, 0.0);
                for (u, wu) in self.jac_touch.nodes.iter().zip(&self.jac_touch.weights) {
                    w1 += wu * self.weight.at(s, a - h1 * u, a + h2 * u * v);
                    w2 += wu * self.weight.at(s, a - h1 * u * v, a + h2 * u);
                }
                l.add_outer(&g1, 2.0 * h1 * h2 * wv * d1 * w1);
                l.add_outer(&g2, 2.0 * h1 * h2 * wv * d2 * w2);
            }
        }
        l
    }

    fn separated(&self, e: usize, f: usize) -> Result<Local> {
        let els = self.mesh.elements();
        let mut l = Local::new(&[els[e][0], els[e][1], els[f][0], els[f][1]]);
        let ce = &self.cache[e];
        let cf = &self.cache[f];
        let gap = cf.a - (ce.a + ce.h);
        if gap < self.opts.near_ratio * ce.h.max(cf.h) {
            self.separated_sub(&mut l, e, f, (ce.a, ce.a + ce.h), (cf.a, cf.a + cf.h), 0)?;
        } else {
            self.separated_cached(&mut l, e, f);
        }
        Ok(l)
    }

    fn separated_cached(&self, l: &mut Local, e: usize, f: usize) {
        let ce = &self.cache[e];
        let cf = &self.cache[f];
        let expo = -1.0 - 2.0 * self.s;
        let s = self.s;
        for i in 0..ce.x.len() {
            let xi = ce.x[i];
            let t = (xi - ce.a) / ce.h;
            for j in 0..cf.x.len() {
                let yj = cf.x[j];
                let u = (yj - cf.a) / cf.h;
                let w = match self.weight {
                    Weight::One => 1.0,
                    Weight::Field(_) => {
                        ce.xd[i] + cf.xd[j] - (1.0 + 2.0 * s) * (ce.xv[i] - cf.xv[j]) / (xi - yj)
                    }
                };
                let k = 2.0 * ce.w[i] * cf.w[j] * w * (yj - xi).powf(expo);
                l.add_outer(&[1.0 - t, t, -(1.0 - u), -u], k);
            }
        }
    }

    fn separated_sub(
        &self,
        l: &mut Local,
        e: usize,
        f: usize,
        xr: (f64, f64),
        yr: (f64, f64),
        depth: usize,
    ) -> Result<()> {
        let gap = yr.0 - xr.1;
        let (hx, hy) = (xr.1 - xr.0, yr.1 - yr.0);
        if gap < self.opts.near_ratio * hx.max(hy) {
            if depth >= self.opts.max_depth {
                return Err(Error::Quadrature(format!(
                    "near-pair subdivision exceeded depth {} (gap {gap:e})",
                    self.opts.max_depth
                )));
            }
            if hx >= hy {
                let m = 0.5 * (xr.0 + xr.1);
                self.separated_sub(l, e, f, (xr.0, m), yr, depth + 1)?;
                self.separated_sub(l, e, f, (m, xr.1), yr, depth + 1)?;
            } else {
                let m = 0.5 * (yr.0 + yr.1);
                self.separated_sub(l, e, f, xr, (yr.0, m), depth + 1)?;
                self.separated_sub(l, e, f, xr, (m, yr.1), depth + 1)?;
            }
            return Ok(());
        }
        let ce = &self.cache[e];
        let cf = &self.cache[f];
        let expo = -1.0 - 2.0 * self.s;
        for (tx, wx) in self.gl.nodes.iter().zip(&self.gl.weights) {
            let x = xr.0 + hx * tx;
            let t = (x - ce.a) / ce.h;
            for (ty, wy) in self.gl.nodes.iter().zip(&self.gl.weights) {
                let y = yr.0 + hy * ty;
                let u = (y - cf.a) / cf.h;
                let k = 2.0 * wx * hx * wy * hy * self.weight.at(self.s, x, y) * (y - x).powf(expo);
                l.add_outer(&[1.0 - t, t, -(1.0 - u), -u], k);
            }
        }
        Ok(())
    }

    /// `2 ∫_e φ_a φ_b κ(x) dx` with `κ(x) = ∫_{Ω^c} W(x,y)|x-y|^{-1-2s} dy`.
    fn exterior(&self, e: usize) -> Local {
        let nodes = self.mesh.elements()[e];
        let mut l = Local::new(&nodes);
        let c = &self.cache[e];
        let left_bd = self.mesh.dof_of_node(nodes[0]).is_none();
        let right_bd = self.mesh.dof_of_node(nodes[1]).is_none();
        let mut add = |x: f64, w: f64| {
            let t = (x - c.a) / c.h;
            let k = 2.0 * w * self.kappa(x);
            l.add_outer(&[1.0 - t, t], k);
        };
        let levels = self.opts.graded_levels;
        match (left_bd, right_bd) {
            (true, true) => {
                let m = c.a + 0.5 * c.h;
                graded_points(&self.gl, c.a, m, true, levels, &mut add);
                graded_points(&self.gl, m, c.a + c.h, false, levels, &mut add);
            }
            (true, false) => graded_points(&self.gl, c.a, c.a + c.h, true, levels, &mut add),
            (false, true) => graded_points(&self.gl, c.a, c.a + c.h, false, levels, &mut add),
            (false, false) => {
                for (x, w) in c.x.iter().zip(&c.w) {
                    add(*x, *w);
                }
            }
        }
        l
    }

    fn kappa(&self, x: f64) -> f64 {
        let s = self.s;
        let ivs = self.mesh.domain().intervals();
        let first = ivs[0].0;
        let last = ivs[ivs.len() - 1].1;
        match &self.weight {
            Weight::One => {
                let p = |d: f64| d.powf(-2.0 * s) / (2.0 * s);
                let mut k = p(x - first) + p(last - x);
                for w in ivs.windows(2) {
                    let (b, a) = (w[0].1, w[1].0);
                    k += if x <= b { p(b - x) - p(a - x) } else { p(x - a) - p(x - b) };
                }
                k
            }
            Weight::Field(f) => {
                let mut k = 0.0;
                let ((xlo, dlo), (xhi, dhi)) = f.edges();
                let (xv, xd) = (f.value(x), f.deriv(x));
                // left half-line: numeric on [A, first], closed form below A
                let a_cut = first.min(f.lo);
                if a_cut < first {
                    k += self.piece(f, x, a_cut, first);
                }
                let d = x - a_cut;
                let rem = xv - xlo - dlo * (x - f.lo);
                k += (xd - 2.0 * s * dlo) * d.powf(-2.0 * s) / (2.0 * s) - rem * d.powf(-1.0 - 2.0 * s);
                // right half-line
                let b_cut = last.max(f.hi);
                if b_cut > last {
                    k += self.piece(f, x, last, b_cut);
                }
                let d = b_cut - x;
                let rem = xv - xhi - dhi * (x - f.hi);
                k += (xd - 2.0 * s * dhi) * d.powf(-2.0 * s) / (2.0 * s) + rem * d.powf(-1.0 - 2.0 * s);
                for w in ivs.windows(2) {
                    k += self.piece(f, x, w[0].1, w[1].0);
                }
                k
            }
        }
    }

    /// `∫_p^q W(x,y)|x-y|^{-1-2s} dy` for `x ∉ [p, q]`, via `|y - x| = d e^τ`.
    fn piece(&self, f: &Field1D, x: f64, p: f64, q: f64) -> f64 {
        let s = self.s;
        let (d, far, dir) = if x < p { (p - x, q - x, 1.0) } else { (x - q, x - p, -1.0) };
        let tau_max = (far / d).ln();
        let panels = tau_max.ceil().max(1.0) as usize;
        let width = tau_max / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let t0 = k as f64 * width;
            for (t, w) in self.gl.nodes.iter().zip(&self.gl.weights) {
                let tau = t0 + width * t;
                let r = d * tau.exp();
                acc += w * width * f.bracket(s, x, x + dir * r) * r.powf(-2.0 * s);
            }
        }
        acc
    }
}

fn graded_points<F: FnMut(f64, f64)>(rule: &Rule, a: f64, b: f64, toward_a: bool, levels: usize, f: &mut F) {
    let h = b - a;
    let mut lo = 0.5;
    let mut hi = 1.0;
    let panel = |p: f64, q: f64, f: &mut F| {
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            f(p + (q - p) * t, w * (q - p));
        }
    };
    for _ in 0..levels {
        let (p, q) = if toward_a { (a + lo * h, a + hi * h) } else { (b - hi * h, b - lo * h) };
        panel(p, q, f);
        hi = lo;
        lo *= 0.5;
    }
    let (p, q) = if toward_a { (a, a + hi * h) } else { (b - hi * h, b) };
    panel(p, q, f);
}

/// `∫_Ω density(u_h(x)) · weight(x) dx` for the P1 interpolant `u_h` of
/// `nodal` (one value per mesh node), with 8-point Gauss–Legendre per element.
pub fn integrate_density<D, W>(mesh: &Mesh1D, nodal: &[f64], density: D, weight: W) -> Result<f64>
where
    D: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    if nodal.len() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch { expected: mesh.n_nodes(), got: nodal.len() });
    }
    let rule = Rule::gauss_legendre(8);
    let mut total = 0.0;
    for (e, &[i, j]) in mesh.elements().iter().enumerate() {
        let (a, b) = mesh.element_bounds(e);
        total += rule.integrate(a, b, |x| {
            let t = (x - a) / (b - a);
            density(nodal[i] * (1.0 - t) + nodal[j] * t) * weight(x)
        });
    }
    Ok(total)
}

/// Nonlinearities `f` with their primitives `F(t) = ∫_0^t f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `f(t) = λ t`
    Linear { lambda: f64 },
    /// `f(t) = |t|^{p-2} t`
    Power { p: f64 },
}

impl Nonlinearity {
    pub fn f(&self, t: f64) -> f64 {
        match *self {
            Nonlinearity::Linear { lambda } => lambda * t,
            Nonlinearity::Power { p } => t.abs().powf(p - 2.0) * t,
        }
    }

    pub fn primitive(&self, t: f64) -> f64 {
        match *self {
            Nonlinearity::Linear { lambda } => 0.5 * lambda * t * t,
            Nonlinearity::Power { p } => t.abs().powf(p) / p,
        }
    }
}

/// Options for [`frac_laplacian_pointwise`].
#[derive(Debug, Clone, PartialEq)]
pub struct FracLapOptions {
    /// Truncation radius of the `y` integral.
    pub radius: f64,
    /// Absolute tolerance on the returned value.
    pub tol: f64,
    /// Upper bound for `|φ|` on the line; sampled on `[x - R, x + R]` when absent.
    pub sup_abs: Option<f64>,
    /// Interval outside which `φ` vanishes; makes the tail exact when
    /// `[x - R, x + R]` covers it, and supplies kink locations.
    pub support: Option<(f64, f64)>,
    pub max_panels: usize,
}

impl FracLapOptions {
    /// Defaults for a domain of the given diameter: `R = 10·diameter`.
    pub fn for_diameter(diameter: f64, tol: f64) -> Self {
        FracLapOptions { radius: 10.0 * diameter, tol, sup_abs: None, support: None, max_panels: 200_000 }
    }
}

const FRACLAP_EPS: f64 = 1e-4;
const FRACLAP_EPS_MIN: f64 = 1e-9;

/// `(-Δ)^s φ(x) = c_{1,s} ∫_0^∞ (2φ(x) - φ(x+y) - φ(x-y)) y^{-1-2s} dy`,
/// truncated at `R` with the tail bounded analytically.
pub fn frac_laplacian_pointwise<F: Fn(f64) -> f64>(phi: F, s: f64, x: f64, opts: &FracLapOptions) -> Result<Estimate> {
    check_s(s)?;
    let r = opts.radius;
    if !(r > 4.0 * FRACLAP_EPS) {
        return Err(Error::Argument(format!("truncation radius {r} too small")));
    }
    let c = frac_constant(1, s);
    let phi_x = phi(x);
    // y ∈ (0, ε): second difference ≈ -φ''(x) y², φ'' by Richardson
    // keep the difference stencil clear of the support kinks
    let mut eta: f64 = 2e-3;
    if let Some((a, b)) = opts.support {
        let gap = (x - a).abs().min((x - b).abs());
        if gap < 2.0 * eta && gap > 2e-5 {
            eta = 0.5 * gap;
        }
    }
    let d2 = |h: f64| (phi(x + h) - 2.0 * phi_x + phi(x - h)) / (h * h);
    let (q1, q2, q4) = (d2(eta), d2(0.5 * eta), d2(0.25 * eta));
    let (r1, r2) = ((4.0 * q2 - q1) / 3.0, (4.0 * q4 - q2) / 3.0);
    let phi2 = r2 + (r2 - r1) / 15.0;
    let spread = (r2 - r1).abs() + 1e-15 * phi_x.abs().max(1.0) * (4.0 / eta).powi(2) + 1e-12 * phi2.abs();
    // shrink the Taylor zone until its error fits a quarter of the budget
    let near_factor = |eps: f64| eps.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    let roundoff = |eps: f64| 1e-15 * phi_x.abs().max(1.0) * eps.powf(-2.0 * s) / (2.0 * s) * c;
    let mut eps = FRACLAP_EPS.min(0.5 * eta);
    while spread * near_factor(eps) * c > 0.25 * opts.tol
        && eps > FRACLAP_EPS_MIN
        && roundoff(0.1 * eps) < 0.05 * opts.tol
    {
        eps *= 0.1;
    }
    let phi4 = 16.0 * (q1 - q2) / (eta * eta);
    let near = -phi2 * near_factor(eps) - phi4 / 12.0 * eps.powf(4.0 - 2.0 * s) / (4.0 - 2.0 * s);
    let near_err = spread * near_factor(eps);

    let mut breaks = vec![eps];
    while breaks[breaks.len() - 1] * 2.0 < r {
        let b = breaks[breaks.len() - 1] * 2.0;
        breaks.push(b);
    }
    breaks.push(r);
    if let Some((a, b)) = opts.support {
        for y in [a - x, b - x, x - a, x - b] {
            if y > eps && y < r {
                breaks.push(y);
            }
        }
    }
    breaks.sort_by(|p, q| p.total_cmp(q));
    breaks.dedup();

    let tail_exact = 2.0 * phi_x * r.powf(-2.0 * s) / (2.0 * s);
    let covered = opts.support.is_some_and(|(a, b)| x - r <= a && b <= x + r);
    let tail_bound = if covered {
        0.0
    } else {
        let sup = opts.sup_abs.unwrap_or_else(|| {
            (0..=4000)
                .map(|k| phi(x - r + 2.0 * r * k as f64 / 4000.0).abs())
                .fold(0.0, f64::max)
        });
        2.0 * sup * r.powf(-2.0 * s) / (2.0 * s)
    };
    let budget = opts.tol / c - tail_bound - near_err;
    if budget <= 0.0 {
        return Err(Error::Tolerance { estimate: c * (tail_bound + near_err), tol: opts.tol });
    }
    let est = quad::adaptive(
        |y| (2.0 * phi_x - phi(x + y) - phi(x - y)) * y.powf(-1.0 - 2.0 * s),
        &breaks,
        0.5 * budget,
        0.0,
        opts.max_panels,
    )?;
    let value = c * (near + est.value + tail_exact);
    let error = c * (near_err + est.error + tail_bound);
    if error > opts.tol {
        return Err(Error::Tolerance { estimate: error, tol: opts.tol });
    }
    Ok(Estimate { value, error, evaluations: est.evaluations + 5 })
}
