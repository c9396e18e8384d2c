//! Boundary traces `ψ_u = u/δ^s` and numerical checks of the Pohozaev-type
//! identities, the Hadamard derivative and spectral gaps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_deformation, frac_laplacian_pointwise, integrate_density, AssembledForms, FracLapOptions, Nonlinearity,
};
use crate::domain::{BoundaryPoint1D, Domain1D, Mesh1D};
use crate::error::{Error, Result};
use crate::fields::{frac_constant, gamma_one_plus_s_sq, Field1D, VectorField};
use crate::linalg::dot;
use crate::quad::{self, Rule};
use crate::solve::{restrict_even, solve_geig, EigenPair};

/// Fit window measured in mesh nodes counted from the boundary point
/// (the boundary node itself is node 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceWindow {
    pub first_node: usize,
    pub last_node: usize,
}

impl Default for TraceWindow {
    fn default() -> Self {
        TraceWindow { first_node: 2, last_node: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub point: BoundaryPoint1D,
    pub psi: f64,
    /// Coefficient of the linear correction in `ψ δ^s (1 + c₁ δ)`.
    pub c1: f64,
    pub window: (f64, f64),
    /// Relative root-mean-square misfit over the window.
    pub residual: f64,
    pub nodes: usize,
}

/// Least-squares fit of `u(x_j) = ψ δ_j^s (1 + c₁ δ_j)` over the default
/// window. `nodal` holds one value per mesh node.
pub fn extract_trace(mesh: &Mesh1D, nodal: &[f64], s: f64, bp: &BoundaryPoint1D) -> Result<TraceEstimate> {
    extract_trace_with(mesh, nodal, s, bp, TraceWindow::default())
}

pub fn extract_trace_with(
    mesh: &Mesh1D,
    nodal: &[f64],
    s: f64,
    bp: &BoundaryPoint1D,
    window: TraceWindow,
) -> Result<TraceEstimate> {
    if nodal.len() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch { expected: mesh.n_nodes(), got: nodal.len() });
    }
    let order = mesh.nodes_from_boundary(bp);
    let last = window.last_node.min(mesh.n_per_interval() / 2);
    let picked: Vec<usize> = if window.first_node <= last { order[window.first_node..=last].to_vec() } else { Vec::new() };
    if picked.len() < 4 {
        return Err(Error::Window(picked.len()));
    }
    let x = mesh.nodes();
    let delta = |i: usize| (x[i] - bp.x).abs();
    let (mut ata, mut atb, mut uu) = ([[0.0; 2]; 2], [0.0; 2], 0.0);
    for &i in &picked {
        let d = delta(i);
        let row = [d.powf(s), d.powf(s + 1.0)];
        for a in 0..2 {
            for b in 0..2 {
                ata[a][b] += row[a] * row[b];
            }
            atb[a] += row[a] * nodal[i];
        }
        uu += nodal[i] * nodal[i];
    }
    let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
    let psi = (atb[0] * ata[1][1] - atb[1] * ata[0][1]) / det;
    let psi_c1 = (ata[0][0] * atb[1] - ata[1][0] * atb[0]) / det;
    let misfit: f64 = picked
        .iter()
        .map(|&i| {
            let d = delta(i);
            (nodal[i] - psi * d.powf(s) - psi_c1 * d.powf(s + 1.0)).powi(2)
        })
        .sum();
    let c1 = if psi != 0.0 { psi_c1 / psi } else { 0.0 };
    Ok(TraceEstimate {
        point: *bp,
        psi,
        c1,
        window: (delta(picked[0]), delta(picked[picked.len() - 1])),
        residual: (misfit / uu.max(f64::MIN_POSITIVE)).sqrt(),
        nodes: picked.len(),
    })
}

/// Traces at every boundary point of the mesh's domain.
pub fn traces(mesh: &Mesh1D, nodal: &[f64], s: f64) -> Result<Vec<TraceEstimate>> {
    mesh.domain()
        .boundary_points()
        .iter()
        .map(|bp| extract_trace(mesh, nodal, s, bp))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    Generalized,
    RosOtonSerra,
    Ibp,
    L2Radial,
    Lemma21,
}

impl Identity {
    pub fn name(self) -> &'static str {
        match self {
            Identity::Generalized => "generalized",
            Identity::RosOtonSerra => "ros-oton-serra",
            Identity::Ibp => "ibp",
            Identity::L2Radial => "l2-radial",
            Identity::Lemma21 => "lemma21",
        }
    }
}

/// Both sides of an identity, with optional refinement history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    pub identity: Identity,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    /// `|lhs - rhs|` over the normalizer `scale`.
    pub rel_residual: f64,
    /// `max(|lhs|, |rhs|)` (floored at 1e-30) for most identities; the
    /// largest absolute term magnitude for `ibp`.
    pub scale: f64,
    /// Individual signed terms where the identity has more than two.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<f64>,
    /// Magnitude of the terms computed with absolute integrands; zero when
    /// not available.
    pub abs_magnitude: f64,
    pub n: usize,
    pub s: f64,
    pub history: Vec<(usize, f64)>,
}

pub const RESIDUAL_FLOOR: f64 = 1e-30;

impl PohozaevReport {
    fn new(identity: Identity, lhs: f64, rhs: f64, n: usize, s: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(RESIDUAL_FLOOR);
        let abs_residual = (lhs - rhs).abs();
        PohozaevReport {
            identity,
            lhs,
            rhs,
            abs_residual,
            rel_residual: abs_residual / scale,
            scale,
            terms: Vec::new(),
            abs_magnitude: 0.0,
            n,
            s,
            history: vec![(n, abs_residual / scale)],
        }
    }

    /// `|lhs - rhs|` relative to the absolute term magnitude.
    pub fn scaled_residual(&self) -> f64 {
        self.abs_residual / self.abs_magnitude.max(RESIDUAL_FLOOR)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.rel_residual <= tol
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub const CSV_HEADER: &'static str = "identity,s,n,lhs,rhs,rel_residual,pass";

    /// One CSV row per history entry; only the final row carries the
    /// current lhs/rhs.
    pub fn csv_rows(&self, tol: f64) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            self.identity.name(),
            fmt17(self.s),
            self.n,
            fmt17(self.lhs),
            fmt17(self.rhs),
            fmt17(self.rel_residual),
            self.passes(tol)
        );
        out
    }

    /// Refinement trend over the recorded history.
    pub fn trend(&self) -> Trend {
        let ups = self.history.windows(2).filter(|w| w[1].1 > w[0].1).count();
        match ups {
            0 => Trend::Decreasing,
            1 => Trend::Warn,
            _ => Trend::Fail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Decreasing,
    Warn,
    Fail,
}

/// 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Runs `check` for each mesh size and returns the last report with the
/// residuals of all runs as its history.
pub fn with_refinement<F>(ns: &[usize], check: F) -> Result<PohozaevReport>
where
    F: Fn(usize) -> Result<PohozaevReport>,
{
    let mut history = Vec::with_capacity(ns.len());
    let mut last = None;
    for &n in ns {
        let r = check(n)?;
        history.push((n, r.rel_residual));
        last = Some(r);
    }
    let mut r = last.ok_or_else(|| Error::Argument("empty refinement list".into()))?;
    r.history = history;
    Ok(r)
}

/// `Γ(1+s)² Σ_b ψ_u(b) ψ_v(b) X(b)·ν(b)` and its absolute counterpart.
fn boundary_term(tu: &[TraceEstimate], tv: &[TraceEstimate], field: &Field1D, s: f64) -> (f64, f64) {
    let g2 = gamma_one_plus_s_sq(s);
    let (mut signed, mut abs) = (0.0, 0.0);
    for (a, b) in tu.iter().zip(tv) {
        let t = a.psi * b.psi * field.value(a.point.x) * a.point.normal;
        signed += t;
        abs += t.abs();
    }
    (g2 * signed, g2 * abs)
}

/// Generalized Pohozaev identity
/// `Γ(1+s)² Σ ψ_u² X·ν = 2∫F(u) X' - E_X(u, u)` for a solution of
/// `(-Δ)^s u = f(u)` with coefficient vector `coeffs`.
pub fn pohozaev_check(
    forms: &AssembledForms,
    coeffs: &[f64],
    nonlinearity: Nonlinearity,
    field: &VectorField,
) -> Result<PohozaevReport> {
    let mesh = &forms.mesh;
    let s = forms.s;
    let f1 = field.extended_1d()?;
    let nodal = mesh.expand(coeffs);
    let tr = traces(mesh, &nodal, s)?;
    let (lhs, _) = boundary_term(&tr, &tr, &f1, s);
    let b = assemble_deformation(mesh, field, s)?.matrix;
    let volume = integrate_density(mesh, &nodal, |t| nonlinearity.primitive(t), |x| f1.deriv(x))?;
    let ex = b.bilinear(coeffs, coeffs);
    let mut r = PohozaevReport::new(Identity::Generalized, lhs, 2.0 * volume - ex, mesh.n_per_interval(), s);
    r.terms = vec![lhs, 2.0 * volume, -ex];
    Ok(r)
}

/// `Γ(1+s)² Σ ψ(b)² (b·ν) = 2sλ ∫u²` for an eigenpair.
pub fn ros_oton_serra_check(forms: &AssembledForms, pair: &EigenPair) -> Result<PohozaevReport> {
    let mesh = &forms.mesh;
    let s = forms.s;
    let nodal = mesh.expand(&pair.coeffs);
    let tr = traces(mesh, &nodal, s)?;
    let g2 = gamma_one_plus_s_sq(s);
    let lhs = g2 * tr.iter().map(|t| t.psi * t.psi * t.point.x * t.point.normal).sum::<f64>();
    let l2 = forms.mass.bilinear(&pair.coeffs, &pair.coeffs);
    Ok(PohozaevReport::new(Identity::RosOtonSerra, lhs, 2.0 * s * pair.lambda * l2, mesh.n_per_interval(), s))
}

/// `∫u² = Γ(1+s)²/(2sλ) Σ ψ(b)² (b·ν)` for an M-normalized eigenpair.
pub fn l2_identity_check(forms: &AssembledForms, pair: &EigenPair) -> Result<PohozaevReport> {
    let mesh = &forms.mesh;
    let s = forms.s;
    let nodal = mesh.expand(&pair.coeffs);
    let tr = traces(mesh, &nodal, s)?;
    let g2 = gamma_one_plus_s_sq(s);
    let terms: Vec<f64> =
        tr.iter().map(|t| g2 / (2.0 * s * pair.lambda) * t.psi * t.psi * t.point.x * t.point.normal).collect();
    let lhs = forms.mass.bilinear(&pair.coeffs, &pair.coeffs);
    let mut r = PohozaevReport::new(Identity::L2Radial, lhs, terms.iter().sum(), mesh.n_per_interval(), s);
    r.terms = terms;
    Ok(r)
}

/// Two-function identity for eigenpairs `(u, λ)` and `(v, μ)`:
/// `μ∫u'Xv + λ∫v'Xu + Γ(1+s)² Σ ψ_u ψ_v X·ν + E_X(u, v) = 0`.
/// `lhs` is the boundary term and `rhs` minus the other three; the residual
/// is normalized by the largest term magnitude (absolute integrands).
pub fn ibp_check(forms: &AssembledForms, u: &EigenPair, v: &EigenPair, field: &VectorField) -> Result<PohozaevReport> {
    let mesh = &forms.mesh;
    let s = forms.s;
    let f1 = field.extended_1d()?;
    let nu = mesh.expand(&u.coeffs);
    let nv = mesh.expand(&v.coeffs);
    let tu = traces(mesh, &nu, s)?;
    let tv = traces(mesh, &nv, s)?;
    let (bnd, bnd_abs) = boundary_term(&tu, &tv, &f1, s);
    let (uxv, uxv_abs) = slope_integral(mesh, &nu, &nv, &f1);
    let (vxu, vxu_abs) = slope_integral(mesh, &nv, &nu, &f1);
    let b = assemble_deformation(mesh, field, s)?.matrix;
    let ex = b.bilinear(&u.coeffs, &v.coeffs);
    let bu: Vec<f64> = u.coeffs.iter().map(|c| c.abs()).collect();
    let bv: Vec<f64> = v.coeffs.iter().map(|c| c.abs()).collect();
    let babs: f64 = (0..b.rows()).map(|i| bu[i] * (0..b.cols()).map(|j| b[(i, j)].abs() * bv[j]).sum::<f64>()).sum();
    let t1 = v.lambda * uxv;
    let t2 = u.lambda * vxu;
    let rhs = -(t1 + t2 + ex);
    let mut r = PohozaevReport::new(Identity::Ibp, bnd, rhs, mesh.n_per_interval(), s);
    let magnitude = (v.lambda * uxv_abs).max(u.lambda * vxu_abs).max(bnd_abs).max(babs);
    r.terms = vec![t1, t2, bnd, ex];
    r.abs_magnitude = magnitude;
    r.scale = magnitude.max(RESIDUAL_FLOOR);
    r.rel_residual = r.abs_residual / r.scale;
    r.history = vec![(r.n, r.rel_residual)];
    Ok(r)
}

/// `∫ u' X v` with `u'` the P1 element slope, and `∫ |u' X v|`.
fn slope_integral(mesh: &Mesh1D, u: &[f64], v: &[f64], f: &Field1D) -> (f64, f64) {
    let rule = Rule::gauss_legendre(8);
    let (mut signed, mut abs) = (0.0, 0.0);
    for (e, &[i, j]) in mesh.elements().iter().enumerate() {
        let (a, b) = mesh.element_bounds(e);
        let slope = (u[j] - u[i]) / (b - a);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = a + (b - a) * t;
            let val = slope * f.value(x) * (v[i] * (1.0 - t) + v[j] * t) * w * (b - a);
            signed += val;
            abs += val.abs();
        }
    }
    (signed, abs)
}

/// `U(x) = (1 - ((x - c)/r)²)³` on `|x - c| < r`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
}

impl Bump {
    pub fn value(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.radius;
        if t.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - t * t).powi(3)
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.radius;
        if t.abs() >= 1.0 {
            0.0
        } else {
            -6.0 * t * (1.0 - t * t).powi(2) / self.radius
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

pub const BUMP_MARGIN: f64 = 0.1;

/// Kernel formula `E_X(U, U) = -2∫U' X (-Δ)^s U` for a bump inside `Ω`.
/// Both sides are computed by adaptive quadrature to `tol`.
pub fn lemma21_check(domain: &Domain1D, bump: &Bump, field: &VectorField, s: f64, tol: f64) -> Result<PohozaevReport> {
    let (lo, hi) = bump.support();
    if !(bump.radius > 0.0) {
        return Err(Error::Argument("bump radius must be positive".into()));
    }
    let inside = domain.intervals().iter().any(|&(a, b)| a + BUMP_MARGIN <= lo && hi <= b - BUMP_MARGIN);
    if !inside {
        return Err(Error::Support { margin: BUMP_MARGIN });
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Range(format!("s = {s} outside (0, 1)")));
    }
    let f1 = field.extended_1d()?;
    let (lhs, lhs_abs) = kernel_energy(bump, &f1, s, tol)?;
    let (rhs, rhs_abs) = kernel_formula_rhs(bump, &f1, s, tol)?;
    let mut r = PohozaevReport::new(Identity::Lemma21, lhs, rhs, 0, s);
    r.abs_magnitude = lhs_abs.max(rhs_abs);
    Ok(r)
}

/// Absolute error budget for the absolute-integrand passes.
const ABS_PASS_TOL: f64 = 1e-6;

/// `E_X(U,U) = c ∫_0^∞ z^{-1-2s} G(z) dz`, `G(z) = ∫(U(x+z) - U(x))² W(x, x+z) dx`,
/// plus the same with `|W|`.
fn kernel_energy(bump: &Bump, f: &Field1D, s: f64, tol: f64) -> Result<(f64, f64)> {
    let c = frac_constant(1, s);
    let (lo, hi) = bump.support();
    let width = hi - lo;
    let rule = Rule::gauss_legendre(12);
    let g = |z: f64, absolute: bool| -> f64 {
        // the integrand vanishes unless x or x + z lies in the support
        let windows = if z < width { vec![(lo - z, hi)] } else { vec![(lo - z, hi - z), (lo, hi)] };
        let mut total = 0.0;
        for (a0, b0) in windows {
            let mut br = vec![a0, b0, lo - z, hi - z, lo, hi, f.lo, f.hi, f.lo - z, f.hi - z];
            br.retain(|&b| b >= a0 && b <= b0);
            br.sort_by(|a, b| a.total_cmp(b));
            br.dedup();
            for w in br.windows(2) {
                let pieces = ((w[1] - w[0]) / (0.125 * width)).ceil().max(1.0) as usize;
                let step = (w[1] - w[0]) / pieces as f64;
                for k in 0..pieces {
                    let a = w[0] + k as f64 * step;
                    total += rule.integrate(a, a + step, |x| {
                        let d = bump.value(x + z) - bump.value(x);
                        let wt = f.bracket(s, x, x + z);
                        d * d * if absolute { wt.abs() } else { wt }
                    });
                }
            }
        }
        total
    };
    // past every box crossing both X(x ± z) are on the linear extension
    let crossings = [f.lo - lo, f.hi - lo, f.hi - hi, f.lo - hi, hi - f.lo, lo - f.lo, hi - f.hi, lo - f.hi];
    let cut = crossings.iter().fold(4.0 * width, |m, &z| m.max(1.25 * z));
    let mut breaks: Vec<f64> = vec![0.25 * width, 0.5 * width, width, 2.0 * width, cut];
    for z in crossings {
        if z > 0.0 && z < cut {
            breaks.push(z);
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();
    // (0, z1): G(z)/z² is smooth, so Gauss–Jacobi with weight z^{1-2s}
    // avoids the cancellation in G for tiny z
    let z1 = 0.5 * breaks[0];
    breaks.insert(0, z1);
    let jacobi = [Rule::gauss_jacobi(16, 1.0 - 2.0 * s), Rule::gauss_jacobi(24, 1.0 - 2.0 * s)];
    let mut out = [0.0; 2];
    for (slot, absolute) in [false, true].into_iter().enumerate() {
        let head: Vec<f64> = jacobi
            .iter()
            .map(|rule| {
                let sum: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| {
                        let z = z1 * t;
                        w * g(z, absolute) / (z * z)
                    })
                    .sum();
                sum * z1.powf(2.0 - 2.0 * s)
            })
            .collect();
        let head_err = (head[1] - head[0]).abs();
        // |W| has kinks and only feeds the normalizer, so its pass is loose
        let budget = if absolute { (0.25 * tol / c).max(ABS_PASS_TOL) } else { 0.25 * tol / c };
        if !absolute && head_err > budget {
            return Err(Error::Tolerance { estimate: c * head_err, tol });
        }
        let near = quad::adaptive(|z| g(z, absolute) * z.powf(-1.0 - 2.0 * s), &breaks, budget, 0.0, 20_000)?;
        let far = if absolute {
            // z = cut / t on (0, 1]
            quad::adaptive(
                |t| if t <= 0.0 { 0.0 } else { g(cut / t, absolute) * cut.powf(-2.0 * s) * t.powf(2.0 * s - 1.0) },
                &[0.0, 0.125, 0.25, 0.5, 1.0],
                budget,
                0.0,
                20_000,
            )?
            .value
        } else {
            // G(z) = P + Q/z for z ≥ cut; fit from two samples, integrate exactly
            let (g1, g2) = (g(cut, false), g(2.0 * cut, false));
            let q = 2.0 * cut * (g1 - g2);
            let p = g1 - q / cut;
            p * cut.powf(-2.0 * s) / (2.0 * s) + q * cut.powf(-1.0 - 2.0 * s) / (1.0 + 2.0 * s)
        };
        out[slot] = c * (head[1] + near.value + far);
    }
    Ok((out[0], out[1]))
}

/// `-2 ∫ U' X (-Δ)^s U dx` and `2 ∫ |U' X (-Δ)^s U| dx`.
fn kernel_formula_rhs(bump: &Bump, f: &Field1D, s: f64, tol: f64) -> Result<(f64, f64)> {
    let (lo, hi) = bump.support();
    let opts_at = |weight: f64| FracLapOptions {
        radius: 4.0 * (hi - lo),
        // error in (-Δ)^s U is weighted by |U' X|; total stays below tol/10
        tol: (0.05 * tol / ((hi - lo) * weight.max(1e-12))).min(1e3),
        sup_abs: Some(1.0),
        support: Some((lo, hi)),
        max_panels: 200_000,
    };
    let breaks: Vec<f64> = (0..=8).map(|k| lo + (hi - lo) * k as f64 / 8.0).collect();
    let failure = std::cell::RefCell::new(None);
    let integrand = |absolute: bool| {
        let failure = &failure;
        let opts_at = &opts_at;
        move |x: f64| {
            let d = bump.deriv(x);
            if d == 0.0 {
                return 0.0;
            }
            let weight = d * f.value(x);
            match frac_laplacian_pointwise(|y| bump.value(y), s, x, &opts_at(weight.abs())) {
                Ok(v) => {
                    let t = weight * v.value;
                    if absolute {
                        t.abs()
                    } else {
                        t
                    }
                }
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        }
    };
    let signed = quad::adaptive(integrand(false), &breaks, 0.25 * tol, 0.0, 20_000)?;
    let abs = quad::adaptive(integrand(true), &breaks, (0.25 * tol).max(ABS_PASS_TOL), 0.0, 20_000)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((-2.0 * signed.value, 2.0 * abs.value))
}

/// Eigenvalue derivative under moving a boundary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HadamardReport {
    pub k: usize,
    pub endpoint: f64,
    pub even_only: bool,
    pub lambda: f64,
    pub fd_slope: f64,
    pub formula: f64,
    pub rel_error: f64,
    pub h: f64,
    pub n: usize,
    pub s: f64,
}

impl HadamardReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn kth_eigenpair(mesh: &Mesh1D, s: f64, k: usize, even_only: bool) -> Result<(AssembledForms, EigenPair)> {
    let forms = AssembledForms::new(mesh, s)?;
    let mut pairs = if even_only {
        restrict_even(mesh, &forms.stiffness, &forms.mass)?.solve(k)?
    } else {
        solve_geig(&forms.stiffness, &forms.mass, k)?
    };
    let pair = pairs.pop().ok_or_else(|| Error::Argument("k must be at least 1".into()))?;
    Ok((forms, pair))
}

/// Central difference of `λ_k` as `bp` moves along its normal, against
/// `-Γ(1+s)² ψ_{u_k}(bp)²`. With `even_only`, the mirror point of `bp`
/// moves as well, the even subspace is used, and the formula sums both
/// points.
pub fn hadamard_check(
    domain: &Domain1D,
    s: f64,
    k: usize,
    bp: &BoundaryPoint1D,
    h: f64,
    n: usize,
    even_only: bool,
) -> Result<HadamardReport> {
    if !(h > 0.0) {
        return Err(Error::Argument(format!("step h = {h} must be positive")));
    }
    let beta = crate::domain::DEFAULT_GRADING;
    let moved = |shift: f64| -> Result<Domain1D> {
        let d = domain.with_moved_endpoint(bp, shift)?;
        if even_only {
            let mirror = d
                .boundary_points()
                .into_iter()
                .find(|q| (q.x + bp.x).abs() <= 1e-12 * domain.diameter() && q.side != bp.side)
                .ok_or(Error::AsymmetricMesh)?;
            d.with_moved_endpoint(&mirror, shift)
        } else {
            Ok(d)
        }
    };
    let lam = |shift: f64| -> Result<f64> {
        let mesh = Mesh1D::make(&moved(shift)?, n, beta)?;
        Ok(kth_eigenpair(&mesh, s, k, even_only)?.1.lambda)
    };
    let fd_slope = (lam(h)? - lam(-h)?) / (2.0 * h);
    let mesh = Mesh1D::make(domain, n, beta)?;
    let (_, pair) = kth_eigenpair(&mesh, s, k, even_only)?;
    let nodal = mesh.expand(&pair.coeffs);
    let tr = extract_trace(&mesh, &nodal, s, bp)?;
    let points = if even_only { 2.0 } else { 1.0 };
    let formula = -gamma_one_plus_s_sq(s) * points * tr.psi * tr.psi;
    Ok(HadamardReport {
        k,
        endpoint: bp.x,
        even_only,
        lambda: pair.lambda,
        fd_slope,
        formula,
        rel_error: (fd_slope - formula).abs() / formula.abs().max(RESIDUAL_FLOOR),
        h,
        n,
        s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub s: f64,
    pub n: usize,
    pub even_only: bool,
    pub lambdas: Vec<f64>,
    /// `(λ_{k+1} - λ_k)/λ_k`.
    pub gaps: Vec<f64>,
    /// Sizes of runs of eigenvalues whose relative gaps fall below the
    /// cluster tolerance.
    pub clusters: Vec<usize>,
    pub cluster_tol: f64,
    /// Number of connected components of the domain.
    pub components: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl SpectrumReport {
    pub fn max_cluster(&self) -> usize {
        self.clusters.iter().copied().max().unwrap_or(0)
    }
}

pub fn spectrum_report(forms: &AssembledForms, k_max: usize, even_only: bool, cluster_tol: f64) -> Result<SpectrumReport> {
    let mesh = &forms.mesh;
    let pairs = if even_only {
        restrict_even(mesh, &forms.stiffness, &forms.mass)?.solve(k_max)?
    } else {
        solve_geig(&forms.stiffness, &forms.mass, k_max)?
    };
    let lambdas: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
    let gaps: Vec<f64> = lambdas.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect();
    let mut clusters = vec![1usize];
    for g in &gaps {
        if *g < cluster_tol {
            *clusters.last_mut().expect("non-empty") += 1;
        } else {
            clusters.push(1);
        }
    }
    let note = (!even_only).then(|| {
        "simplicity is asserted for the even (radial) subsequence only; the full spectrum interleaves odd modes".to_string()
    });
    Ok(SpectrumReport {
        s: forms.s,
        n: mesh.n_per_interval(),
        even_only,
        lambdas,
        gaps,
        clusters,
        cluster_tol,
        components: mesh.domain().components(),
        note,
    })
}

/// Richardson extrapolation of values at mesh sizes `n, 2n, 4n`, using the
/// observed convergence order.
pub fn richardson(v: [f64; 3]) -> f64 {
    let d1 = v[0] - v[1];
    let d2 = v[1] - v[2];
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
        return v[2];
    }
    let ratio = d1 / d2;
    v[2] - d2 / (ratio - 1.0)
}

/// Inner product `uᵀ M v` helper for reports.
pub fn mass_inner(forms: &AssembledForms, u: &[f64], v: &[f64]) -> f64 {
    dot(u, &forms.mass.matvec(v))
}
