//! One-dimensional interval unions, their graded P1 meshes, and implicit
//! planar domains `{g < 0}` used for geometric certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Finite union of disjoint open intervals, sorted left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntervalsSpec", into = "IntervalsSpec")]
pub struct Domain1D {
    intervals: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct IntervalsSpec {
    intervals: Vec<[f64; 2]>,
}

impl TryFrom<IntervalsSpec> for Domain1D {
    type Error = Error;
    fn try_from(s: IntervalsSpec) -> Result<Self> {
        Domain1D::new(s.intervals.iter().map(|p| (p[0], p[1])).collect())
    }
}

impl From<Domain1D> for IntervalsSpec {
    fn from(d: Domain1D) -> Self {
        IntervalsSpec {
            intervals: d.intervals.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

/// Which end of its interval a boundary point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint1D {
    pub x: f64,
    /// Outward unit normal, `-1` at left endpoints and `+1` at right ones.
    pub normal: f64,
    pub side: Side,
    pub interval: usize,
}

impl Domain1D {
    /// Validates and sorts the intervals.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Argument("a domain needs at least one interval".into()));
        }
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite()) || b <= a {
                return Err(Error::Degenerate(a, b));
            }
        }
        intervals.sort_by(|p, q| p.0.total_cmp(&q.0));
        for w in intervals.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(Error::Overlap(w[0].0, w[0].1, w[1].0, w[1].1));
            }
        }
        Ok(Domain1D { intervals })
    }

    /// The symmetric interval `(-r, r)`.
    pub fn ball(r: f64) -> Result<Self> {
        Domain1D::new(vec![(-r, r)])
    }

    /// The one-dimensional annulus `(-r_out, -r_inn) ∪ (r_inn, r_out)`.
    pub fn annulus(r_inn: f64, r_out: f64) -> Result<Self> {
        if r_inn <= 0.0 {
            return Err(Error::Argument("inner radius must be positive".into()));
        }
        Domain1D::new(vec![(-r_out, -r_inn), (r_inn, r_out)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn components(&self) -> usize {
        self.intervals.len()
    }

    pub fn hull(&self) -> (f64, f64) {
        (self.intervals[0].0, self.intervals[self.intervals.len() - 1].1)
    }

    pub fn diameter(&self) -> f64 {
        let (a, b) = self.hull();
        b - a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < x && x < b)
    }

    /// Distance to the complement; zero outside the domain.
    pub fn dist_to_complement(&self, x: f64) -> f64 {
        self.intervals
            .iter()
            .find(|&&(a, b)| a < x && x < b)
            .map_or(0.0, |&(a, b)| (x - a).min(b - x))
    }

    pub fn boundary_points(&self) -> Vec<BoundaryPoint1D> {
        self.intervals
            .iter()
            .enumerate()
            .flat_map(|(i, &(a, b))| {
                [
                    BoundaryPoint1D { x: a, normal: -1.0, side: Side::Left, interval: i },
                    BoundaryPoint1D { x: b, normal: 1.0, side: Side::Right, interval: i },
                ]
            })
            .collect()
    }

    /// Copy with the given boundary point moved by `shift` along its normal.
    pub fn with_moved_endpoint(&self, bp: &BoundaryPoint1D, shift: f64) -> Result<Self> {
        let mut iv = self.intervals.clone();
        let slot = iv
            .get_mut(bp.interval)
            .ok_or_else(|| Error::Argument(format!("no interval {}", bp.interval)))?;
        match bp.side {
            Side::Left => slot.0 -= shift,
            Side::Right => slot.1 += shift,
        }
        Domain1D::new(iv).map_err(|e| Error::DomainCollision(e.to_string()))
    }

    /// Whether the domain is invariant under `x -> -x`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.intervals.len();
        (0..n).all(|i| {
            let (a, b) = self.intervals[i];
            let (c, d) = self.intervals[n - 1 - i];
            (a + d).abs() <= tol && (b + c).abs() <= tol
        })
    }

    pub fn scaled(&self, r: f64) -> Result<Self> {
        Domain1D::new(self.intervals.iter().map(|&(a, b)| (r * a, r * b)).collect())
    }
}

/// `σ(t) = t^β / (t^β + (1 - t)^β)`, symmetric about `t = 1/2`.
pub fn grading_map(t: f64, beta: f64) -> f64 {
    let p = t.powf(beta);
    let q = (1.0 - t).powf(beta);
    p / (p + q)
}

pub const DEFAULT_GRADING: f64 = 2.0;

/// Graded P1 mesh; only interior nodes carry degrees of freedom.
#[derive(Debug, Clone)]
pub struct Mesh1D {
    domain: Domain1D,
    n_per_interval: usize,
    beta: f64,
    nodes: Vec<f64>,
    dof_of_node: Vec<Option<usize>>,
    dof_nodes: Vec<usize>,
    elements: Vec<[usize; 2]>,
    element_interval: Vec<usize>,
}

impl Mesh1D {
    pub fn new(domain: &Domain1D, n_per_interval: usize, beta: f64) -> Result<Self> {
        if n_per_interval < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 elements per interval, got {n_per_interval}"
            )));
        }
        if !(beta >= 1.0) || !beta.is_finite() {
            return Err(Error::Argument(format!("grading exponent must be >= 1, got {beta}")));
        }
        let n = n_per_interval;
        let mut nodes = Vec::with_capacity(domain.components() * (n + 1));
        let mut dof_of_node = Vec::new();
        let mut dof_nodes = Vec::new();
        let mut elements = Vec::new();
        let mut element_interval = Vec::new();
        for (iv, &(a, b)) in domain.intervals().iter().enumerate() {
            let len = b - a;
            let mut local = vec![0.0; n + 1];
            // mirror the right half so symmetric intervals get exactly
            // symmetric nodes
            for j in 0..=n {
                local[j] = if 2 * j <= n {
                    a + len * grading_map(j as f64 / n as f64, beta)
                } else {
                    b - len * grading_map((n - j) as f64 / n as f64, beta)
                };
            }
            local[0] = a;
            local[n] = b;
            let base = nodes.len();
            for (j, x) in local.into_iter().enumerate() {
                nodes.push(x);
                if j == 0 || j == n {
                    dof_of_node.push(None);
                } else {
                    dof_of_node.push(Some(dof_nodes.len()));
                    dof_nodes.push(base + j);
                }
                if j > 0 {
                    elements.push([base + j - 1, base + j]);
                    element_interval.push(iv);
                }
            }
        }
        for w in nodes.windows(2) {
            if w[1] < w[0] {
                return Err(Error::Argument("mesh nodes are not increasing".into()));
            }
        }
        if elements.iter().any(|e| nodes[e[1]] <= nodes[e[0]]) {
            return Err(Error::Argument("mesh has a zero-length element".into()));
        }
        Ok(Mesh1D {
            domain: domain.clone(),
            n_per_interval,
            beta,
            nodes,
            dof_of_node,
            dof_nodes,
            elements,
            element_interval,
        })
    }

    /// Mesh constructor with the `n ≥ 4` floor used by the public API.
    pub fn make(domain: &Domain1D, n_per_interval: usize, beta: f64) -> Result<Self> {
        if n_per_interval < 4 {
            return Err(Error::Argument(format!(
                "need at least 4 elements per interval, got {n_per_interval}"
            )));
        }
        Mesh1D::new(domain, n_per_interval, beta)
    }

    pub fn domain(&self) -> &Domain1D {
        &self.domain
    }

    pub fn n_per_interval(&self) -> usize {
        self.n_per_interval
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_nodes.len()
    }

    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    pub fn dof_positions(&self) -> Vec<f64> {
        self.dof_nodes.iter().map(|&i| self.nodes[i]).collect()
    }

    pub fn elements(&self) -> &[[usize; 2]] {
        &self.elements
    }

    pub fn element_interval(&self, e: usize) -> usize {
        self.element_interval[e]
    }

    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        let [i, j] = self.elements[e];
        (self.nodes[i], self.nodes[j])
    }

    /// Expands interior coefficients to values at every node (zero at the
    /// interval endpoints).
    pub fn expand(&self, coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.n_dofs());
        self.dof_of_node
            .iter()
            .map(|d| d.map_or(0.0, |k| coeffs[k]))
            .collect()
    }

    /// Interior coefficients of a function sampled at the dof nodes.
    pub fn interpolate<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.dof_nodes.iter().map(|&i| f(self.nodes[i])).collect()
    }

    /// Value of the P1 interpolant of `nodal` (length `n_nodes`) at `x`.
    pub fn eval(&self, nodal: &[f64], x: f64) -> f64 {
        if !self.domain.contains(x) {
            return 0.0;
        }
        let k = self.nodes.partition_point(|&p| p <= x);
        if k == 0 || k >= self.nodes.len() {
            return 0.0;
        }
        let (x0, x1) = (self.nodes[k - 1], self.nodes[k]);
        let t = (x - x0) / (x1 - x0);
        nodal[k - 1] * (1.0 - t) + nodal[k] * t
    }

    /// Size of the element touching the given boundary point.
    pub fn boundary_element_size(&self, bp: &BoundaryPoint1D) -> f64 {
        let base = bp.interval * (self.n_per_interval + 1);
        match bp.side {
            Side::Left => self.nodes[base + 1] - self.nodes[base],
            Side::Right => {
                let last = base + self.n_per_interval;
                self.nodes[last] - self.nodes[last - 1]
            }
        }
    }

    /// Node indices of the interval holding `bp`, ordered by increasing
    /// distance from `bp`.
    pub fn nodes_from_boundary(&self, bp: &BoundaryPoint1D) -> Vec<usize> {
        let base = bp.interval * (self.n_per_interval + 1);
        let range = base..=base + self.n_per_interval;
        match bp.side {
            Side::Left => range.collect(),
            Side::Right => range.rev().collect(),
        }
    }

    /// Whether node positions are symmetric under `x -> -x`.
    pub fn is_symmetric(&self) -> bool {
        let n = self.nodes.len();
        let tol = 1e-12 * self.domain.diameter();
        (0..n).all(|i| (self.nodes[i] + self.nodes[n - 1 - i]).abs() <= tol)
    }
}

/// Planar domain `{g < 0}` inside a bounding box.
#[derive(Debug, Clone)]
pub struct ImplicitDomain2D {
    pub g: Expr,
    /// `[xmin, xmax, ymin, ymax]`.
    pub bbox: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub point: [f64; 2],
    pub normal: [f64; 2],
}

const BISECTION_STEPS: usize = 60;

impl ImplicitDomain2D {
    pub fn new(g: &str, bbox: [f64; 4]) -> Result<Self> {
        let g = Expr::parse(g)?;
        if g.arity() > 2 {
            return Err(Error::Argument("level-set function may only use x and y".into()));
        }
        if !(bbox[0] < bbox[1] && bbox[2] < bbox[3]) {
            return Err(Error::Argument(format!("bad bounding box {bbox:?}")));
        }
        Ok(ImplicitDomain2D { g, bbox })
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.g.eval(&[x, y])
    }

    pub fn diagonal(&self) -> f64 {
        (self.bbox[1] - self.bbox[0]).hypot(self.bbox[3] - self.bbox[2])
    }

    /// Central-difference gradient.
    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let h = 1e-6 * self.diagonal();
        [
            (self.value(x + h, y) - self.value(x - h, y)) / (2.0 * h),
            (self.value(x, y + h) - self.value(x, y - h)) / (2.0 * h),
        ]
    }

    /// Boundary points from sign changes of `g` along the lines of an
    /// `m × m` grid, each refined by bisection, with outward unit normals
    /// `∇g/|∇g|`.
    pub fn sample_boundary(&self, m: usize) -> Result<Vec<BoundarySample>> {
        if m < 8 {
            return Err(Error::Argument(format!("need m >= 8 grid cells, got {m}")));
        }
        let [x0, x1, y0, y1] = self.bbox;
        let xs: Vec<f64> = (0..=m).map(|i| x0 + (x1 - x0) * i as f64 / m as f64).collect();
        let ys: Vec<f64> = (0..=m).map(|j| y0 + (y1 - y0) * j as f64 / m as f64).collect();
        let mut points = Vec::new();
        for &y in &ys {
            self.scan_line(&xs, |t| (t, y), &mut points);
        }
        for &x in &xs {
            self.scan_line(&ys, |t| (x, t), &mut points);
        }
        if points.is_empty() {
            return Err(Error::NoBoundary);
        }
        let grad_floor = 1e-8;
        points
            .into_iter()
            .map(|(px, py)| {
                let g = self.gradient(px, py);
                let norm = g[0].hypot(g[1]);
                if !(norm > grad_floor) {
                    return Err(Error::SingularGradient(px, py));
                }
                Ok(BoundarySample {
                    point: [px, py],
                    normal: [g[0] / norm, g[1] / norm],
                })
            })
            .collect()
    }

    fn scan_line<P: Fn(f64) -> (f64, f64)>(&self, ts: &[f64], at: P, out: &mut Vec<(f64, f64)>) {
        let vals: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let (x, y) = at(t);
                self.value(x, y)
            })
            .collect();
        for k in 0..ts.len() - 1 {
            let (fa, fb) = (vals[k], vals[k + 1]);
            if fa == 0.0 {
                out.push(at(ts[k]));
                continue;
            }
            if fa * fb >= 0.0 {
                continue;
            }
            let (mut lo, mut hi, mut flo) = (ts[k], ts[k + 1], fa);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                let (x, y) = at(mid);
                let fm = self.value(x, y);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(at(0.5 * (lo + hi)));
        }
    }
}

/// JSON description of a domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainSpec {
    Intervals { intervals: Vec<[f64; 2]> },
    Implicit2D { implicit2d: Implicit2DSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Implicit2DSpec {
    pub g: String,
    pub bbox: [f64; 4],
}

impl DomainSpec {
    pub fn to_1d(&self) -> Result<Domain1D> {
        match self {
            DomainSpec::Intervals { intervals } => {
                Domain1D::new(intervals.iter().map(|p| (p[0], p[1])).collect())
            }
            DomainSpec::Implicit2D { .. } => {
                Err(Error::Config("expected an interval domain, got implicit2d".into()))
            }
        }
    }

    pub fn to_2d(&self) -> Result<ImplicitDomain2D> {
        match self {
            DomainSpec::Implicit2D { implicit2d } => ImplicitDomain2D::new(&implicit2d.g, implicit2d.bbox),
            DomainSpec::Intervals { .. } => {
                Err(Error::Config("expected an implicit2d domain, got intervals".into()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_domain_examples() {
        let d = Domain1D::new(vec![(-1.0, 1.0)]).unwrap();
        assert_eq!(d.components(), 1);
        let a = Domain1D::new(vec![(1.0, 2.0), (-2.0, -1.0)]).unwrap();
        assert_eq!(a.intervals(), &[(-2.0, -1.0), (1.0, 2.0)]);
        assert!(matches!(Domain1D::new(vec![(0.0, 1.0), (0.5, 2.0)]), Err(Error::Overlap(..))));
        assert!(matches!(Domain1D::new(vec![(0.0, 1.0), (1.0, 2.0)]), Err(Error::Overlap(..))));
        assert!(matches!(Domain1D::new(vec![(1.0, 1.0)]), Err(Error::Degenerate(..))));
        assert!(Domain1D::new(vec![]).is_err());
    }

    #[test]
    fn distance_examples() {
        let d = Domain1D::ball(1.0).unwrap();
        assert_eq!(d.dist_to_complement(0.0), 1.0);
        assert_eq!(d.dist_to_complement(0.75), 0.25);
        assert_eq!(d.dist_to_complement(1.5), 0.0);
        assert_eq!(d.dist_to_complement(1.0), 0.0);
    }

    #[test]
    fn boundary_point_examples() {
        let d = Domain1D::ball(1.0).unwrap();
        let pts: Vec<(f64, f64)> = d.boundary_points().iter().map(|b| (b.x, b.normal)).collect();
        assert_eq!(pts, vec![(-1.0, -1.0), (1.0, 1.0)]);
        let a = Domain1D::annulus(1.0, 2.0).unwrap();
        let pts: Vec<(f64, f64)> = a.boundary_points().iter().map(|b| (b.x, b.normal)).collect();
        assert_eq!(pts, vec![(-2.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (2.0, 1.0)]);
        let three = Domain1D::new(vec![(0.0, 1.0), (2.0, 3.0), (4.0, 5.0)]).unwrap();
        assert_eq!(three.boundary_points().len(), 6);
    }

    #[test]
    fn mesh_examples() {
        let d = Domain1D::ball(1.0).unwrap();
        let m = Mesh1D::make(&d, 4, 1.0).unwrap();
        assert_eq!(m.nodes(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        let unit = Domain1D::new(vec![(0.0, 1.0)]).unwrap();
        let m = Mesh1D::new(&unit, 2, 2.0).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.5, 1.0]);
        let m = Mesh1D::make(&unit, 4, 2.0).unwrap();
        let want = [0.0, 0.1, 0.5, 0.9, 1.0];
        for (x, w) in m.nodes().iter().zip(want) {
            assert!((x - w).abs() < 1e-15, "{x} vs {w}");
        }
        assert!(Mesh1D::make(&unit, 3, 1.0).is_err());
        assert!(Mesh1D::make(&unit, 8, 0.5).is_err());
    }

    #[test]
    fn mesh_symmetry_and_dofs() {
        let a = Domain1D::annulus(1.0, 2.0).unwrap();
        let m = Mesh1D::make(&a, 16, 2.0).unwrap();
        assert!(m.is_symmetric());
        assert_eq!(m.n_dofs(), 2 * 15);
        assert_eq!(m.n_nodes(), 2 * 17);
        let nodal = m.expand(&vec![1.0; m.n_dofs()]);
        assert_eq!(nodal[0], 0.0);
        assert_eq!(nodal[16], 0.0);
        assert_eq!(nodal[17], 0.0);
        assert_eq!(m.eval(&nodal, 0.0), 0.0);
    }

    #[test]
    fn circle_boundary_samples() {
        let dom = ImplicitDomain2D::new("x^2 + y^2 - 1", [-1.5, 1.5, -1.5, 1.5]).unwrap();
        let s = dom.sample_boundary(16).unwrap();
        assert!(s.len() >= 16);
        for b in &s {
            let [x, y] = b.point;
            assert!((x * x + y * y - 1.0).abs() < 1e-8);
            let r = x.hypot(y);
            assert!((b.normal[0] - x / r).abs() < 1e-4 && (b.normal[1] - y / r).abs() < 1e-4);
        }
        assert!(s.iter().any(|b| (b.point[0] - 1.0).abs() < 1e-8 && b.point[1].abs() < 1e-8
            && (b.normal[0] - 1.0).abs() < 1e-6));
    }

    #[test]
    fn empty_implicit_domain_has_no_boundary() {
        let dom = ImplicitDomain2D::new("x^2 + y^2 + 1", [-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert!(matches!(dom.sample_boundary(10), Err(Error::NoBoundary)));
    }

    #[test]
    fn singular_gradient_is_reported() {
        // g = (x^2 + y^2)^2 - 0 has a degenerate zero set at the origin
        let dom = ImplicitDomain2D::new("x^2 + y^2", [-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert!(matches!(dom.sample_boundary(8), Err(Error::SingularGradient(..))));
    }

    #[test]
    fn domain_spec_json() {
        let s: DomainSpec = serde_json::from_str(r#"{"intervals": [[-1, 1]]}"#).unwrap();
        assert_eq!(s.to_1d().unwrap(), Domain1D::ball(1.0).unwrap());
        let s: DomainSpec =
            serde_json::from_str(r#"{"implicit2d": {"g": "x^2+y^2-1", "bbox": [-2, 2, -2, 2]}}"#).unwrap();
        assert!(s.to_2d().is_ok());
        assert!(s.to_1d().is_err());
        assert!(serde_json::from_str::<Domain1D>(r#"{"intervals": [[0, 1], [0.5, 2]]}"#).is_err());
        let d: Domain1D = serde_json::from_str(r#"{"intervals": [[1, 2], [-2, -1]]}"#).unwrap();
        assert_eq!(d, Domain1D::annulus(1.0, 2.0).unwrap());
    }
}
