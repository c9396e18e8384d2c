//! Command-line front end: JSON run configs, flag overrides, sweeps and
//! report output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{
    extract_trace, fmt17, hadamard_check, ibp_check, l2_identity_check, lemma21_check, pohozaev_check,
    ros_oton_serra_check, Bump, HadamardReport, PohozaevReport,
};
use crate::assembly::{frac_laplacian_pointwise, AssembledForms, FracLapOptions, Nonlinearity};
use crate::domain::{DomainSpec, Mesh1D, DEFAULT_GRADING};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{
    check_c1_c2, check_c_condition, flux_certificate, nonexistence_threshold, CertificateKind, ConditionCertificate,
    FieldSpec, VectorField, DEFAULT_SAMPLES, DEFAULT_SEED,
};
use crate::solve::{eigenpairs, solve_semilinear, EigenPair};

pub const SEED_ENV: &str = "FRACLAB_SEED";

#[derive(Debug, Parser)]
#[command(name = "fraclab", version, about = "Fractional Laplacian spectra and Pohozaev-type identity checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Eigen,
    Verify,
    Certify,
    Semilinear,
    Fraclap,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dirichlet eigenvalues and eigenvectors
    Eigen(RunArgs),
    /// Numerical check of an identity under mesh refinement
    Verify(RunArgs),
    /// Geometric certificates and nonexistence thresholds
    Certify(RunArgs),
    /// Positive solution of (-Δ)^s u = u^{p-1}
    Semilinear(RunArgs),
    /// Pointwise fractional Laplacian of a formula
    Fraclap(RunArgs),
}

impl Command {
    fn parts(&self) -> (CommandKind, &RunArgs) {
        match self {
            Command::Eigen(a) => (CommandKind::Eigen, a),
            Command::Verify(a) => (CommandKind::Verify, a),
            Command::Certify(a) => (CommandKind::Certify, a),
            Command::Semilinear(a) => (CommandKind::Semilinear, a),
            Command::Fraclap(a) => (CommandKind::Fraclap, a),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// Override the fractional order (single value)
    #[arg(long)]
    pub s: Option<f64>,
    /// Override the mesh size per interval (single value)
    #[arg(long)]
    pub n: Option<usize>,
    /// Override the pass tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Worker threads for sweeps (default: number of cores)
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// A scalar or a list in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyIdentity {
    Pohozaev,
    RosOtonSerra,
    Ibp,
    L2Radial,
    Lemma21,
    Hadamard,
}

/// Run configuration. Every field has a default so configs stay short.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default = "default_s")]
    pub s: OneOrMany<f64>,
    #[serde(default = "default_n")]
    pub n: OneOrMany<usize>,
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub even_only: bool,
    #[serde(default)]
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub nonlinearity: Option<Nonlinearity>,
    #[serde(default)]
    pub identity: Option<VerifyIdentity>,
    /// Mode index (1-based) for single-mode checks.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Mode indices `(u, v)` for the two-function identity.
    #[serde(default = "default_pair")]
    pub pair: [usize; 2],
    /// Pass threshold on the relative residual.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Quadrature / iteration tolerance.
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default)]
    pub bump: Option<Bump>,
    /// Index into the domain's boundary points (left to right); the
    /// rightmost point when absent.
    #[serde(default)]
    pub endpoint: Option<usize>,
    /// Finite-difference step; `1e-3 × diameter` when absent.
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub certificates: Vec<CertificateKind>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Grid resolution for boundary sampling of implicit domains.
    #[serde(default = "default_boundary_grid")]
    pub boundary_grid: usize,
    /// `(c₁, c₂)` supplied directly instead of certified from a field.
    #[serde(default)]
    pub constants: Option<[f64; 2]>,
    /// Dimension for `constants`.
    #[serde(default)]
    pub dim: Option<usize>,
    /// Orders `s` at which to report the nonexistence threshold.
    #[serde(default)]
    pub query_s: Vec<f64>,
    /// Formula in `x` for `fraclap`.
    #[serde(default)]
    pub function: Option<String>,
    /// The formula is replaced by zero outside this interval.
    #[serde(default)]
    pub support: Option<[f64; 2]>,
    #[serde(default)]
    pub points: Vec<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_s() -> OneOrMany<f64> {
    OneOrMany::One(0.5)
}
fn default_n() -> OneOrMany<usize> {
    OneOrMany::One(256)
}
fn default_grading() -> f64 {
    DEFAULT_GRADING
}
fn default_k_max() -> usize {
    4
}
fn default_k() -> usize {
    1
}
fn default_pair() -> [usize; 2] {
    [1, 2]
}
fn default_tol() -> f64 {
    0.05
}
fn default_quad_tol() -> f64 {
    1e-8
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_boundary_grid() -> usize {
    400
}
fn default_max_iter() -> usize {
    500
}

impl RunConfig {
    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&src)
    }

    /// Applies flag overrides and the seed environment variable.
    pub fn apply_overrides(&mut self, args: &RunArgs, env_seed: Option<&str>) -> Result<()> {
        if let Some(s) = args.s {
            self.s = OneOrMany::One(s);
        }
        if let Some(n) = args.n {
            self.n = OneOrMany::One(n);
        }
        if let Some(t) = args.tol {
            self.tol = t;
        }
        if let Some(v) = env_seed {
            let seed = v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV}={v} is not an integer")))?;
            self.seed = Some(seed);
        }
        Ok(())
    }

    pub fn s_values(&self) -> Result<Vec<f64>> {
        let v = self.s.to_vec();
        if v.is_empty() {
            return Err(Error::Config("empty s list".into()));
        }
        for &s in &v {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::Config(format!("s = {s} outside (0, 1)")));
            }
        }
        Ok(v)
    }

    pub fn n_values(&self) -> Result<Vec<usize>> {
        let v = self.n.to_vec();
        if v.is_empty() {
            return Err(Error::Config("empty n list".into()));
        }
        for &n in &v {
            if !(n.is_power_of_two() && (8..=2048).contains(&n)) {
                return Err(Error::Config(format!("n = {n} must be a power of two in [8, 2048]")));
            }
        }
        Ok(v)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn field(&self) -> Result<VectorField> {
        self.field.as_ref().ok_or_else(|| Error::Config("missing field".into()))?.build()
    }

    fn domain_1d(&self) -> Result<crate::domain::Domain1D> {
        self.domain.as_ref().ok_or_else(|| Error::Config("missing domain".into()))?.to_1d()
    }
}

/// Exit code for an error: 2 for configuration and range problems, 1 for
/// numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Convergence(_) | Error::Tolerance { .. } | Error::NotPositiveDefinite(_) | Error::Quadrature(_) => 1,
        _ => 2,
    }
}

/// Output of a command: stdout text, optional files and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub json: serde_json::Value,
    pub csv: String,
    pub code: i32,
}

/// Parses arguments, runs the command and writes outputs; returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (kind, args) = cli.command.parts();
    let env_seed = std::env::var(SEED_ENV).ok();
    match run(kind, args, env_seed.as_deref()) {
        Ok(out) => {
            print!("{}", out.stdout);
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Loads the config, runs the command and writes the configured files.
pub fn run(kind: CommandKind, args: &RunArgs, env_seed: Option<&str>) -> Result<Outcome> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply_overrides(args, env_seed)?;
    let jobs = args.jobs.unwrap_or(0);
    if args.jobs == Some(0) {
        return Err(Error::Config("--jobs must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let out = pool.install(|| run_config(kind, &cfg))?;
    write_outputs(&cfg.output, &out)?;
    Ok(out)
}

fn write_outputs(spec: &OutputSpec, out: &Outcome) -> Result<()> {
    if let Some(p) = &spec.json {
        let mut text = serde_json::to_string_pretty(&out.json)?;
        text.push('\n');
        fs::write(p, text)?;
    }
    if let Some(p) = &spec.csv {
        fs::write(p, &out.csv)?;
    }
    Ok(())
}

pub fn run_config(kind: CommandKind, cfg: &RunConfig) -> Result<Outcome> {
    match kind {
        CommandKind::Eigen => cmd_eigen(cfg),
        CommandKind::Verify => cmd_verify(cfg),
        CommandKind::Certify => cmd_certify(cfg),
        CommandKind::Semilinear => cmd_semilinear(cfg),
        CommandKind::Fraclap => cmd_fraclap(cfg),
    }
}

fn sweep(cfg: &RunConfig) -> Result<Vec<(f64, usize)>> {
    let ss = cfg.s_values()?;
    let ns = cfg.n_values()?;
    Ok(ss.iter().flat_map(|&s| ns.iter().map(move |&n| (s, n))).collect())
}

fn forms_for(cfg: &RunConfig, s: f64, n: usize) -> Result<AssembledForms> {
    let mesh = Mesh1D::make(&cfg.domain_1d()?, n, cfg.grading)?;
    AssembledForms::new(&mesh, s)
}

/// Relative gaps `(λ_{k+1} - λ_k)/λ_k`; empty for the last mode.
fn gaps(pairs: &[EigenPair]) -> Vec<Option<f64>> {
    (0..pairs.len())
        .map(|i| pairs.get(i + 1).map(|q| (q.lambda - pairs[i].lambda) / pairs[i].lambda))
        .collect()
}

fn opt17(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

pub fn cmd_eigen(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.k_max == 0 {
        return Err(Error::Config("k_max must be positive".into()));
    }
    let runs = sweep(cfg)?;
    type Run = (f64, usize, Vec<f64>, Vec<EigenPair>);
    let results: Vec<Result<Run>> = runs
        .par_iter()
        .map(|&(s, n)| {
            let forms = forms_for(cfg, s, n)?;
            let pairs = eigenpairs(&forms.mesh, &forms.stiffness, cfg.k_max, cfg.even_only)?;
            Ok((s, n, forms.mesh.dof_positions(), pairs))
        })
        .collect();
    let sweeping = runs.len() > 1;
    let mut csv = String::from(if sweeping { "s,n,k,lambda,gap\n" } else { "k,lambda,gap\n" });
    let mut runs_json = Vec::new();
    for r in results {
        let (s, n, x, pairs) = r?;
        let g = gaps(&pairs);
        let mut modes = Vec::new();
        for (p, gap) in pairs.iter().zip(&g) {
            if sweeping {
                let _ = write!(csv, "{},{},", fmt17(s), n);
            }
            let _ = writeln!(csv, "{},{},{}", p.index, fmt17(p.lambda), opt17(*gap));
            modes.push(json!({ "k": p.index, "lambda": p.lambda, "gap": gap, "coeffs": p.coeffs }));
        }
        runs_json.push(json!({ "s": s, "n": n, "even_only": cfg.even_only, "x": x, "modes": modes }));
    }
    Ok(Outcome {
        stdout: csv.clone(),
        json: json!({ "command": "eigen", "runs": runs_json }),
        csv,
        code: 0,
    })
}

enum VerifyRow {
    Identity(PohozaevReport),
    Hadamard(HadamardReport),
}

impl VerifyRow {
    fn csv(&self, name: &str, tol: f64) -> String {
        let (s, n, lhs, rhs, rel) = match self {
            VerifyRow::Identity(r) => (r.s, r.n, r.lhs, r.rhs, r.rel_residual),
            VerifyRow::Hadamard(r) => (r.s, r.n, r.fd_slope, r.formula, r.rel_error),
        };
        format!("{name},{},{n},{},{},{},{}\n", fmt17(s), fmt17(lhs), fmt17(rhs), fmt17(rel), rel <= tol)
    }

    fn rel(&self) -> f64 {
        match self {
            VerifyRow::Identity(r) => r.rel_residual,
            VerifyRow::Hadamard(r) => r.rel_error,
        }
    }

    fn json(&self) -> Result<serde_json::Value> {
        Ok(match self {
            VerifyRow::Identity(r) => serde_json::to_value(r)?,
            VerifyRow::Hadamard(r) => serde_json::to_value(r)?,
        })
    }
}

fn identity_name(id: VerifyIdentity) -> &'static str {
    match id {
        VerifyIdentity::Pohozaev => "pohozaev",
        VerifyIdentity::RosOtonSerra => "ros-oton-serra",
        VerifyIdentity::Ibp => "ibp",
        VerifyIdentity::L2Radial => "l2-radial",
        VerifyIdentity::Lemma21 => "lemma21",
        VerifyIdentity::Hadamard => "hadamard",
    }
}

fn mode(pairs: &[EigenPair], k: usize) -> Result<&EigenPair> {
    if k == 0 {
        return Err(Error::Config("mode indices start at 1".into()));
    }
    pairs.get(k - 1).ok_or_else(|| Error::Config(format!("mode {k} not available")))
}

fn verify_one(cfg: &RunConfig, id: VerifyIdentity, s: f64, n: usize) -> Result<VerifyRow> {
    let k_needed = match id {
        VerifyIdentity::Ibp => cfg.pair[0].max(cfg.pair[1]),
        _ => cfg.k,
    };
    Ok(match id {
        VerifyIdentity::Lemma21 => {
            let bump = cfg.bump.ok_or_else(|| Error::Config("lemma21 needs a bump".into()))?;
            VerifyRow::Identity(lemma21_check(&cfg.domain_1d()?, &bump, &cfg.field()?, s, cfg.quad_tol)?)
        }
        VerifyIdentity::Hadamard => {
            let d = cfg.domain_1d()?;
            let bps = d.boundary_points();
            let idx = cfg.endpoint.unwrap_or(bps.len() - 1);
            let bp = bps.get(idx).ok_or_else(|| Error::Config(format!("no boundary point {idx}")))?;
            let h = cfg.h.unwrap_or(1e-3 * d.diameter());
            VerifyRow::Hadamard(hadamard_check(&d, s, cfg.k, bp, h, n, cfg.even_only)?)
        }
        VerifyIdentity::Pohozaev if matches!(cfg.nonlinearity, Some(Nonlinearity::Power { .. })) => {
            let Some(Nonlinearity::Power { p }) = cfg.nonlinearity else { unreachable!() };
            let forms = forms_for(cfg, s, n)?;
            let sol = solve_semilinear(&forms, p, cfg.quad_tol, cfg.max_iter)?;
            VerifyRow::Identity(pohozaev_check(&forms, &sol.coeffs, Nonlinearity::Power { p }, &cfg.field()?)?)
        }
        _ => {
            let forms = forms_for(cfg, s, n)?;
            let even = cfg.even_only && id != VerifyIdentity::Ibp;
            let pairs = eigenpairs(&forms.mesh, &forms.stiffness, k_needed, even)?;
            VerifyRow::Identity(match id {
                VerifyIdentity::Pohozaev => {
                    let p = mode(&pairs, cfg.k)?;
                    pohozaev_check(&forms, &p.coeffs, Nonlinearity::Linear { lambda: p.lambda }, &cfg.field()?)?
                }
                VerifyIdentity::RosOtonSerra => ros_oton_serra_check(&forms, mode(&pairs, cfg.k)?)?,
                VerifyIdentity::L2Radial => l2_identity_check(&forms, mode(&pairs, cfg.k)?)?,
                VerifyIdentity::Ibp => {
                    ibp_check(&forms, mode(&pairs, cfg.pair[0])?, mode(&pairs, cfg.pair[1])?, &cfg.field()?)?
                }
                VerifyIdentity::Lemma21 | VerifyIdentity::Hadamard => unreachable!(),
            })
        }
    })
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let id = cfg.identity.ok_or_else(|| Error::Config("missing identity".into()))?;
    let name = identity_name(id);
    let ss = cfg.s_values()?;
    // lemma21 has no mesh; its refinement axis is the quadrature tolerance
    let runs: Vec<(f64, usize)> = if id == VerifyIdentity::Lemma21 { ss.iter().map(|&s| (s, 0)).collect() } else { sweep(cfg)? };
    let rows: Vec<Result<VerifyRow>> = runs.par_iter().map(|&(s, n)| verify_one(cfg, id, s, n)).collect();
    let rows: Vec<VerifyRow> = rows.into_iter().collect::<Result<_>>()?;
    let mut csv = String::from("identity,s,n,lhs,rhs,rel_residual,pass\n");
    let mut reports = Vec::new();
    for r in &rows {
        csv.push_str(&r.csv(name, cfg.tol));
        reports.push(r.json()?);
    }
    // pass/fail on the finest mesh of each s
    let per_s = if id == VerifyIdentity::Lemma21 { 1 } else { cfg.n_values()?.len() };
    let pass = rows.chunks(per_s).all(|c| c.last().is_some_and(|r| r.rel() <= cfg.tol));
    let mut stdout = csv.clone();
    let _ = writeln!(stdout, "{}", if pass { "PASS" } else { "FAIL" });
    Ok(Outcome {
        stdout,
        json: json!({ "command": "verify", "identity": name, "tol": cfg.tol, "pass": pass, "reports": reports }),
        csv,
        code: if pass { 0 } else { 1 },
    })
}

fn cert_row(c: &ConditionCertificate) -> String {
    let kind = match c.kind {
        CertificateKind::CCondition => "c_condition",
        CertificateKind::C1C2Condition => "c1_c2_condition",
        CertificateKind::Flux => "flux",
    };
    let k1 = c.constants.first().copied();
    let k2 = c.constants.get(1).copied();
    let verdict = if c.verdict.passed() { "pass" } else { "fail" };
    format!("{kind},{},{},{},{verdict}\n", opt17(k1), opt17(k2), opt17(c.min_flux))
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<Outcome> {
    let seed = cfg.seed();
    let mut certs = Vec::new();
    let mut consts: Option<(f64, f64, usize)> = None;
    if let Some(spec) = &cfg.field {
        let field = spec.build()?;
        let requested = if cfg.certificates.is_empty() {
            let mut k = vec![CertificateKind::CCondition, CertificateKind::C1C2Condition];
            if cfg.domain.is_some() {
                k.push(CertificateKind::Flux);
            }
            k
        } else {
            cfg.certificates.clone()
        };
        for kind in requested {
            let cert = match kind {
                CertificateKind::CCondition => check_c_condition(&field, cfg.samples, seed)?,
                CertificateKind::C1C2Condition => check_c1_c2(&field, cfg.samples, seed)?,
                CertificateKind::Flux => {
                    let dom = cfg.domain.as_ref().ok_or_else(|| Error::Config("flux needs a domain".into()))?.to_2d()?;
                    flux_certificate(&field, &dom.sample_boundary(cfg.boundary_grid)?)?
                }
            };
            if cert.verdict.passed() && consts.is_none() {
                let n = field.dim();
                match cert.kind {
                    CertificateKind::CCondition => consts = Some((cert.constants[0] * n as f64, cert.constants[0], n)),
                    CertificateKind::C1C2Condition => consts = Some((cert.constants[0], cert.constants[1], n)),
                    CertificateKind::Flux => {}
                }
            }
            certs.push(cert);
        }
    }
    if let Some([c1, c2]) = cfg.constants {
        let n = cfg.dim.ok_or_else(|| Error::Config("constants need dim".into()))?;
        consts = Some((c1, c2, n));
    }
    if certs.is_empty() && consts.is_none() {
        return Err(Error::Config("certify needs a field or constants".into()));
    }
    let mut csv = String::from("kind,constant_1,constant_2,min_flux,verdict\n");
    for c in &certs {
        csv.push_str(&cert_row(c));
    }
    let mut stdout = csv.clone();
    let mut thresholds = Vec::new();
    if let Some((c1, c2, n)) = consts {
        let s_max = (c1 / c2 - n as f64 / 2.0).min(1.0);
        let _ = writeln!(stdout, "admissible s: (0, {})", fmt17(s_max));
        for &s in &cfg.query_s {
            let p = nonexistence_threshold(c1, c2, n, s)?;
            let _ = writeln!(stdout, "s = {}: nonexistence for p > {}", fmt17(s), fmt17(p));
            thresholds.push(json!({ "s": s, "p_star": p }));
        }
    } else if !cfg.query_s.is_empty() {
        let _ = writeln!(stdout, "no certified constants; thresholds unavailable");
    }
    let pass = certs.iter().all(|c| c.verdict.passed());
    let _ = writeln!(stdout, "{}", if pass { "PASS" } else { "FAIL" });
    Ok(Outcome {
        stdout,
        json: json!({
            "command": "certify",
            "certificates": certs,
            "constants": consts.map(|(c1, c2, n)| json!({ "c1": c1, "c2": c2, "dim": n })),
            "thresholds": thresholds,
            "pass": pass,
        }),
        csv,
        code: if pass { 0 } else { 1 },
    })
}

pub fn cmd_semilinear(cfg: &RunConfig) -> Result<Outcome> {
    let p = match cfg.nonlinearity {
        Some(Nonlinearity::Power { p }) => p,
        _ => return Err(Error::Config("semilinear needs nonlinearity {\"kind\": \"power\", \"p\": ...}".into())),
    };
    let runs = sweep(cfg)?;
    let results: Vec<Result<serde_json::Value>> = runs
        .par_iter()
        .map(|&(s, n)| {
            let forms = forms_for(cfg, s, n)?;
            let sol = solve_semilinear(&forms, p, cfg.quad_tol, cfg.max_iter)?;
            let d = forms.mesh.domain();
            let bbox = vec![(d.hull().0 - 1.0, d.hull().1 + 1.0)];
            let id = VectorField::identity(bbox)?;
            let report = pohozaev_check(&forms, &sol.coeffs, Nonlinearity::Power { p }, &id)?;
            let nodal = forms.mesh.expand(&sol.coeffs);
            let traces: Vec<f64> =
                d.boundary_points().iter().map(|bp| extract_trace(&forms.mesh, &nodal, s, bp).map(|t| t.psi)).collect::<Result<_>>()?;
            Ok(json!({
                "s": s, "n": n, "p": p,
                "iterations": sol.iterations, "residual": sol.residual,
                "max": sol.coeffs.iter().copied().fold(0.0, f64::max),
                "psi": traces,
                "pohozaev": report,
                "x": forms.mesh.dof_positions(), "coeffs": sol.coeffs,
            }))
        })
        .collect();
    let mut csv = String::from("s,n,p,iterations,residual,max,pohozaev_rel_residual\n");
    let mut out = Vec::new();
    for r in results {
        let v = r?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            fmt17(v["s"].as_f64().unwrap_or(f64::NAN)),
            v["n"],
            fmt17(p),
            v["iterations"],
            fmt17(v["residual"].as_f64().unwrap_or(f64::NAN)),
            fmt17(v["max"].as_f64().unwrap_or(f64::NAN)),
            fmt17(v["pohozaev"]["rel_residual"].as_f64().unwrap_or(f64::NAN)),
        );
        out.push(v);
    }
    Ok(Outcome { stdout: csv.clone(), json: json!({ "command": "semilinear", "runs": out }), csv, code: 0 })
}

pub fn cmd_fraclap(cfg: &RunConfig) -> Result<Outcome> {
    let src = cfg.function.as_deref().ok_or_else(|| Error::Config("fraclap needs a function".into()))?;
    let expr = Expr::parse(src)?;
    if expr.arity() > 1 {
        return Err(Error::Config("fraclap function may only use x".into()));
    }
    if cfg.points.is_empty() {
        return Err(Error::Config("fraclap needs points".into()));
    }
    let support = cfg.support.map(|[a, b]| (a, b));
    if let Some((a, b)) = support {
        if !(a < b) {
            return Err(Error::Config(format!("bad support [{a}, {b}]")));
        }
    }
    let phi = |x: f64| match support {
        Some((a, b)) if x <= a || x >= b => 0.0,
        _ => expr.eval(&[x]),
    };
    let ss = cfg.s_values()?;
    let jobs: Vec<(f64, f64)> = ss.iter().flat_map(|&s| cfg.points.iter().map(move |&x| (s, x))).collect();
    let results: Vec<Result<(f64, f64, f64, f64)>> = jobs
        .par_iter()
        .map(|&(s, x)| {
            let radius = cfg.radius.unwrap_or_else(|| match support {
                Some((a, b)) => 2.0 * ((x - a).abs().max((x - b).abs())) + 1.0,
                None => 100.0,
            });
            let opts = FracLapOptions { radius, tol: cfg.quad_tol, sup_abs: None, support, max_panels: 200_000 };
            let e = frac_laplacian_pointwise(phi, s, x, &opts)?;
            Ok((s, x, e.value, e.error))
        })
        .collect();
    let mut csv = String::from("s,x,value,error\n");
    let mut rows = Vec::new();
    for r in results {
        let (s, x, v, e) = r?;
        let _ = writeln!(csv, "{},{},{},{}", fmt17(s), fmt17(x), fmt17(v), fmt17(e));
        rows.push(json!({ "s": s, "x": x, "value": v, "error": e }));
    }
    Ok(Outcome { stdout: csv.clone(), json: json!({ "command": "fraclap", "values": rows }), csv, code: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(src: &str) -> RunConfig {
        RunConfig::from_json(src).unwrap()
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = cfg(r#"{"domain": {"intervals": [[-1, 1]]}}"#);
        assert_eq!(c.s_values().unwrap(), vec![0.5]);
        assert_eq!(c.n_values().unwrap(), vec![256]);
        let c = cfg(r#"{"n": 100}"#);
        assert!(matches!(c.n_values(), Err(Error::Config(_))));
        let c = cfg(r#"{"n": [8, 4096]}"#);
        assert!(c.n_values().is_err());
        let c = cfg(r#"{"s": [0.5, 1.0]}"#);
        assert!(c.s_values().is_err());
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn overrides_and_seed() {
        let mut c = cfg(r#"{"s": [0.2, 0.3], "seed": 5}"#);
        let args = RunArgs { config: PathBuf::new(), s: Some(0.7), n: Some(64), tol: Some(0.1), jobs: None };
        c.apply_overrides(&args, Some("17")).unwrap();
        assert_eq!(c.s_values().unwrap(), vec![0.7]);
        assert_eq!(c.n_values().unwrap(), vec![64]);
        assert_eq!(c.tol, 0.1);
        assert_eq!(c.seed(), 17);
        assert!(c.apply_overrides(&args, Some("abc")).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Support { margin: 0.1 }), 2);
        assert_eq!(exit_code(&Error::Range("x".into())), 2);
        assert_eq!(exit_code(&Error::Convergence("x".into())), 1);
    }

    #[test]
    fn eigen_csv_is_ascending() {
        let c = cfg(r#"{"domain": {"intervals": [[-1, 1]]}, "n": 32, "k_max": 4}"#);
        let out = cmd_eigen(&c).unwrap();
        let lines: Vec<&str> = out.csv.lines().collect();
        assert_eq!(lines[0], "k,lambda,gap");
        assert_eq!(lines.len(), 5);
        let lam: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert!(lam.windows(2).all(|w| w[0] < w[1]));
    }
}
