//! The `bigframe` command line.
//!
//! Every subcommand prints a fixed-width table to stdout and, with `--out`,
//! writes a JSON report. Exit codes: 0 pass, 1 certification failure, 2 input
//! error, 3 numerical breakdown.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::dual;
use crate::error::{Error, Result};
use crate::frame_op::{self, FrameOperator};
use crate::gallery::{self, oracles};
use crate::kframe::{self, KCertificate};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::op_calc;
use crate::spec_io::{self, FrameSpec};
use crate::stability::{self, PerturbParams, Variant};
use crate::system::{BiGSystem, LinOp, Tolerances};

#[derive(Debug, Parser)]
#[command(name = "bigframe", version, about = "Bi-g-frame and K-bi-g-frame analysis")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Relative tolerance for Hermitian and tightness tests
    #[arg(long, global = true)]
    tol_herm: Option<f64>,
    /// Absolute tolerance for positivity tests
    #[arg(long, global = true)]
    tol_psd: Option<f64>,
    /// Relative rank cutoff
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Number of random probe vectors
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Write the JSON report here
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Perturbation variant: T51, C52, T53, T81, C82, T83 or T84
    #[arg(long, global = true)]
    variant: Option<String>,
    /// Hypothesis constants (default 0)
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long = "D", global = true)]
    d: Option<f64>,
}

#[derive(Debug, Args)]
struct Claims {
    /// Claimed lower constant to certify (K-bound when K is present)
    #[arg(long)]
    claim_lower: Option<f64>,
    /// Claimed upper constant to certify
    #[arg(long)]
    claim_upper: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full pipeline: operator, bounds, K-check, dual, reconstruction
    Analyze {
        spec: PathBuf,
        #[command(flatten)]
        claims: Claims,
    },
    /// Optimal ordinary bounds and the inverse-norm check
    Bounds { spec: PathBuf },
    /// Optimal K-bounds, square-root factorization and promotion
    Kcheck {
        spec: PathBuf,
        /// Operator file for K (overrides the spec's K)
        #[arg(long)]
        k: Option<PathBuf>,
        #[command(flatten)]
        claims: Claims,
    },
    /// Canonical dual families
    Dual { spec: PathBuf },
    /// Reconstruct a vector through both dual formulas
    Reconstruct {
        spec: PathBuf,
        /// `e3` for a basis vector or comma-separated entries such as `1,0.5-2i,0`
        #[arg(long)]
        vector: String,
    },
    /// Validate a perturbation against the predicted bounds
    Perturb {
        base: PathBuf,
        perturbed: PathBuf,
        #[arg(long)]
        k: Option<PathBuf>,
    },
    /// Transform a system by an auxiliary operator
    Transform {
        spec: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Operator file: T for dilate and promote, M for compose
        #[arg(long)]
        op: PathBuf,
        #[arg(long, default_value_t = 1)]
        power: u32,
        /// Write the transformed frame-spec here
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Emit a frame-spec
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 6)]
        atoms: usize,
        /// Comma-separated codimensions, cycled over atoms
        #[arg(long, default_value = "1")]
        codims: String,
        #[arg(long)]
        ensure_frame: bool,
        /// Tight constant for `tight`
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Rank of K for `tight`
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Run the property suite against one instance
    Verify { spec: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Dilate,
    Compose,
    Promote,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenKind {
    Example,
    Random,
    Tight,
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

/// Accumulates sections and checks; serialized with sorted keys.
struct Report {
    command: &'static str,
    seed: u64,
    tol: Option<Tolerances>,
    sections: Map<String, Value>,
    checks: Vec<Check>,
    errors: Vec<Error>,
    rows: Vec<(String, String)>,
}

impl Report {
    fn new(command: &'static str, seed: u64) -> Self {
        Report { command, seed, tol: None, sections: Map::new(), checks: vec![], errors: vec![], rows: vec![] }
    }

    fn put<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).expect("serializable");
        self.sections.insert(key.to_string(), v);
    }

    fn row(&mut self, label: &str, value: impl Into<String>) {
        self.rows.push((label.to_string(), value.into()));
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into() });
    }

    /// Records a module error as a failed check and keeps going.
    fn fail(&mut self, name: &str, e: Error) {
        self.check(name, false, format!("{}: {e}", e.code()));
        self.errors.push(e);
    }

    fn exit_code(&self) -> i32 {
        let worst = self.errors.iter().map(Error::exit_code).max().unwrap_or(0);
        if worst > 0 {
            worst
        } else if self.checks.iter().all(|c| c.passed) {
            0
        } else {
            1
        }
    }

    fn to_json(&self) -> Value {
        let mut m = self.sections.clone();
        m.insert("command".into(), json!(self.command));
        m.insert("seed".into(), json!(self.seed));
        if let Some(t) = &self.tol {
            m.insert("tol".into(), serde_json::to_value(t).expect("serializable"));
        }
        m.insert("checks".into(), serde_json::to_value(&self.checks).expect("serializable"));
        let errors: Vec<Value> =
            self.errors.iter().map(|e| json!({"code": e.code(), "message": e.to_string()})).collect();
        m.insert("errors".into(), Value::Array(errors));
        let status = match self.exit_code() {
            0 => "pass",
            1 => "fail",
            _ => "error",
        };
        m.insert("status".into(), json!(status));
        Value::Object(m)
    }

    fn table(&self) -> String {
        let mut s = format!("bigframe {}  (seed {})\n", self.command, self.seed);
        for (k, v) in &self.rows {
            s.push_str(&format!("  {k:<30} {v}\n"));
        }
        if !self.checks.is_empty() {
            s.push_str(&format!("  {:<44} {:<6} {}\n", "check", "result", "detail"));
            for c in &self.checks {
                let r = if c.passed { "PASS" } else { "FAIL" };
                s.push_str(&format!("  {:<44} {:<6} {}\n", c.name, r, c.detail));
            }
        }
        for e in &self.errors {
            s.push_str(&format!("  error {}: {e}\n", e.code()));
        }
        let status = match self.exit_code() {
            0 => "PASS",
            1 => "FAIL",
            _ => "ERROR",
        };
        s.push_str(&format!("  {:<30} {status}\n", "status"));
        s
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let command = command_name(&cli.command);
    let mut report = Report::new(command, cli.global.seed);
    if let Err(e) = dispatch(&cli, &mut report, out) {
        report.errors.push(e);
    }
    if !matches!(cli.command, Command::Gen { .. }) || !report.errors.is_empty() {
        let _ = write!(out, "{}", report.table());
    }
    for e in &report.errors {
        let _ = writeln!(err, "error: {}: {e}", e.code());
    }
    if let Some(path) = &cli.global.out {
        if !matches!(cli.command, Command::Gen { .. }) || !report.errors.is_empty() {
            let text = serde_json::to_string_pretty(&report.to_json()).expect("serializable") + "\n";
            if let Err(e) = std::fs::write(path, text) {
                let _ = writeln!(err, "error: IoError: cannot write {}: {e}", path.display());
                return 2;
            }
        }
    }
    report.exit_code()
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Analyze { .. } => "analyze",
        Command::Bounds { .. } => "bounds",
        Command::Kcheck { .. } => "kcheck",
        Command::Dual { .. } => "dual",
        Command::Reconstruct { .. } => "reconstruct",
        Command::Perturb { .. } => "perturb",
        Command::Transform { .. } => "transform",
        Command::Gen { .. } => "gen",
        Command::Verify { .. } => "verify",
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<FrameSpec> {
    spec_io::load_system(&read(path)?)
}

fn tolerances(g: &Global, spec: Option<&FrameSpec>) -> Result<Tolerances> {
    let mut t = spec.map(FrameSpec::tolerances).unwrap_or_default();
    if let Some(v) = g.tol_herm {
        t.herm_rel = v;
    }
    if let Some(v) = g.tol_psd {
        t.psd_abs = v;
    }
    if let Some(v) = g.tol_rank {
        t.rank_rel = v;
    }
    if let Some(v) = g.samples {
        t.sample_count = v;
    }
    t.validate()?;
    Ok(t)
}

fn params(g: &Global, fallback: Option<Variant>) -> Result<PerturbParams> {
    let variant = match (&g.variant, fallback) {
        (Some(v), _) => v.parse()?,
        (None, Some(v)) => v,
        (None, None) => return Err(Error::BadInputs("--variant is required".into())),
    };
    let mut p = PerturbParams::new(variant);
    p.alpha = g.alpha.unwrap_or(0.0);
    p.beta = g.beta.unwrap_or(0.0);
    p.gamma = g.gamma.unwrap_or(0.0);
    p.sigma = g.sigma.unwrap_or(0.0);
    p.d = g.d.unwrap_or(0.0);
    Ok(p)
}

fn dispatch(cli: &Cli, r: &mut Report, out: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Analyze { spec, claims } => {
            let spec = load(spec)?;
            let tol = tolerances(g, Some(&spec))?;
            r.tol = Some(tol);
            analyze(&spec, claims, &tol, g.seed, r);
        }
        Command::Bounds { spec } => {
            let spec = load(spec)?;
            let tol = tolerances(g, Some(&spec))?;
            r.tol = Some(tol);
            let op = frame_op::frame_operator(&spec.system);
            section_operator(&op, r);
            section_bounds(&op, &tol, r);
        }
        Command::Kcheck { spec, k, claims } => {
            let spec = load(spec)?;
            let tol = tolerances(g, Some(&spec))?;
            r.tol = Some(tol);
            let k = match k {
                Some(p) => spec_io::load_operator(&read(p)?, spec.system.dim())?,
                None => spec.k.clone().ok_or_else(|| Error::BadInputs("no K in spec; pass --k".into()))?,
            };
            let op = frame_op::frame_operator(&spec.system);
            section_k(&op, &k, claims, &tol, r);
            if let Ok(b) = frame_op::bounds_of(&op, &tol) {
                if b.is_frame {
                    match kframe::promote_ordinary(&b, &k) {
                        Ok(p) => r.put("promoted", &p),
                        Err(e) => r.put("promoted", json!({"code": e.code(), "message": e.to_string()})),
                    }
                }
            }
        }
        Command::Dual { spec } => {
            let spec = load(spec)?;
            let tol = tolerances(g, Some(&spec))?;
            r.tol = Some(tol);
            let d = dual::dual_system(&spec.system, &tol)?;
            r.put("dual", &d);
            let families: Vec<Value> = spec
                .system
                .atoms()
                .ids()
                .iter()
                .zip(d.phi_t.iter().zip(&d.psi_t))
                .map(|(id, (p, q))| json!({"id": id, "phi": p, "psi": q}))
                .collect();
            r.put("dual_atoms", families);
            r.row("dual Bessel bound", fmt(d.bessel_dual));
            r.row("1/A", fmt(1.0 / d.lower));
            r.check("dual Bessel bound ≤ 1/A", d.bessel_ok, format!("{} ≤ {}", fmt(d.bessel_dual), fmt(1.0 / d.lower)));
        }
        Command::Reconstruct { spec, vector } => {
            let spec = load(spec)?;
            let tol = tolerances(g, Some(&spec))?;
            r.tol = Some(tol);
            let f = parse_vector(vector, spec.system.dim())?;
            let d = dual::dual_system(&spec.system, &tol)?;
            let rec = dual::reconstruct(&spec.system, &d, &f)?;
            r.put("f", pairs(&f));
            r.put("f1", pairs(&rec.f1));
            r.put("f2", pairs(&rec.f2));
            r.put("res1", rec.res1);
            r.put("res2", rec.res2);
            r.row("residual (1)", fmt(rec.res1));
            r.row("residual (2)", fmt(rec.res2));
            r.check("formula (1) residual", rec.res1 <= tol.recon_abs, format!("≤ {}", fmt(tol.recon_abs)));
            r.check("formula (2) residual", rec.res2 <= tol.recon_abs, format!("≤ {}", fmt(tol.recon_abs)));
        }
        Command::Perturb { base, perturbed, k } => {
            let base = load(base)?;
            let pert = load(perturbed)?;
            let tol = tolerances(g, Some(&base))?;
            r.tol = Some(tol);
            let p = params(g, None)?;
            let k = match k {
                Some(path) => Some(spec_io::load_operator(&read(path)?, base.system.dim())?),
                None => base.k.clone(),
            };
            perturb(&base.system, &pert.system, k.as_ref(), &p, &tol, g.seed, r)?;
        }
        Command::Transform { spec, mode, op, power, emit } => {
            let spec = load(spec)?;
            let tol = tolerances(g, Some(&spec))?;
            r.tol = Some(tol);
            let t = spec_io::load_operator(&read(op)?, spec.system.dim())?;
            let new_system = transform(&spec, *mode, &t, *power, &tol, r)?;
            if let (Some(path), Some(sys)) = (emit, new_system) {
                let mut s = FrameSpec::new(sys);
                s.k = spec.k.clone();
                s.tol = spec.tol;
                std::fs::write(path, spec_io::save_system(&s) + "\n")
                    .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
            }
        }
        Command::Gen { kind, dim, atoms, codims, ensure_frame, a, rank } => {
            let spec = generate(*kind, *dim, *atoms, codims, *ensure_frame, *a, *rank, g.seed)?;
            let text = spec_io::save_system(&spec) + "\n";
            match &g.out {
                Some(path) => std::fs::write(path, text)
                    .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?,
                None => write!(out, "{text}").map_err(|e| Error::Io(e.to_string()))?,
            }
        }
        Command::Verify { spec } => {
            let spec = load(spec)?;
            let tol = tolerances(g, Some(&spec))?;
            r.tol = Some(tol);
            let p = if g.variant.is_some() { Some(params(g, None)?) } else { None };
            verify(&spec, p, &tol, g.seed, r);
        }
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "+inf".into()
        } else {
            "-inf".into()
        }
    } else if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e6) {
        format!("{x:.6e}")
    } else {
        format!("{x:.12}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Rotates `v` so its largest entry is real and positive.
fn fix_phase(mut v: CVector) -> CVector {
    if let Some(big) = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) {
        if big.norm() > 0.0 {
            let ph = big.conj() / big.norm();
            v *= ph;
        }
    }
    v
}

fn parse_vector(s: &str, n: usize) -> Result<CVector> {
    let s = s.trim();
    if let Some(idx) = s.strip_prefix('e').and_then(|i| i.parse::<usize>().ok()) {
        if idx == 0 || idx > n {
            return Err(Error::DimMismatch(format!("basis vector e{idx} outside 1..={n}")));
        }
        let mut v = CVector::zeros(n);
        v[idx - 1] = linalg::c(1.0);
        return Ok(v);
    }
    let entries = s
        .split(',')
        .map(|t| C64::from_str(t.trim()).map_err(|_| Error::BadInputs(format!("cannot parse entry {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if entries.len() != n {
        return Err(Error::DimMismatch(format!("vector has {} entries, dim is {n}", entries.len())));
    }
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(CVector::from_vec(entries))
}

fn section_operator(op: &FrameOperator, r: &mut Report) {
    r.put("S", op.s.matrix().pipe(spec_io::matrix_to_rows));
    r.put("hermitian_defect", op.herm_defect);
    r.row("hermitian defect", fmt(op.herm_defect));
}

trait Pipe: Sized {
    fn pipe<R>(self, f: impl FnOnce(Self) -> R) -> R {
        f(self)
    }
}
impl<T> Pipe for T {}

fn section_bounds(op: &FrameOperator, tol: &Tolerances, r: &mut Report) -> Option<f64> {
    match frame_op::bounds_of(op, tol) {
        Ok(b) => {
            r.row("lower bound A", fmt(b.lower));
            r.row("upper bound B", fmt(b.upper));
            r.row("tight / Parseval", format!("{} / {}", b.is_tight, b.is_parseval));
            r.check("frame", b.is_frame, format!("λ_min(herm S) = {}", fmt(b.lower)));
            if b.is_frame {
                match frame_op::inverse_norm_check(op, b.lower, tol) {
                    Ok((n, ok)) => {
                        r.put("inverse_norm", n);
                        r.check("‖S⁻¹‖ ≤ 1/A", ok, format!("{} ≤ {}", fmt(n), fmt(1.0 / b.lower)));
                    }
                    Err(e) => r.fail("‖S⁻¹‖ ≤ 1/A", e),
                }
            }
            let lower = b.is_frame.then_some(b.lower);
            r.put("bounds", &b);
            lower
        }
        Err(e) => {
            r.fail("frame", e);
            None
        }
    }
}

fn claim_checks(
    h: &CMatrix,
    k: Option<&LinOp>,
    lower_opt: f64,
    upper_opt: f64,
    claims: &Claims,
    tol: &Tolerances,
    r: &mut Report,
) {
    let mut out = Map::new();
    if let Some(c) = claims.claim_lower {
        let n = h.nrows();
        let g = match k {
            Some(k) => k.matrix() * k.adjoint(),
            None => linalg::identity(n),
        };
        let valid = c <= lower_opt + tol.psd_abs;
        let mut entry = json!({"value": c, "optimal": lower_opt, "valid": valid});
        if !valid {
            let e = linalg::eigh(&(h - g.scale(c)));
            let f = fix_phase(e.vectors.column(0).into_owned());
            let form = f.dotc(&(h * &f)).re;
            let rhs = c * f.dotc(&(&g * &f)).re;
            entry["witness"] = json!(pairs(&f));
            entry["form"] = json!(form);
            entry["claimed_side"] = json!(rhs);
        }
        r.check("claimed lower constant", valid, format!("{} vs optimal {}", fmt(c), fmt(lower_opt)));
        out.insert("lower".into(), entry);
    }
    if let Some(c) = claims.claim_upper {
        let valid = upper_opt <= c + tol.psd_abs;
        let mut entry = json!({"value": c, "optimal": upper_opt, "valid": valid});
        let mut detail = format!("{} vs optimal {}", fmt(c), fmt(upper_opt));
        if !valid {
            let e = linalg::eigh(h);
            let f = fix_phase(e.vectors.column(h.nrows() - 1).into_owned());
            let form = f.dotc(&(h * &f)).re;
            entry["witness"] = json!(pairs(&f));
            entry["form"] = json!(form);
            detail = format!("{detail}; witness form {} > {}", fmt(form), fmt(c));
        }
        r.check("claimed upper constant", valid, detail);
        out.insert("upper".into(), entry);
    }
    if !out.is_empty() {
        r.put("claims", Value::Object(out));
    }
}

fn section_k(op: &FrameOperator, k: &LinOp, claims: &Claims, tol: &Tolerances, r: &mut Report) {
    let kb = match kframe::k_bounds_of(op, k, tol) {
        Ok(kb) => kb,
        Err(e) => return r.fail("K-frame", e),
    };
    r.row("optimal K-lower bound", fmt(kb.lower_k));
    r.row("rank K", kb.rank_k.to_string());
    if kb.zero_k {
        r.check("K-frame", kb.is_kframe, "K = 0: lower inequality is vacuous");
    } else {
        r.check("K-frame", kb.is_kframe, format!("pencil λ_min = {}", fmt(kb.lower_k)));
    }
    match kframe::sqrt_factorize(op, k, tol) {
        Ok(sq) => {
            r.row("K = S^{1/2}U residual", fmt(sq.residual));
            r.check(
                "square-root test agrees",
                sq.is_kframe_iff == kb.is_kframe,
                format!("range inclusion {}, pencil {}", sq.is_kframe_iff, kb.is_kframe),
            );
            r.put("sqrt_factorization", json!({"residual": sq.residual, "is_kframe_iff": sq.is_kframe_iff}));
        }
        Err(e) => r.put("sqrt_factorization", json!({"code": e.code(), "message": e.to_string()})),
    }
    claim_checks(op.herm.matrix(), Some(k), kb.lower_k, kb.upper, claims, tol, r);
    r.put("k_bounds", &kb);
}

fn basis(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = linalg::c(1.0);
    v
}

fn analyze(spec: &FrameSpec, claims: &Claims, tol: &Tolerances, seed: u64, r: &mut Report) {
    let sys = &spec.system;
    let op = frame_op::frame_operator(sys);
    section_operator(&op, r);
    let lower = section_bounds(&op, tol, r);
    match &spec.k {
        Some(k) => section_k(&op, k, claims, tol, r),
        None => {
            let spec = linalg::eigenvalues(op.herm.matrix());
            claim_checks(op.herm.matrix(), None, spec[0], spec[spec.len() - 1], claims, tol, r);
        }
    }
    if lower.is_none() {
        return;
    }
    let d = match dual::dual_system(sys, tol) {
        Ok(d) => d,
        Err(e) => return r.fail("dual system", e),
    };
    r.check("dual Bessel bound ≤ 1/A", d.bessel_ok, format!("{} ≤ {}", fmt(d.bessel_dual), fmt(1.0 / d.lower)));
    r.put("dual", &d);
    let n = sys.dim();
    let mut rng = gallery::rng(seed);
    let mut vectors: Vec<CVector> = (0..n).map(|i| basis(n, i)).collect();
    vectors.extend((0..tol.sample_count.min(20)).map(|_| linalg::random_unit(&mut rng, n)));
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for f in &vectors {
        match dual::reconstruct(sys, &d, f) {
            Ok(rec) => {
                r1 = r1.max(rec.res1);
                r2 = r2.max(rec.res2);
            }
            Err(e) => return r.fail("reconstruction", e),
        }
    }
    r.put("reconstruction", json!({"vectors": vectors.len(), "max_res1": r1, "max_res2": r2}));
    r.row("max reconstruction residual", fmt(r1.max(r2)));
    r.check(
        "reconstruction",
        r1.max(r2) <= tol.recon_abs,
        format!("{} vectors, ≤ {}", vectors.len(), fmt(tol.recon_abs)),
    );
}

fn perturb(
    base: &BiGSystem,
    pert: &BiGSystem,
    k: Option<&LinOp>,
    p: &PerturbParams,
    tol: &Tolerances,
    seed: u64,
    r: &mut Report,
) -> Result<()> {
    r.put("params", p);
    let h = stability::check_hypothesis(base, pert, k, p, tol, seed)?;
    r.row("hypothesis worst slack", fmt(h.worst_slack));
    r.check("hypothesis (sampled)", h.holds_sampled, format!("{} probes", h.probes));
    r.put("hypothesis", &h);
    if !h.holds_sampled {
        r.errors.push(Error::HypothesisFail { worst_slack: h.worst_slack });
        return Ok(());
    }
    let rep = stability::validate_stability(base, pert, k, p, tol, seed)?;
    if let Some(l) = rep.predicted.lower {
        r.row("predicted lower", fmt(l));
    }
    if let Some(l) = rep.actual_lower {
        r.row("actual lower", fmt(l));
    }
    r.row("predicted upper", fmt(rep.predicted.upper));
    r.row("actual upper", fmt(rep.actual_upper));
    if let Some(ok) = rep.lower_ok {
        r.check("predicted lower ≤ actual", ok, "");
    }
    r.check("actual upper ≤ predicted", rep.upper_ok, "");
    r.put("stability", &rep);
    Ok(())
}

fn transform(
    spec: &FrameSpec,
    mode: Mode,
    t: &LinOp,
    power: u32,
    tol: &Tolerances,
    r: &mut Report,
) -> Result<Option<BiGSystem>> {
    let sys = &spec.system;
    let k = spec.k.clone();
    let need_k = || k.clone().ok_or_else(|| Error::BadInputs("this transform needs K in the spec".into()));
    match mode {
        Mode::Dilate => {
            let d = op_calc::dilate_system(sys, t, power, tol)?;
            r.row("identity residual", fmt(d.identity_residual));
            r.check("S' = (I+Tⁿ)* S (I+Tⁿ)", d.identity_residual <= 1e-10, fmt(d.identity_residual));
            if let Some(k) = &k {
                let before = kframe::k_bounds(sys, k, tol)?;
                let after = kframe::k_bounds(&d.system, k, tol)?;
                r.row("K-lower before / after", format!("{} / {}", fmt(before.lower_k), fmt(after.lower_k)));
                r.put("k_bounds", json!({"before": before, "after": after}));
                if before.is_kframe {
                    r.check("K-frame preserved", after.is_kframe, fmt(after.lower_k));
                }
            }
            r.put("dilation", &d);
            Ok(Some(d.system))
        }
        Mode::Compose => {
            let k = need_k()?;
            let c = op_calc::compose_system(sys, t, &k, tol)?;
            let opt = kframe::k_bounds(&c.system, &k, tol)?;
            if let Some(cert) = &c.certificate {
                r.row("certificate lower / upper", format!("{} / {}", fmt(cert.lower), fmt(cert.upper)));
                r.check("certificate ≤ optimal", cert.lower <= opt.lower_k + 1e-9, fmt(opt.lower_k));
                r.check("optimal upper ≤ certificate", opt.upper <= cert.upper + 1e-9, fmt(opt.upper));
            }
            r.row("optimal K-lower", fmt(opt.lower_k));
            r.put("composition", &c);
            r.put("optimal", &opt);
            Ok(Some(c.system))
        }
        Mode::Promote => {
            let k = need_k()?;
            let cert = op_calc::range_restricted_promote(sys, &k, t, tol)?;
            let opt = kframe::k_bounds(sys, t, tol)?;
            r.row("T-certificate lower", fmt(cert.lower_k));
            r.row("optimal T-lower", fmt(opt.lower_k));
            r.check("certificate ≤ optimal", cert.lower_k <= opt.lower_k + 1e-9, "");
            r.put("certificate", &cert);
            r.put("optimal", &opt);
            Ok(None)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn generate(
    kind: GenKind,
    dim: usize,
    atoms: usize,
    codims: &str,
    ensure_frame: bool,
    a: f64,
    rank: Option<usize>,
    seed: u64,
) -> Result<FrameSpec> {
    if dim == 0 || atoms == 0 {
        return Err(Error::BadInputs("dim and atoms must be positive".into()));
    }
    match kind {
        GenKind::Example => {
            let (sys, k) = gallery::example_6_3();
            Ok(FrameSpec::new(sys).with_k(k))
        }
        GenKind::Random => {
            let cd = codims
                .split(',')
                .map(|t| t.trim().parse::<usize>().ok().filter(|&d| d > 0))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::BadInputs(format!("bad codims {codims:?}")))?;
            if cd.iter().any(|&d| d > dim) {
                return Err(Error::BadInputs(format!("codimension exceeds dim {dim}")));
            }
            Ok(FrameSpec::new(gallery::random_system(dim, atoms, &cd, seed, ensure_frame).system))
        }
        GenKind::Tight => {
            let r = rank.unwrap_or(dim);
            if r > dim {
                return Err(Error::BadInputs(format!("rank {r} exceeds dim {dim}")));
            }
            let k = if r == dim {
                LinOp::identity(dim)
            } else {
                gallery::random_rank_operator(&mut gallery::rng(seed ^ 0x5eed), dim, r)
            };
            let sys = gallery::tight_k_system(&k, a, atoms, seed)?;
            Ok(FrameSpec::new(sys).with_k(k))
        }
    }
}

fn verify(spec: &FrameSpec, p: Option<PerturbParams>, tol: &Tolerances, seed: u64, r: &mut Report) {
    let sys = &spec.system;
    let n = sys.dim();
    let op = frame_op::frame_operator(sys);
    let swapped = frame_op::frame_operator(&sys.swap());
    let snorm = linalg::spectral_norm(op.s.matrix()).max(1.0);

    let swap_err = linalg::max_abs_diff(swapped.s.matrix(), &op.s.adjoint());
    r.check("swap symmetry S(Ψ,Φ) = S*", swap_err <= 1e-12 * snorm, fmt(swap_err));

    let mut rng = gallery::rng(seed);
    let mut form_err = 0.0f64;
    for _ in 0..tol.sample_count.min(64) {
        let f = linalg::random_unit(&mut rng, n);
        let direct = frame_op::mixed_form(sys, &f);
        let via = f.dotc(&(op.s.matrix() * &f));
        form_err = form_err.max((direct - via).norm());
    }
    r.check("quadratic form = ⟨Sf, f⟩", form_err <= 1e-12 * snorm, fmt(form_err));

    let lower = section_bounds(&op, tol, r);
    if let (Ok(a), Ok(b)) = (frame_op::bounds_of(&op, tol), frame_op::bounds_of(&swapped, tol)) {
        let diff = (a.lower - b.lower).abs().max((a.upper - b.upper).abs());
        r.check("swap invariance of bounds", diff <= 1e-12 * snorm, fmt(diff));
    }

    if let Some(a) = lower {
        match dual::dual_system(sys, tol) {
            Ok(d) => {
                r.check("dual Bessel bound ≤ 1/A", d.bessel_ok, fmt(d.bessel_dual));
                let mut worst = 0.0f64;
                for _ in 0..20 {
                    let f = linalg::random_unit(&mut rng, n);
                    match dual::reconstruct(sys, &d, &f) {
                        Ok(rec) => worst = worst.max(rec.res1).max(rec.res2),
                        Err(e) => r.fail("reconstruction", e),
                    }
                }
                r.check("reconstruction residuals", worst <= tol.recon_abs, fmt(worst));
            }
            Err(e) => r.fail("dual system", e),
        }
        let _ = a;
    }

    let k = spec.k.clone().unwrap_or_else(|| LinOp::identity(n));
    verify_k(sys, &op, &k, tol, seed, r);
    verify_transforms(sys, &k, tol, r);
    if lower.is_some() {
        verify_stability(sys, &op, &k, p, tol, seed, r);
    }
}

fn verify_k(sys: &BiGSystem, op: &FrameOperator, k: &LinOp, tol: &Tolerances, seed: u64, r: &mut Report) {
    let kb = match kframe::k_bounds_of(op, k, tol) {
        Ok(kb) => kb,
        Err(e) => return r.fail("K-bounds", e),
    };
    r.row("optimal K-lower bound", fmt(kb.lower_k));
    let sq = kframe::sqrt_factorize(op, k, tol).map(|s| s.is_kframe_iff).unwrap_or(false);
    let h = op.herm.matrix();
    let thr = tol.psd_abs.max(1e-8 * linalg::spectral_norm(h).max(1.0));
    let sampled = oracles::sampled_k_inequality(h, k.matrix(), tol.sample_count, seed, thr).holds;
    let pencil = kb.is_kframe;
    r.check(
        "K characterizations agree",
        pencil == sq && pencil == sampled,
        format!("pencil {pencil}, S^1/2 range {sq}, sampled {sampled}"),
    );
    let swapped = kframe::k_bounds(&sys.swap(), k, tol);
    if let Ok(s) = swapped {
        let same = s.lower_k == kb.lower_k || (s.lower_k - kb.lower_k).abs() <= 1e-10 * kb.lower_k.abs().max(1.0);
        r.check("K swap symmetry", same, fmt((s.lower_k - kb.lower_k).abs()));
    }
    if !kb.is_kframe || kb.zero_k {
        return;
    }
    let cert = KCertificate { k: k.clone(), lower: kb.lower_k, upper: kb.upper };
    if let Ok(c) = kframe::combine_k(&[cert.clone(), cert.clone()], &[linalg::c(1.0), linalg::c(1.0)]) {
        if let Ok(opt) = kframe::k_bounds_of(op, &c.k, tol) {
            r.check("combined certificate ≤ optimal", c.lower <= opt.lower_k + 1e-9, fmt(c.lower));
        }
    }
    let two = LinOp::new(linalg::identity(sys.dim()).scale(2.0)).expect("finite");
    if let Ok(pc) = kframe::product_k(&[k.clone(), two], kb.lower_k, kb.upper) {
        if let Ok(opt) = kframe::k_bounds_of(op, &pc.k, tol) {
            r.check("product certificate ≤ optimal", pc.lower <= opt.lower_k + 1e-9, fmt(pc.lower));
        }
    }
}

fn verify_transforms(sys: &BiGSystem, k: &LinOp, tol: &Tolerances, r: &mut Report) {
    let n = sys.dim();
    match op_calc::dilate_system(sys, &LinOp::identity(n), 1, tol) {
        Ok(d) => r.check("dilation identity", d.identity_residual <= 1e-10, fmt(d.identity_residual)),
        Err(e) => r.fail("dilation identity", e),
    }
    let two = LinOp::new(linalg::identity(n).scale(2.0)).expect("finite");
    match op_calc::compose_system(sys, &two, k, tol) {
        Ok(c) => {
            if let (Some(cert), Ok(opt)) = (c.certificate, kframe::k_bounds(&c.system, k, tol)) {
                r.check("composition certificate ≤ optimal", cert.lower <= opt.lower_k + 1e-9, fmt(cert.lower));
            }
        }
        Err(e) => r.fail("composition", e),
    }
}

/// Scales Ψ by (1 + ε) so S₂ = (1 + ε)S₁, and checks the chosen variants.
#[allow(clippy::too_many_arguments)]
fn verify_stability(
    sys: &BiGSystem,
    op: &FrameOperator,
    k: &LinOp,
    chosen: Option<PerturbParams>,
    tol: &Tolerances,
    seed: u64,
    r: &mut Report,
) {
    const EPS: f64 = 0.02;
    let psi = sys.psi().iter().map(|q| LinOp::new(q.matrix().scale(1.0 + EPS)).expect("finite")).collect();
    let pert = sys.with_families(sys.phi().to_vec(), psi).expect("same shapes");
    let kmin = linalg::sigma_min(k.matrix());
    let snorm = linalg::spectral_norm(op.s.matrix());
    let list: Vec<PerturbParams> = match chosen {
        Some(p) => vec![p],
        None => Variant::ALL
            .into_iter()
            .map(|v| {
                let mut p = PerturbParams::new(v);
                match v {
                    Variant::C52 => p.d = EPS * snorm,
                    Variant::C82 => p.d = if kmin > 0.0 { EPS * snorm / kmin } else { f64::INFINITY },
                    _ => p.alpha = EPS,
                }
                p
            })
            .collect(),
    };
    let mut rows = vec![];
    for p in list {
        let name = format!("stability {}", p.variant);
        match stability::validate_stability(sys, &pert, Some(k), &p, tol, seed) {
            Ok(rep) => {
                r.check(&name, rep.passed, format!("upper {} ≤ {}", fmt(rep.actual_upper), fmt(rep.predicted.upper)));
                rows.push(serde_json::to_value(&rep).expect("serializable"));
            }
            Err(e @ (Error::CapViolated(_) | Error::BadInputs(_))) if chosen.is_none() => {
                rows.push(json!({"variant": p.variant, "skipped": e.to_string()}));
            }
            Err(e) => r.fail(&name, e),
        }
    }
    r.put("stability", rows);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_parsing() {
        assert_eq!(parse_vector("e2", 3).unwrap(), basis(3, 1));
        let v = parse_vector("1, 0.5-2i, 0", 3).unwrap();
        assert_eq!(v[1], C64::new(0.5, -2.0));
        assert_eq!(parse_vector("e4", 3).unwrap_err().code(), "DimMismatch");
        assert_eq!(parse_vector("1,2", 3).unwrap_err().code(), "DimMismatch");
        assert_eq!(parse_vector("1,x,2", 3).unwrap_err().code(), "BadInputs");
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt(3.0), "3");
        assert_eq!(fmt(0.125), "0.125");
        assert_eq!(fmt(f64::INFINITY), "+inf");
        assert_eq!(fmt(1e-9), "1.000000e-9");
    }

    #[test]
    fn phase_fix() {
        let v = CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0)]);
        assert_eq!(fix_phase(v)[1], C64::new(1.0, 0.0));
    }
}
