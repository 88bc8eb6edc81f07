//! Operator toolbox (pseudo-inverse, Douglas factorization, bounded-below
//! constant, the α/β bracket lemma) and the transformations of systems by
//! auxiliary operators.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame_op;
use crate::gallery::rng;
use crate::kframe::{self, KBoundsReport};
use crate::linalg::{self, CMatrix, CVector};
use crate::system::{BiGSystem, LinOp, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoInverse {
    pub pinv: LinOp,
    pub rank: usize,
    /// ‖TXT − T‖/‖T‖, ‖XTX − X‖/‖X‖, ‖(TX)* − TX‖, ‖(XT)* − XT‖
    pub penrose: [f64; 4],
    /// ‖TX − P_R(T)‖ and ‖XT − P_R(T*)‖: N(X) = R(T)^⊥ and R(X) = N(T)^⊥.
    pub projector: [f64; 2],
    pub ok: bool,
}

/// Moore–Penrose inverse by truncated SVD, with its defining identities checked.
pub fn pseudo_inverse(t: &LinOp, tol: &Tolerances) -> PseudoInverse {
    let m = t.matrix();
    let (rows, cols) = m.shape();
    let d = linalg::svd(m);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let thr = linalg::rank_threshold(smax, rows, cols, tol.rank_rel);
    let rank = d.s.iter().filter(|&&s| s > thr && s > 0.0).count();
    let mut x = CMatrix::zeros(cols, rows);
    for i in 0..rank {
        x += (d.v.column(i) * d.u.column(i).adjoint()).scale(1.0 / d.s[i]);
    }
    let tx = m * &x;
    let xt = &x * m;
    let rel = |e: f64, s: f64| if s > 0.0 { e / s } else { e };
    let xnorm = if rank > 0 { 1.0 / d.s[rank - 1] } else { 0.0 };
    let penrose = [
        rel(linalg::spectral_norm(&(&tx * m - m)), smax),
        rel(linalg::spectral_norm(&(&xt * &x - &x)), xnorm),
        linalg::spectral_norm(&(tx.adjoint() - &tx)),
        linalg::spectral_norm(&(xt.adjoint() - &xt)),
    ];
    let pr = d.u.columns(0, rank) * d.u.columns(0, rank).adjoint();
    let pn = d.v.columns(0, rank) * d.v.columns(0, rank).adjoint();
    let projector = [linalg::spectral_norm(&(&tx - pr)), linalg::spectral_norm(&(&xt - pn))];
    // residuals grow with the condition number of the retained part
    let cond = if rank > 0 { smax / d.s[rank - 1] } else { 1.0 };
    let limit = tol.rank_rel * rows.max(cols) as f64 * cond;
    let ok = penrose.iter().chain(&projector).all(|&r| r <= limit);
    PseudoInverse { pinv: LinOp::new(x).expect("finite"), rank, penrose, projector, ok }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Douglas {
    /// R(T1) ⊆ R(T2)
    pub included: bool,
    /// Smallest λ with T1T1* ⪯ λ²T2T2*.
    pub lambda: Option<f64>,
    /// U = T2⁺T1, so T1 = T2U.
    #[serde(skip)]
    pub u: Option<LinOp>,
    /// ‖(I − P_R(T2)) T1‖
    pub leak: f64,
    /// ‖T2U − T1‖
    pub residual: Option<f64>,
    pub tolerance: f64,
}

pub fn douglas(t1: &LinOp, t2: &LinOp, tol: &Tolerances) -> Result<Douglas> {
    let (a, b) = (t1.matrix(), t2.matrix());
    let n = b.nrows();
    if a.nrows() != n {
        return Err(Error::ShapeMismatch(format!("T1 has {} rows, T2 has {n}", a.nrows())));
    }
    let d2 = linalg::svd(b);
    let smax2 = d2.s.first().copied().unwrap_or(0.0);
    let norm1 = linalg::spectral_norm(a);
    let tolerance = tol.rank_rel * n.max(a.ncols()).max(b.ncols()) as f64 * smax2.max(norm1);
    let thr = linalg::rank_threshold(smax2, b.nrows(), b.ncols(), tol.rank_rel);
    let r = d2.s.iter().filter(|&&s| s > thr && s > 0.0).count();
    let q = d2.u.columns(0, r).into_owned();
    let leak = linalg::spectral_norm(&(a - &q * (q.adjoint() * a)));
    let included = leak <= tolerance;
    if !included {
        return Ok(Douglas { included, lambda: None, u: None, leak, residual: None, tolerance });
    }
    let (b_pinv, _) = linalg::pinv(b, tol.rank_rel);
    let u = &b_pinv * a;
    let residual = linalg::spectral_norm(&(b * &u - a));
    let lambda = if r == 0 {
        0.0
    } else {
        let g1 = q.adjoint() * (a * a.adjoint()) * &q;
        let g2 = q.adjoint() * (b * b.adjoint()) * &q;
        let spec = linalg::pencil_eigenvalues(&g1, &g2).expect("T2T2* is definite on R(T2)");
        spec.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    };
    Ok(Douglas { included, lambda: Some(lambda), u: Some(LinOp::new(u)?), leak, residual: Some(residual), tolerance })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundedBelow {
    /// σ_min(T)², the best c with c‖f‖² ≤ ‖Tf‖².
    pub c: f64,
    pub injective_closed: bool,
}

pub fn bounded_below(t: &LinOp, tol: &Tolerances) -> BoundedBelow {
    let m = t.matrix();
    let d = linalg::svd(m);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let smin = if m.ncols() > m.nrows() { 0.0 } else { d.s.last().copied().unwrap_or(0.0) };
    let thr = linalg::rank_threshold(smax, m.nrows(), m.ncols(), tol.rank_rel);
    let c = smin * smin;
    BoundedBelow { c, injective_closed: smin > 0.0 && c > thr * thr }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisMethod {
    /// Exact eigenvalue test, valid for normal T.
    Spectral,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormBracket {
    pub hypothesis_holds: bool,
    pub method: HypothesisMethod,
    /// max over probes of ‖Tf − f‖ − α‖f‖ − β‖Tf‖ (unit f); per eigenvalue for the spectral test.
    pub worst_slack: f64,
    pub witness: Option<Vec<[f64; 2]>>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Bracket [(1−α)/(1+β), (1+α)/(1−β)] on σ(T) and [(1−β)/(1+α), (1+β)/(1−α)] on σ(T⁻¹).
    pub brackets_ok: bool,
}

fn to_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// ‖Tf − f‖ ≤ α‖f‖ + β‖Tf‖ and the singular-value brackets it implies.
pub fn lemma25_bracket(
    t: &LinOp,
    alpha: f64,
    beta: f64,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<NormBracket> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::BadConstants(format!("{name} = {v} is outside [0, 1)")));
        }
    }
    let m = t.matrix();
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::ShapeMismatch(format!("T must be square, got {}×{}", n, m.ncols())));
    }
    let tnorm = linalg::spectral_norm(m);
    let comm = m * m.adjoint() - m.adjoint() * m;
    let normal = linalg::spectral_norm(&comm) <= tol.herm_rel * tnorm.max(1.0).powi(2);

    let g = |f: &CVector| {
        let tf = m * f;
        (&tf - f).norm() - alpha * f.norm() - beta * tf.norm()
    };
    let (method, worst_slack, witness) = if normal {
        let schur = m.clone().schur();
        let (qs, ts) = schur.unpack();
        let mut worst = f64::NEG_INFINITY;
        let mut at = 0;
        for i in 0..n {
            let lam = ts[(i, i)];
            let slack = (lam - linalg::c(1.0)).norm() - alpha - beta * lam.norm();
            if slack > worst {
                worst = slack;
                at = i;
            }
        }
        (HypothesisMethod::Spectral, worst, Some(qs.column(at).into_owned()))
    } else {
        let mut r = rng(seed);
        let mut probes: Vec<CVector> = (0..samples).map(|_| linalg::random_unit(&mut r, n)).collect();
        let d = linalg::svd(m);
        let e = linalg::svd(&(m - linalg::identity(n)));
        for i in 0..d.v.ncols() {
            probes.push(d.v.column(i).into_owned());
            probes.push(e.v.column(i).into_owned());
        }
        let mut worst = f64::NEG_INFINITY;
        let mut arg = None;
        for f in probes {
            let s = g(&f);
            if s > worst {
                worst = s;
                arg = Some(f);
            }
        }
        (HypothesisMethod::Sampled, worst, arg)
    };
    let hypothesis_holds = worst_slack <= tol.psd_abs;
    let sv = linalg::svd(m).s;
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let sigma_min = sv.last().copied().unwrap_or(0.0);
    let eps = tol.psd_abs;
    let brackets_ok = hypothesis_holds
        && sigma_min > 0.0
        && (1.0 - alpha) / (1.0 + beta) <= sigma_min + eps
        && sigma_max <= (1.0 + alpha) / (1.0 - beta) + eps
        && (1.0 - beta) / (1.0 + alpha) <= 1.0 / sigma_max + eps
        && 1.0 / sigma_min <= (1.0 + beta) / (1.0 - alpha) + eps;
    Ok(NormBracket {
        hypothesis_holds,
        method,
        worst_slack,
        witness: if hypothesis_holds { None } else { witness.as_ref().map(to_pairs) },
        sigma_min,
        sigma_max,
        brackets_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dilation {
    #[serde(skip)]
    pub system: BiGSystem,
    /// ‖S' − (I+Tⁿ)* S (I+Tⁿ)‖ / max(1, ‖S'‖)
    pub identity_residual: f64,
    /// λ_min(herm(S') − herm(S)); meaningful as a monotonicity check when herm(S) ⪰ 0.
    pub gain_lambda_min: f64,
    /// herm(S') ⪰ herm(S) within psd_abs, reported only when herm(S) ⪰ 0.
    pub monotone: Option<bool>,
}

/// Φ'_ω = Φ_ω(I + Tⁿ), Ψ'_ω = Ψ_ω(I + Tⁿ) for a positive T.
pub fn dilate_system(sys: &BiGSystem, t: &LinOp, power: u32, tol: &Tolerances) -> Result<Dilation> {
    let n = sys.dim();
    if t.rows() != n || t.cols() != n {
        return Err(Error::ShapeMismatch(format!("T must be {n}×{n}")));
    }
    if power == 0 {
        return Err(Error::BadInputs("power must be at least 1".into()));
    }
    let tm = t.matrix();
    let defect = linalg::hermitian_defect(tm);
    let lam = linalg::eigenvalues(&linalg::hermitian_part(tm))[0];
    if defect > tol.herm_rel || lam < -tol.psd_abs {
        return Err(Error::NotPositive(format!("hermitian defect {defect:e}, λ_min {lam:e}")));
    }
    let mut tp = linalg::identity(n);
    for _ in 0..power {
        tp *= tm;
    }
    let factor = linalg::identity(n) + tp;
    let phi = sys.phi().iter().map(|p| LinOp::new(p.matrix() * &factor)).collect::<Result<_>>()?;
    let psi = sys.psi().iter().map(|q| LinOp::new(q.matrix() * &factor)).collect::<Result<_>>()?;
    let system = sys.with_families(phi, psi)?;

    let s = frame_op::frame_operator(sys);
    let s2 = frame_op::frame_operator(&system);
    let expected = factor.adjoint() * s.s.matrix() * &factor;
    let s2norm = linalg::spectral_norm(s2.s.matrix());
    let identity_residual = linalg::spectral_norm(&(s2.s.matrix() - expected)) / s2norm.max(1.0);
    let gain = s2.herm.matrix() - s.herm.matrix();
    let gain_lambda_min = linalg::eigenvalues(&gain)[0];
    let base_psd = linalg::eigenvalues(s.herm.matrix())[0] >= -tol.psd_abs;
    let monotone = base_psd.then_some(gain_lambda_min >= -tol.psd_abs * s2norm.max(1.0));
    Ok(Dilation { system, identity_residual, gain_lambda_min, monotone })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComposeCertificate {
    /// A·‖M⁺‖⁻²
    pub lower: f64,
    /// B·‖M‖²
    pub upper: f64,
    /// Base K-bounds the certificate was derived from.
    pub base_lower: f64,
    pub base_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Composition {
    #[serde(skip)]
    pub system: BiGSystem,
    /// Absent when the base system is not a K-frame.
    pub certificate: Option<ComposeCertificate>,
    pub commutator: f64,
}

fn with_right_factor(sys: &BiGSystem, f: &CMatrix) -> Result<BiGSystem> {
    let phi = sys.phi().iter().map(|p| LinOp::new(p.matrix() * f)).collect::<Result<_>>()?;
    let psi = sys.psi().iter().map(|q| LinOp::new(q.matrix() * f)).collect::<Result<_>>()?;
    sys.with_families(phi, psi)
}

fn commutator(m: &LinOp, k: &LinOp, tol: &Tolerances) -> Result<f64> {
    let (mm, km) = (m.matrix(), k.matrix());
    let defect = linalg::spectral_norm(&(mm * km - km * mm));
    let limit = tol.herm_rel * linalg::spectral_norm(mm) * linalg::spectral_norm(km);
    if defect > limit {
        return Err(Error::CommutationFail { defect, tol: limit });
    }
    Ok(defect)
}

fn square(op: &LinOp, n: usize, what: &str) -> Result<()> {
    if op.rows() != n || op.cols() != n {
        return Err(Error::ShapeMismatch(format!("{what} must be {n}×{n}, got {}×{}", op.rows(), op.cols())));
    }
    Ok(())
}

/// Φ'_ω = Φ_ω M*, Ψ'_ω = Ψ_ω M* for M commuting with K and R(K*) ⊆ R(M).
pub fn compose_system(sys: &BiGSystem, m: &LinOp, k: &LinOp, tol: &Tolerances) -> Result<Composition> {
    let n = sys.dim();
    square(m, n, "M")?;
    square(k, n, "K")?;
    let commutator = commutator(m, k, tol)?;
    let k_adj = LinOp::new(k.adjoint())?;
    let inc = douglas(&k_adj, m, tol)?;
    if !inc.included {
        return Err(Error::RangeFail(format!("R(K*) leaves R(M) by {:e}", inc.leak)));
    }
    let system = with_right_factor(sys, &m.adjoint())?;
    let base = kframe::k_bounds(sys, k, tol)?;
    let certificate = (base.is_kframe && !base.zero_k).then(|| {
        let m_norm = linalg::spectral_norm(m.matrix());
        let (m_pinv, _) = linalg::pinv(m.matrix(), tol.rank_rel);
        let pinv_norm = linalg::spectral_norm(&m_pinv);
        ComposeCertificate {
            lower: base.lower_k / (pinv_norm * pinv_norm),
            upper: base.upper * m_norm * m_norm,
            base_lower: base.lower_k,
            base_upper: base.upper,
        }
    });
    Ok(Composition { system, certificate, commutator })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Surjectivity {
    pub m_surjective: bool,
    pub composed_is_kframe: bool,
    pub composed_lower_k: f64,
    pub consistent: bool,
}

/// For a δ-tight pair (herm(S) = δKK*) with K invertible and MK = KM, the
/// composed system (ΦM*, ΨM*) is a K-frame iff M is surjective.
pub fn surjectivity_from_tight(
    sys: &BiGSystem,
    m: &LinOp,
    k: &LinOp,
    delta: f64,
    tol: &Tolerances,
) -> Result<Surjectivity> {
    let n = sys.dim();
    square(m, n, "M")?;
    square(k, n, "K")?;
    let op = frame_op::frame_operator(sys);
    let h = op.herm.matrix();
    let g = k.matrix() * k.adjoint();
    let defect = linalg::spectral_norm(&(h - g.scale(delta)));
    if !(delta > 0.0) || defect > tol.herm_rel * linalg::spectral_norm(h).max(1.0) {
        return Err(Error::NotTight { defect });
    }
    let rank = linalg::numerical_rank(k.matrix(), tol.rank_rel);
    if rank < n {
        return Err(Error::RankDeficientK { rank, dim: n });
    }
    commutator(m, k, tol)?;
    let m_surjective = linalg::numerical_rank(m.matrix(), tol.rank_rel) == n;
    let composed = with_right_factor(sys, &m.adjoint())?;
    let report = kframe::k_bounds(&composed, k, tol)?;
    Ok(Surjectivity {
        m_surjective,
        composed_is_kframe: report.is_kframe,
        composed_lower_k: report.lower_k,
        consistent: m_surjective == report.is_kframe,
    })
}

/// T-frame certificate A/λ² from a K-frame with R(T) ⊆ R(K), TT* ⪯ λ²KK*.
pub fn range_restricted_promote(sys: &BiGSystem, k: &LinOp, t: &LinOp, tol: &Tolerances) -> Result<KBoundsReport> {
    let n = sys.dim();
    square(k, n, "K")?;
    square(t, n, "T")?;
    let base = kframe::k_bounds(sys, k, tol)?;
    if !base.is_kframe {
        return Err(Error::BadInputs(format!("system is not a K-frame (lower {:e})", base.lower_k)));
    }
    let inc = douglas(t, k, tol)?;
    let lambda = match (inc.included, inc.lambda) {
        (true, Some(l)) => l,
        _ => return Err(Error::RangeFail(format!("R(T) leaves R(K) by {:e}", inc.leak))),
    };
    let zero_t = lambda == 0.0;
    Ok(KBoundsReport {
        lower_k: if zero_t { f64::INFINITY } else { base.lower_k / (lambda * lambda) },
        upper: base.upper,
        is_kframe: true,
        is_tight: false,
        tight_constant: None,
        pencil_spectrum: vec![],
        rank_k: linalg::numerical_rank(t.matrix(), tol.rank_rel),
        zero_k: zero_t,
    })
}
