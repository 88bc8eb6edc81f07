//! Perturbation stability: hypothesis checks, closed-form bound predictions
//! and validation of the predictions against the perturbed system.
//!
//! All variants share the hypothesis shape
//!
//! ```text
//! ‖(S₁ − S₂) f‖ ≤ α‖S₁ f‖ + β‖S₂ f‖ + σ‖f‖ + γ·(‖f‖ or ‖K* f‖)
//! ```
//!
//! with S₁ the base operator and S₂ the perturbed one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_op::{self, FrameOperator};
use crate::gallery::rng;
use crate::kframe;
use crate::linalg::{self, CMatrix, CVector};
use crate::system::{BiGSystem, LinOp, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    T51,
    C52,
    T53,
    T81,
    C82,
    T83,
    T84,
}

impl Variant {
    pub const ALL: [Variant; 7] =
        [Variant::T51, Variant::C52, Variant::T53, Variant::T81, Variant::C82, Variant::T83, Variant::T84];

    /// K-frame variants predict a lower bound and need K.
    pub fn uses_k(self) -> bool {
        matches!(self, Variant::T81 | Variant::C82 | Variant::T83 | Variant::T84)
    }

    /// The γ (or D) term is measured against ‖K*f‖ instead of ‖f‖.
    pub fn gamma_on_k(self) -> bool {
        matches!(self, Variant::C82 | Variant::T83 | Variant::T84)
    }

    fn uses_d(self) -> bool {
        matches!(self, Variant::C52 | Variant::C82)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::BadInputs(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub variant: Variant,
}

impl PerturbParams {
    pub fn new(variant: Variant) -> Self {
        PerturbParams { alpha: 0.0, beta: 0.0, gamma: 0.0, sigma: 0.0, d: 0.0, variant }
    }

    /// Coefficients (α, β, σ, γ_f, γ_K) of the hypothesis as actually checked.
    fn hypothesis_terms(&self) -> [f64; 5] {
        let v = self.variant;
        let (a, b) = if v.uses_d() { (0.0, 0.0) } else { (self.alpha, self.beta) };
        let sigma = if v == Variant::T84 { self.sigma } else { 0.0 };
        let g = if v.uses_d() { self.d } else { self.gamma };
        if v.gamma_on_k() {
            [a, b, sigma, 0.0, g]
        } else {
            [a, b, sigma, g, 0.0]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub holds_sampled: bool,
    /// max over probes of the hypothesis gap (unit vectors).
    pub worst_slack: f64,
    pub witness: Option<Vec<[f64; 2]>>,
    pub probes: usize,
    /// ‖S₁ − S₂‖₂
    pub delta_norm: f64,
    /// ‖S₁ − S₂‖ ≤ σ + γ_f + γ_K·σ_min(K); sufficient for the hypothesis.
    pub norm_condition: bool,
}

fn operators(base: &BiGSystem, pert: &BiGSystem) -> Result<(FrameOperator, FrameOperator)> {
    if base.dim() != pert.dim() {
        return Err(Error::DimMismatch(format!("base dim {}, perturbed dim {}", base.dim(), pert.dim())));
    }
    Ok((frame_op::frame_operator(base), frame_op::frame_operator(pert)))
}

fn need_k<'a>(k: Option<&'a LinOp>, p: &PerturbParams, n: usize) -> Result<Option<&'a CMatrix>> {
    if !p.variant.uses_k() {
        return Ok(None);
    }
    let k = k.ok_or_else(|| Error::BadInputs(format!("variant {} needs K", p.variant)))?;
    if k.rows() != n || k.cols() != n {
        return Err(Error::DimMismatch(format!("K must be {n}×{n}")));
    }
    Ok(Some(k.matrix()))
}

/// Sampled test of the variant's hypothesis on seeded random unit vectors plus
/// the singular vectors of ΔS, S₁, S₂ and K*.
pub fn check_hypothesis(
    base: &BiGSystem,
    pert: &BiGSystem,
    k: Option<&LinOp>,
    p: &PerturbParams,
    tol: &Tolerances,
    seed: u64,
) -> Result<HypothesisCheck> {
    let (s1, s2) = operators(base, pert)?;
    let n = base.dim();
    let kmat = need_k(k, p, n)?;
    hypothesis_on(s1.s.matrix(), s2.s.matrix(), kmat, p, tol, seed)
}

fn hypothesis_on(
    s1: &CMatrix,
    s2: &CMatrix,
    k: Option<&CMatrix>,
    p: &PerturbParams,
    tol: &Tolerances,
    seed: u64,
) -> Result<HypothesisCheck> {
    let n = s1.nrows();
    let [a, b, sigma, gf, gk] = p.hypothesis_terms();
    let delta = s1 - s2;
    let k_adj = k.map(|k| k.adjoint());
    let gap = |f: &CVector| {
        let kf = k_adj.as_ref().map_or(0.0, |ka| (ka * f).norm());
        let fnorm = f.norm();
        (&delta * f).norm() - a * (s1 * f).norm() - b * (s2 * f).norm() - (sigma + gf) * fnorm - gk * kf
    };

    let mut r = rng(seed);
    let mut probes: Vec<CVector> = (0..tol.sample_count).map(|_| linalg::random_unit(&mut r, n)).collect();
    let mut structured = vec![&delta, s1, s2];
    if let Some(ka) = k_adj.as_ref() {
        structured.push(ka);
    }
    for m in structured {
        let d = linalg::svd(m);
        for i in 0..d.v.ncols() {
            probes.push(d.v.column(i).into_owned());
        }
    }

    let mut worst = f64::NEG_INFINITY;
    let mut arg = None;
    for f in &probes {
        let g = gap(f);
        if g > worst {
            worst = g;
            arg = Some(f);
        }
    }
    let holds_sampled = worst <= tol.psd_abs;
    let delta_norm = linalg::spectral_norm(&delta);
    let kmin = k.map_or(0.0, |k| if gk > 0.0 { linalg::sigma_min(k) } else { 0.0 });
    let norm_condition = delta_norm <= sigma + gf + gk * kmin;
    Ok(HypothesisCheck {
        holds_sampled,
        worst_slack: worst,
        witness: if holds_sampled { None } else { arg.map(|f| f.iter().map(|z| [z.re, z.im]).collect()) },
        probes: probes.len(),
        delta_norm,
        norm_condition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub lower: Option<f64>,
    pub upper: f64,
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::BadInputs(format!("{name} = {v} is outside [0, 1)")));
    }
    Ok(())
}

/// Closed-form bounds of the perturbed system.
pub fn predict_bounds(b_phi: f64, b_psi: f64, a: f64, b: f64, p: &PerturbParams) -> Result<Prediction> {
    let v = p.variant;
    for (name, x) in [("B_Phi", b_phi), ("B_Psi", b_psi)] {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::BadInputs(format!("{name} = {x} must be positive")));
        }
    }
    if v.uses_d() {
        if !(p.d > 0.0 && p.d < a) {
            return Err(Error::CapViolated(format!("D = {} must lie in (0, A = {a})", p.d)));
        }
    } else {
        for (name, x) in [("alpha", p.alpha), ("beta", p.beta), ("gamma", p.gamma), ("sigma", p.sigma)] {
            unit_interval(name, x)?;
        }
    }
    let needs_a = v != Variant::T51;
    if needs_a && !(a > 0.0 && a <= b && b.is_finite()) {
        return Err(Error::BadInputs(format!("need 0 < A ≤ B, got A = {a}, B = {b}")));
    }
    let root = (b_phi * b_psi).sqrt();
    let ratio = if needs_a { (b / a).sqrt() } else { 1.0 };
    let (al, be, ga, si) = (p.alpha, p.beta, p.gamma, p.sigma);

    let cap = |lhs: f64, what: &str| -> Result<()> {
        if lhs.max(be) < 1.0 {
            Ok(())
        } else {
            Err(Error::CapViolated(format!("max{{{what}, β}} = {} ≥ 1", lhs.max(be))))
        }
    };
    let out = match v {
        Variant::T51 | Variant::T81 => {
            cap(al + ga, "α+γ")?;
            let upper = ((1.0 + al) * root + ga) / (1.0 - be);
            let lower = (v == Variant::T81).then(|| a * (1.0 - (al + ga)) / (1.0 + be));
            Prediction { lower, upper }
        }
        Variant::C52 | Variant::C82 => {
            let g = p.d * ratio;
            Prediction { lower: (v == Variant::C82).then_some(a * (1.0 - g)), upper: root + g }
        }
        Variant::T53 | Variant::T83 => {
            let g = ga * ratio;
            cap(al + g, "α+γ√(B/A)")?;
            let upper = ((1.0 + al) * root + g) / (1.0 - be);
            let lower = (v == Variant::T83).then(|| a * (1.0 - (al + g)) / (1.0 + be));
            Prediction { lower, upper }
        }
        Variant::T84 => {
            let g = ga * ratio;
            cap(al + si + g, "α+σ+γ√(B/A)")?;
            Prediction {
                lower: Some(a * (1.0 - (al + si + g)) / (1.0 + be)),
                upper: ((1.0 + al) * root + si + g) / (1.0 - be),
            }
        }
    };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub variant: Variant,
    pub params: PerturbParams,
    pub seed: u64,
    /// The hypothesis is certified by sampling only.
    pub hypothesis_status: &'static str,
    pub hypothesis: HypothesisCheck,
    pub b_phi: f64,
    pub b_psi: f64,
    /// Bounds (A, B) of the base system: ordinary for Bessel variants, K-bounds otherwise.
    pub base_lower: f64,
    pub base_upper: f64,
    pub predicted: Prediction,
    pub actual_lower: Option<f64>,
    pub actual_upper: f64,
    pub lower_ok: Option<bool>,
    pub upper_ok: bool,
    pub passed: bool,
}

/// Predicts bounds of `pert` from `base` and compares with its optimal bounds.
pub fn validate_stability(
    base: &BiGSystem,
    pert: &BiGSystem,
    k: Option<&LinOp>,
    p: &PerturbParams,
    tol: &Tolerances,
    seed: u64,
) -> Result<StabilityReport> {
    let (s1, s2) = operators(base, pert)?;
    let n = base.dim();
    let kmat = need_k(k, p, n)?;
    let hypothesis = hypothesis_on(s1.s.matrix(), s2.s.matrix(), kmat, p, tol, seed)?;
    if !hypothesis.holds_sampled {
        return Err(Error::HypothesisFail { worst_slack: hypothesis.worst_slack });
    }
    let (b_phi, b_psi) = frame_op::family_bessel_bounds(base);
    let (base_lower, base_upper) = match k.filter(|_| p.variant.uses_k()) {
        Some(k) => {
            let r = kframe::k_bounds_of(&s1, k, tol)?;
            if !r.is_kframe || r.zero_k {
                return Err(Error::BadInputs(format!("base is not a K-frame (lower {:e})", r.lower_k)));
            }
            (r.lower_k, r.upper)
        }
        None => {
            let r = frame_op::bounds_of(&s1, tol)?;
            if p.variant != Variant::T51 && !r.is_frame {
                return Err(Error::BadInputs(format!("base is not a frame (lower {:e})", r.lower)));
            }
            (r.lower, r.upper)
        }
    };
    let predicted = predict_bounds(b_phi, b_psi, base_lower, base_upper, p)?;

    let actual_upper = *linalg::eigenvalues(s2.herm.matrix()).last().expect("dim > 0");
    let actual_lower = match (predicted.lower, k) {
        (Some(_), Some(k)) => Some(kframe::k_bounds_of(&s2, k, tol)?.lower_k),
        _ => None,
    };
    let lower_ok = predicted.lower.zip(actual_lower).map(|(pl, al)| pl <= al + tol.psd_abs);
    let upper_ok = actual_upper <= predicted.upper + tol.psd_abs;
    Ok(StabilityReport {
        variant: p.variant,
        params: *p,
        seed,
        hypothesis_status: "sampled",
        hypothesis,
        b_phi,
        b_psi,
        base_lower,
        base_upper,
        predicted,
        actual_lower,
        actual_upper,
        lower_ok,
        upper_ok,
        passed: upper_ok && lower_ok.unwrap_or(true),
    })
}
