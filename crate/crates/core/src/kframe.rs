//! K-bi-g-frames: optimal lower constants, tightness, certificates derived
//! from other certificates, and the square-root factorization test.
//!
//! The optimal constant is A* = sup { A : herm(S) ⪰ A·KK* }. Writing H in an
//! orthonormal basis adapted to range(K) ⊕ ker(K*),
//!
//! ```text
//! H = [H11 H12; H21 H22],   KK* = [G11 0; 0 0]
//! ```
//!
//! the condition H − A·KK* ⪰ 0 holds iff H22 ⪰ 0, range(H21) ⊆ range(H22) and
//! the Schur complement C = H11 − H12 H22⁺ H21 satisfies C ⪰ A·G11. So A* is
//! the smallest eigenvalue of the pencil (C, G11).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame_op::{self, BoundsReport, FrameOperator};
use crate::linalg::{self, CMatrix};
use crate::system::{BiGSystem, LinOp, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KBoundsReport {
    /// sup { A : herm(S) ⪰ A·KK* }; −∞ (JSON null) when even A = 0 fails, +∞ for K = 0.
    pub lower_k: f64,
    pub upper: f64,
    pub is_kframe: bool,
    pub is_tight: bool,
    pub tight_constant: Option<f64>,
    /// Eigenvalues of the reduced pencil (C, G11), ascending.
    pub pencil_spectrum: Vec<f64>,
    pub rank_k: usize,
    /// Set when K = 0: the lower inequality is vacuous.
    pub zero_k: bool,
}

/// Optimal K-bounds of a system.
pub fn k_bounds(sys: &BiGSystem, k: &LinOp, tol: &Tolerances) -> Result<KBoundsReport> {
    k_bounds_of(&frame_op::frame_operator(sys), k, tol)
}

fn check_square(k: &LinOp, n: usize) -> Result<()> {
    if k.rows() != n || k.cols() != n {
        return Err(Error::ShapeMismatch(format!("K must be {n}×{n}, got {}×{}", k.rows(), k.cols())));
    }
    Ok(())
}

/// Same as [`k_bounds`] for an assembled frame operator.
pub fn k_bounds_of(op: &FrameOperator, k: &LinOp, tol: &Tolerances) -> Result<KBoundsReport> {
    let h = op.herm.matrix();
    let n = h.nrows();
    check_square(k, n)?;
    let hspec = linalg::eigenvalues(h);
    let upper = *hspec.last().expect("dim > 0");
    let hnorm = hspec.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let kmat = k.matrix();
    if linalg::spectral_norm(kmat) <= tol.psd_abs {
        return Ok(KBoundsReport {
            lower_k: f64::INFINITY,
            upper,
            is_kframe: hspec[0] >= -tol.psd_abs,
            is_tight: false,
            tight_constant: None,
            pencil_spectrum: vec![],
            rank_k: 0,
            zero_k: true,
        });
    }

    let g = kmat * kmat.adjoint();
    let q1 = linalg::range_basis(kmat, tol.rank_rel);
    let q2 = linalg::orthogonal_complement(&q1, n);
    let rank_k = q1.ncols();
    let h11 = q1.adjoint() * h * &q1;
    let g11 = q1.adjoint() * &g * &q1;

    let schur = if q2.ncols() == 0 { Some(Some(h11)) } else { reduce_on_kernel(h, &q1, &q2, h11, hnorm, tol) };

    let (lower_k, pencil_spectrum) = match schur {
        None => (f64::NEG_INFINITY, vec![]),
        Some(None) => (0.0, vec![]),
        Some(Some(c)) => {
            let spec = linalg::pencil_eigenvalues(&c, &g11).expect("KK* restricted to range(K) is positive definite");
            (spec[0], spec)
        }
    };
    let is_kframe = lower_k > tol.psd_abs;
    let is_tight =
        is_kframe && linalg::spectral_norm(&(h - g.scale(lower_k))) <= tol.herm_rel * hnorm.max(f64::MIN_POSITIVE);
    Ok(KBoundsReport {
        lower_k,
        upper,
        is_kframe,
        is_tight,
        tight_constant: is_tight.then_some(lower_k),
        pencil_spectrum,
        rank_k,
        zero_k: false,
    })
}

/// Eliminates the ker(K*) block. `None`: H22 is not PSD (no A works, not even 0).
/// `Some(None)`: H22 ⪰ 0 but H21 leaves range(H22), so only A ≤ 0 works.
/// `Some(Some(C))`: the Schur complement.
fn reduce_on_kernel(
    h: &CMatrix,
    q1: &CMatrix,
    q2: &CMatrix,
    h11: CMatrix,
    hnorm: f64,
    tol: &Tolerances,
) -> Option<Option<CMatrix>> {
    let h22 = q2.adjoint() * h * q2;
    let h21 = q2.adjoint() * h * q1;
    let e = linalg::eigh(&h22);
    if e.values[0] < -tol.psd_abs {
        return None;
    }
    let zero_thr = tol.psd_abs.max(tol.rank_rel * h.nrows() as f64 * hnorm);
    let m = h22.nrows();
    let mut h22_pinv = CMatrix::zeros(m, m);
    let mut null_proj = CMatrix::zeros(m, m);
    for (i, &lam) in e.values.iter().enumerate() {
        let v = e.vectors.column(i);
        let outer = v * v.adjoint();
        if lam > zero_thr {
            h22_pinv += outer.scale(1.0 / lam);
        } else {
            null_proj += outer;
        }
    }
    let leak = linalg::spectral_norm(&(&null_proj * &h21));
    if leak > (zero_thr * hnorm.max(1.0)).sqrt() {
        return Some(None);
    }
    Some(Some(h11 - h21.adjoint() * h22_pinv * h21))
}

/// A certificate (A/‖K‖², B) from an ordinary frame certificate; requires ‖K‖ ≥ 1.
pub fn promote_ordinary(report: &BoundsReport, k: &LinOp) -> Result<KBoundsReport> {
    if !report.is_frame {
        return Err(Error::BadInputs("report does not certify a frame".into()));
    }
    let norm = linalg::spectral_norm(k.matrix());
    if norm < 1.0 - report.tol.herm_rel {
        return Err(Error::NormTooSmall { norm });
    }
    Ok(KBoundsReport {
        lower_k: report.lower / (norm * norm),
        upper: report.upper,
        is_kframe: true,
        is_tight: false,
        tight_constant: None,
        pencil_spectrum: vec![],
        rank_k: linalg::numerical_rank(k.matrix(), report.tol.rank_rel),
        zero_k: false,
    })
}

/// One K_j-bi-g-frame certificate for the same system.
#[derive(Debug, Clone, PartialEq)]
pub struct KCertificate {
    pub k: LinOp,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedCertificate {
    pub k: LinOp,
    /// (n · Σ |α_j|²/A_j)⁻¹; valid for every instance.
    pub lower: f64,
    /// (Σ |α_j|²/A_j)⁻¹ without the factor n. Not a valid bound in general:
    /// two equal operators with unit coefficients already violate it.
    pub stated_lower: f64,
    /// min_j B_j
    pub upper: f64,
}

/// Certificate for Σ α_j K_j from certificates for each K_j.
///
/// ‖Σ ᾱ_j K_j* f‖² ≤ (Σ |α_j|·‖K_j* f‖)² ≤ (Σ |α_j|²/A_j)(Σ A_j‖K_j* f‖²) and each
/// A_j‖K_j* f‖² is bounded by the mixed form, which gives the factor n.
pub fn combine_k(reports: &[KCertificate], coeffs: &[linalg::C64]) -> Result<CombinedCertificate> {
    if reports.is_empty() {
        return Err(Error::EmptyList);
    }
    if reports.len() != coeffs.len() {
        return Err(Error::LengthMismatch(format!("{} certificates, {} coefficients", reports.len(), coeffs.len())));
    }
    if let Some(i) = coeffs.iter().position(|a| a.norm() == 0.0) {
        return Err(Error::ZeroCoefficient { index: i });
    }
    if let Some(r) = reports.iter().find(|r| !(r.lower > 0.0)) {
        return Err(Error::BadInputs(format!("certificate lower bound {} is not positive", r.lower)));
    }
    let n = reports[0].k.rows();
    let mut k_new = CMatrix::zeros(n, n);
    let mut inv_sum = 0.0;
    for (r, a) in reports.iter().zip(coeffs) {
        check_square(&r.k, n)?;
        k_new += r.k.matrix() * *a;
        inv_sum += a.norm_sqr() / r.lower;
    }
    let stated_lower = 1.0 / inv_sum;
    Ok(CombinedCertificate {
        k: LinOp::new(k_new)?,
        lower: stated_lower / reports.len() as f64,
        stated_lower,
        upper: reports.iter().map(|r| r.upper).fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductCertificate {
    pub k: LinOp,
    pub lower: f64,
    pub upper: f64,
}

/// Certificate for K₁K₂⋯K_n from a K₁ certificate: A₁ / ‖K_n*⋯K₂*‖².
pub fn product_k(factors: &[LinOp], lower1: f64, upper1: f64) -> Result<ProductCertificate> {
    let (first, rest) = factors.split_first().ok_or(Error::EmptyList)?;
    let n = first.rows();
    check_square(first, n)?;
    let mut tail = linalg::identity(n);
    for f in rest {
        check_square(f, n)?;
        tail *= f.matrix();
    }
    let tail_norm = linalg::spectral_norm(&tail);
    if tail_norm == 0.0 {
        return Err(Error::BadInputs("trailing product is zero".into()));
    }
    Ok(ProductCertificate {
        k: LinOp::new(first.matrix() * &tail)?,
        lower: lower1 / (tail_norm * tail_norm),
        upper: upper1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqrtFactorization {
    pub u: LinOp,
    /// ‖S^{1/2} U − K‖₂
    pub residual: f64,
    pub is_kframe_iff: bool,
}

/// K = S^{1/2} U test: U = (S^{1/2})⁺ K and the residual decides range inclusion.
pub fn sqrt_factorize(op: &FrameOperator, k: &LinOp, tol: &Tolerances) -> Result<SqrtFactorization> {
    let h = op.herm.matrix();
    let n = h.nrows();
    check_square(k, n)?;
    let spec = linalg::eigenvalues(h);
    if spec[0] < -tol.psd_abs {
        return Err(Error::NotPsd { lambda_min: spec[0] });
    }
    let hmax = spec[n - 1].max(0.0);
    let zero_thr = tol.psd_abs.max(tol.rank_rel * n as f64 * hmax);
    let (root, root_pinv) = linalg::psd_sqrt_and_pinv(h, zero_thr);
    let u = &root_pinv * k.matrix();
    let residual = linalg::spectral_norm(&(&root * &u - k.matrix()));
    let knorm = linalg::spectral_norm(k.matrix());
    Ok(SqrtFactorization { u: LinOp::new(u)?, residual, is_kframe_iff: residual <= tol.herm_rel * knorm.max(1.0) })
}
