//! Canonical dual families Φ̃_ω = Φ_ω S⁻¹, Ψ̃_ω = Ψ_ω S⁻* and the two
//! reconstruction formulas
//!
//! ```text
//! f = Σ μ_ω Ψ_ω* Φ̃_ω f        f = Σ μ_ω Ψ̃_ω* Φ_ω f
//! ```

use serde::Serialize;

use crate::accumulate::weighted_accumulate;
use crate::error::{Error, Result};
use crate::frame_op::{self, FrameOperator};
use crate::linalg::{self, CMatrix, CVector};
use crate::system::{BiGSystem, LinOp, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSystem {
    #[serde(skip)]
    pub phi_t: Vec<LinOp>,
    #[serde(skip)]
    pub psi_t: Vec<LinOp>,
    /// λ_max of the Hermitian part of Σ μ Ψ̃*Φ̃.
    pub bessel_dual: f64,
    /// λ_min(herm S), the lower frame bound the dual bound is measured against.
    pub lower: f64,
    /// bessel_dual ≤ 1/lower + psd_abs (false when lower ≤ 0).
    pub bessel_ok: bool,
    /// λ_min of the same Hermitian part. Informational only.
    pub dual_lower: f64,
    #[serde(skip)]
    s_inv: CMatrix,
}

impl DualSystem {
    /// S⁻¹ used to build the families.
    pub fn s_inverse(&self) -> &CMatrix {
        &self.s_inv
    }
}

fn invert(op: &FrameOperator, tol: &Tolerances) -> Result<CMatrix> {
    let s = op.s.matrix();
    let sv = linalg::svd(s).s;
    let smin = *sv.last().expect("non-empty");
    if smin == 0.0 || smin <= linalg::rank_threshold(sv[0], s.nrows(), s.ncols(), tol.rank_rel) {
        return Err(Error::Singular { sigma_min: smin });
    }
    let hermitian = op.herm_defect <= tol.herm_rel;
    let src = if hermitian { op.herm.matrix() } else { s };
    linalg::inverse(src, hermitian).ok_or(Error::Singular { sigma_min: smin })
}

pub fn dual_system(sys: &BiGSystem, tol: &Tolerances) -> Result<DualSystem> {
    let op = frame_op::frame_operator(sys);
    let s_inv = invert(&op, tol)?;
    let s_inv_adj = s_inv.adjoint();
    let phi_t: Vec<LinOp> = sys.phi().iter().map(|p| LinOp::new(p.matrix() * &s_inv)).collect::<Result<_>>()?;
    let psi_t: Vec<LinOp> = sys.psi().iter().map(|q| LinOp::new(q.matrix() * &s_inv_adj)).collect::<Result<_>>()?;
    let terms: Vec<CMatrix> = phi_t.iter().zip(&psi_t).map(|(p, q)| q.adjoint() * p.matrix()).collect();
    let dual_op = weighted_accumulate(&terms, &sys.atoms().weights())?;
    let spec = linalg::eigenvalues(&dual_op);
    let bessel_dual = *spec.last().expect("non-empty");
    let lower = linalg::eigenvalues(op.herm.matrix())[0];
    let bessel_ok = lower > 0.0 && bessel_dual <= 1.0 / lower + tol.psd_abs;
    Ok(DualSystem { phi_t, psi_t, bessel_dual, lower, bessel_ok, dual_lower: spec[0], s_inv })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub f1: CVector,
    pub f2: CVector,
    pub res1: f64,
    pub res2: f64,
}

fn weighted_vector_sum(parts: Vec<CVector>, weights: &[f64]) -> CVector {
    let mats: Vec<CMatrix> = parts.into_iter().map(|v| CMatrix::from_column_slice(v.len(), 1, v.as_slice())).collect();
    let sum = weighted_accumulate(&mats, weights).expect("consistent shapes");
    sum.column(0).into_owned()
}

/// Both reconstructions of `f`, with residuals ‖f_i − f‖ / max(1, ‖f‖).
pub fn reconstruct(sys: &BiGSystem, dual: &DualSystem, f: &CVector) -> Result<Reconstruction> {
    if f.len() != sys.dim() {
        return Err(Error::DimMismatch(format!("vector has length {}, dim is {}", f.len(), sys.dim())));
    }
    if dual.phi_t.len() != sys.phi().len() {
        return Err(Error::LengthMismatch("dual built from a different system".into()));
    }
    let w = sys.atoms().weights();
    let first: Vec<CVector> =
        sys.psi().iter().zip(&dual.phi_t).map(|(q, pt)| q.adjoint() * (pt.matrix() * f)).collect();
    let second: Vec<CVector> =
        sys.phi().iter().zip(&dual.psi_t).map(|(p, qt)| qt.adjoint() * (p.matrix() * f)).collect();
    let f1 = weighted_vector_sum(first, &w);
    let f2 = weighted_vector_sum(second, &w);
    let scale = f.norm().max(1.0);
    let res1 = (&f1 - f).norm() / scale;
    let res2 = (&f2 - f).norm() / scale;
    Ok(Reconstruction { f1, f2, res1, res2 })
}
