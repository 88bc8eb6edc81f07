//! The bi-g-frame operator S = Σ μ_ω Ψ_ω* Φ_ω and ordinary frame bounds.
//!
//! The mixed form Σ μ ⟨Φ_ω f, Ψ_ω f⟩ equals ⟨S f, f⟩. For a general pair S
//! need not be self-adjoint, so bounds are certified on the spectrum of the
//! Hermitian part and the skew part is reported as `hermitian_defect`.

use serde::Serialize;

use crate::accumulate::weighted_accumulate;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::system::{BiGSystem, LinOp, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOperator {
    pub s: LinOp,
    /// (S + S*)/2
    pub herm: LinOp,
    /// ‖S − S*‖₂ / max(1, ‖S‖₂)
    pub herm_defect: f64,
}

/// Σ μ_ω Ψ_ω* Φ_ω in ascending atom order.
pub fn frame_operator(sys: &BiGSystem) -> FrameOperator {
    let terms: Vec<CMatrix> = sys.iter().map(|(_, phi, psi)| psi.adjoint() * phi.matrix()).collect();
    let s = weighted_accumulate(&terms, &sys.atoms().weights()).expect("validated system has consistent shapes");
    from_matrix(s)
}

/// Wraps an already-assembled operator.
pub fn from_matrix(s: CMatrix) -> FrameOperator {
    let herm = linalg::hermitian_part(&s);
    let herm_defect = linalg::hermitian_defect(&s);
    FrameOperator {
        s: LinOp::new(s).expect("finite inputs give finite S"),
        herm: LinOp::new(herm).expect("finite"),
        herm_defect,
    }
}

/// Σ μ_ω Φ_ω* Φ_ω for a single family.
pub fn gram_operator(family: &[LinOp], weights: &[f64]) -> CMatrix {
    let terms: Vec<CMatrix> = family.iter().map(|p| p.adjoint() * p.matrix()).collect();
    weighted_accumulate(&terms, weights).expect("consistent shapes")
}

/// Tightest Bessel constants (B_Φ, B_Ψ) of the two families separately.
pub fn family_bessel_bounds(sys: &BiGSystem) -> (f64, f64) {
    let w = sys.atoms().weights();
    let bphi = linalg::eigenvalues(&gram_operator(sys.phi(), &w)).last().copied().unwrap_or(0.0);
    let bpsi = linalg::eigenvalues(&gram_operator(sys.psi(), &w)).last().copied().unwrap_or(0.0);
    (bphi, bpsi)
}

/// Σ μ_ω ⟨Φ_ω f, Ψ_ω f⟩ evaluated atom by atom.
pub fn mixed_form(sys: &BiGSystem, f: &CVector) -> C64 {
    sys.iter()
        .map(|(w, phi, psi)| {
            let a = phi.matrix() * f;
            let b = psi.matrix() * f;
            b.dotc(&a) * w
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameStatus {
    /// Two-sided inequality certified.
    Frame,
    /// Only the upper (Bessel) inequality holds.
    BesselOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    /// A
    pub lower: f64,
    /// B
    pub upper: f64,
    pub optimal: bool,
    pub hermitian_defect: f64,
    /// Spectrum of herm(S), ascending.
    pub spectrum: Vec<f64>,
    pub status: FrameStatus,
    pub is_frame: bool,
    pub is_tight: bool,
    pub is_parseval: bool,
    pub tol: Tolerances,
}

/// Optimal ordinary bounds from the spectrum of herm(S).
pub fn ordinary_bounds(sys: &BiGSystem, tol: &Tolerances) -> Result<BoundsReport> {
    bounds_of(&frame_operator(sys), tol)
}

pub fn bounds_of(op: &FrameOperator, tol: &Tolerances) -> Result<BoundsReport> {
    if op.herm_defect > tol.herm_rel {
        return Err(Error::NotRealForm { defect: op.herm_defect, tol: tol.herm_rel });
    }
    let spectrum = linalg::eigenvalues(op.herm.matrix());
    let lower = spectrum[0];
    let upper = *spectrum.last().expect("dim > 0");
    let is_frame = lower > tol.psd_abs;
    let is_tight = is_frame && (upper - lower) <= tol.herm_rel * upper;
    let is_parseval = is_tight && (upper - 1.0).abs() <= tol.herm_rel;
    Ok(BoundsReport {
        lower,
        upper,
        optimal: true,
        hermitian_defect: op.herm_defect,
        spectrum,
        status: if is_frame { FrameStatus::Frame } else { FrameStatus::BesselOnly },
        is_frame,
        is_tight,
        is_parseval,
        tol: *tol,
    })
}

/// ‖S⁻¹‖₂ and whether it respects the 1/A bound.
pub fn inverse_norm_check(op: &FrameOperator, lower: f64, tol: &Tolerances) -> Result<(f64, bool)> {
    let s = op.s.matrix();
    let sv = linalg::svd(s).s;
    let smax = sv[0];
    let smin = *sv.last().expect("square, non-empty");
    let thr = linalg::rank_threshold(smax, s.nrows(), s.ncols(), tol.rank_rel);
    if smin <= thr || smin == 0.0 {
        return Err(Error::Singular { sigma_min: smin });
    }
    let norm_inv = 1.0 / smin;
    Ok((norm_inv, norm_inv <= 1.0 / lower + tol.psd_abs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::linalg::{max_abs_diff, real_diag};
    use crate::system::{Atom, LinOp};

    fn single_identity(n: usize) -> BiGSystem {
        BiGSystem::new(n, vec![(Atom { id: 0, weight: 1.0 }, LinOp::identity(n), LinOp::identity(n))]).unwrap()
    }

    #[test]
    fn example_operator_is_diagonal() {
        let (sys, _) = gallery::example_6_3();
        let op = frame_operator(&sys);
        assert_eq!(op.s.matrix(), &real_diag(&[4.0, 3.0, 6.0]));
        assert_eq!(op.herm_defect, 0.0);
    }

    #[test]
    fn identity_pair() {
        let sys = single_identity(3);
        let tol = Tolerances::default();
        let r = ordinary_bounds(&sys, &tol).unwrap();
        assert_eq!((r.lower, r.upper), (1.0, 1.0));
        assert!(r.is_parseval && r.is_tight && r.is_frame);
        let (n, ok) = inverse_norm_check(&frame_operator(&sys), 1.0, &tol).unwrap();
        assert!((n - 1.0).abs() < 1e-15 && ok);
    }

    #[test]
    fn example_bounds() {
        let (sys, _) = gallery::example_6_3();
        let tol = Tolerances::default();
        let r = ordinary_bounds(&sys, &tol).unwrap();
        assert!((r.lower - 3.0).abs() < 1e-12 && (r.upper - 6.0).abs() < 1e-12);
        assert!(r.is_frame && !r.is_tight);
        let op = frame_operator(&sys);
        let (n, ok) = inverse_norm_check(&op, 3.0, &tol).unwrap();
        assert!((n - 1.0 / 3.0).abs() < 1e-15 && ok);
        let (n, ok) = inverse_norm_check(&op, 2.0, &tol).unwrap();
        assert!(n <= 0.5 && ok);
    }

    #[test]
    fn scaled_partner_is_tight() {
        // Φ = I (Parseval), Ψ = 2Φ → herm(S) = 2I
        let two = LinOp::new(linalg::identity(2).scale(2.0)).unwrap();
        let sys = BiGSystem::new(2, vec![(Atom { id: 0, weight: 1.0 }, LinOp::identity(2), two)]).unwrap();
        let r = ordinary_bounds(&sys, &Tolerances::default()).unwrap();
        assert_eq!((r.lower, r.upper), (2.0, 2.0));
        assert!(r.is_tight && !r.is_parseval);
    }

    #[test]
    fn skew_pair_is_not_real() {
        let skew = LinOp::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let sys = BiGSystem::new(2, vec![(Atom { id: 0, weight: 1.0 }, LinOp::identity(2), skew)]).unwrap();
        let err = ordinary_bounds(&sys, &Tolerances::default()).unwrap_err();
        assert_eq!(err.code(), "NotRealForm");
    }

    #[test]
    fn singular_operator() {
        let p = LinOp::from_real_rows(&[vec![1.0, 0.0]]).unwrap();
        let sys = BiGSystem::new(2, vec![(Atom { id: 0, weight: 1.0 }, p.clone(), p)]).unwrap();
        let op = frame_operator(&sys);
        let err = inverse_norm_check(&op, 1.0, &Tolerances::default()).unwrap_err();
        assert_eq!(err.code(), "Singular");
        let r = ordinary_bounds(&sys, &Tolerances::default()).unwrap();
        assert_eq!(r.status, FrameStatus::BesselOnly);
        assert_eq!(r.upper, 1.0);
    }

    #[test]
    fn swap_gives_adjoint() {
        let sys = gallery::random_system(4, 5, &[2], 9, false).system;
        let a = frame_operator(&sys);
        let b = frame_operator(&sys.swap());
        assert!(max_abs_diff(b.s.matrix(), &a.s.adjoint()) <= 1e-12);
    }
}
