//! Brute-force reference computations. These deliberately avoid the
//! compensated accumulator, the Schur-reduced pencil and the Douglas route so
//! they can check those paths independently.

use serde::Serialize;

use crate::linalg::{self, CMatrix, CVector};
use crate::system::BiGSystem;

use super::rng;

/// Σ μ_ω Ψ_ω* Φ_ω by a plain triple loop in f64.
pub fn naive_frame_operator(sys: &BiGSystem) -> CMatrix {
    let n = sys.dim();
    let mut s = CMatrix::zeros(n, n);
    for (w, phi, psi) in sys.iter() {
        for i in 0..n {
            for j in 0..n {
                let mut acc = linalg::c(0.0);
                for r in 0..phi.rows() {
                    acc += psi[(r, i)].conj() * phi[(r, j)];
                }
                s[(i, j)] += acc * w;
            }
        }
    }
    s
}

/// (min, max) of Re⟨H f, f⟩ over `samples` seeded random unit vectors.
pub fn rayleigh_scan(h: &CMatrix, samples: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let n = h.nrows();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..samples {
        let f = linalg::random_unit(&mut r, n);
        let q = f.dotc(&(h * &f)).re;
        lo = lo.min(q);
        hi = hi.max(q);
    }
    (lo, hi)
}

/// sup { A : H − A·G ⪰ 0 } by bisection on the smallest eigenvalue of H − A·G.
/// `None` when H itself is not PSD; `+∞` when G = 0.
pub fn k_lower_bisection(h: &CMatrix, g: &CMatrix) -> Option<f64> {
    let scale = linalg::spectral_norm(h).max(1.0);
    let eps = 1e-13 * scale;
    let feasible = |a: f64| linalg::eigenvalues(&(h - g.scale(a)))[0] >= -eps;
    if !feasible(0.0) {
        return None;
    }
    let gmax = linalg::spectral_norm(g);
    if gmax == 0.0 {
        return Some(f64::INFINITY);
    }
    let mut lo = 0.0;
    let mut hi = 2.0 * scale / gmax + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(lo)
}

#[derive(Debug, Clone, Serialize)]
pub struct SampledK {
    /// Smallest ⟨Hf,f⟩ / ‖K*f‖² over probes with K*f ≠ 0.
    pub min_ratio: f64,
    /// Smallest ⟨Hf,f⟩ over probes with K*f ≈ 0.
    pub min_kernel_form: f64,
    pub probes: usize,
    /// Some A > 0 satisfies A‖K*f‖² ≤ ⟨Hf,f⟩ on every probe.
    pub holds: bool,
}

/// Direct test of A‖K*f‖² ≤ ⟨Hf, f⟩ on `samples` random unit vectors plus the
/// eigenvectors of H, random combinations of its (near-)null eigenvectors and
/// the eigenvectors of KK*.
pub fn sampled_k_inequality(h: &CMatrix, k: &CMatrix, samples: usize, seed: u64, thr: f64) -> SampledK {
    let n = h.nrows();
    let mut r = rng(seed);
    let mut probes: Vec<CVector> = (0..samples).map(|_| linalg::random_unit(&mut r, n)).collect();
    let eh = linalg::eigh(h);
    let hmax = eh.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let null_cols: Vec<usize> = (0..n).filter(|&i| eh.values[i] <= 1e-8 * hmax).collect();
    for i in 0..n {
        probes.push(eh.vectors.column(i).into_owned());
    }
    if !null_cols.is_empty() {
        for _ in 0..32 {
            let mut v = CVector::zeros(n);
            for &i in &null_cols {
                let coef = linalg::random_unit(&mut r, 1)[0];
                v += eh.vectors.column(i) * coef;
            }
            let nv = v.norm();
            if nv > 0.0 {
                probes.push(v.unscale(nv));
            }
        }
    }
    let eg = linalg::eigh(&(k * k.adjoint()));
    for i in 0..n {
        probes.push(eg.vectors.column(i).into_owned());
    }
    let kscale = linalg::spectral_norm(k);
    let mut min_ratio = f64::INFINITY;
    let mut min_kernel_form = f64::INFINITY;
    for f in &probes {
        let form = f.dotc(&(h * f)).re;
        let kf = (k.adjoint() * f).norm_squared();
        if kf > 1e-20 * kscale * kscale && kf > 0.0 {
            min_ratio = min_ratio.min(form / kf);
        } else {
            min_kernel_form = min_kernel_form.min(form);
        }
    }
    let holds = min_ratio > thr && min_kernel_form >= -thr;
    SampledK { min_ratio, min_kernel_form, probes: probes.len(), holds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_diag;

    #[test]
    fn bisection_on_diagonal() {
        let h = real_diag(&[4.0, 3.0, 6.0]);
        let g = real_diag(&[1.0, 1.0, 1.0]);
        let a = k_lower_bisection(&h, &g).unwrap();
        assert!((a - 3.0).abs() < 1e-12);
        assert_eq!(k_lower_bisection(&h, &real_diag(&[0.0; 3])), Some(f64::INFINITY));
        assert_eq!(k_lower_bisection(&real_diag(&[1.0, -1.0]), &real_diag(&[1.0, 0.0])), None);
    }

    #[test]
    fn sampled_detects_kernel_violation() {
        // H = [[1,1],[1,1]] is PSD but e₁ ∉ range(H)
        let h = CMatrix::from_element(2, 2, linalg::c(1.0));
        let k = real_diag(&[1.0, 0.0]);
        let s = sampled_k_inequality(&h, &k, 100, 1, 1e-10);
        assert!(!s.holds);
        let s = sampled_k_inequality(&real_diag(&[2.0, 1.0]), &k, 100, 1, 1e-10);
        assert!(s.holds && (s.min_ratio - 2.0).abs() < 1e-12);
    }
}
