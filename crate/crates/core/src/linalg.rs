//! Dense complex matrix helpers built on nalgebra's Hermitian eigensolver and SVD.
//!
//! All decompositions report spectra sorted (eigenvalues ascending, singular
//! values descending) with vectors permuted to match.

use nalgebra::{Cholesky, Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn real_diag(d: &[f64]) -> CMatrix {
    let n = d.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, &x) in d.iter().enumerate() {
        m[(i, i)] = c(x);
    }
    m
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// ‖S − S*‖₂ / max(1, ‖S‖₂)
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let skew = m - m.adjoint();
    spectral_norm(&skew) / spectral_norm(m).max(1.0)
}

pub struct Eigh {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are the matching unit eigenvectors.
    pub vectors: CMatrix,
}

/// Eigendecomposition of the Hermitian part of `m`.
pub fn eigh(m: &CMatrix) -> Eigh {
    let n = m.nrows();
    if n == 0 {
        return Eigh { values: vec![], vectors: CMatrix::zeros(0, 0) };
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    Eigh { values, vectors }
}

pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    eigh(m).values
}

pub struct Svd {
    /// m × k, k = min(m, n)
    pub u: CMatrix,
    /// Descending.
    pub s: Vec<f64>,
    /// n × k
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd { u: CMatrix::zeros(rows, 0), s: vec![], v: CMatrix::zeros(cols, 0) };
    }
    let dec = m.clone().svd(true, true);
    let u0 = dec.u.expect("requested U");
    let vt0 = dec.v_t.expect("requested V*");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let s = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u = CMatrix::from_fn(rows, k, |r, col| u0[(r, order[col])]);
    let v = CMatrix::from_fn(cols, k, |r, col| vt0[(order[col], r)].conj());
    Svd { u, s, v }
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Smallest singular value of a square matrix.
pub fn sigma_min(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Threshold below which singular values count as zero: `rank_rel · σ_max · max(m, n)`.
pub fn rank_threshold(sigma_max: f64, rows: usize, cols: usize, rank_rel: f64) -> f64 {
    rank_rel * sigma_max * rows.max(cols) as f64
}

pub fn numerical_rank(m: &CMatrix, rank_rel: f64) -> usize {
    let d = svd(m);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let thr = rank_threshold(smax, m.nrows(), m.ncols(), rank_rel);
    d.s.iter().filter(|&&x| x > thr && x > 0.0).count()
}

/// Orthonormal basis (as columns) of the range of `m`.
pub fn range_basis(m: &CMatrix, rank_rel: f64) -> CMatrix {
    let d = svd(m);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let thr = rank_threshold(smax, m.nrows(), m.ncols(), rank_rel);
    let r = d.s.iter().filter(|&&x| x > thr && x > 0.0).count();
    d.u.columns(0, r).into_owned()
}

/// Orthonormal basis of the orthogonal complement of span(q) in Cⁿ; `q` must
/// have orthonormal columns.
pub fn orthogonal_complement(q: &CMatrix, n: usize) -> CMatrix {
    let r = q.ncols();
    if r == 0 {
        return identity(n);
    }
    if r >= n {
        return CMatrix::zeros(n, 0);
    }
    let proj = identity(n) - q * q.adjoint();
    let e = eigh(&proj);
    // eigenvalues are ~0 (r of them) then ~1 (n − r of them)
    e.vectors.columns(r, n - r).into_owned()
}

/// Orthogonal projector onto the range of `m`.
pub fn range_projector(m: &CMatrix, rank_rel: f64) -> CMatrix {
    let q = range_basis(m, rank_rel);
    &q * q.adjoint()
}

/// Moore–Penrose inverse by truncated SVD; returns the inverse and the numerical rank.
pub fn pinv(m: &CMatrix, rank_rel: f64) -> (CMatrix, usize) {
    let (rows, cols) = m.shape();
    let d = svd(m);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let thr = rank_threshold(smax, rows, cols, rank_rel);
    let mut out = CMatrix::zeros(cols, rows);
    let mut rank = 0;
    for (i, &s) in d.s.iter().enumerate() {
        if s > thr && s > 0.0 {
            rank += 1;
            let vi = d.v.column(i);
            let ui = d.u.column(i);
            out += (vi * ui.adjoint()).scale(1.0 / s);
        }
    }
    (out, rank)
}

/// Eigenvalues (ascending) of the Hermitian pencil (a, b) with `b` positive
/// definite, computed as eig(L⁻¹ a L⁻*) where b = LL*. Returns `None` when the
/// Cholesky factorization of `b` fails.
pub fn pencil_eigenvalues(a: &CMatrix, b: &CMatrix) -> Option<Vec<f64>> {
    if a.nrows() == 0 {
        return Some(vec![]);
    }
    let chol = Cholesky::new(hermitian_part(b))?;
    let l = chol.l();
    let y = l.solve_lower_triangular(&hermitian_part(a))?;
    let x = l.solve_lower_triangular(&y.adjoint())?;
    Some(eigenvalues(&x))
}

/// Principal square root of a PSD Hermitian matrix together with its
/// pseudo-inverse. Eigenvalues at or below `zero_thr` are treated as zero.
pub fn psd_sqrt_and_pinv(h: &CMatrix, zero_thr: f64) -> (CMatrix, CMatrix) {
    let n = h.nrows();
    let e = eigh(h);
    let mut root = CMatrix::zeros(n, n);
    let mut root_pinv = CMatrix::zeros(n, n);
    for (i, &lam) in e.values.iter().enumerate() {
        if lam > zero_thr {
            let v = e.vectors.column(i);
            let outer = v * v.adjoint();
            let s = lam.sqrt();
            root += outer.scale(s);
            root_pinv += outer.scale(1.0 / s);
        }
    }
    (root, root_pinv)
}

/// Inverse of a square matrix; Cholesky when `hermitian_hint` and the matrix
/// is positive definite, LU otherwise.
pub fn inverse(m: &CMatrix, hermitian_hint: bool) -> Option<CMatrix> {
    let n = m.nrows();
    if hermitian_hint {
        if let Some(ch) = Cholesky::new(hermitian_part(m)) {
            return Some(ch.inverse());
        }
    }
    m.clone().lu().solve(&identity(n))
}

pub fn vec_norm(v: &CVector) -> f64 {
    v.norm()
}

/// Uniformly distributed unit vector in Cⁿ (normalized complex Gaussian).
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    loop {
        let v = CVector::from_fn(n, |_, _| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let nrm = v.norm();
        if nrm > 1e-300 {
            return v.unscale(nrm);
        }
    }
}

/// Matrix of independent standard complex Gaussian entries.
pub fn random_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re, im).unscale(std::f64::consts::SQRT_2)
    })
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_gaussian(&mut rng, 5, 5);
        let h = hermitian_part(&a);
        let e = eigh(&h);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let d = real_diag(&e.values);
        let back = &e.vectors * d * e.vectors.adjoint();
        assert!(max_abs_diff(&back, &h) < 1e-12);
    }

    #[test]
    fn svd_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_gaussian(&mut rng, 4, 6);
        let d = svd(&a);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        let back = &d.u * real_diag(&d.s) * d.v.adjoint();
        assert!(max_abs_diff(&back, &a) < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_gaussian(&mut rng, 5, 2);
        let q = range_basis(&a, 1e-12);
        let p = orthogonal_complement(&q, 5);
        assert_eq!(p.ncols(), 3);
        assert!((q.adjoint() * &p).norm() < 1e-12);
        assert!(max_abs_diff(&(p.adjoint() * &p), &identity(3)) < 1e-12);
    }

    #[test]
    fn pencil_matches_direct_for_identity_b() {
        let h = real_diag(&[3.0, 1.0, 2.0]);
        let ev = pencil_eigenvalues(&h, &identity(3)).unwrap();
        assert_eq!(ev.len(), 3);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[2] - 3.0).abs() < 1e-14);
        let ev = pencil_eigenvalues(&h, &real_diag(&[1.0, 4.0, 1.0])).unwrap();
        assert!((ev[0] - 0.25).abs() < 1e-14);
    }
}
