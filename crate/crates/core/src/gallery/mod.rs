//! Constructors for worked examples, controlled pairs, seeded random
//! instances and tight K-systems, plus the brute-force oracles in [`oracles`].

pub mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame_op::gram_operator;
use crate::linalg::{self, CMatrix, CVector};
use crate::system::{Atom, AtomSpace, BiGSystem, LinOp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_row(n: usize, i: usize, scale: f64) -> LinOp {
    let mut m = CMatrix::zeros(1, n);
    m[(0, i)] = linalg::c(scale);
    LinOp::new(m).expect("finite")
}

/// The three-atom example on C³ whose mixed form is 4|f₁|² + 3|f₂|² + 6|f₃|²,
/// together with the permutation K (e₁ ↦ e₁, e₂ ↦ e₃, e₃ ↦ e₂).
///
/// On each part the partner vector is a multiple of the analysis vector
/// (Y = 2X on parts 1 and 3, Y = X on part 2), and the normalization c/μ(Ωᵢ)
/// integrates to the integer weight c, so the atoms are
/// (weight 2, e₁*, 2e₁*), (weight 3, e₂*, e₂*), (weight 3, e₃*, 2e₃*) and S is
/// assembled in exact arithmetic.
pub fn example_6_3() -> (BiGSystem, LinOp) {
    let ops = vec![
        (Atom { id: 1, weight: 2.0 }, unit_row(3, 0, 1.0), unit_row(3, 0, 2.0)),
        (Atom { id: 2, weight: 3.0 }, unit_row(3, 1, 1.0), unit_row(3, 1, 1.0)),
        (Atom { id: 3, weight: 3.0 }, unit_row(3, 2, 1.0), unit_row(3, 2, 2.0)),
    ];
    let sys = BiGSystem::new(3, ops).expect("valid example");
    (sys, example_permutation())
}

/// K e₁ = e₁, K e₂ = e₃, K e₃ = e₂.
pub fn example_permutation() -> LinOp {
    LinOp::from_real_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]).expect("finite")
}

/// The 1×n operator f ↦ ⟨f, v⟩.
fn row_functional(v: &CVector) -> CMatrix {
    CMatrix::from_iterator(1, v.len(), v.iter().map(|z| z.conj()))
}

/// Rank-one system Φ_ω f = ⟨f, α_ω⟩, Ψ_ω f = ⟨f, β_ω⟩, so S = Σ μ_ω β_ω α_ω*.
pub fn from_biframe(alphas: &[CVector], betas: &[CVector], weights: &[f64]) -> Result<BiGSystem> {
    if alphas.len() != betas.len() || alphas.len() != weights.len() {
        return Err(Error::LengthMismatch(format!(
            "{} alphas, {} betas, {} weights",
            alphas.len(),
            betas.len(),
            weights.len()
        )));
    }
    let n = alphas.first().map_or(0, |a| a.len());
    if alphas.iter().chain(betas).any(|v| v.len() != n) {
        return Err(Error::LengthMismatch("vectors of differing length".into()));
    }
    let ops = alphas
        .iter()
        .zip(betas)
        .zip(weights)
        .enumerate()
        .map(|(i, ((a, b), &w))| {
            Ok((Atom { id: i as i64, weight: w }, LinOp::new(row_functional(a))?, LinOp::new(row_functional(b))?))
        })
        .collect::<Result<Vec<_>>>()?;
    BiGSystem::new(n, ops)
}

/// A single operator family Φ over a weighted atom set.
#[derive(Debug, Clone, PartialEq)]
pub struct GFamily {
    pub dim: usize,
    pub atoms: AtomSpace,
    pub ops: Vec<LinOp>,
}

impl GFamily {
    pub fn new(dim: usize, atoms: AtomSpace, ops: Vec<LinOp>) -> Result<Self> {
        if ops.len() != atoms.len() {
            return Err(Error::LengthMismatch("one operator per atom".into()));
        }
        if ops.iter().any(|o| o.cols() != dim) {
            return Err(Error::Schema(format!("operators must have {dim} columns")));
        }
        Ok(GFamily { dim, atoms, ops })
    }
}

/// Controlled pairs: `(Φ, Φ C₁)` when `c2` is absent, otherwise `(Φ C₁, Φ C₂)`.
pub fn controlled(family: &GFamily, c1: &LinOp, c2: Option<&LinOp>) -> Result<BiGSystem> {
    let n = family.dim;
    for c in std::iter::once(c1).chain(c2) {
        if c.rows() != n || c.cols() != n {
            return Err(Error::ShapeMismatch(format!("controller must be {n}×{n}")));
        }
        let smin = linalg::sigma_min(c.matrix());
        let smax = linalg::spectral_norm(c.matrix());
        if smin <= linalg::rank_threshold(smax, n, n, 1e-12) || smin == 0.0 {
            return Err(Error::NotInvertible { sigma_min: smin });
        }
    }
    let times = |c: &LinOp| -> Vec<LinOp> {
        family.ops.iter().map(|p| LinOp::new(p.matrix() * c.matrix()).expect("finite")).collect()
    };
    let (phi, psi) = match c2 {
        None => (family.ops.clone(), times(c1)),
        Some(c2) => (times(c1), times(c2)),
    };
    let ops = family.atoms.atoms().iter().copied().zip(phi).zip(psi).map(|((a, p), q)| (a, p, q)).collect();
    BiGSystem::new(n, ops)
}

/// Output of [`random_system`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomSystem {
    #[serde(skip)]
    pub system: BiGSystem,
    pub seed: u64,
    /// Shift c in Ψ_ω ← Ψ_ω + c·Φ_ω applied to reach the positivity margin.
    pub shift: Option<f64>,
    pub codims: Vec<usize>,
}

/// Seeded Gaussian system.
///
/// With `ensure_frame`, Ψ_ω = W_ω Φ_ω for random Hermitian W_ω (so the mixed
/// form is real) and then Ψ_ω ← Ψ_ω + c·Φ_ω with the smallest c ≥ 0 that puts
/// λ_min(S) at or above a quarter of λ_min(Σ μ Φ*Φ). Codomain dimensions are
/// enlarged cyclically when Σ d_ω < dim. Without it, Ψ is independent of Φ.
/// `codims` is cycled over the atoms.
pub fn random_system(dim: usize, atoms: usize, codims: &[usize], seed: u64, ensure_frame: bool) -> RandomSystem {
    assert!(dim > 0 && atoms > 0, "dimensions must be positive");
    let mut dims: Vec<usize> = match codims.len() {
        0 => vec![1; atoms],
        len => (0..atoms).map(|i| codims[i % len].max(1)).collect(),
    };
    if ensure_frame {
        let mut i = 0;
        while dims.iter().sum::<usize>() < dim {
            dims[i % atoms] += 1;
            i += 1;
        }
    }
    let mut r = rng(seed);
    let weights: Vec<f64> = (0..atoms).map(|_| r.random_range(0.5..1.5)).collect();
    let phi: Vec<CMatrix> = dims.iter().map(|&d| linalg::random_gaussian(&mut r, d, dim)).collect();
    let (psi, shift) = if ensure_frame {
        let mut psi: Vec<CMatrix> = phi
            .iter()
            .zip(&dims)
            .map(|(p, &d)| {
                let w = linalg::hermitian_part(&linalg::random_gaussian(&mut r, d, d));
                w * p
            })
            .collect();
        let phi_ops: Vec<LinOp> = phi.iter().map(|p| LinOp::new(p.clone()).unwrap()).collect();
        let g = gram_operator(&phi_ops, &weights);
        let g_min = linalg::eigenvalues(&g)[0];
        let terms: Vec<CMatrix> = psi.iter().zip(&phi).map(|(q, p)| q.adjoint() * p).collect();
        let s = crate::accumulate::weighted_accumulate(&terms, &weights).unwrap();
        let s_min = linalg::eigenvalues(&s)[0];
        let margin = 0.25 * g_min;
        let c = if s_min < margin { (margin - s_min) / g_min } else { 0.0 };
        for (q, p) in psi.iter_mut().zip(&phi) {
            *q += p.scale(c);
        }
        (psi, Some(c))
    } else {
        (dims.iter().map(|&d| linalg::random_gaussian(&mut r, d, dim)).collect(), None)
    };
    let ops = weights
        .iter()
        .zip(phi.into_iter().zip(psi))
        .enumerate()
        .map(|(i, (&w, (p, q)))| (Atom { id: i as i64, weight: w }, LinOp::new(p).unwrap(), LinOp::new(q).unwrap()))
        .collect();
    RandomSystem { system: BiGSystem::new(dim, ops).expect("valid random system"), seed, shift, codims: dims }
}

/// Pair with S = A·KK*: Φ random full rank, Ψ_ω = Φ_ω W with
/// W = (Σ μ Φ*Φ)⁻¹ · A·KK*, so S = W*(Σ μ Φ*Φ) = A·KK*.
pub fn tight_k_system(k: &LinOp, a: f64, atoms: usize, seed: u64) -> Result<BiGSystem> {
    if !(a > 0.0) {
        return Err(Error::BadInputs(format!("tight constant must be positive, got {a}")));
    }
    let n = k.rows();
    if k.cols() != n || atoms == 0 {
        return Err(Error::ShapeMismatch("K must be square and atoms positive".into()));
    }
    let d = n.div_ceil(atoms).max(1);
    let target = (k.matrix() * k.adjoint()).scale(a);
    const ATTEMPTS: usize = 8;
    let mut r = rng(seed);
    for _ in 0..ATTEMPTS {
        let weights: Vec<f64> = (0..atoms).map(|_| r.random_range(0.5..1.5)).collect();
        let phi: Vec<LinOp> = (0..atoms).map(|_| LinOp::new(linalg::random_gaussian(&mut r, d, n)).unwrap()).collect();
        let g = gram_operator(&phi, &weights);
        let ev = linalg::eigenvalues(&g);
        if ev[0] <= 1e-8 * ev[n - 1].max(1.0) {
            continue;
        }
        let Some(g_inv) = linalg::inverse(&g, true) else { continue };
        let w = g_inv * &target;
        let ops = weights
            .iter()
            .zip(phi)
            .enumerate()
            .map(|(i, (&wt, p))| {
                let q = LinOp::new(p.matrix() * &w)?;
                Ok((Atom { id: i as i64, weight: wt }, p, q))
            })
            .collect::<Result<Vec<_>>>()?;
        return BiGSystem::new(n, ops);
    }
    Err(Error::SingularPhi { attempts: ATTEMPTS })
}

/// Random square operator of the requested rank (Gaussian factors).
pub fn random_rank_operator<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> LinOp {
    if rank == 0 {
        return LinOp::zeros(n, n);
    }
    let a = linalg::random_gaussian(rng, n, rank);
    let b = linalg::random_gaussian(rng, rank, n);
    LinOp::new(a * b).unwrap()
}
