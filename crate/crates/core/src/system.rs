//! Domain types shared by every module: atoms, operators, bi-g-systems and tolerances.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// One quadrature atom of the discretized measure space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub id: i64,
    pub weight: f64,
}

/// Finite weighted atom set standing in for (Ω, μ). Ids are unique and
/// ascending; weights are strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomSpace {
    atoms: Vec<Atom>,
}

impl AtomSpace {
    /// Validates and sorts the atoms by id.
    pub fn new(mut atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Schema("at least one atom is required".into()));
        }
        for a in &atoms {
            if !(a.weight > 0.0) || !a.weight.is_finite() {
                return Err(Error::NonPositiveWeight { id: a.id, weight: a.weight });
            }
        }
        atoms.sort_by_key(|a| a.id);
        if let Some(w) = atoms.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Schema(format!("duplicate atom id {}", w[0].id)));
        }
        Ok(AtomSpace { atoms })
    }

    /// Atoms with ids 0..n and unit weights.
    pub fn uniform(n: usize) -> Self {
        AtomSpace { atoms: (0..n).map(|i| Atom { id: i as i64, weight: 1.0 }).collect() }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    pub fn ids(&self) -> Vec<i64> {
        self.atoms.iter().map(|a| a.id).collect()
    }

    pub fn position(&self, id: i64) -> Option<usize> {
        self.atoms.binary_search_by_key(&id, |a| a.id).ok()
    }
}

/// Dense complex operator with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LinOp(CMatrix);

impl LinOp {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(LinOp(m))
    }

    pub fn identity(n: usize) -> Self {
        LinOp(CMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        LinOp(CMatrix::zeros(rows, cols))
    }

    /// Builds an operator from real row-major data.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        LinOp::new(CMatrix::from_fn(r, cols, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> CMatrix {
        self.0.adjoint()
    }
}

impl Deref for LinOp {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

impl From<LinOp> for CMatrix {
    fn from(op: LinOp) -> Self {
        op.0
    }
}

impl Serialize for LinOp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::spec_io::matrix_to_rows(&self.0).serialize(s)
    }
}

/// The pair (Φ, Ψ) over a weighted atom set. `phi[i]` and `psi[i]` belong to
/// `atoms.atoms()[i]`; both are d_ω × dim.
#[derive(Debug, Clone, PartialEq)]
pub struct BiGSystem {
    dim: usize,
    atoms: AtomSpace,
    phi: Vec<LinOp>,
    psi: Vec<LinOp>,
}

impl BiGSystem {
    /// `ops` is one (id, weight, Φ_ω, Ψ_ω) entry per atom, in any order.
    pub fn new(dim: usize, ops: Vec<(Atom, LinOp, LinOp)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Schema("dim must be positive".into()));
        }
        let mut ops = ops;
        ops.sort_by_key(|(a, _, _)| a.id);
        let atoms = AtomSpace::new(ops.iter().map(|(a, _, _)| *a).collect())?;
        let mut phi = Vec::with_capacity(ops.len());
        let mut psi = Vec::with_capacity(ops.len());
        for (a, p, q) in ops {
            if p.cols() != dim || q.cols() != dim {
                return Err(Error::Schema(format!(
                    "atom {}: operators must have {} columns (phi has {}, psi has {})",
                    a.id,
                    dim,
                    p.cols(),
                    q.cols()
                )));
            }
            if p.rows() != q.rows() {
                return Err(Error::DimMismatch(format!(
                    "atom {}: phi has {} rows but psi has {}",
                    a.id,
                    p.rows(),
                    q.rows()
                )));
            }
            if p.rows() == 0 {
                return Err(Error::Schema(format!("atom {}: empty codomain", a.id)));
            }
            phi.push(p);
            psi.push(q);
        }
        Ok(BiGSystem { dim, atoms, phi, psi })
    }

    /// Same atoms with new operator families (shapes re-validated).
    pub fn with_families(&self, phi: Vec<LinOp>, psi: Vec<LinOp>) -> Result<Self> {
        if phi.len() != self.atoms.len() || psi.len() != self.atoms.len() {
            return Err(Error::LengthMismatch("one operator per atom".into()));
        }
        let ops = self.atoms.atoms().iter().copied().zip(phi).zip(psi).map(|((a, p), q)| (a, p, q)).collect();
        BiGSystem::new(self.dim, ops)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &AtomSpace {
        &self.atoms
    }

    pub fn phi(&self) -> &[LinOp] {
        &self.phi
    }

    pub fn psi(&self) -> &[LinOp] {
        &self.psi
    }

    pub fn phi_of(&self, id: i64) -> Option<&LinOp> {
        self.atoms.position(id).map(|i| &self.phi[i])
    }

    pub fn psi_of(&self, id: i64) -> Option<&LinOp> {
        self.atoms.position(id).map(|i| &self.psi[i])
    }

    /// Codomain dimension d_ω per atom.
    pub fn codims(&self) -> Vec<usize> {
        self.phi.iter().map(|p| p.rows()).collect()
    }

    /// The pair (Ψ, Φ).
    pub fn swap(&self) -> BiGSystem {
        BiGSystem { dim: self.dim, atoms: self.atoms.clone(), phi: self.psi.clone(), psi: self.phi.clone() }
    }

    /// Iterates (weight, Φ_ω, Ψ_ω) in ascending atom-id order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &LinOp, &LinOp)> {
        self.atoms.atoms().iter().zip(self.phi.iter().zip(self.psi.iter())).map(|(a, (p, q))| (a.weight, p, q))
    }
}

/// Numerical tolerances used by every certification decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub herm_rel: f64,
    pub psd_abs: f64,
    /// Scaled by the largest singular value and the largest dimension.
    pub rank_rel: f64,
    pub recon_abs: f64,
    pub sample_count: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { herm_rel: 1e-9, psd_abs: 1e-10, rank_rel: 1e-12, recon_abs: 1e-8, sample_count: 512 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("herm_rel", self.herm_rel),
            ("psd_abs", self.psd_abs),
            ("rank_rel", self.rank_rel),
            ("recon_abs", self.recon_abs),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Schema(format!("tolerance {name} must be positive")));
            }
        }
        if self.sample_count == 0 {
            return Err(Error::Schema("tolerance sample_count must be positive".into()));
        }
        Ok(())
    }
}
