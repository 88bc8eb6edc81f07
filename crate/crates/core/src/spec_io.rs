//! Frame-spec documents (JSON).
//!
//! ```text
//! { "dim": n,
//!   "atoms": [ { "id": int, "weight": real, "phi": [[[re, im], ...], ...], "psi": [[...]] } ],
//!   "K": [[[re, im], ...]],   (optional, n × n)
//!   "tol": { ... } }          (optional, partial)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::system::{Atom, BiGSystem, LinOp, Tolerances};

pub type Rows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Deserialize)]
struct RawAtom {
    id: i64,
    weight: f64,
    phi: Rows,
    psi: Rows,
}

#[derive(Debug, Deserialize)]
struct RawDoc {
    dim: usize,
    atoms: Vec<RawAtom>,
    #[serde(rename = "K", default)]
    k: Option<Rows>,
    #[serde(default)]
    tol: Option<Tolerances>,
}

#[derive(Serialize)]
struct AtomOut<'a> {
    id: i64,
    weight: f64,
    phi: &'a LinOp,
    psi: &'a LinOp,
}

#[derive(Serialize)]
struct DocOut<'a> {
    dim: usize,
    atoms: Vec<AtomOut<'a>>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    k: Option<&'a LinOp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<&'a Tolerances>,
}

/// A parsed frame-spec document.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub system: BiGSystem,
    pub k: Option<LinOp>,
    /// `None` when the document carries no `tol` block.
    pub tol: Option<Tolerances>,
}

impl FrameSpec {
    pub fn new(system: BiGSystem) -> Self {
        FrameSpec { system, k: None, tol: None }
    }

    pub fn with_k(mut self, k: LinOp) -> Self {
        self.k = Some(k);
        self
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol.unwrap_or_default()
    }
}

pub fn matrix_to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Converts nested `[re, im]` rows into an operator; `what` names the block in errors.
pub fn rows_to_op(rows: &Rows, what: &str) -> Result<LinOp> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::Schema(format!("{what}: no rows")));
    }
    let cols = rows[0].len();
    if rows.iter().any(|row| row.len() != cols) {
        return Err(Error::Schema(format!("{what}: ragged rows")));
    }
    LinOp::new(CMatrix::from_fn(r, cols, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
        .map_err(|_| Error::Schema(format!("{what}: non-finite entry")))
}

/// Parses and validates a frame-spec document.
pub fn load_system(document: &str) -> Result<FrameSpec> {
    let raw: RawDoc = serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    if raw.atoms.is_empty() {
        return Err(Error::Schema("at least one atom is required".into()));
    }
    for a in &raw.atoms {
        if !(a.weight > 0.0) || !a.weight.is_finite() {
            return Err(Error::NonPositiveWeight { id: a.id, weight: a.weight });
        }
    }
    let mut ops = Vec::with_capacity(raw.atoms.len());
    for a in &raw.atoms {
        let phi = rows_to_op(&a.phi, &format!("atom {} phi", a.id))?;
        let psi = rows_to_op(&a.psi, &format!("atom {} psi", a.id))?;
        ops.push((Atom { id: a.id, weight: a.weight }, phi, psi));
    }
    let system = BiGSystem::new(raw.dim, ops)?;
    let k = match raw.k {
        Some(rows) => {
            let k = rows_to_op(&rows, "K")?;
            if k.rows() != raw.dim || k.cols() != raw.dim {
                return Err(Error::Schema(format!("K must be {0}×{0}, got {1}×{2}", raw.dim, k.rows(), k.cols())));
            }
            Some(k)
        }
        None => None,
    };
    if let Some(t) = &raw.tol {
        t.validate()?;
    }
    Ok(FrameSpec { system, k, tol: raw.tol })
}

/// Serializes a frame spec; `load_system(&save_system(s))` reproduces `s` exactly.
pub fn save_system(spec: &FrameSpec) -> String {
    let sys = &spec.system;
    let atoms = sys
        .atoms()
        .atoms()
        .iter()
        .zip(sys.phi().iter().zip(sys.psi()))
        .map(|(a, (phi, psi))| AtomOut { id: a.id, weight: a.weight, phi, psi })
        .collect();
    let doc = DocOut { dim: sys.dim(), atoms, k: spec.k.as_ref(), tol: spec.tol.as_ref() };
    serde_json::to_string_pretty(&doc).expect("frame spec serializes")
}

/// Parses a bare square operator file: either `[[[re, im], ...]]` or `{"op": [[...]]}`.
pub fn load_operator(document: &str, dim: usize) -> Result<LinOp> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OpDoc {
        Bare(Rows),
        Wrapped { op: Rows },
    }
    let doc: OpDoc = serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    let rows = match doc {
        OpDoc::Bare(r) | OpDoc::Wrapped { op: r } => r,
    };
    let op = rows_to_op(&rows, "operator")?;
    if op.rows() != dim || op.cols() != dim {
        return Err(Error::Schema(format!("operator must be {dim}×{dim}")));
    }
    Ok(op)
}
