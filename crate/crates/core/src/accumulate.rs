//! Deterministic weighted sums Σ μ_ω · T_ω.
//!
//! Each entry is accumulated in double-double form: the weight product is
//! split exactly with an FMA and the running sum with TwoSum, so the result
//! is within an ulp of the exact sum and, for integer-valued inputs that fit
//! in 53 bits, exact.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    hi: f64,
    lo: f64,
}

impl Compensated {
    fn add_product(&mut self, w: f64, x: f64) {
        let p = w * x;
        let p_err = w.mul_add(x, -p);
        let s = self.hi + p;
        let bp = s - self.hi;
        let sum_err = (self.hi - (s - bp)) + (p - bp);
        self.hi = s;
        self.lo += sum_err + p_err;
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Σ weights[i] · terms[i], summed in the order given.
pub fn weighted_accumulate(terms: &[CMatrix], weights: &[f64]) -> Result<CMatrix> {
    if terms.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!("{} terms but {} weights", terms.len(), weights.len())));
    }
    let Some(first) = terms.first() else {
        return Err(Error::ShapeMismatch("no terms to accumulate".into()));
    };
    let (rows, cols) = first.shape();
    if let Some(t) = terms.iter().find(|t| t.shape() != (rows, cols)) {
        return Err(Error::ShapeMismatch(format!(
            "term of shape {:?} among terms of shape {:?}",
            t.shape(),
            (rows, cols)
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::ShapeMismatch(format!("weight {w} is not positive")));
    }
    let mut re = vec![Compensated::default(); rows * cols];
    let mut im = vec![Compensated::default(); rows * cols];
    for (t, &w) in terms.iter().zip(weights) {
        for (k, z) in t.iter().enumerate() {
            re[k].add_product(w, z.re);
            im[k].add_product(w, z.im);
        }
    }
    // nalgebra storage is column-major, matching `iter()` order above
    Ok(CMatrix::from_iterator(rows, cols, re.into_iter().zip(im).map(|(r, i)| C64::new(r.value(), i.value()))))
}
