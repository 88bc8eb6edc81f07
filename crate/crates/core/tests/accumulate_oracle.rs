use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;

use bigframe::accumulate::weighted_accumulate;
use bigframe::gallery;
use bigframe::linalg::{CMatrix, C64};

type Q = Ratio<i128>;

fn dyadic(n: i64, shift: u32) -> (f64, Q) {
    (n as f64 / (1u64 << shift) as f64, Q::new(n as i128, 1i128 << shift))
}

fn exact_sum(terms: &[Vec<(Q, Q)>], weights: &[Q]) -> Vec<(Q, Q)> {
    let mut acc = vec![(Q::from(0), Q::from(0)); terms[0].len()];
    for (t, w) in terms.iter().zip(weights) {
        for (a, (re, im)) in acc.iter_mut().zip(t) {
            a.0 += *w * *re;
            a.1 += *w * *im;
        }
    }
    acc
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

#[test]
fn dyadic_sums_are_exact_in_any_order() {
    let mut r = gallery::rng(9);
    for _ in 0..50 {
        let (rows, cols) = (r.random_range(1..4), r.random_range(1..4));
        let n = r.random_range(1..12);
        let mut fterms = vec![];
        let mut qterms = vec![];
        let mut fw = vec![];
        let mut qw = vec![];
        for _ in 0..n {
            let mut entries = vec![];
            let mut qentries = vec![];
            for _ in 0..rows * cols {
                let (re, qre) = dyadic(r.random_range(-4096..4096), 6);
                let (im, qim) = dyadic(r.random_range(-4096..4096), 6);
                entries.push(C64::new(re, im));
                qentries.push((qre, qim));
            }
            fterms.push(CMatrix::from_column_slice(rows, cols, &entries));
            qterms.push(qentries);
            let (w, qw1) = dyadic(r.random_range(1..1024), 8);
            fw.push(w);
            qw.push(qw1);
        }
        let exact = exact_sum(&qterms, &qw);
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..4 {
            order.shuffle(&mut r);
            let t: Vec<CMatrix> = order.iter().map(|&i| fterms[i].clone()).collect();
            let w: Vec<f64> = order.iter().map(|&i| fw[i]).collect();
            let got = weighted_accumulate(&t, &w).unwrap();
            for (z, (re, im)) in got.iter().zip(&exact) {
                assert_eq!(z.re, to_f64(*re));
                assert_eq!(z.im, to_f64(*im));
            }
        }
    }
}

#[test]
fn cancellation_is_recovered() {
    let big = 1e16;
    let terms: Vec<CMatrix> = [big, 1.0, -big].iter().map(|&x| CMatrix::from_element(1, 1, C64::new(x, -x))).collect();
    let got = weighted_accumulate(&terms, &[1.0, 1.0, 1.0]).unwrap();
    assert_eq!(got[(0, 0)], C64::new(1.0, -1.0));
    let naive = big + 1.0 - big;
    assert_eq!(naive, 0.0);
}

#[test]
fn rejects_bad_inputs() {
    let t = vec![CMatrix::zeros(2, 2), CMatrix::zeros(2, 3)];
    assert_eq!(weighted_accumulate(&t, &[1.0, 1.0]).unwrap_err().code(), "ShapeMismatch");
    assert_eq!(weighted_accumulate(&t[..1], &[1.0, 1.0]).unwrap_err().code(), "ShapeMismatch");
    assert!(weighted_accumulate(&t[..1], &[0.0]).is_err());
    assert!(weighted_accumulate(&[], &[]).is_err());
}
