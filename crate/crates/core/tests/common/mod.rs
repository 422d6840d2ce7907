//! Brute-force references shared by the integration targets.
#![allow(dead_code)]

use gelfand::norms::{self, ExponentPair, MixedArray};

/// All `k`-subsets of `0..n`, as index lists.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            out.push((0..n).filter(|i| mask >> i & 1 == 1).collect());
        }
    }
    out
}

/// `sigma_outer` by trying every set of `s` kept rows.
pub fn brute_sigma_outer(x: &MixedArray, s: usize, e: ExponentPair) -> f64 {
    let shape = x.shape();
    subsets(shape.b, s)
        .into_iter()
        .map(|keep| {
            let rows: Vec<Vec<f64>> = (0..shape.b)
                .map(|i| {
                    if keep.contains(&i) {
                        vec![0.0; shape.d]
                    } else {
                        x.row(i).to_vec()
                    }
                })
                .collect();
            norms::mixed_norm(&MixedArray::from_rows(&rows).unwrap(), e)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `sigma_inner` by trying every set of `t` kept entries in each row. Rows
/// are independent because the outer norm is monotone in each row norm.
pub fn brute_sigma_inner(x: &MixedArray, t: usize, e: ExponentPair) -> f64 {
    let shape = x.shape();
    let rows: Vec<Vec<f64>> = (0..shape.b)
        .map(|i| {
            subsets(shape.d, t)
                .into_iter()
                .map(|keep| {
                    let r: Vec<f64> = (0..shape.d)
                        .map(|j| if keep.contains(&j) { 0.0 } else { x.get(i, j) })
                        .collect();
                    let n = norms::mixed_norm(
                        &MixedArray::from_rows(std::slice::from_ref(&r)).unwrap(),
                        e,
                    );
                    (n, r)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap()
                .1
        })
        .collect();
    norms::mixed_norm(&MixedArray::from_rows(&rows).unwrap(), e)
}

/// Exponent triples `(p, r, q)` with `p < r` for the outer Stechkin bound;
/// the inner bound reuses them as `(q, u, p)`.
pub const STECHKIN_COMBOS: [(f64, f64, f64); 8] = [
    (0.5, 1.0, 2.0),
    (0.5, 2.0, 1.0),
    (1.0, 2.0, 2.0),
    (1.0, f64::INFINITY, 2.0),
    (0.25, 0.5, 0.5),
    (0.5, f64::INFINITY, 1.5),
    (1.5, 3.0, 1.0),
    (2.0, f64::INFINITY, 0.5),
];

/// Largest ratio `sigma_outer(x, s, (r,q)) / (s^-(1/p-1/r) ||x||_(p,q))` over all `s`.
pub fn stechkin_outer_ratio(x: &MixedArray, p: f64, r: f64, q: f64) -> f64 {
    let weak = ExponentPair::new(r, q).unwrap();
    let strong = norms::mixed_norm(x, ExponentPair::new(p, q).unwrap());
    (1..=x.shape().b)
        .map(|s| {
            let sigma = norms::sigma_outer(x, s, weak).unwrap();
            sigma / ((s as f64).powf(-(1.0 / p - 1.0 / r)) * strong)
        })
        .fold(0.0, f64::max)
}

/// Largest ratio `sigma_inner(x, t, (p,u)) / (t^-(1/q-1/u) ||x||_(p,q))` over all `t`.
pub fn stechkin_inner_ratio(x: &MixedArray, q: f64, u: f64, p: f64) -> f64 {
    let weak = ExponentPair::new(p, u).unwrap();
    let strong = norms::mixed_norm(x, ExponentPair::new(p, q).unwrap());
    (1..=x.shape().d)
        .map(|t| {
            let sigma = norms::sigma_inner(x, t, weak).unwrap();
            sigma / ((t as f64).powf(-(1.0 / q - 1.0 / u)) * strong)
        })
        .fold(0.0, f64::max)
}
