//! Mixed quasi-norms `l_p^b(l_q^d)`, structured sparsity and exact best-term
//! approximation.
//!
//! An array `x` has `b` rows (the outer index) of length `d` (the inner
//! index). The mixed norm is the outer `l_p` norm of the vector of inner
//! `l_q` row norms. Exponents may be any positive real or infinity; for
//! `min(p, q) < 1` the result is only a quasi-norm.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A positive exponent in `(0, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value <= 0.0 {
            return Err(Error::invalid(format!(
                "exponent must lie in (0, inf], got {value}"
            )));
        }
        Ok(Exponent(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/e`, with `1/inf = 0`.
    pub fn recip(self) -> f64 {
        if self.0.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let value = match Raw::deserialize(deserializer)? {
            Raw::Num(v) => v,
            Raw::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" => f64::INFINITY,
                other => other
                    .parse::<f64>()
                    .map_err(|_| serde::de::Error::custom(format!("bad exponent {s:?}")))?,
            },
        };
        Exponent::new(value).map_err(serde::de::Error::custom)
    }
}

/// Outer exponent `p` and inner exponent `q` of `l_p(l_q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: Exponent,
    pub q: Exponent,
}

impl ExponentPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        Ok(ExponentPair {
            p: Exponent::new(p)?,
            q: Exponent::new(q)?,
        })
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l_{}(l_{})", self.p, self.q)
    }
}

/// Number of rows `b` (blocks) and row length `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MixedShape {
    pub b: usize,
    pub d: usize,
}

impl MixedShape {
    pub fn new(b: usize, d: usize) -> Result<Self> {
        if b == 0 || d == 0 {
            return Err(Error::invalid(format!(
                "shape must have b, d >= 1, got {b}x{d}"
            )));
        }
        Ok(MixedShape { b, d })
    }

    /// Total dimension `n = b * d`.
    pub fn len(&self) -> usize {
        self.b * self.d
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A dense real `b x d` array stored row-major. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedArray {
    shape: MixedShape,
    values: Vec<f64>,
}

impl MixedArray {
    pub fn zeros(shape: MixedShape) -> Self {
        MixedArray {
            shape,
            values: vec![0.0; shape.len()],
        }
    }

    pub fn from_vec(shape: MixedShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::invalid(format!(
                "expected {} values for a {}x{} array, got {}",
                shape.len(),
                shape.b,
                shape.d,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite entry {v}")));
        }
        Ok(MixedArray { shape, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let b = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("ragged rows"));
        }
        MixedArray::from_vec(MixedShape::new(b, d)?, rows.concat())
    }

    pub fn shape(&self) -> MixedShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.shape.d + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.shape.d + col] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.shape.d..(i + 1) * self.shape.d]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let d = self.shape.d;
        &mut self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.shape.d)
    }

    pub fn sub(&self, other: &MixedArray) -> Result<MixedArray> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &MixedArray) -> Result<MixedArray> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, factor: f64) -> MixedArray {
        MixedArray {
            shape: self.shape,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    fn zip_with(&self, other: &MixedArray, f: impl Fn(f64, f64) -> f64) -> Result<MixedArray> {
        if self.shape != other.shape {
            return Err(Error::invalid("shape mismatch"));
        }
        MixedArray::from_vec(
            self.shape,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Number of nonzero rows.
    pub fn outer_sparsity(&self) -> usize {
        self.rows().filter(|r| r.iter().any(|&v| v != 0.0)).count()
    }

    /// Largest number of nonzeros in a single row.
    pub fn inner_sparsity(&self) -> usize {
        self.rows()
            .map(|r| r.iter().filter(|&&v| v != 0.0).count())
            .max()
            .unwrap_or(0)
    }

    pub fn nonzeros(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    /// The array restricted to `support`, zero elsewhere.
    pub fn restrict(&self, support: &SupportPattern) -> MixedArray {
        let mut out = MixedArray::zeros(self.shape);
        for &(i, j) in &support.entries {
            out.set(i, j, self.get(i, j));
        }
        out
    }

    /// Inner `l_q` norm of every row.
    pub fn row_norms(&self, q: Exponent) -> Vec<f64> {
        self.rows().map(|r| lq_norm(r.iter().copied(), q)).collect()
    }
}

/// A set of `(row, column)` positions inside a `b x d` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportPattern {
    shape: MixedShape,
    entries: BTreeSet<(usize, usize)>,
}

impl SupportPattern {
    pub fn new(
        shape: MixedShape,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let entries: BTreeSet<_> = entries.into_iter().collect();
        if let Some(&(i, j)) = entries.iter().find(|&&(i, j)| i >= shape.b || j >= shape.d) {
            return Err(Error::invalid(format!(
                "support index ({i}, {j}) outside {}x{}",
                shape.b, shape.d
            )));
        }
        Ok(SupportPattern { shape, entries })
    }

    /// Positions of the nonzero entries of `x`.
    pub fn of(x: &MixedArray) -> Self {
        let d = x.shape().d;
        let entries = x
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(k, _)| (k / d, k % d))
            .collect();
        SupportPattern {
            shape: x.shape(),
            entries,
        }
    }

    pub fn shape(&self) -> MixedShape {
        self.shape
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct rows touched.
    pub fn outer_sparsity(&self) -> usize {
        self.entries
            .iter()
            .map(|&(i, _)| i)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Largest number of entries in one row.
    pub fn inner_sparsity(&self) -> usize {
        let mut counts = vec![0usize; self.shape.b];
        for &(i, _) in &self.entries {
            counts[i] += 1;
        }
        counts.into_iter().max().unwrap_or(0)
    }

    pub fn complement(&self) -> SupportPattern {
        let entries = (0..self.shape.b)
            .flat_map(|i| (0..self.shape.d).map(move |j| (i, j)))
            .filter(|e| !self.entries.contains(e))
            .collect();
        SupportPattern {
            shape: self.shape,
            entries,
        }
    }
}

/// `(sum |v|^q)^(1/q)` or `max |v|` for `q = inf`, evaluated with max-scaling
/// so that neither tiny nor huge entries under/overflow.
pub(crate) fn lq_norm(values: impl Iterator<Item = f64> + Clone, q: Exponent) -> f64 {
    let peak = values.clone().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || q.is_infinite() {
        return peak;
    }
    let q = q.value();
    let sum: f64 = if q == 2.0 {
        values.map(|v| (v / peak) * (v / peak)).sum()
    } else if q == 1.0 {
        values.map(|v| (v / peak).abs()).sum()
    } else {
        values.map(|v| (v.abs() / peak).powf(q)).sum()
    };
    peak * if q == 2.0 {
        sum.sqrt()
    } else {
        sum.powf(1.0 / q)
    }
}

/// `||x||_{l_p(l_q)}`. Zero exactly when `x = 0`.
pub fn mixed_norm(x: &MixedArray, e: ExponentPair) -> f64 {
    lq_norm(x.row_norms(e.q).into_iter(), e.p)
}

/// Norm of a vector given as rows of a mixed array, without building it.
pub(crate) fn mixed_norm_of_row_norms(row_norms: &[f64], p: Exponent) -> f64 {
    lq_norm(row_norms.iter().copied(), p)
}

/// A valid quasi-triangle constant `2^(1/min(p,q,1) - 1)` for `l_p(l_q)`.
///
/// Equal to 1 whenever both exponents are at least 1. Not claimed minimal.
pub fn quasi_norm_constant(e: ExponentPair) -> f64 {
    let rho = e.p.value().min(e.q.value()).min(1.0);
    2f64.powf(1.0 / rho - 1.0)
}

/// Always-valid split constant: both parts of any split are bounded by the
/// whole, by monotonicity.
pub const SPLIT_CONSTANT_CONSERVATIVE: f64 = 2.0;

/// A constant `beta` with `||x_S|| + ||x_{S^c}|| <= beta ||x||` for every
/// entry split `S`.
///
/// Splitting every row costs at most `2^(max(0, 1/p - 1/q))` in the `p`-th
/// power sums (concavity of `t -> t^(p/q)` when `p < q`) and adding the two
/// outer norms costs at most `2^(max(0, 1 - 1/p))`. The product is clamped to
/// `[1, 2]`.
pub fn split_constant(e: ExponentPair) -> f64 {
    let (ip, iq) = (e.p.recip(), e.q.recip());
    let exponent = (1.0 - ip).max(0.0) + (ip - iq).max(0.0);
    2f64.powf(exponent).clamp(1.0, SPLIT_CONSTANT_CONSERVATIVE)
}

/// Indices of the `k` largest scores, highest first; ties go to the lower index.
pub(crate) fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps ascending index order among equal scores
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(k);
    order
}

fn check_outer(x: &MixedArray, s: usize) -> Result<()> {
    if s > x.shape().b {
        return Err(Error::invalid(format!(
            "outer sparsity {s} exceeds b = {}",
            x.shape().b
        )));
    }
    Ok(())
}

fn check_inner(x: &MixedArray, t: usize) -> Result<()> {
    if t > x.shape().d {
        return Err(Error::invalid(format!(
            "inner sparsity {t} exceeds d = {}",
            x.shape().d
        )));
    }
    Ok(())
}

/// Keeps the `s` rows with the largest `l_{inner_q}` norms and zeroes the rest.
pub fn outer_threshold(x: &MixedArray, s: usize, inner_q: Exponent) -> Result<MixedArray> {
    check_outer(x, s)?;
    let keep = top_k_indices(&x.row_norms(inner_q), s);
    let mut out = MixedArray::zeros(x.shape());
    for i in keep {
        out.row_mut(i).copy_from_slice(x.row(i));
    }
    Ok(out)
}

/// Keeps the `t` largest-magnitude entries of every row.
pub fn inner_threshold(x: &MixedArray, t: usize) -> Result<MixedArray> {
    check_inner(x, t)?;
    let mut out = MixedArray::zeros(x.shape());
    for (i, row) in x.rows().enumerate() {
        let mags: Vec<f64> = row.iter().map(|v| v.abs()).collect();
        let target = out.row_mut(i);
        for j in top_k_indices(&mags, t) {
            target[j] = row[j];
        }
    }
    Ok(out)
}

/// Best `s`-outer-sparse approximation error in `l_p(l_q)`.
///
/// The norm only sees row norms and is monotone in each, so the optimum keeps
/// the `s` largest rows intact.
pub fn sigma_outer(x: &MixedArray, s: usize, e: ExponentPair) -> Result<f64> {
    check_outer(x, s)?;
    let mut norms = x.row_norms(e.q);
    for i in top_k_indices(&norms, s) {
        norms[i] = 0.0;
    }
    Ok(mixed_norm_of_row_norms(&norms, e.p))
}

/// Best `t`-inner-sparse approximation error in `l_p(l_q)`.
pub fn sigma_inner(x: &MixedArray, t: usize, e: ExponentPair) -> Result<f64> {
    let residual = x.sub(&inner_threshold(x, t)?)?;
    Ok(mixed_norm(&residual, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pair(p: f64, q: f64) -> ExponentPair {
        ExponentPair::new(p, q).unwrap()
    }

    #[test]
    fn all_ones_l1_l2() {
        let x = MixedArray::from_vec(MixedShape::new(2, 3).unwrap(), vec![1.0; 6]).unwrap();
        assert_relative_eq!(
            mixed_norm(&x, pair(1.0, 2.0)),
            2.0 * 3f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn single_entry_norm_is_its_magnitude() {
        let mut x = MixedArray::zeros(MixedShape::new(3, 4).unwrap());
        x.set(1, 2, -5.0);
        for (p, q) in [
            (0.3, 0.7),
            (1.0, 2.0),
            (f64::INFINITY, 0.5),
            (2.0, f64::INFINITY),
        ] {
            assert_relative_eq!(mixed_norm(&x, pair(p, q)), 5.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn infinite_exponents() {
        let x = MixedArray::from_rows(&[vec![1.0, -3.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(mixed_norm(&x, pair(f64::INFINITY, f64::INFINITY)), 3.0);
        assert_relative_eq!(mixed_norm(&x, pair(f64::INFINITY, 1.0)), 4.0);
        assert_relative_eq!(mixed_norm(&x, pair(1.0, f64::INFINITY)), 5.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Exponent::new(0.0).is_err());
        assert!(Exponent::new(-1.0).is_err());
        assert!(MixedShape::new(0, 3).is_err());
        let shape = MixedShape::new(1, 2).unwrap();
        assert!(MixedArray::from_vec(shape, vec![1.0, f64::NAN]).is_err());
        assert!(MixedArray::from_vec(shape, vec![1.0]).is_err());
    }

    #[test]
    fn quasi_constants() {
        assert_eq!(quasi_norm_constant(pair(1.0, 1.0)), 1.0);
        assert_eq!(quasi_norm_constant(pair(2.0, 2.0)), 1.0);
        assert_relative_eq!(quasi_norm_constant(pair(0.5, 2.0)), 2.0);
        assert_eq!(split_constant(pair(1.0, 1.0)), 1.0);
        assert_eq!(split_constant(pair(0.5, 0.5)), 1.0);
        assert_eq!(split_constant(pair(f64::INFINITY, f64::INFINITY)), 2.0);
        assert_relative_eq!(split_constant(pair(2.0, 2.0)), 2f64.sqrt());
    }

    #[test]
    fn outer_threshold_edges() {
        let x = MixedArray::from_rows(&[vec![1.0, 0.0], vec![0.0, 3.0], vec![2.0, 0.0]]).unwrap();
        let two = Exponent::new(2.0).unwrap();
        assert_eq!(outer_threshold(&x, 3, two).unwrap(), x);
        assert!(outer_threshold(&x, 0, two).unwrap().is_zero());
        let top = outer_threshold(&x, 1, two).unwrap();
        assert_eq!(top.row(1), &[0.0, 3.0]);
        assert_eq!(top.outer_sparsity(), 1);
        assert!(outer_threshold(&x, 4, two).is_err());
    }

    #[test]
    fn ties_keep_lowest_index() {
        let x = MixedArray::from_rows(&[vec![1.0, 1.0, -1.0]]).unwrap();
        let kept = inner_threshold(&x, 2).unwrap();
        assert_eq!(kept.row(0), &[1.0, 1.0, 0.0]);
        let rows = MixedArray::from_rows(&[vec![2.0], vec![2.0], vec![2.0]]).unwrap();
        let kept = outer_threshold(&rows, 1, Exponent::new(1.0).unwrap()).unwrap();
        assert_eq!(kept.values(), &[2.0, 0.0, 0.0]);
    }

    #[test]
    fn inner_threshold_edges() {
        let x = MixedArray::from_rows(&[vec![1.0, -4.0, 2.0]]).unwrap();
        assert_eq!(inner_threshold(&x, 1).unwrap().row(0), &[0.0, -4.0, 0.0]);
        assert_eq!(inner_threshold(&x, 3).unwrap(), x);
        assert!(inner_threshold(&x, 0).unwrap().is_zero());
        assert!(inner_threshold(&x, 4).is_err());
    }

    #[test]
    fn sigma_outer_examples() {
        // row l2 norms 3, 2, 1
        let x = MixedArray::from_rows(&[vec![3.0, 0.0], vec![0.0, 2.0], vec![1.0, 0.0]]).unwrap();
        let e = pair(1.0, 2.0);
        assert_relative_eq!(sigma_outer(&x, 1, e).unwrap(), 3.0, epsilon = 1e-14);
        assert_relative_eq!(sigma_outer(&x, 0, e).unwrap(), mixed_norm(&x, e));
        assert_eq!(sigma_outer(&x, 3, e).unwrap(), 0.0);
    }

    #[test]
    fn sigma_inner_examples() {
        let x = MixedArray::from_rows(&[vec![1.0, 2.0, 3.0], vec![0.0, 0.0, 4.0]]).unwrap();
        let e = pair(2.0, 1.0);
        assert_relative_eq!(sigma_inner(&x, 1, e).unwrap(), 3.0, epsilon = 1e-14);
        assert_eq!(sigma_inner(&x, 3, e).unwrap(), 0.0);
        let sparse = inner_threshold(&x, 1).unwrap();
        assert_eq!(sigma_inner(&sparse, 1, e).unwrap(), 0.0);
    }

    #[test]
    fn support_pattern_sparsities() {
        let shape = MixedShape::new(3, 4).unwrap();
        let s = SupportPattern::new(shape, [(0, 1), (0, 3), (2, 0)]).unwrap();
        assert_eq!(s.outer_sparsity(), 2);
        assert_eq!(s.inner_sparsity(), 2);
        assert_eq!(s.complement().len(), 9);
        assert!(SupportPattern::new(shape, [(3, 0)]).is_err());
    }

    #[test]
    fn exponent_serde_accepts_inf() {
        let e: ExponentPair = serde_json::from_str(r#"{"p": 0.5, "q": "inf"}"#).unwrap();
        assert!(e.q.is_infinite());
        assert_eq!(serde_json::to_string(&e).unwrap(), r#"{"p":0.5,"q":"inf"}"#);
        assert!(serde_json::from_str::<Exponent>("-1").is_err());
    }
}
