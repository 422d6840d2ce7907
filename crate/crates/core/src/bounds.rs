//! Closed-form two-sided Gelfand-number bounds for mixed-norm identities,
//! the inversion inequality for `x log(eK/x)` and the measurement counts implied by
//! stable structured recovery.
//!
//! Every absolute constant the theory leaves unnamed is an explicit argument;
//! callers studying shapes and rates pass 1. Logarithms are natural.

use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{Exponent, ExponentPair, MixedShape};

/// Inputs shared by the bound evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub shape: MixedShape,
    /// Number of measurements (codimension budget), `1 <= m <= b d`.
    pub m: usize,
    pub source: ExponentPair,
    pub target: ExponentPair,
    pub constant: f64,
}

impl BoundParams {
    /// `l_p(l_2) -> l_q(l_2)`.
    pub fn outer(shape: MixedShape, m: usize, p: f64, q: f64, constant: f64) -> Result<Self> {
        Ok(BoundParams {
            shape,
            m,
            source: ExponentPair::new(p, 2.0)?,
            target: ExponentPair::new(q, 2.0)?,
            constant,
        })
    }

    /// `l_p(l_q) -> l_p(l_p)`.
    pub fn inner(shape: MixedShape, m: usize, p: f64, q: f64, constant: f64) -> Result<Self> {
        Ok(BoundParams {
            shape,
            m,
            source: ExponentPair::new(p, q)?,
            target: ExponentPair::new(p, p)?,
            constant,
        })
    }

    /// `l_p(l_q) -> l_2(l_2)`.
    pub fn mixed(shape: MixedShape, m: usize, p: f64, q: f64, constant: f64) -> Result<Self> {
        Ok(BoundParams {
            shape,
            m,
            source: ExponentPair::new(p, q)?,
            target: ExponentPair::new(2.0, 2.0)?,
            constant,
        })
    }

    fn check_budget(&self) -> Result<()> {
        let n = self.shape.len();
        if self.m == 0 || self.m > n {
            return Err(Error::invalid(format!(
                "need 1 <= m <= bd = {n}, got m = {}",
                self.m
            )));
        }
        if !(self.constant > 0.0 && self.constant.is_finite()) {
            return Err(Error::invalid(format!(
                "constant must be positive, got {}",
                self.constant
            )));
        }
        Ok(())
    }
}

/// Which branch of the mixed three-regime bound is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Saturated,
    OuterDominated,
    InnerDominated,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Saturated => "saturated",
            Regime::OuterDominated => "outer-dominated",
            Regime::InnerDominated => "inner-dominated",
        })
    }
}

fn is_two(e: Exponent) -> bool {
    e.value() == 2.0
}

fn finite(e: Exponent, name: &str) -> Result<f64> {
    if e.is_infinite() {
        return Err(Error::invalid(format!("{name} must be finite here")));
    }
    Ok(e.value())
}

/// Upper/lower rate for `c_m(id: l_p^b(l_2^d) -> l_q^b(l_2^d))`:
/// `min{1, C (log(e b/m) + d)/m}^(1/p - 1/q)` for `0 < p <= 1`, `p < q <= 2`.
pub fn bound_outer(params: &BoundParams) -> Result<f64> {
    params.check_budget()?;
    let (src, dst) = (params.source, params.target);
    if !(is_two(src.q) && is_two(dst.q)) {
        return Err(Error::invalid(
            "outer bound needs inner exponent 2 on both sides",
        ));
    }
    let (p, q) = (finite(src.p, "p")?, finite(dst.p, "q")?);
    if !(p <= 1.0 && p < q && q <= 2.0) {
        return Err(Error::invalid(format!(
            "outer bound needs 0 < p <= 1, p < q <= 2; got p={p}, q={q}"
        )));
    }
    let MixedShape { b, d } = params.shape;
    let m = params.m as f64;
    let arg = params.constant * ((E * b as f64 / m).ln() + d as f64) / m;
    Ok(arg.min(1.0).powf(1.0 / p - 1.0 / q))
}

/// The unstructured case `c_m(id: l_p^n -> l_q^n)`:
/// `min{1, C log(e n/m)/m}^(1/p - 1/q)`.
pub fn bound_flat(m: usize, n: usize, p: f64, q: f64, constant: f64) -> Result<f64> {
    let params = BoundParams::outer(MixedShape::new(n, 1)?, m, p, q, constant)?;
    params.check_budget()?;
    if !(p <= 1.0 && p < q && q <= 2.0) {
        return Err(Error::invalid(format!(
            "flat bound needs 0 < p <= 1, p < q <= 2; got p={p}, q={q}"
        )));
    }
    let m = m as f64;
    let arg = constant * (E * n as f64 / m).ln() / m;
    Ok(arg.min(1.0).powf(1.0 / p - 1.0 / q))
}

/// Rate for `c_m(id: l_p^b(l_q^d) -> l_p^b(l_p^d))`:
/// `min{1, C b log(e b d/m)/m}^(1/q - 1/p)` for `0 < q <= 1`, `q <= p <= 2`.
pub fn bound_inner(params: &BoundParams) -> Result<f64> {
    params.check_budget()?;
    let (src, dst) = (params.source, params.target);
    let (p, q) = (finite(src.p, "p")?, finite(src.q, "q")?);
    if dst.p != src.p || dst.q != src.p {
        return Err(Error::invalid("inner bound maps l_p(l_q) to l_p(l_p)"));
    }
    if !(q <= 1.0 && q <= p && p <= 2.0) {
        return Err(Error::invalid(format!(
            "inner bound needs 0 < q <= 1, q <= p <= 2; got p={p}, q={q}"
        )));
    }
    let MixedShape { b, d } = params.shape;
    let m = params.m as f64;
    let arg = params.constant * b as f64 * (E * (b * d) as f64 / m).ln() / m;
    Ok(arg.min(1.0).powf(1.0 / q - 1.0 / p))
}

/// Three-regime rate for `c_m(id: l_p^b(l_q^d) -> l_2^b(l_2^d))`,
/// `0 < q <= 1`, `q <= p <= 1`.
///
/// With `L = log(e b d/m)` and `c = constant` the branches are tested in
/// order: `m <= c L` gives 1; `m <= c b L` gives `(L/m)^(1/p - 1/2)`;
/// otherwise `b^(1/2 - 1/p) (b L/m)^(1/q - 1/2)`. The two predicates are
/// nested, so every `m` lands in exactly one branch. Values are clamped at 1.
pub fn bound_mixed(params: &BoundParams) -> Result<(Regime, f64)> {
    params.check_budget()?;
    let (src, dst) = (params.source, params.target);
    if !(is_two(dst.p) && is_two(dst.q)) {
        return Err(Error::invalid("mixed bound maps into l_2(l_2)"));
    }
    let (p, q) = (finite(src.p, "p")?, finite(src.q, "q")?);
    if !(q <= 1.0 && q <= p && p <= 1.0) {
        return Err(Error::invalid(format!(
            "mixed bound needs 0 < q <= p <= 1; got p={p}, q={q}"
        )));
    }
    let MixedShape { b, d } = params.shape;
    let (m, bf, c) = (params.m as f64, b as f64, params.constant);
    let log_term = (E * (b * d) as f64 / m).ln();
    let (regime, value) = if m <= c * log_term {
        (Regime::Saturated, 1.0)
    } else if m <= c * bf * log_term {
        (Regime::OuterDominated, (log_term / m).powf(1.0 / p - 0.5))
    } else {
        (
            Regime::InnerDominated,
            bf.powf(0.5 - 1.0 / p) * (bf * log_term / m).powf(1.0 / q - 0.5),
        )
    };
    Ok((regime, value.min(1.0)))
}

/// Lower rate `c_pq min{1, (c_p/2)(log(b/m) + d/(8e))/m}^(1/p - 1/q)` for the
/// outer identity, zero when `log(b/m) + d/(8e) <= 0`.
pub fn lower_bound_outer(
    m: usize,
    b: usize,
    d: usize,
    p: f64,
    q: f64,
    c_pq: f64,
    c_p: f64,
) -> Result<f64> {
    let shape = MixedShape::new(b, d)?;
    if m == 0 || m > shape.len() {
        return Err(Error::invalid(format!("need 1 <= m <= bd, got m = {m}")));
    }
    if !(p > 0.0 && p < q && q <= 2.0) {
        return Err(Error::invalid(format!(
            "lower bound needs 0 < p < q <= 2; got p={p}, q={q}"
        )));
    }
    let m = m as f64;
    let bracket = (b as f64 / m).ln() + d as f64 / (8.0 * E);
    if bracket <= 0.0 {
        return Ok(0.0);
    }
    Ok(c_pq * (0.5 * c_p * bracket / m).min(1.0).powf(1.0 / p - 1.0 / q))
}

/// Checks one instance of the inversion inequality: if
/// `x <= y / (C e log(e K/y))` then `y >= C e/(1 + log(C e)) x log(e K/x)`.
/// Returns `true` when the premise fails (vacuous) or the conclusion holds.
pub fn invert_check(c: f64, x: f64, y: f64, k: f64) -> Result<bool> {
    if !(c >= 1.0 && x > 0.0 && y > 0.0 && y <= k) {
        return Err(Error::invalid(format!(
            "need C >= 1, x > 0, 0 < y <= K; got C={c}, x={x}, y={y}, K={k}"
        )));
    }
    let ce = c * E;
    let premise = x <= y / (ce * (E * k / y).ln());
    if !premise {
        return Ok(true);
    }
    let conclusion = ce / (1.0 + ce.ln()) * x * (E * k / x).ln();
    // the inequality is exact; allow for rounding in the two log evaluations
    Ok(y >= conclusion * (1.0 - 1e-12))
}

fn check_stability(
    sparsity: f64,
    b: usize,
    d: usize,
    big_d: f64,
    c: f64,
    big_c: f64,
) -> Result<()> {
    MixedShape::new(b, d)?;
    if !(sparsity >= 1.0 && big_d > 0.0 && c > 0.0 && big_c >= 1.0) {
        return Err(Error::invalid("need sparsity >= 1, D > 0, c > 0, C >= 1"));
    }
    Ok(())
}

/// Minimum measurement count forced by an `l_1(l_2)` stability guarantee with
/// constant `D` on `s`-outer-sparse signals:
/// `C e/(1 + log(C e)) (c^2 s/D^2) log(e D^2 b e^d/(c^2 s))`.
///
/// `None` when `s <= D^2/c^2`, where the argument yields no implication.
pub fn implied_m_outer(
    s: usize,
    b: usize,
    d: usize,
    big_d: f64,
    c: f64,
    big_c: f64,
) -> Result<Option<f64>> {
    check_stability(s as f64, b, d, big_d, c, big_c)?;
    let x = c * c * s as f64 / (big_d * big_d);
    if x <= 1.0 {
        return Ok(None);
    }
    let ce = big_c * E;
    // log(e D^2 b e^d / (c^2 s)) = 1 + log(b/x) + d, kept apart so e^d never overflows
    let log_term = 1.0 + (b as f64 / x).ln() + d as f64;
    Ok(Some(ce / (1.0 + ce.ln()) * x * log_term))
}

/// Minimum measurement count forced by an `l_2(l_1)` stability guarantee on
/// `t`-inner-sparse signals:
/// `b C e/(1 + log(C e)) (c^2 t/D^2) log(e D^2 b d/(c^2 t))`.
pub fn implied_m_inner(
    t: usize,
    b: usize,
    d: usize,
    big_d: f64,
    c: f64,
    big_c: f64,
) -> Result<Option<f64>> {
    check_stability(t as f64, b, d, big_d, c, big_c)?;
    let x = c * c * t as f64 / (big_d * big_d);
    if x <= 1.0 {
        return Ok(None);
    }
    let ce = big_c * E;
    let log_term = (E * (b * d) as f64 / x).ln();
    Ok(Some(b as f64 * ce / (1.0 + ce.ln()) * x * log_term))
}

/// `sup ||x_S||_src / ||x_S||_dst` over `(s,t)`-sparse supports, which is
/// `s^(1/p - 1/r) t^(1/q - 1/u)` for `src = (p,q)`, `dst = (r,u)`.
pub fn sharp_embedding_constant(
    s: usize,
    t: usize,
    src: ExponentPair,
    dst: ExponentPair,
) -> Result<f64> {
    if s == 0 || t == 0 {
        return Err(Error::invalid("s and t must be at least 1"));
    }
    if src.p > dst.p || src.q > dst.q {
        return Err(Error::invalid(format!(
            "embedding constant needs {src} with exponents below {dst}"
        )));
    }
    let outer = (s as f64).powf(src.p.recip() - dst.p.recip());
    let inner = (t as f64).powf(src.q.recip() - dst.q.recip());
    Ok(outer * inner)
}
