//! Gaussian measurements, basis-pursuit decoders for structured sparsity, a
//! greedy cross-check decoder, and Monte Carlo recovery experiments.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{
    mixed_norm, outer_threshold, sigma_inner, sigma_outer, Exponent, ExponentPair, MixedArray,
    MixedShape,
};
use crate::rng;

/// `A = B / sqrt(m)` with `B` an `m x n` standard Gaussian matrix. Rows are
/// drawn in order from one stream, so the model with `m` rows is the first
/// `m` rows (up to scaling) of any larger model with the same seed.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    pub m: usize,
    pub n: usize,
    pub matrix: DMatrix<f64>,
    pub scale: f64,
    pub seed: u64,
}

impl MeasurementModel {
    pub fn measure(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::invalid(format!(
                "signal has length {}, model expects {}",
                x.len(),
                self.n
            )));
        }
        Ok((&self.matrix * DVector::from_column_slice(x))
            .as_slice()
            .to_vec())
    }
}

pub fn gaussian_model(m: usize, b: usize, d: usize, seed: u64) -> Result<MeasurementModel> {
    let n = MixedShape::new(b, d)?.len();
    if m == 0 || m > n {
        return Err(Error::invalid(format!(
            "need 1 <= m <= bd = {n}, got m = {m}"
        )));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let mut rng = rng::stream(seed, &[0xa]);
    let rows: Vec<f64> = (0..m * n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(MeasurementModel {
        m,
        n,
        matrix: DMatrix::from_row_slice(m, n, &rows),
        scale,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub stop_tol: f64,
    pub max_iterations: usize,
    /// Initial proximal step. The splitting rebalances it as it runs.
    pub step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feasibility_tol: 1e-7,
            stop_tol: 1e-6,
            max_iterations: 20_000,
            step: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.feasibility_tol, self.stop_tol, self.step]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive || self.max_iterations == 0 {
            return Err(Error::invalid(
                "solver tolerances and step must be positive, max_iterations >= 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded<T> {
    pub estimate: T,
    pub iterations: usize,
    pub converged: bool,
    /// `||A x_hat - y||_2`.
    pub residual: f64,
}

impl<T> Decoded<T> {
    fn map<U>(self, f: impl FnOnce(T) -> U) -> Decoded<U> {
        Decoded {
            estimate: f(self.estimate),
            iterations: self.iterations,
            converged: self.converged,
            residual: self.residual,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Penalty {
    L1,
    GroupL1L2 { d: usize },
    L2L1 { d: usize },
}

impl Penalty {
    /// Proximal map of `tau * penalty`, in place.
    fn prox(self, v: &mut [f64], tau: f64) {
        match self {
            Penalty::L1 => v.iter_mut().for_each(|x| *x = soft(*x, tau)),
            Penalty::GroupL1L2 { d } => {
                for row in v.chunks_mut(d) {
                    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let factor = if norm > tau { 1.0 - tau / norm } else { 0.0 };
                    row.iter_mut().for_each(|x| *x *= factor);
                }
            }
            Penalty::L2L1 { d } => prox_l2l1(v, d, tau),
        }
    }

    fn value(self, v: &[f64]) -> f64 {
        match self {
            Penalty::L1 => v.iter().map(|x| x.abs()).sum(),
            Penalty::GroupL1L2 { d } => v
                .chunks(d)
                .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
                .sum(),
            Penalty::L2L1 { d } => v
                .chunks(d)
                .map(|r| r.iter().map(|x| x.abs()).sum::<f64>().powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

fn soft(x: f64, tau: f64) -> f64 {
    x.signum() * (x.abs() - tau).max(0.0)
}

/// `prox_{tau ||.||_{l2(l1)}}(v) = v - tau P(v/tau)` with `P` the projection
/// onto the unit ball of the dual norm `l2(l_inf)`.
///
/// The projection clips row `i` at some level `r_i`; for a multiplier
/// `lambda`, `r_i` solves `sum_j (|v_ij| - r)_+ = lambda r`, and `lambda` is
/// set so that `sum r_i^2 = 1`.
fn prox_l2l1(v: &mut [f64], d: usize, tau: f64) {
    let w: Vec<f64> = v.iter().map(|x| x / tau).collect();
    let sorted: Vec<Vec<f64>> = w
        .chunks(d)
        .map(|r| {
            let mut a: Vec<f64> = r.iter().map(|x| x.abs()).collect();
            a.sort_unstable_by(|x, y| y.total_cmp(x));
            a
        })
        .collect();
    let row_level = |a: &[f64], lambda: f64| -> f64 {
        if lambda == 0.0 {
            return a[0];
        }
        let mut sum = 0.0;
        for k in 0..a.len() {
            sum += a[k];
            let r = sum / (k as f64 + 1.0 + lambda);
            let next = a.get(k + 1).copied().unwrap_or(0.0);
            if r >= next {
                return r;
            }
        }
        0.0
    };
    let total = |lambda: f64| {
        sorted
            .iter()
            .map(|a| row_level(a, lambda).powi(2))
            .sum::<f64>()
    };
    let levels: Vec<f64> = if total(0.0) <= 1.0 {
        sorted.iter().map(|a| a[0]).collect()
    } else {
        let mut hi = 1.0;
        while total(hi) > 1.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if total(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        sorted.iter().map(|a| row_level(a, hi)).collect()
    };
    for ((row, wrow), r) in v.chunks_mut(d).zip(w.chunks(d)).zip(levels) {
        for (x, wv) in row.iter_mut().zip(wrow) {
            *x = tau * (wv - wv.clamp(-r, r));
        }
    }
}

/// Projection onto `{z : A z = y}` as `v - M^T (M v - c)` with `L L^T = A A^T`,
/// `M = L^-1 A` and `c = L^-1 y`.
struct AffineProjector {
    m_mat: DMatrix<f64>,
    c: DVector<f64>,
}

impl AffineProjector {
    fn new(model: &MeasurementModel, y: &[f64]) -> Result<Self> {
        let a = &model.matrix;
        let gram = a * a.transpose();
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Factorization("A A^T is not positive definite".into()))?;
        let l = chol.l();
        let m_mat = l
            .solve_lower_triangular(a)
            .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
        let c = l
            .solve_lower_triangular(&DVector::from_column_slice(y))
            .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
        Ok(AffineProjector { m_mat, c })
    }

    fn project(&self, v: &DVector<f64>, out: &mut DVector<f64>, scratch: &mut DVector<f64>) {
        scratch.gemv(1.0, &self.m_mat, v, 0.0);
        *scratch -= &self.c;
        out.copy_from(v);
        out.gemv_tr(-1.0, &self.m_mat, scratch, 1.0);
    }
}

fn norm(v: &DVector<f64>) -> f64 {
    v.norm()
}

/// Over-relaxation factor of the splitting.
const RELAXATION: f64 = 1.6;

/// Over-relaxed ADMM for `min penalty(z)` subject to `A z = y`, with residual
/// balancing of the step.
///
/// With `beat` set, stops as soon as a feasible iterate has penalty below it:
/// a point with that penalty value can then no longer be the minimizer.
fn basis_pursuit(
    model: &MeasurementModel,
    y: &[f64],
    penalty: Penalty,
    config: &SolverConfig,
    beat: Option<f64>,
) -> Result<Decoded<Vec<f64>>> {
    config.validate()?;
    if y.len() != model.m {
        return Err(Error::invalid(format!(
            "y has length {}, model has {} rows",
            y.len(),
            model.m
        )));
    }
    let n = model.n;
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if y_norm == 0.0 {
        return Ok(Decoded {
            estimate: vec![0.0; n],
            iterations: 0,
            converged: true,
            residual: 0.0,
        });
    }
    let proj = AffineProjector::new(model, y)?;
    let mut x = DVector::zeros(n);
    let mut z = DVector::zeros(n);
    let mut u = DVector::<f64>::zeros(n);
    let mut v = DVector::zeros(n);
    let mut scratch = DVector::zeros(model.m);
    let mut z_prev = DVector::zeros(n);
    // least-norm feasible start
    proj.project(&z.clone(), &mut z, &mut scratch);
    let mut tau = config.step;
    let residual_of = |w: &DVector<f64>| -> f64 {
        let r = &model.matrix * w;
        r.iter()
            .zip(y)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        v.copy_from(&z);
        v -= &u;
        proj.project(&v, &mut x, &mut scratch);
        if beat.is_some_and(|f| penalty.value(x.as_slice()) < f) {
            break;
        }
        z_prev.copy_from(&z);
        // v = relaxed x
        v.copy_from(&x);
        v *= RELAXATION;
        v.axpy(1.0 - RELAXATION, &z_prev, 1.0);
        u += &v;
        z.copy_from(&u);
        penalty.prox(z.as_mut_slice(), tau);
        u -= &z;

        let primal = norm(&(&x - &z));
        let dual = norm(&(&z - &z_prev));
        let scale = 1.0 + norm(&x).max(norm(&z));
        if primal <= config.stop_tol * scale && dual <= config.stop_tol * scale {
            converged = true;
            break;
        }
        if iterations % 10 == 0 {
            // u is the dual scaled by tau; rescale it along with tau
            if primal > 10.0 * dual {
                tau *= 0.5;
                u *= 2.0;
            } else if dual > 10.0 * primal {
                tau *= 2.0;
                u *= 0.5;
            }
        }
    }
    let z_res = residual_of(&z);
    let (estimate, residual) = if z_res <= config.feasibility_tol * (1.0 + y_norm) {
        (z, z_res)
    } else {
        let r = residual_of(&x);
        (x, r)
    };
    Ok(Decoded {
        estimate: estimate.as_slice().to_vec(),
        iterations,
        converged,
        residual,
    })
}

fn check_shape(model: &MeasurementModel, shape: MixedShape) -> Result<()> {
    if shape.len() != model.n {
        return Err(Error::invalid(format!(
            "shape {}x{} does not match model width {}",
            shape.b, shape.d, model.n
        )));
    }
    Ok(())
}

/// `min ||z||_{l1(l2)}` subject to `A z = y`.
pub fn decode_group_bp(
    model: &MeasurementModel,
    y: &[f64],
    shape: MixedShape,
    config: &SolverConfig,
) -> Result<Decoded<MixedArray>> {
    check_shape(model, shape)?;
    let out = basis_pursuit(model, y, Penalty::GroupL1L2 { d: shape.d }, config, None)?;
    Ok(out.map(|v| MixedArray::from_vec(shape, v).expect("solver output is finite")))
}

/// `min ||z||_1` subject to `A z = y`.
pub fn decode_bp(
    model: &MeasurementModel,
    y: &[f64],
    config: &SolverConfig,
) -> Result<Decoded<Vec<f64>>> {
    basis_pursuit(model, y, Penalty::L1, config, None)
}

/// `min ||z||_{l2(l1)}` subject to `A z = y`.
pub fn decode_l2l1_bp(
    model: &MeasurementModel,
    y: &[f64],
    shape: MixedShape,
    config: &SolverConfig,
) -> Result<Decoded<MixedArray>> {
    check_shape(model, shape)?;
    let out = basis_pursuit(model, y, Penalty::L2L1 { d: shape.d }, config, None)?;
    Ok(out.map(|v| MixedArray::from_vec(shape, v).expect("solver output is finite")))
}

/// Block hard thresholding pursuit: take a normalized gradient step, keep the `s` rows
/// of largest `l_2` norm, then fit those rows to `y` by least squares. Stops
/// when the kept rows repeat. Returns the iterate with the smallest residual.
pub fn decode_block_greedy(
    model: &MeasurementModel,
    y: &[f64],
    shape: MixedShape,
    s: usize,
    iterations: usize,
) -> Result<Decoded<MixedArray>> {
    check_shape(model, shape)?;
    if s == 0 || s > shape.b {
        return Err(Error::invalid(format!(
            "need 1 <= s <= b = {}, got s = {s}",
            shape.b
        )));
    }
    if y.len() != model.m {
        return Err(Error::invalid("y length does not match the model"));
    }
    let a = &model.matrix;
    let yv = DVector::from_column_slice(y);
    let two = Exponent::new(2.0).expect("valid");
    let mut x = MixedArray::zeros(shape);
    let mut best = (yv.norm(), x.clone(), 0);
    let mut rows: Vec<usize> = Vec::new();
    for it in 1..=iterations {
        let xv = DVector::from_column_slice(x.values());
        let g = a.tr_mul(&(&yv - a * &xv));
        let step = normalized_step(a, &g, shape, &rows);
        let stepped: Vec<f64> = xv
            .iter()
            .zip(g.iter())
            .map(|(xi, gi)| xi + step * gi)
            .collect();
        let kept = outer_threshold(&MixedArray::from_vec(shape, stepped)?, s, two)?;
        let mut next_rows: Vec<usize> = (0..shape.b)
            .filter(|&i| kept.row(i).iter().any(|&v| v != 0.0))
            .collect();
        next_rows.sort_unstable();
        if it > 1 && next_rows == rows {
            break;
        }
        rows = next_rows;
        x = fit_rows(a, &yv, shape, &rows)?;
        let res = (&yv - a * DVector::from_column_slice(x.values())).norm();
        if res < best.0 {
            best = (res, x.clone(), it);
        }
        if res <= 1e-12 * (1.0 + yv.norm()) {
            break;
        }
    }
    let converged = best.0 <= 1e-6 * (1.0 + yv.norm());
    Ok(Decoded {
        estimate: best.1,
        iterations: best.2,
        converged,
        residual: best.0,
    })
}

/// `||g_S||^2 / ||A g_S||^2` with `g_S` the gradient on the current rows (all
/// rows at the start), which is exact line search along that direction.
fn normalized_step(a: &DMatrix<f64>, g: &DVector<f64>, shape: MixedShape, rows: &[usize]) -> f64 {
    let mut gs = DVector::zeros(g.len());
    if rows.is_empty() {
        gs.copy_from(g);
    } else {
        for &i in rows {
            for c in i * shape.d..(i + 1) * shape.d {
                gs[c] = g[c];
            }
        }
    }
    let num = gs.norm_squared();
    let den = (a * &gs).norm_squared();
    if num == 0.0 || den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Least-squares (minimum-norm when underdetermined) fit of `y` using only
/// the columns of the given rows.
fn fit_rows(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    shape: MixedShape,
    rows: &[usize],
) -> Result<MixedArray> {
    let cols: Vec<usize> = rows
        .iter()
        .flat_map(|&i| i * shape.d..(i + 1) * shape.d)
        .collect();
    let mut x = MixedArray::zeros(shape);
    if cols.is_empty() {
        return Ok(x);
    }
    let sub = a.select_columns(&cols);
    let z = sub
        .svd(true, true)
        .solve(y, 1e-12)
        .map_err(|e| Error::Factorization(e.to_string()))?;
    for (k, &c) in cols.iter().enumerate() {
        x.set(c / shape.d, c % shape.d, z[k]);
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparsityMode {
    /// At most `s` nonzero rows.
    Outer,
    /// At most `t` nonzeros in every row.
    Inner,
    /// At most `k` nonzeros overall.
    Plain,
}

impl fmt::Display for SparsityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SparsityMode::Outer => "outer",
            SparsityMode::Inner => "inner",
            SparsityMode::Plain => "plain",
        })
    }
}

/// Draws a signal with uniformly random structured support and standard
/// Gaussian values.
pub fn random_signal<R: Rng + ?Sized>(
    shape: MixedShape,
    mode: SparsityMode,
    k: usize,
    rng: &mut R,
) -> Result<MixedArray> {
    let limit = match mode {
        SparsityMode::Outer => shape.b,
        SparsityMode::Inner => shape.d,
        SparsityMode::Plain => shape.len(),
    };
    if k == 0 || k > limit {
        return Err(Error::invalid(format!(
            "{mode} sparsity must be in 1..={limit}, got {k}"
        )));
    }
    let mut x = MixedArray::zeros(shape);
    match mode {
        SparsityMode::Outer => {
            for i in index::sample(rng, shape.b, k) {
                for j in 0..shape.d {
                    x.set(i, j, rng.sample(StandardNormal));
                }
            }
        }
        SparsityMode::Inner => {
            for i in 0..shape.b {
                for j in index::sample(rng, shape.d, k) {
                    x.set(i, j, rng.sample(StandardNormal));
                }
            }
        }
        SparsityMode::Plain => {
            for flat in index::sample(rng, shape.len(), k) {
                x.set(flat / shape.d, flat % shape.d, rng.sample(StandardNormal));
            }
        }
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    GroupBp,
    Bp,
    L2l1Bp,
    BlockGreedy,
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoderKind::GroupBp => "group_bp",
            DecoderKind::Bp => "bp",
            DecoderKind::L2l1Bp => "l2l1_bp",
            DecoderKind::BlockGreedy => "block_greedy",
        })
    }
}

const GREEDY_ITERATIONS: usize = 100;

/// Runs `decoder` on `y = A x`.
pub fn decode(
    kind: DecoderKind,
    model: &MeasurementModel,
    y: &[f64],
    shape: MixedShape,
    s: usize,
    config: &SolverConfig,
) -> Result<Decoded<MixedArray>> {
    decode_inner(kind, model, y, shape, s, config, None)
}

fn decode_inner(
    kind: DecoderKind,
    model: &MeasurementModel,
    y: &[f64],
    shape: MixedShape,
    s: usize,
    config: &SolverConfig,
    truth: Option<&MixedArray>,
) -> Result<Decoded<MixedArray>> {
    let penalty = match kind {
        DecoderKind::GroupBp => Penalty::GroupL1L2 { d: shape.d },
        DecoderKind::Bp => Penalty::L1,
        DecoderKind::L2l1Bp => Penalty::L2L1 { d: shape.d },
        DecoderKind::BlockGreedy => {
            return decode_block_greedy(model, y, shape, s, GREEDY_ITERATIONS)
        }
    };
    check_shape(model, shape)?;
    // strictly below the truth's penalty, beyond rounding
    let beat = truth.map(|x| penalty.value(x.values()) * (1.0 - 1e-9));
    let out = basis_pursuit(model, y, penalty, config, beat)?;
    Ok(out.map(|v| MixedArray::from_vec(shape, v).expect("solver output is finite")))
}

/// Decodes `A x` for a known `x`. A basis-pursuit run stops early once it
/// finds a feasible point with smaller penalty than `x`, which certifies that
/// `x` will not be recovered.
pub fn decode_known(
    kind: DecoderKind,
    model: &MeasurementModel,
    x: &MixedArray,
    s: usize,
    config: &SolverConfig,
) -> Result<Decoded<MixedArray>> {
    let y = model.measure(x.values())?;
    decode_inner(kind, model, &y, x.shape(), s, config, Some(x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub b: usize,
    pub d: usize,
    pub mode: SparsityMode,
    pub s_or_t: usize,
    pub m: usize,
    pub decoder: DecoderKind,
    pub rel_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

/// `||x - x_hat||_{l2(l2)} / ||x||_{l2(l2)}`, or the absolute error for `x = 0`.
pub fn relative_error(x: &MixedArray, x_hat: &MixedArray) -> Result<f64> {
    let e = ExponentPair::new(2.0, 2.0)?;
    let err = mixed_norm(&x.sub(x_hat)?, e);
    let scale = mixed_norm(x, e);
    Ok(if scale == 0.0 { err } else { err / scale })
}

/// One draw of model and signal, decoded. `seed` determines both.
pub fn run_trial(
    shape: MixedShape,
    mode: SparsityMode,
    k: usize,
    m: usize,
    decoder: DecoderKind,
    config: &SolverConfig,
    seed: u64,
) -> Result<ExperimentRecord> {
    let x = random_signal(shape, mode, k, &mut rng::stream(seed, &[1]))?;
    let model = gaussian_model(m, shape.b, shape.d, rng::derive_seed(seed, &[0]))?;
    let s = if mode == SparsityMode::Outer {
        k
    } else {
        shape.b
    };
    let out = decode_known(decoder, &model, &x, s, config)?;
    Ok(ExperimentRecord {
        b: shape.b,
        d: shape.d,
        mode,
        s_or_t: k,
        m,
        decoder,
        rel_error: relative_error(&x, &out.estimate)?,
        iterations: out.iterations,
        converged: out.converged,
        seed,
    })
}

/// Outcome of a stability measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Stability {
    Ratio(f64),
    /// `x` is exactly structured-sparse and was recovered.
    ExactRecovery,
    /// `x` is exactly structured-sparse and was missed.
    Infinite,
}

/// Stability ratio for structured sparse recovery.
///
/// `||x - x_hat||_{l2(l2)} / (sigma(x) / sqrt(k))`, with `sigma` the best
/// `s`-outer-sparse error in `l1(l2)` for `Outer` and the best `t`-inner-sparse
/// error in `l2(l1)` for `Inner`. A zero denominator yields `ExactRecovery`
/// when the error is at most `tol` and `Infinite` otherwise.
pub fn stability_ratio(
    x: &MixedArray,
    x_hat: &MixedArray,
    k: usize,
    mode: SparsityMode,
    tol: f64,
) -> Result<Stability> {
    let sigma = match mode {
        SparsityMode::Outer => sigma_outer(x, k, ExponentPair::new(1.0, 2.0)?)?,
        SparsityMode::Inner => sigma_inner(x, k, ExponentPair::new(2.0, 1.0)?)?,
        SparsityMode::Plain => {
            return Err(Error::invalid("stability ratio needs outer or inner mode"))
        }
    };
    let err = mixed_norm(&x.sub(x_hat)?, ExponentPair::new(2.0, 2.0)?);
    if sigma == 0.0 {
        return Ok(if err <= tol {
            Stability::ExactRecovery
        } else {
            Stability::Infinite
        });
    }
    Ok(Stability::Ratio(err * (k as f64).sqrt() / sigma))
}

/// Relative error at or below which a trial counts as a success.
pub const SUCCESS_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub b: usize,
    pub d: usize,
    pub mode: SparsityMode,
    pub sparsity: Vec<usize>,
    pub m: Vec<usize>,
    pub trials: usize,
    pub decoder: DecoderKind,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_success")]
    pub success_threshold: f64,
}

fn default_success() -> f64 {
    SUCCESS_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub b: usize,
    pub d: usize,
    pub mode: SparsityMode,
    pub s_or_t: usize,
    pub m: usize,
    pub decoder: DecoderKind,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean over trials that completed.
    pub mean_rel_err: f64,
    /// Trials whose decoder returned an error.
    pub failed: usize,
    pub seed: u64,
}

/// Success rates over a grid of sparsity levels and measurement counts. Cell
/// `(i, j)` trial `k` uses seed `derive(seed, [i, j, k])`, so results do not
/// depend on scheduling.
pub fn phase_transition(config: &PhaseConfig, seed: u64) -> Result<Vec<PhaseCell>> {
    let shape = MixedShape::new(config.b, config.d)?;
    if config.sparsity.is_empty() || config.m.is_empty() || config.trials == 0 {
        return Err(Error::invalid(
            "sparsity and m grids must be nonempty and trials >= 1",
        ));
    }
    config.solver.validate()?;
    for &m in &config.m {
        if m == 0 || m > shape.len() {
            return Err(Error::invalid(format!(
                "m = {m} outside 1..={}",
                shape.len()
            )));
        }
    }
    let jobs: Vec<(usize, usize, usize)> = (0..config.sparsity.len())
        .flat_map(|i| {
            (0..config.m.len()).flat_map(move |j| (0..config.trials).map(move |k| (i, j, k)))
        })
        .collect();
    let outcomes: Vec<Result<ExperimentRecord>> = jobs
        .par_iter()
        .map(|&(i, j, k)| {
            let trial_seed = rng::derive_seed(seed, &[i as u64, j as u64, k as u64]);
            run_trial(
                shape,
                config.mode,
                config.sparsity[i],
                config.m[j],
                config.decoder,
                &config.solver,
                trial_seed,
            )
        })
        .collect();
    let mut cells = Vec::with_capacity(config.sparsity.len() * config.m.len());
    for (cell, chunk) in outcomes.chunks(config.trials).enumerate() {
        let (i, j) = (cell / config.m.len(), cell % config.m.len());
        let errors: Vec<f64> = chunk
            .iter()
            .filter_map(|r| r.as_ref().ok().map(|e| e.rel_error))
            .collect();
        let successes = errors
            .iter()
            .filter(|&&e| e <= config.success_threshold)
            .count();
        cells.push(PhaseCell {
            b: shape.b,
            d: shape.d,
            mode: config.mode,
            s_or_t: config.sparsity[i],
            m: config.m[j],
            decoder: config.decoder,
            trials: config.trials,
            successes,
            success_rate: successes as f64 / config.trials as f64,
            mean_rel_err: if errors.is_empty() {
                f64::NAN
            } else {
                errors.iter().sum::<f64>() / errors.len() as f64
            },
            failed: chunk.len() - errors.len(),
            seed,
        });
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEstimate {
    /// Per trial, the fewest measurements that recover the signal.
    pub per_trial: Vec<usize>,
    /// Median of `per_trial`: the measurement count with 50% success.
    pub median: f64,
}

/// Estimates the 50%-success measurement count. Each trial fixes a signal and
/// a full-height Gaussian matrix, and bisects for the smallest prefix of rows
/// that recovers the signal. Recovery is monotone along prefixes because the
/// feasible set only shrinks while the signal stays feasible.
pub fn success_threshold(
    shape: MixedShape,
    mode: SparsityMode,
    k: usize,
    decoder: DecoderKind,
    config: &SolverConfig,
    trials: usize,
    seed: u64,
) -> Result<ThresholdEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let per_trial: Vec<usize> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = rng::derive_seed(seed, &[trial]);
            let x = random_signal(shape, mode, k, &mut rng::stream(trial_seed, &[1]))?;
            let model_seed = rng::derive_seed(trial_seed, &[0]);
            let s = if mode == SparsityMode::Outer {
                k
            } else {
                shape.b
            };
            let succeeds = |m: usize| -> Result<bool> {
                let model = gaussian_model(m, shape.b, shape.d, model_seed)?;
                let out = decode_known(decoder, &model, &x, s, config)?;
                Ok(relative_error(&x, &out.estimate)? <= SUCCESS_THRESHOLD)
            };
            // invariant: lo fails (or is 0), hi succeeds
            let (mut lo, mut hi) = (0, shape.len());
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if succeeds(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(hi)
        })
        .collect::<Result<_>>()?;
    let mut sorted = per_trial.clone();
    sorted.sort_unstable();
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) as f64
    };
    Ok(ThresholdEstimate { per_trial, median })
}
