//! Gaussian widths of the structured sparse sets `L_{b,d,s}` (s-outer-sparse
//! unit vectors) and `D_{b,d,s} = {x : ||x||_2 <= 1, ||x||_{l1(l2)} <= sqrt(s)}`,
//! plus the escape-through-the-mesh bookkeeping around them.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::norms::{lq_norm, mixed_norm, Exponent, ExponentPair, MixedArray, MixedShape};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidthEstimate {
    pub mean: f64,
    /// `None` for a single trial.
    pub std_error: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl WidthEstimate {
    fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std_error = (samples.len() > 1).then(|| {
            let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        });
        WidthEstimate {
            mean,
            std_error,
            trials: samples.len(),
            seed,
        }
    }
}

/// `E_m = E||g||_2` for `g` standard Gaussian in `R^m`, for `m = 1..=max_m`.
#[derive(Debug, Clone)]
pub struct GaussianNormTable {
    values: Vec<f64>,
}

impl GaussianNormTable {
    pub fn new(max_m: usize) -> Result<Self> {
        let values = (1..=max_m).map(gaussian_norm_mean).collect::<Result<_>>()?;
        Ok(GaussianNormTable { values })
    }

    pub fn get(&self, m: usize) -> Option<f64> {
        m.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    pub fn max_m(&self) -> usize {
        self.values.len()
    }
}

/// `sqrt(2) Gamma((m+1)/2) / Gamma(m/2)`, evaluated in the log domain.
pub fn gaussian_norm_mean(m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let m = m as f64;
    Ok((0.5 * std::f64::consts::LN_2 + ln_gamma((m + 1.0) / 2.0) - ln_gamma(m / 2.0)).exp())
}

fn check_s(s: usize, b: usize) -> Result<()> {
    if s == 0 || s > b {
        return Err(Error::invalid(format!(
            "need 1 <= s <= b = {b}, got s = {s}"
        )));
    }
    Ok(())
}

fn sorted_row_norms_desc(g: &MixedArray) -> Vec<f64> {
    let mut norms = g.row_norms(Exponent::new(2.0).expect("2 is a valid exponent"));
    norms.sort_unstable_by(|a, b| b.total_cmp(a));
    norms
}

/// `sup <g, x>` over unit-norm `x` with at most `s` nonzero rows: the root of
/// the sum of the `s` largest squared row norms.
pub fn sup_outer_sparse(g: &MixedArray, s: usize) -> Result<f64> {
    check_s(s, g.shape().b)?;
    let norms = sorted_row_norms_desc(g);
    Ok(norms[..s].iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// `sup <g, x>` over `x` in `D_{b,d,s}`.
///
/// Only row norms matter: with `gamma` the row norms of `g`, the optimum is
/// `a = (gamma - lambda)_+ / ||(gamma - lambda)_+||_2` for the smallest
/// `lambda >= 0` with `sum a <= sqrt(s)`, found by bisection.
pub fn sup_d(g: &MixedArray, s: usize) -> Result<f64> {
    check_s(s, g.shape().b)?;
    let gamma = sorted_row_norms_desc(g);
    let budget = (s as f64).sqrt();
    let value_at = |lambda: f64| -> (f64, f64) {
        let (mut l1, mut l2sq, mut dot) = (0.0, 0.0, 0.0);
        for &v in gamma.iter().take_while(|&&v| v > lambda) {
            let a = v - lambda;
            l1 += a;
            l2sq += a * a;
            dot += v * a;
        }
        let l2 = l2sq.sqrt();
        if l2 == 0.0 {
            return (1.0, gamma[0]);
        }
        (l1 / l2, dot / l2)
    };
    let (ratio0, value0) = value_at(0.0);
    if ratio0 <= budget || gamma[0] == 0.0 {
        return Ok(value0);
    }
    let (mut lo, mut hi) = (0.0, gamma[0]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if value_at(mid).0 > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * gamma[0] {
            break;
        }
    }
    Ok(value_at(hi).1)
}

fn monte_carlo(
    b: usize,
    d: usize,
    s: usize,
    trials: usize,
    seed: u64,
    f: fn(&MixedArray, usize) -> Result<f64>,
) -> Result<WidthEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let shape = MixedShape::new(b, d)?;
    check_s(s, b)?;
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let g = rng::gaussian_array(&mut rng::stream(seed, &[trial]), shape);
            f(&g, s)
        })
        .collect::<Result<_>>()?;
    Ok(WidthEstimate::from_samples(&samples, seed))
}

/// Monte Carlo mean of `sup_outer_sparse`, which is `w(L_{b,d,s})`. Since
/// `conv L` sits inside `D` and `D` inside `2 conv L`, the width of `D` lies
/// in `[mean, 2 mean]` up to sampling error.
pub fn width_d(b: usize, d: usize, s: usize, trials: usize, seed: u64) -> Result<WidthEstimate> {
    monte_carlo(b, d, s, trials, seed, sup_outer_sparse)
}

/// Monte Carlo estimate of `w(D_{b,d,s})` from its exact support function.
pub fn width_d_direct(
    b: usize,
    d: usize,
    s: usize,
    trials: usize,
    seed: u64,
) -> Result<WidthEstimate> {
    monte_carlo(b, d, s, trials, seed, sup_d)
}

/// `constant * (sqrt(s log(e b/s)) + sqrt(s d))`.
pub fn width_upper_formula(b: usize, d: usize, s: usize, constant: f64) -> f64 {
    let (b, d, s) = (b as f64, d as f64, s as f64);
    constant * ((s * (1.0 + (b / s).ln())).sqrt() + (s * d).sqrt())
}

/// `(theta, eta)` with `1/q = theta/p + (1 - theta)/2` and
/// `1 = eta/p + (1 - eta)/2`.
pub fn interpolation_exponents(p: f64, q: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p <= 1.0 && p < q && q <= 2.0) {
        return Err(Error::invalid(format!(
            "need 0 < p <= 1 and p < q <= 2, got p={p}, q={q}"
        )));
    }
    let span = 1.0 / p - 0.5;
    Ok(((1.0 / q - 0.5) / span, 0.5 / span))
}

/// `E_m - width - t`; positive means the escape event has probability at
/// least `1 - exp(-t^2/2)`.
pub fn escape_margin(m: usize, width: f64, t: f64) -> Result<f64> {
    if width < 0.0 || t <= 0.0 {
        return Err(Error::invalid("need width >= 0 and t > 0"));
    }
    Ok(gaussian_norm_mean(m)? - width - t)
}

/// `s^-(1/p - 1/q)`.
pub fn rho_threshold(s: usize, p: f64, q: f64) -> Result<f64> {
    if s == 0 || !(p > 0.0 && p <= q) {
        return Err(Error::invalid(format!(
            "need s >= 1 and 0 < p <= q, got s={s}, p={p}, q={q}"
        )));
    }
    Ok((s as f64).powf(-(1.0 / p - 1.0 / q)))
}

/// Whether `x/||x||_2` lies in `D_{b,d,s}`.
pub fn normalized_in_d(x: &MixedArray, s: usize) -> bool {
    let two = Exponent::new(2.0).expect("valid");
    let rows = x.row_norms(two);
    let l2 = lq_norm(rows.iter().copied(), two);
    if l2 == 0.0 {
        return false;
    }
    rows.iter().sum::<f64>() / l2 <= (s as f64).sqrt() * (1.0 + 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ContainmentCheck {
    /// Samples with `||x||_{lq(l2)} > rho`.
    pub tested: usize,
    pub violations: usize,
}

/// Samples `x` in the unit ball of `l_p(l_2)`, keeps those with
/// `||x||_{lq(l2)} > rho_threshold(s, p, q)`, and counts how many fail to
/// normalize into `D_{b,d,s}`.
pub fn rho_containment_check(
    b: usize,
    d: usize,
    s: usize,
    p: f64,
    q: f64,
    samples: usize,
    seed: u64,
) -> Result<ContainmentCheck> {
    interpolation_exponents(p, q)?;
    let shape = MixedShape::new(b, d)?;
    check_s(s, b)?;
    let rho = rho_threshold(s, p, q)?;
    let e_src = ExponentPair::new(p, 2.0)?;
    let e_dst = ExponentPair::new(q, 2.0)?;
    let mut rng = rng::stream(seed, &[0x40]);
    let mut check = ContainmentCheck {
        tested: 0,
        violations: 0,
    };
    for _ in 0..samples {
        // few active rows with spread-out magnitudes push ||x||_q above rho
        let active = rng.random_range(1..=(2 * s).min(b));
        let rows = rand::seq::index::sample(&mut rng, b, active);
        let mut x = MixedArray::zeros(shape);
        for i in rows.iter() {
            let scale = rng.random_range(0.0f64..1.0).powi(3);
            for j in 0..d {
                let v: f64 = rng.sample(rand_distr::StandardNormal);
                x.set(i, j, scale * v);
            }
        }
        let n = mixed_norm(&x, e_src);
        if n == 0.0 {
            continue;
        }
        let radius = rng.random_range(0.5f64..=1.0);
        let x = x.scale(radius / n);
        if mixed_norm(&x, e_dst) > rho {
            check.tested += 1;
            if !normalized_in_d(&x, s) {
                check.violations += 1;
            }
        }
    }
    Ok(check)
}
