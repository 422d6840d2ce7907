//! Gelfand-number upper bounds for embeddings of Besov sequence spaces with
//! dominating mixed smoothness on `[0,1]^d`: layer dimensions, per-layer
//! measurement budgets, block bounds, rho-power aggregation and rate fits.
//!
//! All constants are 1; only slopes are meaningful.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovParams {
    pub d: usize,
    pub r: f64,
    pub p0: f64,
    pub q0: f64,
    pub p1: f64,
    pub q1: f64,
}

impl BesovParams {
    /// The sharp `p0 = p1 = 2` family.
    pub fn sharp(d: usize, r: f64, q0: f64, q1: f64) -> Self {
        BesovParams {
            d,
            r,
            p0: 2.0,
            q0,
            p1: 2.0,
            q1,
        }
    }

    /// `min{1, p1, q1}`.
    pub fn rho(&self) -> f64 {
        1f64.min(self.p1).min(self.q1)
    }

    fn gap_q(&self) -> f64 {
        1.0 / self.q0 - 1.0 / self.q1
    }

    fn gap_p(&self) -> f64 {
        1.0 / self.p0 - 1.0 / self.p1
    }

    fn is_endpoint(&self) -> bool {
        (self.r - self.gap_q()).abs() <= EXACT_TOL
    }

    /// Checks the parameter range that `variant` is proved for.
    pub fn validate(&self, variant: Variant) -> Result<()> {
        let finite = [self.r, self.p0, self.q0, self.p1, self.q1]
            .iter()
            .all(|v| v.is_finite());
        if self.d == 0 || !finite {
            return Err(Error::invalid("need d >= 1 and finite exponents"));
        }
        let (p0, q0, p1, q1, r) = (self.p0, self.q0, self.p1, self.q1, self.r);
        let ok = match variant {
            Variant::Sharp | Variant::Endpoint => {
                let base = p0 == 2.0 && p1 == 2.0 && q0 > 0.0 && q0 <= 1.0 && q0 < q1 && q1 <= 2.0;
                let r_ok = if variant == Variant::Sharp {
                    r > 0.0 && r < self.gap_q() - EXACT_TOL
                } else {
                    self.is_endpoint()
                };
                base && r_ok
            }
            Variant::General => {
                q0 > 0.0
                    && q0 <= p0
                    && p0 <= 1.0
                    && p0 <= p1
                    && p1 <= q1
                    && q1 <= 2.0
                    && r > self.gap_p()
                    && r <= self.gap_q() + EXACT_TOL
            }
        };
        if !ok {
            return Err(Error::invalid(format!(
                "parameters {self:?} are not admissible for the {variant} variant"
            )));
        }
        Ok(())
    }

    /// Default `kappa`: midpoint of `(r/(1/q0 - 1/q1), 1)`.
    pub fn default_kappa(&self) -> f64 {
        0.5 * (self.r / self.gap_q() + 1.0)
    }

    /// Default `beta`: midpoint of `(1, r/(1/p0 - 1/p1))`, or 2 for `p0 = p1`.
    pub fn default_beta(&self) -> f64 {
        let g = self.gap_p();
        if g > 0.0 {
            0.5 * (1.0 + self.r / g)
        } else {
            2.0
        }
    }
}

/// Which proof the schedule and bounds follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `p0 = p1 = 2`, `r < 1/q0 - 1/q1`: rate `m^-r`.
    Sharp,
    /// `p0 = p1 = 2`, `r = 1/q0 - 1/q1`: rate `m^-r` up to `(log log m)^(r + 1/rho)`.
    Endpoint,
    /// `p0 <= 1`: rate `m^-r` up to loglog factors.
    General,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Sharp => "sharp",
            Variant::Endpoint => "endpoint",
            Variant::General => "general",
        })
    }
}

/// `C(mu + d - 1, d - 1)`, the number of `j` in `N_0^d` with `|j|_1 = mu`.
pub fn layer_multiindex_count(mu: usize, d: usize) -> Result<u128> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    let mut c: u128 = 1;
    for i in 0..(d - 1) as u128 {
        c = c
            .checked_mul(mu as u128 + 1 + i)
            .ok_or_else(|| Error::Overflow(format!("C({}, {})", mu + d - 1, d - 1)))?
            / (i + 1);
    }
    Ok(c)
}

/// `D_mu = sum_{|j|_1 = mu} prod_i (2^{j_i} + 3)`: a cube
/// `2^-j [k - 1, k + 1]` meets `[0,1]` for `k = -1, ..., 2^j + 1`.
pub fn block_dimension(mu: usize, d: usize) -> Result<u128> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    let overflow = || Error::Overflow(format!("D_{mu} in dimension {d}"));
    let one_dim: Vec<u128> = (0..=mu)
        .map(|j| {
            1u128
                .checked_shl(j as u32)
                .filter(|_| j < 127)
                .and_then(|v| v.checked_add(3))
                .ok_or_else(overflow)
        })
        .collect::<Result<_>>()?;
    // layer sums for 1..d coordinates, by repeated convolution
    let mut layers = one_dim.clone();
    for _ in 1..d {
        let mut next = vec![0u128; mu + 1];
        for (total, slot) in next.iter_mut().enumerate() {
            for j in 0..=total {
                let term = layers[total - j]
                    .checked_mul(one_dim[j])
                    .ok_or_else(overflow)?;
                *slot = slot.checked_add(term).ok_or_else(overflow)?;
            }
        }
        layers = next;
    }
    Ok(layers[mu])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Layer {
    pub mu: usize,
    pub m_mu: u128,
    pub d_mu: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetSchedule {
    pub j: usize,
    pub l: usize,
    /// Last layer with a (possibly zero) budget; beyond it only operator norms count.
    pub m: usize,
    pub kappa: f64,
    pub beta: f64,
    pub per_layer: Vec<Layer>,
    pub total: u128,
    pub variant: Variant,
}

fn floor_pow2(exponent: f64) -> Result<u128> {
    if exponent >= 120.0 {
        return Err(Error::Overflow(format!("2^{exponent}")));
    }
    Ok(exponent.exp2().floor() as u128)
}

/// Per-layer budgets `m_mu`:
/// `2 D_mu` up to `J`; `2^mu 2^((L - mu) kappa)` on `(J, L]` (or `2^J mu^(d-1)`
/// at the endpoint); for the general variant with `p0 < p1`,
/// `2^mu 2^((L - mu) beta)` on `(L, M]` with `M = ceil(L beta/(beta - 1))`.
pub fn budget_schedule(
    params: &BesovParams,
    j: usize,
    kappa: Option<f64>,
    beta: Option<f64>,
    variant: Variant,
) -> Result<BudgetSchedule> {
    params.validate(variant)?;
    if j == 0 {
        return Err(Error::invalid("J must be at least 1"));
    }
    let kappa = kappa.unwrap_or_else(|| params.default_kappa());
    let beta = beta.unwrap_or_else(|| params.default_beta());
    let endpoint_middle =
        variant == Variant::Endpoint || (variant == Variant::General && params.is_endpoint());
    if !endpoint_middle && !(kappa < 1.0 && params.r < kappa * params.gap_q()) {
        return Err(Error::invalid(format!(
            "kappa = {kappa} must satisfy r/(1/q0 - 1/q1) < kappa < 1"
        )));
    }
    let third_range = variant == Variant::General && params.gap_p() > 0.0;
    if third_range && !(beta > 1.0 && params.r > beta * params.gap_p()) {
        return Err(Error::invalid(format!(
            "beta = {beta} must satisfy 1 < beta < r/(1/p0 - 1/p1)"
        )));
    }
    let d = params.d;
    let l = j + ((d - 1) as f64 * (j as f64).log2()).round() as usize;
    let big_m = if third_range {
        (l as f64 * beta / (beta - 1.0)).ceil() as usize
    } else {
        l
    };
    let mut per_layer = Vec::with_capacity(big_m + 1);
    let mut total: u128 = 0;
    for mu in 0..=big_m {
        let d_mu = block_dimension(mu, d)?;
        let m_mu = if mu <= j {
            d_mu.checked_mul(2)
                .ok_or_else(|| Error::Overflow("2 D_mu".into()))?
        } else if mu <= l {
            if endpoint_middle {
                floor_pow2(j as f64)? * (mu as u128).pow((d - 1) as u32)
            } else {
                floor_pow2(mu as f64 + (l - mu) as f64 * kappa)?
            }
        } else {
            floor_pow2(mu as f64 - (mu - l) as f64 * beta)?
        };
        total = total
            .checked_add(m_mu)
            .ok_or_else(|| Error::Overflow("total budget".into()))?;
        per_layer.push(Layer { mu, m_mu, d_mu });
    }
    Ok(BudgetSchedule {
        j,
        l,
        m: big_m,
        kappa,
        beta,
        per_layer,
        total,
        variant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockVariant {
    /// Via the flat embedding `l_q0 -> l_q1`.
    Est1,
    /// Via the flat embedding `l_p0 -> l_p1`.
    Est2,
    /// Via the mixed block bound, for `p0 = p1 = 2`.
    Impr,
    /// The layer's operator norm.
    Opnorm,
}

/// `2^-((r - 1/p0 + 1/p1) mu)`.
fn layer_opnorm(mu: usize, params: &BesovParams) -> f64 {
    (-(params.r - params.gap_p()) * mu as f64).exp2()
}

/// Upper bound for `c_{m+1}` of the layer-`mu` identity with budget `m`.
/// Zero once the budget reaches the layer dimension; never above the layer's
/// operator norm.
pub fn block_bound(
    mu: usize,
    m_mu: u128,
    params: &BesovParams,
    variant: BlockVariant,
) -> Result<f64> {
    let d_mu = block_dimension(mu, params.d)?;
    let opnorm = layer_opnorm(mu, params);
    if m_mu >= d_mu {
        return Ok(0.0);
    }
    if m_mu == 0 || variant == BlockVariant::Opnorm {
        return Ok(opnorm);
    }
    let (r, mu_f, m) = (params.r, mu as f64, m_mu as f64);
    let flat = |gap: f64| {
        ((std::f64::consts::E * d_mu as f64 / m).ln().max(0.0) / m)
            .min(1.0)
            .powf(gap)
    };
    let value = match variant {
        BlockVariant::Est1 => {
            (-r * mu_f).exp2() * (mu_f * params.gap_q()).exp2() * flat(params.gap_q())
        }
        BlockVariant::Est2 => opnorm * flat(params.gap_p()),
        BlockVariant::Impr => {
            if params.p0 != 2.0 || params.p1 != 2.0 {
                return Err(Error::invalid("impr bound needs p0 = p1 = 2"));
            }
            let blocks = layer_multiindex_count(mu, params.d)? as f64;
            let inner = d_mu as f64 / blocks;
            let bracket = (std::f64::consts::E * blocks / m).ln().max(0.0) + inner;
            (-r * mu_f).exp2() * (bracket / m).min(1.0).powf(params.gap_q())
        }
        BlockVariant::Opnorm => unreachable!(),
    };
    Ok(value.min(opnorm))
}

/// The block bound the proof of `variant` applies on each range.
fn range_variant(variant: Variant, mu: usize, schedule: &BudgetSchedule) -> BlockVariant {
    match variant {
        Variant::Sharp | Variant::Endpoint => BlockVariant::Impr,
        Variant::General if mu <= schedule.l => BlockVariant::Est1,
        Variant::General => BlockVariant::Est2,
    }
}

/// `(sum_mu block_bound^rho)^(1/rho)` over the schedule's layers, plus the
/// operator-norm tail beyond `M` in closed form.
pub fn aggregate_bound(schedule: &BudgetSchedule, params: &BesovParams) -> Result<f64> {
    let decay = params.r - params.gap_p();
    if decay <= 0.0 {
        return Err(Error::DivergentTail(format!(
            "r - 1/p0 + 1/p1 = {decay} <= 0"
        )));
    }
    let rho = params.rho();
    let mut sum = 0.0;
    for layer in &schedule.per_layer {
        let bv = range_variant(schedule.variant, layer.mu, schedule);
        sum += block_bound(layer.mu, layer.m_mu, params, bv)?.powf(rho);
    }
    // sum_{mu > M} 2^(-decay rho mu)
    let a = (-decay * rho).exp2();
    sum += a.powi(schedule.m as i32 + 1) / (1.0 - a);
    Ok(sum.powf(1.0 / rho))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the least-squares line.
    pub residual: f64,
    /// `(log m, log bound)`.
    pub points: Vec<(f64, f64)>,
    /// Slope after dividing the bound by `(log log_2 m)^correction_exponent`.
    pub corrected_slope: f64,
    pub correction_exponent: f64,
    pub variant: Variant,
}

fn least_squares(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * n * (1.0 + mx * mx) {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}

/// The loglog power the upper bound for `variant` carries on top of `m^-r`.
pub fn loglog_exponent(params: &BesovParams, variant: Variant) -> f64 {
    let endpoint = if params.is_endpoint() {
        params.r + 1.0 / params.rho()
    } else {
        0.0
    };
    match variant {
        Variant::Sharp => 0.0,
        Variant::Endpoint => endpoint,
        Variant::General => params.gap_q() + endpoint,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub j: usize,
    pub total_m: u128,
    pub aggregate: f64,
    pub variant: Variant,
    /// Slope of the fit through this and all earlier rows, once there are two.
    pub slope_so_far: Option<f64>,
}

/// Total budget and aggregate bound for each `J`.
pub fn rate_table(
    params: &BesovParams,
    js: &[usize],
    kappa: Option<f64>,
    beta: Option<f64>,
    variant: Variant,
) -> Result<Vec<RateRow>> {
    let mut rows: Vec<RateRow> = Vec::with_capacity(js.len());
    let mut points = Vec::with_capacity(js.len());
    for &j in js {
        let schedule = budget_schedule(params, j, kappa, beta, variant)?;
        let aggregate = aggregate_bound(&schedule, params)?;
        points.push(((schedule.total as f64).ln(), aggregate.ln()));
        let slope_so_far = if points.len() >= 2 {
            least_squares(&points).ok().map(|f| f.0)
        } else {
            None
        };
        rows.push(RateRow {
            j,
            total_m: schedule.total,
            aggregate,
            variant,
            slope_so_far,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log aggregate` against `log total` over `js`, raw
/// and after removing the predicted loglog factor.
pub fn rate_fit(
    params: &BesovParams,
    js: &[usize],
    kappa: Option<f64>,
    beta: Option<f64>,
    variant: Variant,
) -> Result<RateFit> {
    if js.len() < 4 {
        return Err(Error::invalid("rate fit needs at least 4 values of J"));
    }
    let rows = rate_table(params, js, kappa, beta, variant)?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.total_m as f64).ln(), r.aggregate.ln()))
        .collect();
    let (slope, intercept, residual) = least_squares(&points)?;
    let correction_exponent = loglog_exponent(params, variant);
    let corrected: Vec<(f64, f64)> = points
        .iter()
        .map(|&(lm, lb)| {
            (
                lm,
                lb - correction_exponent * (lm / std::f64::consts::LN_2).ln().ln(),
            )
        })
        .collect();
    let corrected_slope = least_squares(&corrected)?.0;
    Ok(RateFit {
        slope,
        intercept,
        residual,
        points,
        corrected_slope,
        correction_exponent,
        variant,
    })
}
