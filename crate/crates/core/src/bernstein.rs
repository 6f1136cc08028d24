//! Bernstein basis evaluation, filter design, the named filter catalog,
//! monomial conversion, and validity checking.
//!
//! A spectral filter h on [0,2] is represented by coefficients
//! `theta[k] = h(2k/K)`; the filter value at lambda is the Bernstein
//! combination of the basis at t = lambda/2. The basis is non-negative and
//! sums to one, so coefficient bounds transfer directly to filter bounds:
//! theta in [0,1] guarantees the filter maps [0,2] into [0,1].

use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest supported polynomial order. Binomial coefficients up to
/// C(64,32) stay accurate in f64 when evaluated in log space.
pub const MAX_ORDER: usize = 64;

/// Grid resolution used by default when sampling filters over [0,2].
pub const DEFAULT_GRID_POINTS: usize = 1000;

/// ln C(n, k) as a sum of log ratios; exact enough for the full order range.
pub(crate) fn log_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 0.0;
    for i in 1..=k {
        acc += ((n - k + i) as f64).ln() - (i as f64).ln();
    }
    acc
}

/// C(n, k) by iterative multiplication in f64.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 1..=k {
        acc = acc * ((n - k + i) as f64) / (i as f64);
    }
    acc
}

/// The k-th Bernstein base of the given order at t: C(K,k) (1-t)^(K-k) t^k.
///
/// Evaluated in log space with the endpoints short-circuited, so accuracy
/// is uniform across all supported orders.
pub fn bernstein_basis(k: usize, order: usize, t: f64) -> Result<f64> {
    if order > MAX_ORDER {
        return Err(Error::OrderTooLarge {
            order,
            max: MAX_ORDER,
        });
    }
    if k > order {
        return Err(Error::BasisIndexOutOfRange { k, order });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ParameterOutOfUnitInterval { t });
    }
    if t == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if t == 1.0 {
        return Ok(if k == order { 1.0 } else { 0.0 });
    }
    let log_b =
        log_binomial(order, k) + ((order - k) as f64) * (1.0 - t).ln() + (k as f64) * t.ln();
    Ok(log_b.exp())
}

/// Filter coefficients over the Bernstein basis: the filter's entire
/// identity. `theta.len() == order + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernCoeffs {
    theta: Vec<f64>,
}

impl BernCoeffs {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::EmptyCoefficients);
        }
        if theta.len() - 1 > MAX_ORDER {
            return Err(Error::OrderTooLarge {
                order: theta.len() - 1,
                max: MAX_ORDER,
            });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "filter coefficients".into(),
            });
        }
        Ok(Self { theta })
    }

    pub fn order(&self) -> usize {
        self.theta.len() - 1
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

/// A scalar filter function h(lambda) on [0,2]: a named catalog entry,
/// tabulated samples, or an arbitrary closure.
#[derive(Clone)]
pub struct FilterFn {
    name: Option<String>,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for FilterFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.name {
            Some(n) => write!(f, "FilterFn({n})"),
            None => write!(f, "FilterFn(<fn>)"),
        }
    }
}

impl FilterFn {
    pub fn from_fn(eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: None,
            eval: Arc::new(eval),
        }
    }

    fn named(name: &str, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: Some(name.to_string()),
            eval: Arc::new(eval),
        }
    }

    /// Piecewise-linear interpolant of (lambda, value) samples spanning
    /// [0,2] with strictly increasing lambdas.
    pub fn from_table(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.len() < 2 || rows[0].0 != 0.0 || rows[rows.len() - 1].0 != 2.0 {
            return Err(Error::InvalidData(
                "filter table must have >= 2 rows spanning lambda = 0 to 2".into(),
            ));
        }
        if rows.iter().any(|&(l, v)| !l.is_finite() || !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "filter table".into(),
            });
        }
        for w in rows.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidData(
                    "filter table lambdas must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            name: None,
            eval: Arc::new(move |lambda: f64| {
                let lambda = lambda.clamp(0.0, 2.0);
                let idx = rows.partition_point(|&(l, _)| l <= lambda);
                if idx == 0 {
                    return rows[0].1;
                }
                if idx == rows.len() {
                    return rows[rows.len() - 1].1;
                }
                let (l0, v0) = rows[idx - 1];
                let (l1, v1) = rows[idx];
                v0 + (v1 - v0) * (lambda - l0) / (l1 - l0)
            }),
        })
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        (self.eval)(lambda)
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }
}

/// Catalog names accepted by [`named_filter`].
pub const NAMED_FILTERS: &[&str] = &[
    "all_pass",
    "linear_low",
    "linear_high",
    "impulse_low",
    "impulse_high",
    "impulse_band",
    "exp_low",
    "exp_high",
    "exp_band",
    "exp_band_reject",
    "comb",
    "low_band_pass",
];

/// Closed-form catalog of filter responses on [0,2].
///
/// The impulse entries are exact indicators, so sampling them at the
/// design points 2k/K reproduces the one-hot coefficient patterns of the
/// impulse low/high/band filters.
pub fn named_filter(name: &str) -> Result<FilterFn> {
    let f = match name {
        "all_pass" => FilterFn::named(name, |_| 1.0),
        "linear_low" => FilterFn::named(name, |l| 1.0 - l / 2.0),
        "linear_high" => FilterFn::named(name, |l| l / 2.0),
        "impulse_low" => FilterFn::named(name, |l| if l == 0.0 { 1.0 } else { 0.0 }),
        "impulse_high" => FilterFn::named(name, |l| if l == 2.0 { 1.0 } else { 0.0 }),
        "impulse_band" => FilterFn::named(name, |l| if l == 1.0 { 1.0 } else { 0.0 }),
        "exp_low" => FilterFn::named(name, |l| (-10.0 * l * l).exp()),
        "exp_high" => FilterFn::named(name, |l| 1.0 - (-10.0 * l * l).exp()),
        "exp_band" => FilterFn::named(name, |l| (-10.0 * (l - 1.0) * (l - 1.0)).exp()),
        "exp_band_reject" => FilterFn::named(name, |l| 1.0 - (-10.0 * (l - 1.0) * (l - 1.0)).exp()),
        "comb" => FilterFn::named(name, |l| (std::f64::consts::PI * l).sin().abs()),
        "low_band_pass" => FilterFn::named(name, |l| {
            if l <= 0.5 {
                1.0
            } else if l < 1.0 {
                (-100.0 * (l - 0.5) * (l - 0.5)).exp()
            } else {
                (-50.0 * (l - 1.5) * (l - 1.5)).exp()
            }
        }),
        _ => return Err(Error::UnknownFilter(name.to_string())),
    };
    Ok(f)
}

/// Designs coefficients for a target filter by sampling it uniformly:
/// `theta[k] = h(2k/K)`.
pub fn design_coeffs(h: &FilterFn, order: usize) -> Result<BernCoeffs> {
    if order == 0 {
        return Err(Error::ParamOutOfRange {
            name: "order",
            value: 0.0,
            range: "[1, 64]",
        });
    }
    if order > MAX_ORDER {
        return Err(Error::OrderTooLarge {
            order,
            max: MAX_ORDER,
        });
    }
    let mut theta = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let lambda = (2 * k) as f64 / order as f64;
        let v = h.eval(lambda);
        if !v.is_finite() {
            return Err(Error::NonFiniteFilterValue { lambda });
        }
        theta.push(v);
    }
    BernCoeffs::new(theta)
}

/// Evaluates the filter response g(lambda) = sum_k theta[k] b_k(lambda/2).
pub fn eval_filter(c: &BernCoeffs, lambda: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange { lambda });
    }
    let order = c.order();
    let t = lambda / 2.0;
    let mut acc = 0.0;
    for (k, &th) in c.theta().iter().enumerate() {
        acc += th * bernstein_basis(k, order, t)?;
    }
    Ok(acc)
}

/// Converts monomial coefficients over t in [0,1] to the Bernstein basis
/// of the same order: theta[k] = sum_{j<=k} C(k,j)/C(K,j) w[j].
///
/// The two forms evaluate identically; non-negative polynomials may still
/// come out with negative thetas at this order (degree elevation is not
/// searched).
pub fn monomial_to_bernstein(w: &[f64]) -> Result<BernCoeffs> {
    if w.is_empty() {
        return Err(Error::EmptyCoefficients);
    }
    let order = w.len() - 1;
    if order > MAX_ORDER {
        return Err(Error::OrderTooLarge {
            order,
            max: MAX_ORDER,
        });
    }
    let mut theta = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut acc = 0.0;
        for (j, &wj) in w.iter().take(k + 1).enumerate() {
            acc += binomial(k, j) / binomial(order, j) * wj;
        }
        theta.push(acc);
    }
    BernCoeffs::new(theta)
}

/// Outcome of checking a filter against the validity constraint
/// 0 <= g(lambda) <= 1 on [0,2].
#[derive(Debug, Clone)]
pub struct ValidityReport {
    pub min_value: f64,
    pub max_value: f64,
    /// Grid check: g >= -1e-12 everywhere sampled.
    pub nonneg_ok: bool,
    /// Grid check: g <= 1 + 1e-12 everywhere sampled.
    pub bounded_ok: bool,
    /// Analytic sufficient condition: min theta >= 0.
    pub theta_nonneg: bool,
    /// Analytic sufficient condition: max theta <= 1.
    pub theta_bounded: bool,
    /// Lambdas where the non-negativity check failed.
    pub nonneg_violations: Vec<f64>,
    /// Lambdas where the upper-bound check failed.
    pub bound_violations: Vec<f64>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.nonneg_ok && self.bounded_ok
    }
}

const VALIDITY_TOL: f64 = 1e-12;

/// Samples g on a uniform lambda grid over [0,2] and reports bound
/// violations, together with the coefficient-range sufficient condition.
pub fn validate_filter(c: &BernCoeffs, grid_points: usize) -> ValidityReport {
    let grid_points = grid_points.max(2);
    let mut min_value = f64::INFINITY;
    let mut max_value = f64::NEG_INFINITY;
    let mut nonneg_violations = Vec::new();
    let mut bound_violations = Vec::new();
    for i in 0..grid_points {
        let lambda = 2.0 * i as f64 / (grid_points - 1) as f64;
        let g = eval_filter(c, lambda.min(2.0)).expect("grid lambda in range");
        min_value = min_value.min(g);
        max_value = max_value.max(g);
        if g < -VALIDITY_TOL {
            nonneg_violations.push(lambda);
        }
        if g > 1.0 + VALIDITY_TOL {
            bound_violations.push(lambda);
        }
    }
    let theta_min = c.theta().iter().cloned().fold(f64::INFINITY, f64::min);
    let theta_max = c.theta().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    ValidityReport {
        min_value,
        max_value,
        nonneg_ok: nonneg_violations.is_empty(),
        bounded_ok: bound_violations.is_empty(),
        theta_nonneg: theta_min >= 0.0,
        theta_bounded: theta_max <= 1.0,
        nonneg_violations,
        bound_violations,
    }
}
