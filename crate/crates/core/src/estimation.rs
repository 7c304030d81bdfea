//! Tail-exponent fits and interest-rate calibration.
//!
//! `mu` is the log-log slope of the upper cumulative distribution
//! `P[X > x]` of `EBIT / BL`, fitted where `ln x > -1.5`. `beta` is the slope
//! of the lower cumulative distribution `P[X < x]` of `EBTDA / FC`, fitted
//! where `ln x < 3`. Both fits are unweighted OLS over every distinct
//! empirical CDF point in the window.
//!
//! The rate bounds `i_min` / `i_max` and the inter-scale coefficients are not
//! read off the CDF; they are calibrated against an observed rate series.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Regime;
use crate::firm_model::FirmRecord;
use crate::ols::{ols, ols_through_origin};

/// `ln(EBIT / BL)` below this value is ignored when fitting `mu`.
pub const MU_LOG_CUTOFF: f64 = -1.5;
/// `ln(EBTDA / FC)` above this value is ignored when fitting `beta`.
pub const BETA_LOG_CUTOFF: f64 = 3.0;
/// Minimum number of CDF points a fit may use.
pub const MIN_FIT_POINTS: usize = 3;

pub const CALIBRATION_TOLERANCE: f64 = 1e-9;
pub const CALIBRATION_MAX_SWEEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("values must be finite and positive, got {0}")]
    InvalidValue(f64),
    #[error("only {got} points inside the fit window (need {needed})")]
    InsufficientPoints { got: usize, needed: usize },
    #[error("calibration is under-determined: {0}")]
    UnderDetermined(String),
    #[error("calibration did not converge after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },
    #[error("alpha undefined for period {period}: every fraction equals 1")]
    UndefinedAlpha { period: Period },
    #[error("fraction must lie in {expected}, got {value}")]
    InvalidFraction { value: f64, expected: &'static str },
    #[error("rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("length mismatch: {0} rates but {1} fractions")]
    LengthMismatch(usize, usize),
    #[error("invalid rate series: {0}")]
    InvalidSeries(String),
    #[error("a {regime} calibration needs a {expected} tail slope, got {slope}")]
    RegimeMismatch {
        regime: Regime,
        expected: &'static str,
        slope: f64,
    },
}

type Result<T> = std::result::Result<T, EstimationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tail {
    /// `P[X > x]`
    Upper,
    /// `P[X < x]`
    Lower,
}

/// Result of a log-log OLS fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    /// Intercept in log space.
    pub intercept: f64,
    /// Rate bound attached by calibration; the CDF fit itself leaves it empty.
    pub bound_rate: Option<f64>,
    pub r_squared: f64,
    pub n_points: usize,
    /// Log-space window edge, when the fit was windowed.
    pub cutoff: Option<f64>,
    /// Input items dropped because a log transform was undefined.
    pub n_excluded: usize,
}

impl FitResult {
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound_rate = Some(bound);
        self
    }
}

/// Empirical cumulative distribution at each distinct sample value.
///
/// Points whose probability is zero are dropped so the result can be
/// log-transformed.
pub fn empirical_cdf(values: &[f64], tail: Tail) -> Result<Vec<(f64, f64)>> {
    if values.len() < MIN_FIT_POINTS {
        return Err(EstimationError::TooFewValues { needed: MIN_FIT_POINTS, got: values.len() });
    }
    if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(EstimationError::InvalidValue(bad));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;

    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let x = sorted[start];
        let mut end = start;
        while end < sorted.len() && sorted[end] == x {
            end += 1;
        }
        let count = match tail {
            Tail::Upper => sorted.len() - end,
            Tail::Lower => start,
        };
        if count > 0 {
            out.push((x, count as f64 / n));
        }
        start = end;
    }
    Ok(out)
}

/// Fits `ln p` on `ln x` over the CDF points inside the window: `ln x > cutoff`
/// for the upper tail, `ln x < cutoff` for the lower tail.
pub fn fit_tail(values: &[f64], tail: Tail, log_cutoff: f64) -> Result<FitResult> {
    let cdf = empirical_cdf(values, tail)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = cdf
        .iter()
        .map(|&(x, p)| (x.ln(), p.ln()))
        .filter(|&(lx, _)| match tail {
            Tail::Upper => lx > log_cutoff,
            Tail::Lower => lx < log_cutoff,
        })
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(EstimationError::InsufficientPoints { got: xs.len(), needed: MIN_FIT_POINTS });
    }
    let fit = ols(&xs, &ys).ok_or(EstimationError::InsufficientPoints { got: 1, needed: MIN_FIT_POINTS })?;
    Ok(FitResult {
        slope: fit.slope,
        intercept: fit.intercept,
        bound_rate: None,
        r_squared: fit.r_squared,
        n_points: fit.n,
        cutoff: Some(log_cutoff),
        n_excluded: 0,
    })
}

/// Resilience exponent `mu` from the upper tail of `EBIT / BL`.
///
/// Records without strictly positive `ebit` and `bank_loans` are excluded and
/// counted in [`FitResult::n_excluded`].
pub fn fit_mu(records: &[FirmRecord]) -> Result<FitResult> {
    let ratios: Vec<f64> = records.iter().filter_map(FirmRecord::ebit_to_loans).collect();
    let excluded = records.len() - ratios.len();
    let mut fit = fit_tail(&ratios, Tail::Upper, MU_LOG_CUTOFF)?;
    fit.n_excluded = excluded;
    Ok(fit)
}

/// Ponziness exponent `beta` from the lower tail of `EBTDA / FC`.
pub fn fit_beta(records: &[FirmRecord]) -> Result<FitResult> {
    let ratios: Vec<f64> = records.iter().filter_map(FirmRecord::ebtda_to_costs).collect();
    let excluded = records.len() - ratios.len();
    let mut fit = fit_tail(&ratios, Tail::Lower, BETA_LOG_CUTOFF)?;
    fit.n_excluded = excluded;
    Ok(fit)
}

/// A calendar year, optionally refined to a month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Period {
    pub year: i32,
    pub month: Option<u8>,
}

impl Period {
    pub fn year(year: i32) -> Self {
        Self { year, month: None }
    }

    pub fn month(year: i32, month: u8) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Self { year, month: Some(month) }
    }

    /// The following period at the same granularity.
    pub fn next(self) -> Self {
        match self.month {
            None => Self::year(self.year + 1),
            Some(12) => Self::month(self.year + 1, 1),
            Some(m) => Self::month(self.year, m + 1),
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.month {
            None => write!(f, "{}", self.year),
            Some(m) => write!(f, "{}-{:02}", self.year, m),
        }
    }
}

impl FromStr for Period {
    type Err = EstimationError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || EstimationError::InvalidSeries(format!("cannot parse period `{s}` (expected YYYY or YYYY-MM)"));
        let s = s.trim();
        match s.split_once('-') {
            None => s.parse().map(Period::year).map_err(|_| bad()),
            Some((y, m)) => {
                let year = y.parse().map_err(|_| bad())?;
                let month: u8 = m.parse().map_err(|_| bad())?;
                if !(1..=12).contains(&month) {
                    return Err(bad());
                }
                Ok(Period::month(year, month))
            }
        }
    }
}

/// Observed interest rates (percent per year) at strictly increasing periods
/// of one granularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    points: Vec<(Period, f64)>,
}

impl RateSeries {
    pub fn new(points: Vec<(Period, f64)>) -> Result<Self> {
        if let Some(first) = points.first() {
            let monthly = first.0.month.is_some();
            if points.iter().any(|(p, _)| p.month.is_some() != monthly) {
                return Err(EstimationError::InvalidSeries("mixed yearly and monthly periods".into()));
            }
        }
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(EstimationError::InvalidSeries(format!(
                    "periods must be strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        if let Some(&(_, r)) = points.iter().find(|(_, r)| !(r.is_finite() && *r > 0.0)) {
            return Err(EstimationError::InvalidRate(r));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(Period, f64)] {
        &self.points
    }

    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sub-series restricted to one calendar year.
    pub fn year(&self, year: i32) -> RateSeries {
        Self { points: self.points.iter().copied().filter(|(p, _)| p.year == year).collect() }
    }
}

/// Inter-scale coefficient per period.
///
/// `fractions[k]` is the fraction of the previous period paired with the
/// `k`-th observed rate. With `yearly = false` each pair yields
/// `alpha = ln(i / bound) / ln(fraction)`; with `yearly = true` all pairs of a
/// calendar year share one alpha, the zero-intercept least-squares slope of
/// `ln(i / bound)` on `ln(fraction)`.
pub fn calibrate_alpha(
    observed: &RateSeries,
    fractions: &[f64],
    bound: f64,
    yearly: bool,
) -> Result<Vec<(Period, f64)>> {
    if observed.len() != fractions.len() {
        return Err(EstimationError::LengthMismatch(observed.len(), fractions.len()));
    }
    if !(bound.is_finite() && bound > 0.0) {
        return Err(EstimationError::InvalidRate(bound));
    }
    if let Some(&f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(EstimationError::InvalidFraction { value: f, expected: "(0, 1]" });
    }

    let logs = observed
        .points()
        .iter()
        .zip(fractions)
        .map(|(&(period, rate), &f)| (period, f.ln(), (rate / bound).ln()));

    if !yearly {
        return logs
            .map(|(period, x, y)| {
                if x == 0.0 {
                    Err(EstimationError::UndefinedAlpha { period })
                } else {
                    Ok((period, y / x))
                }
            })
            .collect();
    }

    let mut by_year: BTreeMap<i32, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (period, x, y) in logs {
        let entry = by_year.entry(period.year).or_default();
        entry.0.push(x);
        entry.1.push(y);
    }
    by_year
        .into_iter()
        .map(|(year, (xs, ys))| {
            let period = Period::year(year);
            ols_through_origin(&xs, &ys)
                .map(|alpha| (period, alpha))
                .ok_or(EstimationError::UndefinedAlpha { period })
        })
        .collect()
}

/// Jointly calibrated rate bound and inter-scale coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCalibration {
    pub bound: f64,
    pub alpha: f64,
    /// Residual sum of squares `sum (bound * d^alpha - i)^2`.
    pub sse: f64,
    pub sweeps: usize,
}

/// Calibrates the rate bound of a regime (`i_min` for loans, `i_max` for
/// crisis) by minimising `sum_t (b * d_t^alpha - i_t)^2` over `(b, alpha)`.
///
/// The search starts from the log-linear least-squares solution and then
/// alternates golden-section minimisation over `b` and over `alpha` until a
/// sweep improves the objective by less than [`CALIBRATION_TOLERANCE`]
/// relative, for at most [`CALIBRATION_MAX_SWEEPS`] sweeps. `fit` is the tail
/// fit of the same regime: its slope must be negative for loans and positive
/// for crisis.
pub fn calibrate_bound(
    fit: &FitResult,
    observed: &RateSeries,
    densities: &[f64],
    regime: Regime,
) -> Result<BoundCalibration> {
    let expected_sign = match regime {
        Regime::LoansAccelerator => (fit.slope < 0.0, "negative"),
        Regime::CrisisAccelerator => (fit.slope > 0.0, "positive"),
    };
    if !expected_sign.0 {
        return Err(EstimationError::RegimeMismatch { regime, expected: expected_sign.1, slope: fit.slope });
    }
    if observed.len() != densities.len() {
        return Err(EstimationError::LengthMismatch(observed.len(), densities.len()));
    }
    if observed.is_empty() {
        return Err(EstimationError::UnderDetermined("no observations".into()));
    }
    if let Some(&d) = densities.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(EstimationError::InvalidFraction { value: d, expected: "(0, 1)" });
    }
    if observed.len() < 2 {
        return Err(EstimationError::UnderDetermined(
            "a single observation fixes only one combination of bound and alpha".into(),
        ));
    }
    let xs: Vec<f64> = densities.iter().map(|d| d.ln()).collect();
    let rates: Vec<f64> = observed.rates().collect();
    let log_rates: Vec<f64> = rates.iter().map(|r| r.ln()).collect();
    let start = ols(&xs, &log_rates).ok_or_else(|| {
        EstimationError::UnderDetermined("all densities are equal, so bound and alpha are collinear".into())
    })?;

    let sse = |b: f64, a: f64| -> f64 {
        xs.iter()
            .zip(&rates)
            .map(|(&x, &i)| {
                let r = b * (a * x).exp() - i;
                r * r
            })
            .sum()
    };

    let mut bound = start.intercept.exp();
    let mut alpha = start.slope;
    let mut current = sse(bound, alpha);

    for sweep in 1..=CALIBRATION_MAX_SWEEPS {
        let before = current;

        // For fixed alpha the minimiser lies between the smallest and largest
        // per-point bound i_t / d_t^alpha.
        let (lo, hi) = min_max(xs.iter().zip(&rates).map(|(&x, &i)| i / (alpha * x).exp()));
        let candidate = golden_section(|b| sse(b, alpha), lo, hi, CALIBRATION_TOLERANCE);
        let value = sse(candidate, alpha);
        if value <= current {
            bound = candidate;
            current = value;
        }

        // For fixed bound the minimiser lies between the per-point alphas.
        let (lo, hi) = min_max(xs.iter().zip(&rates).map(|(&x, &i)| (i / bound).ln() / x));
        let candidate = golden_section(|a| sse(bound, a), lo, hi, CALIBRATION_TOLERANCE);
        let value = sse(bound, candidate);
        if value <= current {
            alpha = candidate;
            current = value;
        }

        if before - current <= CALIBRATION_TOLERANCE * before || current <= f64::MIN_POSITIVE {
            return Ok(BoundCalibration { bound, alpha, sse: current, sweeps: sweep });
        }
    }
    Err(EstimationError::NonConvergence { sweeps: CALIBRATION_MAX_SWEEPS })
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    if hi < lo {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > rel_tol * (lo.abs() + hi.abs()).max(1.0) {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}
