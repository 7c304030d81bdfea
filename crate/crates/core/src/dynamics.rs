//! Two-regime cobweb dynamics between the interest rate and firm fractions.
//!
//! In the loans accelerator the rate sets the loans fraction
//! `f = (i / i_min)^mu`, which in turn sets next period's rate
//! `i' = i_min * f^alpha1`. In the crisis accelerator the rate sets the ponzi
//! density `rho = (i / i_max)^beta` and `i' = i_max * rho^alpha2`.
//!
//! Writing `y = ln(i / bound)`, one step is the linear map `y' = (alpha * exponent) * y`,
//! so the product of the two exponents decides convergence.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-width of the band around `|product| = 1` reported as marginal.
pub const DEFAULT_STABILITY_EPSILON: f64 = 0.01;

/// Monthly steps per calendar year.
pub const STEPS_PER_YEAR: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("interest rate must be positive and finite, got {0}")]
    NonPositiveRate(f64),
    #[error("fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("unknown regime `{0}`")]
    UnknownRegime(String),
}

type Result<T> = std::result::Result<T, DynamicsError>;

/// Exponents and rate bounds of both regimes. Rates are in percent per year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Resilience heterogeneity exponent (negative).
    pub mu: f64,
    /// Ponziness heterogeneity exponent (positive).
    pub beta: f64,
    /// Inter-scale coefficient of the loans accelerator.
    pub alpha1: f64,
    /// Inter-scale coefficient of the crisis accelerator.
    pub alpha2: f64,
    pub i_min: f64,
    pub i_max: f64,
}

impl ModelParams {
    pub fn new(mu: f64, beta: f64, alpha1: f64, alpha2: f64, i_min: f64, i_max: f64) -> Result<Self> {
        let params = Self { mu, beta, alpha1, alpha2, i_min, i_max };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.mu, self.beta, self.alpha1, self.alpha2, self.i_min, self.i_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::InvalidParams("all parameters must be finite".into()));
        }
        if self.mu >= 0.0 {
            return Err(DynamicsError::InvalidParams(format!("mu must be negative, got {}", self.mu)));
        }
        if self.beta <= 0.0 {
            return Err(DynamicsError::InvalidParams(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.i_min > 0.0 && self.i_min < self.i_max) {
            return Err(DynamicsError::InvalidParams(format!(
                "need 0 < i_min < i_max, got i_min = {}, i_max = {}",
                self.i_min, self.i_max
            )));
        }
        Ok(())
    }

    /// `alpha1 * mu`, the loans accelerator multiplier in log space.
    pub fn loans_product(&self) -> f64 {
        self.alpha1 * self.mu
    }

    /// `alpha2 * beta`, the crisis accelerator multiplier in log space.
    pub fn crisis_product(&self) -> f64 {
        self.alpha2 * self.beta
    }

    pub fn product(&self, regime: Regime) -> f64 {
        match regime {
            Regime::LoansAccelerator => self.loans_product(),
            Regime::CrisisAccelerator => self.crisis_product(),
        }
    }

    /// The bound that anchors the regime's log-space coordinate.
    pub fn anchor(&self, regime: Regime) -> f64 {
        match regime {
            Regime::LoansAccelerator => self.i_min,
            Regime::CrisisAccelerator => self.i_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "loans", alias = "LoansAccelerator")]
    LoansAccelerator,
    #[serde(rename = "crisis", alias = "CrisisAccelerator")]
    CrisisAccelerator,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LoansAccelerator => "loans",
            Self::CrisisAccelerator => "crisis",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "loans" | "loansaccelerator" | "loans_accelerator" | "1" => Ok(Self::LoansAccelerator),
            "crisis" | "crisisaccelerator" | "crisis_accelerator" | "2" => Ok(Self::CrisisAccelerator),
            _ => Err(DynamicsError::UnknownRegime(s.to_string())),
        }
    }
}

/// A fraction together with whether it had to be clamped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamped {
    pub value: f64,
    pub clamped: bool,
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(DynamicsError::NonPositiveRate(rate))
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(DynamicsError::InvalidFraction(fraction))
    }
}

fn clamp_unit(raw: f64) -> Clamped {
    if raw > 1.0 {
        Clamped { value: 1.0, clamped: true }
    } else if raw < 0.0 {
        Clamped { value: 0.0, clamped: true }
    } else {
        Clamped { value: raw, clamped: false }
    }
}

/// `(rate / i_min)^mu` before clamping.
pub fn loans_fraction_unclamped(rate: f64, params: &ModelParams) -> Result<f64> {
    check_rate(rate)?;
    Ok((rate / params.i_min).powf(params.mu))
}

/// `(rate / i_max)^beta` before clamping.
pub fn ponzi_fraction_unclamped(rate: f64, params: &ModelParams) -> Result<f64> {
    check_rate(rate)?;
    Ok((rate / params.i_max).powf(params.beta))
}

pub fn loans_fraction_checked(rate: f64, params: &ModelParams) -> Result<Clamped> {
    loans_fraction_unclamped(rate, params).map(clamp_unit)
}

pub fn ponzi_fraction_checked(rate: f64, params: &ModelParams) -> Result<Clamped> {
    ponzi_fraction_unclamped(rate, params).map(clamp_unit)
}

/// Share of firms able to take a loan at `rate`, clamped to `[0, 1]`.
pub fn loans_fraction(rate: f64, params: &ModelParams) -> Result<f64> {
    loans_fraction_checked(rate, params).map(|c| c.value)
}

/// Ponzi density at `rate`, clamped to `[0, 1]`.
pub fn ponzi_fraction(rate: f64, params: &ModelParams) -> Result<f64> {
    ponzi_fraction_checked(rate, params).map(|c| c.value)
}

/// Next-period rate induced by a loans fraction: `i_min * fraction^alpha1`.
pub fn rate_from_loans(fraction: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(fraction)?;
    Ok(params.i_min * fraction.powf(params.alpha1))
}

/// Next-period rate induced by a ponzi density: `i_max * density^alpha2`.
pub fn rate_from_ponzi(density: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(density)?;
    Ok(params.i_max * density.powf(params.alpha2))
}

/// Rate at which the ponzi density equals `density`; inverse of [`ponzi_fraction`].
pub fn rate_for_ponzi_density(density: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(density)?;
    Ok(params.i_max * density.powf(1.0 / params.beta))
}

/// Rate at which the loans fraction equals `fraction`; inverse of [`loans_fraction`].
pub fn rate_for_loans_fraction(fraction: f64, params: &ModelParams) -> Result<f64> {
    check_fraction(fraction)?;
    Ok(params.i_min * fraction.powf(1.0 / params.mu))
}

/// Interior fixed point of the pure map of a regime.
pub fn fixed_rate(regime: Regime, params: &ModelParams) -> f64 {
    params.anchor(regime)
}

/// Macro state at one monthly step.
///
/// `loans_fraction` and `ponzi_density` are always evaluated at `rate`, so a
/// state is self-consistent whichever regime produced it. Counts are the
/// fractions times `n_tot`, rounded half-to-even. `n_hedge` is carried from
/// the input population and only capped so that `n_hedge + n_ponzi <= n_tot`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub t: u32,
    pub rate: f64,
    pub n_tot: u64,
    pub n_loans: u64,
    pub n_ponzi: u64,
    pub n_hedge: u64,
    pub loans_fraction: f64,
    pub ponzi_density: f64,
    /// Set when a fraction evaluated while producing this state was clamped.
    pub clamped: bool,
}

fn count(fraction: f64, n_tot: u64) -> u64 {
    (fraction * n_tot as f64).round_ties_even() as u64
}

impl SystemState {
    /// State at `rate` with fractions evaluated from the model.
    pub fn at_rate(rate: f64, n_tot: u64, n_hedge: u64, params: &ModelParams) -> Result<Self> {
        let loans = loans_fraction_checked(rate, params)?;
        let ponzi = ponzi_fraction_checked(rate, params)?;
        let n_ponzi = count(ponzi.value, n_tot);
        Ok(Self {
            t: 0,
            rate,
            n_tot,
            n_loans: count(loans.value, n_tot),
            n_ponzi,
            n_hedge: n_hedge.min(n_tot - n_ponzi),
            loans_fraction: loans.value,
            ponzi_density: ponzi.value,
            clamped: loans.clamped || ponzi.clamped,
        })
    }

    /// State whose rate reproduces the given ponzi density.
    pub fn from_ponzi_density(density: f64, n_tot: u64, n_hedge: u64, params: &ModelParams) -> Result<Self> {
        let rate = rate_for_ponzi_density(density, params)?;
        Self::at_rate(rate, n_tot, n_hedge, params)
    }

    /// State whose rate reproduces the given loans fraction.
    pub fn from_loans_fraction(fraction: f64, n_tot: u64, n_hedge: u64, params: &ModelParams) -> Result<Self> {
        let rate = rate_for_loans_fraction(fraction, params)?;
        Self::at_rate(rate, n_tot, n_hedge, params)
    }

    pub fn validate(&self) -> Result<()> {
        check_rate(self.rate)?;
        let unit = 0.0..=1.0;
        if !unit.contains(&self.ponzi_density) {
            return Err(DynamicsError::InvalidState(format!("ponzi density {} outside [0, 1]", self.ponzi_density)));
        }
        if !unit.contains(&self.loans_fraction) {
            return Err(DynamicsError::InvalidState(format!("loans fraction {} outside [0, 1]", self.loans_fraction)));
        }
        if self.n_ponzi + self.n_hedge > self.n_tot || self.n_loans > self.n_tot {
            return Err(DynamicsError::InvalidState("counts exceed n_tot".into()));
        }
        Ok(())
    }

    /// `ln(rate / bound)`.
    pub fn log_distance(&self, bound: f64) -> f64 {
        (self.rate / bound).ln()
    }
}

/// Advances one month under `regime`.
pub fn step(state: &SystemState, regime: Regime, params: &ModelParams) -> Result<SystemState> {
    state.validate()?;
    let (driver, next_rate) = match regime {
        Regime::LoansAccelerator => {
            let f = loans_fraction_checked(state.rate, params)?;
            (f, rate_from_loans(f.value, params)?)
        }
        Regime::CrisisAccelerator => {
            let rho = ponzi_fraction_checked(state.rate, params)?;
            (rho, rate_from_ponzi(rho.value, params)?)
        }
    };
    let mut next = SystemState::at_rate(next_rate, state.n_tot, state.n_hedge, params)?;
    next.t = state.t + 1;
    next.clamped |= driver.clamped;
    Ok(next)
}

/// Applies `steps` steps of one regime, returning only the new states.
pub fn evolve(initial: &SystemState, regime: Regime, params: &ModelParams, steps: usize) -> Result<Vec<SystemState>> {
    params.validate()?;
    let mut out = Vec::with_capacity(steps);
    let mut current = *initial;
    for _ in 0..steps {
        current = step(&current, regime, params)?;
        out.push(current);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Convergent,
    Marginal,
    Divergent,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Convergent => "convergent",
            Self::Marginal => "marginal",
            Self::Divergent => "divergent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityClass {
    pub kind: Stability,
    pub product: f64,
}

/// Convergent when `|product| < 1 - epsilon`, divergent when
/// `|product| > 1 + epsilon`, marginal in between.
///
/// # Panics
/// If `epsilon` is negative or NaN.
pub fn classify_stability(product: f64, epsilon: f64) -> StabilityClass {
    assert!(epsilon >= 0.0, "stability band must be non-negative, got {epsilon}");
    let magnitude = product.abs();
    let kind = if magnitude < 1.0 - epsilon {
        Stability::Convergent
    } else if magnitude > 1.0 + epsilon {
        Stability::Divergent
    } else {
        Stability::Marginal
    };
    StabilityClass { kind, product }
}

/// One period of a trajectory schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub period: i64,
    pub regime: Regime,
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub regime: Regime,
    pub state: SystemState,
}

/// Runs a schedule of contiguous periods with `steps_per_period` steps each.
/// The first point is the initial state, tagged with the first period's regime.
pub fn run_trajectory(
    initial: &SystemState,
    schedule: &[ScheduleEntry],
    steps_per_period: usize,
) -> Result<Vec<TrajectoryPoint>> {
    let first = schedule
        .first()
        .ok_or_else(|| DynamicsError::InvalidSchedule("schedule is empty".into()))?;
    for pair in schedule.windows(2) {
        if pair[1].period != pair[0].period + 1 {
            return Err(DynamicsError::InvalidSchedule(format!(
                "periods {} and {} are not contiguous",
                pair[0].period, pair[1].period
            )));
        }
    }
    initial.validate()?;

    let mut points = Vec::with_capacity(schedule.len() * steps_per_period + 1);
    points.push(TrajectoryPoint { regime: first.regime, state: *initial });
    let mut current = *initial;
    for entry in schedule {
        for state in evolve(&current, entry.regime, &entry.params, steps_per_period)? {
            points.push(TrajectoryPoint { regime: entry.regime, state });
            current = state;
        }
    }
    Ok(points)
}
