//! Reproducible scenario runs: yearly parameters, trajectories and reports.
//!
//! A scenario is a JSON document listing consecutive periods. Each period
//! names a regime, a number of monthly steps, and where its parameters come
//! from: given directly, fitted from a firm CSV, or fitted from a seeded
//! synthetic population. Periods run in order, each starting from the end
//! state of the previous one.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    classify_stability, loans_fraction, step, ModelParams, Regime, StabilityClass, SystemState,
    TrajectoryPoint, DEFAULT_STABILITY_EPSILON, STEPS_PER_YEAR,
};
use crate::error::{Error, ErrorKind};
use crate::estimation::{calibrate_bound, fit_beta, fit_mu, BoundCalibration, FitResult, Period, RateSeries};
use crate::firm_model::{classify, FirmRecord, MinskyStatus};
use crate::io::{self, Dataset, EdgeRow, IngestOptions};
use crate::rng::{stream_with_offset, Stream};

/// Smallest population accepted by the synthetic generator.
pub const MIN_SYNTHETIC_FIRMS: usize = 100;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("period `{label}`: {source}")]
    Period {
        label: String,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid population: {0}")]
    InvalidPopulation(String),
}

impl ScenarioError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            ScenarioError::Period { source, .. } => source.kind(),
            _ => ErrorKind::Validation,
        }
    }

    fn in_period(label: &str, e: impl Into<Error>) -> Self {
        ScenarioError::Period { label: label.to_string(), source: Box::new(e.into()) }
    }
}

/// Observed firm counts for one year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationUpdate {
    pub year: i32,
    pub n_tot: u64,
    pub n_hedge: u64,
    pub n_ponzi: u64,
}

impl PopulationUpdate {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.n_tot == 0 {
            return Err("n_tot must be positive".into());
        }
        if self.n_hedge + self.n_ponzi > self.n_tot {
            return Err(format!(
                "n_hedge + n_ponzi = {} exceeds n_tot = {}",
                self.n_hedge + self.n_ponzi,
                self.n_tot
            ));
        }
        Ok(())
    }

    pub fn ponzi_density(&self) -> f64 {
        self.n_ponzi as f64 / self.n_tot as f64
    }

    pub fn hedge_density(&self) -> f64 {
        self.n_hedge as f64 / self.n_tot as f64
    }
}

/// Where a period's parameters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamsSource {
    Fixed(ModelParams),
    /// Fit `mu` and `beta` from the records of `year` in a firm CSV; the
    /// remaining parameters are given.
    FitFromData {
        firms: PathBuf,
        year: i32,
        alpha1: f64,
        alpha2: f64,
        i_min: f64,
        i_max: f64,
    },
    /// Fit `mu` and `beta` from a synthetic population drawn from `generator`
    /// at `rate`; the alphas and bounds of `generator` are kept.
    FitFromSynthetic { n: usize, rate: f64, generator: ModelParams },
}

/// Exogenous change of the firm population at the start of a period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationChange {
    pub n_tot: u64,
    pub n_hedge: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodConfig {
    pub label: String,
    pub regime: Regime,
    #[serde(default = "default_steps")]
    pub steps: usize,
    pub params: ParamsSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<PopulationChange>,
}

fn default_steps() -> usize {
    STEPS_PER_YEAR
}

/// Starting point: the fractions are evaluated at `rate` with the first
/// period's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub rate: f64,
    pub n_tot: u64,
    pub n_hedge: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub initial_state: InitialState,
    pub periods: Vec<PeriodConfig>,
    #[serde(default = "default_epsilon")]
    pub stability_epsilon: f64,
    #[serde(default)]
    pub outputs: OutputPaths,
}

fn default_epsilon() -> f64 {
    DEFAULT_STABILITY_EPSILON
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, ScenarioError> {
        let config: Self = serde_json::from_str(text).map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> std::result::Result<(), ScenarioError> {
        if self.periods.is_empty() {
            return Err(ScenarioError::InvalidConfig("at least one period is required".into()));
        }
        if !(self.stability_epsilon >= 0.0 && self.stability_epsilon.is_finite()) {
            return Err(ScenarioError::InvalidConfig(format!(
                "stability_epsilon must be non-negative, got {}",
                self.stability_epsilon
            )));
        }
        let s = &self.initial_state;
        if !(s.rate > 0.0 && s.rate.is_finite()) {
            return Err(ScenarioError::InvalidConfig(format!("initial rate must be positive, got {}", s.rate)));
        }
        if s.n_hedge > s.n_tot {
            return Err(ScenarioError::InvalidConfig("initial n_hedge exceeds n_tot".into()));
        }
        let mut labels = std::collections::HashSet::new();
        for p in &self.periods {
            if !labels.insert(p.label.as_str()) {
                return Err(ScenarioError::InvalidConfig(format!("duplicate period label `{}`", p.label)));
            }
            if let Some(c) = p.population {
                if c.n_hedge > c.n_tot {
                    return Err(ScenarioError::InvalidConfig(format!("period `{}`: n_hedge exceeds n_tot", p.label)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub label: String,
    pub regime: Regime,
    pub steps: usize,
    pub params: ModelParams,
    /// `alpha1 * mu`.
    pub loans_product: f64,
    /// `alpha2 * beta`.
    pub crisis_product: f64,
    pub loans_stability: StabilityClass,
    pub crisis_stability: StabilityClass,
    /// Fits behind fitted parameters, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_fit: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_fit: Option<FitResult>,
    pub start: SystemState,
    pub end: SystemState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub seed: u64,
    pub periods: Vec<PeriodReport>,
    /// Initial state followed by every stepped state.
    pub trajectory: Vec<TrajectoryPoint>,
}

struct ResolvedParams {
    params: ModelParams,
    mu_fit: Option<FitResult>,
    beta_fit: Option<FitResult>,
}

fn fitted(mu: FitResult, beta: FitResult, alpha1: f64, alpha2: f64, i_min: f64, i_max: f64) -> crate::Result<ResolvedParams> {
    let params = ModelParams::new(mu.slope, beta.slope, alpha1, alpha2, i_min, i_max)?;
    Ok(ResolvedParams { params, mu_fit: Some(mu), beta_fit: Some(beta) })
}

fn resolve(source: &ParamsSource, base_dir: &Path, seed: u64, index: usize) -> crate::Result<ResolvedParams> {
    match source {
        ParamsSource::Fixed(p) => {
            p.validate()?;
            Ok(ResolvedParams { params: *p, mu_fit: None, beta_fit: None })
        }
        ParamsSource::FitFromData { firms, year, alpha1, alpha2, i_min, i_max } => {
            let data = io::read_firms_path(&base_dir.join(firms), IngestOptions::default())?;
            let records: Vec<FirmRecord> = data.rows.into_iter().filter(|r| r.year == *year).collect();
            fitted(fit_mu(&records)?, fit_beta(&records)?, *alpha1, *alpha2, *i_min, *i_max)
        }
        ParamsSource::FitFromSynthetic { n, rate, generator } => {
            let records =
                generate_synthetic_population(*n, generator.mu, generator.beta, *rate, generator, seed.wrapping_add(index as u64), 0)?;
            let g = generator;
            fitted(fit_mu(&records)?, fit_beta(&records)?, g.alpha1, g.alpha2, g.i_min, g.i_max)
        }
    }
}

/// Runs every period in order. Relative paths in the config are resolved
/// against `base_dir`. The result depends only on the config, the files it
/// references and the seed.
pub fn run_scenario(config: &ScenarioConfig, base_dir: &Path) -> std::result::Result<ScenarioReport, ScenarioError> {
    config.validate()?;
    let eps = config.stability_epsilon;
    let mut periods = Vec::with_capacity(config.periods.len());
    let mut trajectory = Vec::new();
    let mut current: Option<SystemState> = None;

    for (index, period) in config.periods.iter().enumerate() {
        let label = period.label.as_str();
        let wrap = |e: Error| ScenarioError::in_period(label, e);
        let resolved = resolve(&period.params, base_dir, config.seed, index).map_err(wrap)?;
        let params = resolved.params;

        let mut state = match current {
            None => {
                let s = config.initial_state;
                SystemState::at_rate(s.rate, s.n_tot, s.n_hedge, &params).map_err(|e| ScenarioError::in_period(label, e))?
            }
            Some(prev) => prev,
        };
        if let Some(change) = period.population {
            let t = state.t;
            state = SystemState::at_rate(state.rate, change.n_tot, change.n_hedge, &params)
                .map_err(|e| ScenarioError::in_period(label, e))?;
            state.t = t;
        }
        if current.is_none() {
            trajectory.push(TrajectoryPoint { regime: period.regime, state });
        }
        let start = state;
        for _ in 0..period.steps {
            state = step(&state, period.regime, &params).map_err(|e| ScenarioError::in_period(label, e))?;
            trajectory.push(TrajectoryPoint { regime: period.regime, state });
        }
        current = Some(state);

        periods.push(PeriodReport {
            label: period.label.clone(),
            regime: period.regime,
            steps: period.steps,
            params,
            loans_product: params.loans_product(),
            crisis_product: params.crisis_product(),
            loans_stability: classify_stability(params.loans_product(), eps),
            crisis_stability: classify_stability(params.crisis_product(), eps),
            mu_fit: resolved.mu_fit,
            beta_fit: resolved.beta_fit,
            start,
            end: state,
        });
    }
    Ok(ScenarioReport { seed: config.seed, periods, trajectory })
}

/// Synthetic firm-year records whose ratio distributions follow the model.
///
/// `EBIT / BL` is Pareto in its upper tail with exponent `mu` and a scale
/// chosen so that the hedge share is `min((rate / i_min)^mu, 1 - rho)`.
/// `EBTDA / FC` follows `P[X < x] = (x * rate / i_max)^beta`, so the share
/// with `EBTDA < FC` is `rho = (rate / i_max)^beta`. The two draws are coupled
/// so that every firm with `EBTDA < FC` also has `EBIT < BL`, which makes the
/// ponzi share equal `rho` in expectation.
///
/// `params` supplies `i_min` and `i_max`; its own exponents are ignored in
/// favour of `mu` and `beta`.
pub fn generate_synthetic_population(
    n: usize,
    mu: f64,
    beta: f64,
    rate: f64,
    params: &ModelParams,
    seed: u64,
    year: i32,
) -> crate::Result<Vec<FirmRecord>> {
    if !(mu < 0.0 && mu.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(ScenarioError::InvalidPopulation(format!(
            "exponents must satisfy mu < 0 < beta, got mu = {mu}, beta = {beta}"
        ))
        .into());
    }
    if n < MIN_SYNTHETIC_FIRMS {
        return Err(ScenarioError::InvalidPopulation(format!("need at least {MIN_SYNTHETIC_FIRMS} firms, got {n}")).into());
    }
    if !(rate > 0.0 && rate < params.i_max) {
        return Err(ScenarioError::InvalidPopulation(format!(
            "rate must lie in (0, i_max = {}), got {rate}",
            params.i_max
        ))
        .into());
    }
    let gen = ModelParams { mu, beta, ..*params };
    gen.validate()?;

    let rho = (rate / gen.i_max).powf(beta);
    let hedge = loans_fraction(rate, &gen)?.min(1.0 - rho);
    let y_min = hedge.powf(-1.0 / mu);
    let x_max = gen.i_max / rate;
    let spill = (1.0 - hedge - rho) / (1.0 - rho);
    let sales_law = LogNormal::new(1e6f64.ln(), 1.0).expect("valid log-normal");

    let mut rng = stream_with_offset(seed, Stream::Population, 0);
    let width = (n - 1).to_string().len().max(6);
    let records = (0..n)
        .map(|k| {
            let u: f64 = rng.random();
            let w: f64 = rng.random();
            let v: f64 = rng.random();
            let x = x_max * u.powf(1.0 / beta);
            let coupled = if u < rho || v < spill { w * (1.0 - hedge) } else { (1.0 - hedge) + w * hedge };
            let y = y_min * (1.0 - coupled).powf(1.0 / mu);

            let bank_loans = 10f64.powf(3.0 + 3.0 * rng.random::<f64>());
            let financial_costs = bank_loans * rate / 100.0;
            let sales = sales_law.sample(&mut rng);
            FirmRecord::complete(
                format!("F{k:0width$}"),
                year,
                y * bank_loans,
                bank_loans,
                x * financial_costs,
                financial_costs,
                sales,
                0.6 * sales,
                "Manufacturing",
            )
        })
        .collect();
    Ok(records)
}

/// Per-year exponents, bounds and fit quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearFit {
    pub year: i32,
    pub mu: f64,
    pub i_min: Option<f64>,
    pub beta: f64,
    pub i_max: Option<f64>,
    pub r2_mu: f64,
    pub r2_beta: f64,
    pub n_excluded: usize,
}

/// Observed shares of each status in one year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearShares {
    pub year: i32,
    pub n_classified: usize,
    pub hedge: f64,
    pub speculative: f64,
    pub ponzi: f64,
}

pub fn group_by_year(records: &[FirmRecord]) -> BTreeMap<i32, Vec<FirmRecord>> {
    let mut by_year: BTreeMap<i32, Vec<FirmRecord>> = BTreeMap::new();
    for r in records {
        by_year.entry(r.year).or_default().push(r.clone());
    }
    by_year
}

/// Status shares per year over the records that can be classified.
pub fn year_shares(records: &[FirmRecord]) -> Vec<YearShares> {
    group_by_year(records)
        .into_iter()
        .filter_map(|(year, recs)| {
            let statuses: Vec<MinskyStatus> = recs.iter().filter_map(|r| classify(r).ok()).collect();
            let n = statuses.len();
            (n > 0).then(|| {
                let share = |s| statuses.iter().filter(|&&t| t == s).count() as f64 / n as f64;
                YearShares {
                    year,
                    n_classified: n,
                    hedge: share(MinskyStatus::Hedge),
                    speculative: share(MinskyStatus::Speculative),
                    ponzi: share(MinskyStatus::Ponzi),
                }
            })
        })
        .collect()
}

/// Calibrated bounds for both regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsCalibration {
    pub loans: BoundCalibration,
    pub crisis: BoundCalibration,
}

/// Calibrates `i_min` and `i_max` against a rate series. Each observed rate of
/// year `y` is paired with the hedge share (loans regime) and the ponzi share
/// (crisis regime) of year `y - 1`; the hedge share stands in for the loans
/// fraction. `fits` supplies the regime sign check.
pub fn calibrate_bounds(
    shares: &[YearShares],
    rates: &RateSeries,
    mu_fit: &FitResult,
    beta_fit: &FitResult,
) -> crate::Result<BoundsCalibration> {
    let by_year: BTreeMap<i32, YearShares> = shares.iter().map(|s| (s.year, *s)).collect();
    let mut points = Vec::new();
    let (mut hedge, mut ponzi) = (Vec::new(), Vec::new());
    for &(period, rate) in rates.points() {
        if let Some(prev) = by_year.get(&(period.year - 1)) {
            points.push((period, rate));
            hedge.push(prev.hedge);
            ponzi.push(prev.ponzi);
        }
    }
    let observed = RateSeries::new(points)?;
    Ok(BoundsCalibration {
        loans: calibrate_bound(mu_fit, &observed, &hedge, Regime::LoansAccelerator)?,
        crisis: calibrate_bound(beta_fit, &observed, &ponzi, Regime::CrisisAccelerator)?,
    })
}

/// Fits `mu` and `beta` separately for every year present. `bounds` fills the
/// `i_min` / `i_max` columns when known.
pub fn fit_years(records: &[FirmRecord], bounds: Option<(f64, f64)>) -> crate::Result<Vec<YearFit>> {
    group_by_year(records)
        .into_iter()
        .map(|(year, recs)| {
            let mu = fit_mu(&recs)?;
            let beta = fit_beta(&recs)?;
            Ok(YearFit {
                year,
                mu: mu.slope,
                i_min: bounds.map(|b| b.0),
                beta: beta.slope,
                i_max: bounds.map(|b| b.1),
                r2_mu: mu.r_squared,
                r2_beta: beta.r_squared,
                n_excluded: mu.n_excluded.max(beta.n_excluded),
            })
        })
        .collect()
}

/// File locations for [`ingest`]; absent entries are skipped.
#[derive(Debug, Clone, Default)]
pub struct IngestPaths {
    pub firms: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub rates: Option<PathBuf>,
    pub population: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct Datasets {
    pub firms: Option<Dataset<FirmRecord>>,
    pub edges: Option<Dataset<EdgeRow>>,
    pub rates: Option<RateSeries>,
    pub population: Option<Dataset<PopulationUpdate>>,
}

pub fn ingest(paths: &IngestPaths, opts: IngestOptions) -> crate::Result<Datasets> {
    Ok(Datasets {
        firms: paths.firms.as_deref().map(|p| io::read_firms_path(p, opts)).transpose()?,
        edges: paths.edges.as_deref().map(|p| io::read_edges_path(p, opts)).transpose()?,
        rates: paths.rates.as_deref().map(io::read_rates_path).transpose()?,
        population: paths.population.as_deref().map(|p| io::read_population_path(p, opts)).transpose()?,
    })
}

/// Yearly period labels `first..=last` as [`Period`]s, for schedule building.
pub fn year_periods(first: i32, last: i32) -> Vec<Period> {
    (first..=last).map(Period::year).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Stability;
    use crate::estimation::fit_tail;

    fn params_2006() -> ModelParams {
        ModelParams::new(-0.76, 1.30, -1.346, 0.765, 2.42, 49.0).unwrap()
    }

    fn config(periods: Vec<PeriodConfig>) -> ScenarioConfig {
        ScenarioConfig {
            seed: 7,
            initial_state: InitialState { rate: 5.0, n_tot: 600_000, n_hedge: 316_822 },
            periods,
            stability_epsilon: DEFAULT_STABILITY_EPSILON,
            outputs: OutputPaths::default(),
        }
    }

    fn fixed(label: &str, regime: Regime, steps: usize) -> PeriodConfig {
        PeriodConfig { label: label.into(), regime, steps, params: ParamsSource::Fixed(params_2006()), population: None }
    }

    #[test]
    fn zero_steps_echo_initial_state() {
        let cfg = config(vec![fixed("2006", Regime::LoansAccelerator, 0)]);
        let rep = run_scenario(&cfg, Path::new(".")).unwrap();
        assert_eq!(rep.trajectory.len(), 1);
        assert_eq!(rep.periods[0].start, rep.periods[0].end);
        assert_eq!(rep.periods[0].end.rate, 5.0);
        assert_eq!(rep.periods[0].end.n_hedge, 316_822);
    }

    #[test]
    fn periods_chain_and_are_deterministic() {
        let cfg = config(vec![fixed("2006", Regime::LoansAccelerator, 12), fixed("2007", Regime::CrisisAccelerator, 12)]);
        let a = run_scenario(&cfg, Path::new(".")).unwrap();
        let b = run_scenario(&cfg, Path::new(".")).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.trajectory.len(), 25);
        assert_eq!(a.periods[1].start, a.periods[0].end);
        assert_eq!(a.trajectory.last().unwrap().state.t, 24);
        assert_eq!(a.periods[0].loans_stability.kind, Stability::Divergent);
    }

    #[test]
    fn config_round_trips_through_json() {
        let mut cfg = config(vec![fixed("a", Regime::CrisisAccelerator, 3)]);
        cfg.periods.push(PeriodConfig {
            label: "b".into(),
            regime: Regime::LoansAccelerator,
            steps: 12,
            params: ParamsSource::FitFromSynthetic { n: 1000, rate: 5.0, generator: params_2006() },
            population: Some(PopulationChange { n_tot: 500_000, n_hedge: 200_000 }),
        });
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn config_errors() {
        assert!(config(vec![]).validate().is_err());
        let dup = config(vec![fixed("a", Regime::LoansAccelerator, 1), fixed("a", Regime::LoansAccelerator, 1)]);
        assert!(dup.validate().is_err());
        assert!(ScenarioConfig::from_json("{\"seed\": 1}").is_err());
        let missing = config(vec![PeriodConfig {
            label: "y".into(),
            regime: Regime::LoansAccelerator,
            steps: 1,
            params: ParamsSource::FitFromData {
                firms: "does/not/exist.csv".into(),
                year: 2007,
                alpha1: -1.0,
                alpha2: 0.8,
                i_min: 2.42,
                i_max: 49.0,
            },
            population: None,
        }]);
        match run_scenario(&missing, Path::new(".")) {
            Err(e @ ScenarioError::Period { .. }) => {
                assert!(e.to_string().contains("period `y`"));
                assert_eq!(e.kind(), ErrorKind::Io);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn synthetic_population_is_deterministic_and_valid() {
        let p = params_2006();
        let a = generate_synthetic_population(1000, -0.76, 1.3, 5.0, &p, 3, 2007).unwrap();
        let b = generate_synthetic_population(1000, -0.76, 1.3, 5.0, &p, 3, 2007).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_synthetic_population(1000, -0.76, 1.3, 5.0, &p, 4, 2007).unwrap());
        assert!(a.iter().all(|r| classify(r).is_ok() && r.year == 2007));
        assert!(generate_synthetic_population(1000, 0.76, 1.3, 5.0, &p, 3, 0).is_err());
        assert!(generate_synthetic_population(1000, -0.76, -1.3, 5.0, &p, 3, 0).is_err());
        assert!(generate_synthetic_population(99, -0.76, 1.3, 5.0, &p, 3, 0).is_err());
        assert!(generate_synthetic_population(1000, -0.76, 1.3, 60.0, &p, 3, 0).is_err());
    }

    #[test]
    fn synthetic_ponzi_share_matches_closed_form() {
        let p = ModelParams::new(-0.76, 1.27, -1.3, 0.8, 2.42, 49.0).unwrap();
        let recs = generate_synthetic_population(100_000, -0.76, 1.27, 12.7, &p, 1, 2008).unwrap();
        let shares = year_shares(&recs);
        assert!((shares[0].ponzi - 0.18).abs() < 0.01, "ponzi share {}", shares[0].ponzi);
        let hedge = loans_fraction(12.7, &p).unwrap();
        assert!((shares[0].hedge - hedge).abs() < 0.01);
    }

    #[test]
    fn synthetic_exponents_are_recovered() {
        let p = params_2006();
        let recs = generate_synthetic_population(100_000, -0.76, 1.30, 5.0, &p, 11, 2006).unwrap();
        let mu = fit_mu(&recs).unwrap();
        let beta = fit_beta(&recs).unwrap();
        assert!((mu.slope / -0.76 - 1.0).abs() < 0.02, "mu {}", mu.slope);
        assert!((beta.slope / 1.30 - 1.0).abs() < 0.02, "beta {}", beta.slope);
        assert!(mu.r_squared >= 0.98 && beta.r_squared >= 0.98);
        // ratios are exact on the record level
        let ys: Vec<f64> = recs.iter().filter_map(FirmRecord::ebit_to_loans).collect();
        assert_eq!(ys.len(), recs.len());
        assert!(fit_tail(&ys, crate::estimation::Tail::Upper, -1.5).is_ok());
    }

    #[test]
    fn year_fits_and_shares() {
        let p = params_2006();
        let mut recs = generate_synthetic_population(5000, -0.76, 1.3, 5.0, &p, 1, 2006).unwrap();
        recs.extend(generate_synthetic_population(5000, -0.8, 1.25, 6.0, &p, 2, 2007).unwrap());
        let fits = fit_years(&recs, Some((2.42, 49.0))).unwrap();
        assert_eq!(fits.iter().map(|f| f.year).collect::<Vec<_>>(), vec![2006, 2007]);
        assert_eq!(fits[0].i_max, Some(49.0));
        let shares = year_shares(&recs);
        assert_eq!(shares.len(), 2);
        let total = shares[0].hedge + shares[0].speculative + shares[0].ponzi;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn population_update_checks() {
        let ok = PopulationUpdate { year: 2002, n_tot: 469_893, n_hedge: 232_432, n_ponzi: 83_665 };
        assert!(ok.validate().is_ok());
        assert_eq!((ok.ponzi_density() * 100.0).round() / 100.0, 0.18);
        let bad = PopulationUpdate { n_ponzi: 300_000, ..ok };
        assert!(bad.validate().is_err());
        assert!(PopulationUpdate { n_tot: 0, n_hedge: 0, n_ponzi: 0, year: 1 }.validate().is_err());
    }
}
