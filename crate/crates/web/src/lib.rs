//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain numbers or a JSON string and returns a JSON string,
//! so the page needs no generated TypeScript types.

use rand::seq::SliceRandom;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use minsky_core::dynamics::{classify_stability, evolve, fixed_rate, Regime, Stability, DEFAULT_STABILITY_EPSILON};
use minsky_core::estimation::{empirical_cdf, fit_beta, fit_mu, Tail};
use minsky_core::network::{bootstrap_cascade_indexed, generate_network, DegreeModel, ThresholdMode};
use minsky_core::rng::{stream, Stream};
use minsky_core::scenario::{generate_synthetic_population, year_shares};
use minsky_core::{FitResult, MinskyStatus, ModelParams, SystemState};

const MAX_STEPS: usize = 600;
const MAX_FIRMS: usize = 200_000;
const MAX_NODES: usize = 5_000;
const PLOT_POINTS: usize = 150;

#[derive(Serialize)]
struct Cobweb {
    product: f64,
    stability: Stability,
    fixed_rate: f64,
    rates: Vec<f64>,
    fractions: Vec<f64>,
    clamped: bool,
}

/// Rate and fraction path of one regime, starting at `rate`.
pub fn cobweb_json(params_json: &str, regime: &str, rate: f64, steps: usize) -> Result<String, String> {
    let params: ModelParams = serde_json::from_str(params_json).map_err(|e| e.to_string())?;
    params.validate().map_err(|e| e.to_string())?;
    let regime: Regime = regime.parse().map_err(|e: minsky_core::dynamics::DynamicsError| e.to_string())?;
    let start = SystemState::at_rate(rate, 1_000_000, 0, &params).map_err(|e| e.to_string())?;
    let path = evolve(&start, regime, &params, steps.min(MAX_STEPS)).map_err(|e| e.to_string())?;
    let states: Vec<&SystemState> = std::iter::once(&start).chain(&path).collect();
    let fraction = |s: &SystemState| match regime {
        Regime::LoansAccelerator => s.loans_fraction,
        Regime::CrisisAccelerator => s.ponzi_density,
    };
    let product = params.product(regime);
    let out = Cobweb {
        product,
        stability: classify_stability(product, DEFAULT_STABILITY_EPSILON).kind,
        fixed_rate: fixed_rate(regime, &params),
        rates: states.iter().map(|s| s.rate).collect(),
        fractions: states.iter().map(|s| fraction(s)).collect(),
        clamped: states.iter().any(|s| s.clamped),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct TailFit {
    n: usize,
    hedge: f64,
    speculative: f64,
    ponzi: f64,
    mu: FitResult,
    beta: FitResult,
    /// `(ln x, ln P[X > x])` for `EBIT / BL`.
    mu_points: Vec<(f64, f64)>,
    /// `(ln x, ln P[X < x])` for `EBTDA / FC`.
    beta_points: Vec<(f64, f64)>,
}

fn log_points(values: &[f64], tail: Tail) -> Result<Vec<(f64, f64)>, String> {
    let cdf = empirical_cdf(values, tail).map_err(|e| e.to_string())?;
    let stride = (cdf.len() / PLOT_POINTS).max(1);
    Ok(cdf.iter().step_by(stride).map(|&(x, p)| (x.ln(), p.ln())).collect())
}

/// Draws a synthetic population and fits both tail exponents back.
pub fn tail_fit_json(n: usize, mu: f64, beta: f64, rate: f64, seed: u64) -> Result<String, String> {
    let params = ModelParams::new(mu, beta, 1.0, 1.0, 2.42, 49.0).map_err(|e| e.to_string())?;
    let records = generate_synthetic_population(n.min(MAX_FIRMS), mu, beta, rate, &params, seed, 2006)
        .map_err(|e| e.to_string())?;
    let ratio = |num: fn(&minsky_core::FirmRecord) -> Option<f64>, den: fn(&minsky_core::FirmRecord) -> Option<f64>| {
        records
            .iter()
            .filter_map(|r| Some(num(r)? / den(r)?))
            .filter(|v| v.is_finite() && *v > 0.0)
            .collect::<Vec<f64>>()
    };
    let shares = year_shares(&records)[0];
    let out = TailFit {
        n: records.len(),
        hedge: shares.hedge,
        speculative: shares.speculative,
        ponzi: shares.ponzi,
        mu: fit_mu(&records).map_err(|e| e.to_string())?,
        beta: fit_beta(&records).map_err(|e| e.to_string())?,
        mu_points: log_points(&ratio(|r| r.ebit, |r| r.bank_loans), Tail::Upper)?,
        beta_points: log_points(&ratio(|r| r.ebtda, |r| r.financial_costs), Tail::Lower)?,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Sweep {
    nodes: usize,
    edges: usize,
    hedge: usize,
    densities: Vec<f64>,
    conversions: Vec<usize>,
    rounds: Vec<usize>,
}

/// Bootstrap conversions on one generated network as the ponzi density grows.
/// The hedge set is fixed; ponzi firms are added, nested, from the others.
pub fn bootstrap_sweep_json(
    n: usize,
    mean_degree: f64,
    hedge_share: f64,
    threshold: f64,
    seed: u64,
) -> Result<String, String> {
    if !(0.0..=0.7).contains(&hedge_share) {
        return Err(format!("hedge share must lie in [0, 0.7], got {hedge_share}"));
    }
    let n = n.clamp(10, MAX_NODES);
    let model = DegreeModel { pareto_exponent: 1.3, mean_degree, max_degree: n - 1 };
    let net = generate_network(n, &model, seed).map_err(|e| e.to_string())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, Stream::Statuses));
    let n_hedge = (hedge_share * n as f64).round() as usize;

    let densities: Vec<f64> = (1..=15).map(|k| k as f64 * 0.02).collect();
    let (mut conversions, mut rounds) = (Vec::new(), Vec::new());
    for &d in &densities {
        let k = ((d * n as f64).round() as usize).min(n - n_hedge);
        let mut status = vec![Some(MinskyStatus::Speculative); n];
        for &i in &order[..n_hedge] {
            status[i] = Some(MinskyStatus::Hedge);
        }
        for &i in &order[n_hedge..n_hedge + k] {
            status[i] = Some(MinskyStatus::Ponzi);
        }
        let r = bootstrap_cascade_indexed(&net, &status, threshold, ThresholdMode::FractionOfBuyers)
            .map_err(|e| e.to_string())?;
        conversions.push(r.iter().map(Vec::len).sum());
        rounds.push(r.len());
    }
    let out = Sweep { nodes: n, edges: net.edge_count(), hedge: n_hedge, densities, conversions, rounds };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn cobweb(params_json: &str, regime: &str, rate: f64, steps: usize) -> Result<String, JsError> {
    cobweb_json(params_json, regime, rate, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn tail_fit(n: usize, mu: f64, beta: f64, rate: f64, seed: u64) -> Result<String, JsError> {
    tail_fit_json(n, mu, beta, rate, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bootstrap_sweep(n: usize, mean_degree: f64, hedge_share: f64, threshold: f64, seed: u64) -> Result<String, JsError> {
    bootstrap_sweep_json(n, mean_degree, hedge_share, threshold, seed).map_err(|e| JsError::new(&e))
}
