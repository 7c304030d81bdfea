//! Directed trade-credit network and contagion on it.
//!
//! Edges point from trade debtor (buyer) to trade creditor (supplier). Two
//! contagion rules run on the same topology, both in synchronous rounds:
//!
//! - failure contagion: a ponzi firm fails as soon as any trade partner, in
//!   either edge direction, has failed;
//! - bootstrap contagion of ponziness: a hedge supplier turns ponzi once the
//!   ponzi share (or count) among its buyers reaches a threshold.
//!
//! Edge weights are carried for the growth analysis and ignored by both rules.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::ModelParams;
use crate::estimation::golden_section;
use crate::firm_model::MinskyStatus;
use crate::ols::ols;
use crate::rng::{stream, stream_with_offset, Stream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("self-loop on firm {0}")]
    SelfLoop(String),
    #[error("edge {buyer} -> {supplier} has invalid weight {weight}")]
    InvalidWeight {
        buyer: String,
        supplier: String,
        weight: f64,
    },
    #[error("unknown firm id `{0}`")]
    UnknownFirm(String),
    #[error("firm {0} has no buyers")]
    ZeroInDegree(String),
    #[error("invalid threshold {threshold}: {reason}")]
    InvalidThreshold { threshold: f64, reason: &'static str },
    #[error("invalid degree model: {0}")]
    InvalidDegreeModel(String),
    #[error("infeasible degree sequence: {0}")]
    Infeasible(String),
    #[error("supercritical: ponzi density {density} has reached the critical density {rho_c}")]
    Supercritical { density: f64, rho_c: f64 },
    #[error("invalid percolation parameters: {0}")]
    InvalidPercolation(String),
    #[error("density must lie in [0, 1), got {0}")]
    InvalidDensity(f64),
    #[error("critical rate must lie in (0, i_max = {i_max}], got {rate}")]
    RateOutOfRange { rate: f64, i_max: f64 },
    #[error("cannot draw {wanted} initial failures from {available} ponzi firms")]
    TooFewPonzi { wanted: usize, available: usize },
}

type Result<T> = std::result::Result<T, NetworkError>;

/// Immutable directed weighted graph with merged parallel edges and no
/// self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeNetwork {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    /// For each supplier, its buyers (sorted by node index) with edge weights.
    buyers: Vec<Vec<(usize, f64)>>,
    /// For each buyer, its suppliers (sorted by node index).
    suppliers: Vec<Vec<usize>>,
}

#[derive(Debug, Default)]
pub struct NetworkBuilder {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    edges: BTreeMap<(usize, usize), f64>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node if absent and returns its index.
    pub fn add_node(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }

    /// Adds `weight` to the edge `buyer -> supplier`, creating nodes as needed.
    pub fn add_edge(&mut self, buyer: &str, supplier: &str, weight: f64) -> Result<&mut Self> {
        if buyer == supplier {
            return Err(NetworkError::SelfLoop(buyer.to_string()));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(NetworkError::InvalidWeight {
                buyer: buyer.to_string(),
                supplier: supplier.to_string(),
                weight,
            });
        }
        let b = self.add_node(buyer);
        let s = self.add_node(supplier);
        *self.edges.entry((b, s)).or_insert(0.0) += weight;
        Ok(self)
    }

    pub fn build(self) -> TradeNetwork {
        let n = self.ids.len();
        let mut buyers = vec![Vec::new(); n];
        let mut suppliers = vec![Vec::new(); n];
        for (&(b, s), &w) in &self.edges {
            buyers[s].push((b, w));
            suppliers[b].push(s);
        }
        for list in &mut buyers {
            list.sort_by_key(|&(b, _)| b);
        }
        TradeNetwork { ids: self.ids, index: self.index, buyers, suppliers }
    }
}

impl TradeNetwork {
    pub fn builder() -> NetworkBuilder {
        NetworkBuilder::new()
    }

    /// Builds a network from `(buyer, supplier, weight)` triples.
    pub fn from_edges<'a>(edges: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> Result<Self> {
        let mut b = NetworkBuilder::new();
        for (buyer, supplier, w) in edges {
            b.add_edge(buyer, supplier, w)?;
        }
        Ok(b.build())
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.suppliers.iter().map(Vec::len).sum()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| NetworkError::UnknownFirm(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Buyers of `supplier` with the trade-credit weight of each link.
    pub fn buyers(&self, supplier: usize) -> &[(usize, f64)] {
        &self.buyers[supplier]
    }

    pub fn suppliers(&self, buyer: usize) -> &[usize] {
        &self.suppliers[buyer]
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.buyers[node].len()
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.suppliers[node].len()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        self.buyers.iter().map(Vec::len).collect()
    }

    /// Total trade credit owed to `supplier` by its buyers.
    pub fn invoice_total(&self, supplier: usize) -> f64 {
        self.buyers[supplier].iter().map(|&(_, w)| w).sum()
    }

    /// Neighbours in either edge direction; a reciprocal pair appears twice.
    pub fn partners(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.buyers[node].iter().map(|&(b, _)| b).chain(self.suppliers[node].iter().copied())
    }

    /// Edges as `(buyer, supplier, weight)`, ordered by supplier then buyer.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.buyers
            .iter()
            .enumerate()
            .flat_map(|(s, list)| list.iter().map(move |&(b, w)| (b, s, w)))
    }
}

/// Heavy-tailed in-degree law for generated networks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeModel {
    /// Exponent `a` of the cumulative tail `P[K >= k] ~ k^-a`.
    pub pareto_exponent: f64,
    pub mean_degree: f64,
    pub max_degree: usize,
}

impl DegreeModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.pareto_exponent.is_finite() && self.pareto_exponent > 1.0) {
            return Err(NetworkError::InvalidDegreeModel(format!(
                "pareto exponent must exceed 1, got {}",
                self.pareto_exponent
            )));
        }
        if !(self.mean_degree.is_finite() && self.mean_degree > 0.0) {
            return Err(NetworkError::InvalidDegreeModel(format!(
                "mean degree must be positive, got {}",
                self.mean_degree
            )));
        }
        if self.max_degree == 0 {
            return Err(NetworkError::InvalidDegreeModel("max degree must be at least 1".into()));
        }
        Ok(())
    }
}

/// Floor of a continuous Pareto with scale `scale` and exponent `a`,
/// conditioned on `K <= max`.
#[derive(Debug, Clone, Copy)]
struct DiscretePareto {
    scale: f64,
    exponent: f64,
    max: usize,
}

impl DiscretePareto {
    fn survival(&self, k: usize) -> f64 {
        let k = k as f64;
        if k <= self.scale {
            1.0
        } else {
            (k / self.scale).powf(-self.exponent)
        }
    }

    fn mean(&self) -> f64 {
        let tail = self.survival(self.max + 1);
        (1..=self.max).map(|k| (self.survival(k) - tail) / (1.0 - tail)).sum()
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let k = (self.scale * u.powf(-1.0 / self.exponent)).floor();
            if k <= self.max as f64 {
                return k as usize;
            }
        }
    }

    /// Chooses the scale so that the conditioned mean equals `mean`.
    fn with_mean(exponent: f64, mean: f64, max: usize) -> Result<Self> {
        let at = |scale: f64| DiscretePareto { scale, exponent, max };
        let (mut lo, mut hi) = (1e-9, max as f64);
        if at(hi).mean() < mean {
            return Err(NetworkError::Infeasible(format!(
                "mean degree {mean} unreachable with max degree {max}"
            )));
        }
        if at(lo).mean() > mean {
            return Err(NetworkError::Infeasible(format!("mean degree {mean} is too small")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid).mean() < mean {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(at(0.5 * (lo + hi)))
    }
}

const DEGREE_SEQUENCE_RETRIES: u64 = 200;
const MEAN_DEGREE_TOLERANCE: f64 = 0.10;

/// Samples an in-degree sequence whose mean is within 10% of the target.
pub fn sample_in_degrees(n: usize, model: &DegreeModel, seed: u64) -> Result<Vec<usize>> {
    model.validate()?;
    if n < 2 {
        return Err(NetworkError::InvalidDegreeModel(format!("need at least 2 nodes, got {n}")));
    }
    let max = model.max_degree.min(n - 1);
    let law = DiscretePareto::with_mean(model.pareto_exponent, model.mean_degree, max)?;
    for attempt in 0..DEGREE_SEQUENCE_RETRIES {
        let mut rng = stream_with_offset(seed, Stream::NetworkDegrees, attempt);
        let degrees: Vec<usize> = (0..n).map(|_| law.sample(&mut rng)).collect();
        let mean = degrees.iter().sum::<usize>() as f64 / n as f64;
        if (mean - model.mean_degree).abs() <= MEAN_DEGREE_TOLERANCE * model.mean_degree {
            return Ok(degrees);
        }
    }
    Err(NetworkError::Infeasible(format!(
        "no sequence within {:.0}% of mean degree {} after {DEGREE_SEQUENCE_RETRIES} draws",
        MEAN_DEGREE_TOLERANCE * 100.0,
        model.mean_degree
    )))
}

/// Configuration-model wiring for a prescribed in-degree sequence.
///
/// Each in-stub of supplier `i` is matched to a buyer drawn uniformly from the
/// other nodes, without repeating a buyer, so out-degrees are approximately
/// Poisson with the same mean. Node ids are the decimal node indices and edge
/// weights are log-uniform on `[1, 10^4]`.
pub fn wire_in_degrees(in_degrees: &[usize], seed: u64) -> Result<TradeNetwork> {
    let n = in_degrees.len();
    if let Some((i, &k)) = in_degrees.iter().enumerate().find(|(_, &k)| k >= n.max(1)) {
        return Err(NetworkError::Infeasible(format!("node {i} needs {k} distinct buyers among {n} nodes")));
    }
    let mut wiring = stream(seed, Stream::NetworkWiring);
    let mut weights = stream(seed, Stream::NetworkWeights);
    let mut b = NetworkBuilder::new();
    let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    for id in &ids {
        b.add_node(id);
    }
    for (supplier, &k) in in_degrees.iter().enumerate() {
        if k == 0 {
            continue;
        }
        let mut picks: Vec<usize> = sample(&mut wiring, n - 1, k)
            .into_iter()
            .map(|j| if j >= supplier { j + 1 } else { j })
            .collect();
        picks.sort_unstable();
        for buyer in picks {
            let w = 10f64.powf(4.0 * weights.random::<f64>());
            b.add_edge(&ids[buyer], &ids[supplier], w)?;
        }
    }
    Ok(b.build())
}

/// Random trade network with heavy-tailed in-degrees.
pub fn generate_network(n: usize, model: &DegreeModel, seed: u64) -> Result<TradeNetwork> {
    let degrees = sample_in_degrees(n, model, seed)?;
    wire_in_degrees(&degrees, seed)
}

/// Parameters of the closed-form failure count near the percolation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercolationParams {
    pub rho_c: f64,
    pub gamma: f64,
    pub s: f64,
}

impl PercolationParams {
    pub fn new(rho_c: f64, gamma: f64, s: f64) -> Result<Self> {
        let p = Self { rho_c, gamma, s };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_c > 0.0 && self.rho_c <= 1.0) {
            return Err(NetworkError::InvalidPercolation(format!("rho_c must lie in (0, 1], got {}", self.rho_c)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(NetworkError::InvalidPercolation(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(NetworkError::InvalidPercolation(format!("S must be positive, got {}", self.s)));
        }
        Ok(())
    }
}

/// `S * (1 - rho / rho_c)^-gamma`; fails with [`NetworkError::Supercritical`]
/// once `rho >= rho_c`.
pub fn expected_failures(density: f64, params: &PercolationParams) -> Result<f64> {
    params.validate()?;
    if !(density >= 0.0 && density.is_finite()) {
        return Err(NetworkError::InvalidDensity(density));
    }
    if density >= params.rho_c {
        return Err(NetworkError::Supercritical { density, rho_c: params.rho_c });
    }
    Ok(params.s * (1.0 - density / params.rho_c).powf(-params.gamma))
}

/// Critical density implied by a critical rate: `(rate_c / i_max)^beta`.
pub fn critical_density_from_rate(rate_c: f64, params: &ModelParams) -> Result<f64> {
    if !(rate_c > 0.0 && rate_c <= params.i_max) {
        return Err(NetworkError::RateOutOfRange { rate: rate_c, i_max: params.i_max });
    }
    Ok((rate_c / params.i_max).powf(params.beta))
}

/// Critical rate implied by a critical density: `i_max * rho_c^(1/beta)`.
pub fn critical_rate_from_density(rho_c: f64, params: &ModelParams) -> Result<f64> {
    if !(rho_c > 0.0 && rho_c <= 1.0) {
        return Err(NetworkError::InvalidDensity(rho_c));
    }
    Ok(params.i_max * rho_c.powf(1.0 / params.beta))
}

/// Least-squares fit of `ln N = ln S - gamma * ln(1 - rho / rho_c)`.
///
/// For each trial `rho_c` the pair `(ln S, gamma)` is an OLS solution; `rho_c`
/// itself is found by a grid scan over `(max rho, 1]` refined with
/// golden-section search.
pub fn fit_percolation(densities: &[f64], failures: &[f64]) -> Result<PercolationParams> {
    if densities.len() != failures.len() || densities.len() < 3 {
        return Err(NetworkError::InvalidPercolation("need at least 3 paired observations".into()));
    }
    if densities.iter().any(|d| !(0.0..1.0).contains(d)) || failures.iter().any(|f| !(*f > 0.0)) {
        return Err(NetworkError::InvalidPercolation("densities must lie in [0, 1) and failures be positive".into()));
    }
    let max_rho = densities.iter().copied().fold(0.0, f64::max);
    let log_n: Vec<f64> = failures.iter().map(|f| f.ln()).collect();
    let fit_at = |rho_c: f64| {
        let xs: Vec<f64> = densities.iter().map(|d| -(1.0 - d / rho_c).ln()).collect();
        ols(&xs, &log_n).map(|fit| {
            let sse: f64 = xs.iter().zip(&log_n).map(|(&x, &y)| (y - fit.predict(x)).powi(2)).sum();
            (fit, sse)
        })
    };
    let cost = |rho_c: f64| fit_at(rho_c).map_or(f64::INFINITY, |(_, sse)| sse);

    let lo = max_rho * (1.0 + 1e-6) + 1e-12;
    let hi = 1.0f64.max(lo * 2.0);
    let grid = 400;
    let step = (hi - lo) / grid as f64;
    let best = (0..=grid)
        .map(|k| lo + step * k as f64)
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
        .expect("non-empty grid");
    let rho_c = golden_section(cost, (best - step).max(lo), (best + step).min(hi), 1e-10);
    let (fit, _) = fit_at(rho_c).ok_or_else(|| NetworkError::InvalidPercolation("degenerate densities".into()))?;
    PercolationParams::new(rho_c, fit.slope, fit.intercept.exp())
}

/// Statuses keyed by firm id. Firms missing from the map are neither
/// susceptible nor counted as ponzi.
pub type StatusMap = HashMap<String, MinskyStatus>;

/// Outcome of a contagion run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    /// Initially failed firms (failure contagion) or initially ponzi firms
    /// (bootstrap contagion), in node order.
    pub seeds: Vec<String>,
    /// Firms added in each round, in node order. The last round is non-empty;
    /// the run stops at the first round that adds nothing.
    pub rounds: Vec<Vec<String>>,
}

impl CascadeReport {
    /// Seeds plus every firm added by contagion, in node order of addition.
    pub fn affected(&self) -> Vec<String> {
        self.seeds.iter().chain(self.rounds.iter().flatten()).cloned().collect()
    }

    pub fn total(&self) -> usize {
        self.seeds.len() + self.added()
    }

    /// Firms added by contagion, excluding seeds.
    pub fn added(&self) -> usize {
        self.rounds.iter().map(Vec::len).sum()
    }

    /// `(round, new, cumulative)` rows; round 0 holds the seeds.
    pub fn rows(&self) -> Vec<(usize, usize, usize)> {
        let mut cumulative = self.seeds.len();
        let mut rows = vec![(0, cumulative, cumulative)];
        for (r, added) in self.rounds.iter().enumerate() {
            cumulative += added.len();
            rows.push((r + 1, added.len(), cumulative));
        }
        rows
    }

    fn from_indices(net: &TradeNetwork, seeds: &[usize], rounds: Vec<Vec<usize>>) -> Self {
        let name = |v: &[usize]| v.iter().map(|&i| net.id(i).to_string()).collect();
        Self { seeds: name(seeds), rounds: rounds.iter().map(|r| name(r)).collect() }
    }
}

fn status_vector(net: &TradeNetwork, statuses: &StatusMap) -> Result<Vec<Option<MinskyStatus>>> {
    let mut out = vec![None; net.node_count()];
    for (id, &s) in statuses {
        out[net.index_of(id)?] = Some(s);
    }
    Ok(out)
}

/// Failure contagion over node indices. `susceptible[i]` marks ponzi firms.
/// Returns the additions of each round.
pub fn failure_cascade_indexed(net: &TradeNetwork, susceptible: &[bool], initial: &[usize]) -> Vec<Vec<usize>> {
    let mut failed = vec![false; net.node_count()];
    for &i in initial {
        failed[i] = true;
    }
    let mut frontier: Vec<usize> = initial.to_vec();
    let mut rounds = Vec::new();
    loop {
        // A node can only become eligible through a partner that failed in
        // the previous round.
        let mut added: Vec<usize> = frontier
            .iter()
            .flat_map(|&f| net.partners(f))
            .filter(|&v| susceptible[v] && !failed[v])
            .collect();
        added.sort_unstable();
        added.dedup();
        if added.is_empty() {
            return rounds;
        }
        for &v in &added {
            failed[v] = true;
        }
        frontier = added.clone();
        rounds.push(added);
    }
}

/// Failure contagion: every not-yet-failed ponzi firm with at least one
/// failed trade partner fails in the next round.
pub fn failure_cascade(net: &TradeNetwork, statuses: &StatusMap, initial_failures: &[&str]) -> Result<CascadeReport> {
    let status = status_vector(net, statuses)?;
    let mut initial = initial_failures.iter().map(|id| net.index_of(id)).collect::<Result<Vec<_>>>()?;
    initial.sort_unstable();
    initial.dedup();
    let susceptible: Vec<bool> = status.iter().map(|s| *s == Some(MinskyStatus::Ponzi)).collect();
    let rounds = failure_cascade_indexed(net, &susceptible, &initial);
    Ok(CascadeReport::from_indices(net, &initial, rounds))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Convert when `ponzi buyers / buyers >= threshold`.
    FractionOfBuyers,
    /// Convert when `ponzi buyers >= threshold`.
    AbsoluteCount,
}

fn check_threshold(threshold: f64, mode: ThresholdMode) -> Result<()> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(NetworkError::InvalidThreshold { threshold, reason: "must be positive" });
    }
    if mode == ThresholdMode::FractionOfBuyers && threshold > 1.0 {
        return Err(NetworkError::InvalidThreshold { threshold, reason: "a fraction cannot exceed 1" });
    }
    Ok(())
}

fn reaches(ponzi_buyers: usize, buyers: usize, threshold: f64, mode: ThresholdMode) -> bool {
    if buyers == 0 {
        return false;
    }
    match mode {
        ThresholdMode::FractionOfBuyers => ponzi_buyers as f64 / buyers as f64 >= threshold,
        ThresholdMode::AbsoluteCount => ponzi_buyers as f64 >= threshold,
    }
}

/// Bootstrap contagion over node indices. Returns the conversions of each round.
pub fn bootstrap_cascade_indexed(
    net: &TradeNetwork,
    status: &[Option<MinskyStatus>],
    threshold: f64,
    mode: ThresholdMode,
) -> Result<Vec<Vec<usize>>> {
    check_threshold(threshold, mode)?;
    let n = net.node_count();
    let mut ponzi: Vec<bool> = status.iter().map(|s| *s == Some(MinskyStatus::Ponzi)).collect();
    let hedge: Vec<bool> = status.iter().map(|s| *s == Some(MinskyStatus::Hedge)).collect();
    let mut ponzi_buyers: Vec<usize> = (0..n)
        .map(|i| net.buyers(i).iter().filter(|&&(b, _)| ponzi[b]).count())
        .collect();

    let mut candidates: Vec<usize> = (0..n).collect();
    let mut rounds = Vec::new();
    loop {
        let converts: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&i| hedge[i] && !ponzi[i] && reaches(ponzi_buyers[i], net.in_degree(i), threshold, mode))
            .collect();
        if converts.is_empty() {
            return Ok(rounds);
        }
        for &i in &converts {
            ponzi[i] = true;
        }
        let mut next: Vec<usize> = Vec::new();
        for &i in &converts {
            for &s in net.suppliers(i) {
                ponzi_buyers[s] += 1;
                next.push(s);
            }
        }
        next.sort_unstable();
        next.dedup();
        candidates = next;
        rounds.push(converts);
    }
}

/// Bootstrap contagion of ponziness from buyers to hedge suppliers. Firms
/// without buyers never convert.
pub fn bootstrap_cascade(
    net: &TradeNetwork,
    statuses: &StatusMap,
    threshold: f64,
    mode: ThresholdMode,
) -> Result<CascadeReport> {
    let status = status_vector(net, statuses)?;
    let seeds: Vec<usize> = (0..net.node_count()).filter(|&i| status[i] == Some(MinskyStatus::Ponzi)).collect();
    let rounds = bootstrap_cascade_indexed(net, &status, threshold, mode)?;
    Ok(CascadeReport::from_indices(net, &seeds, rounds))
}

/// Share of a supplier's buyers that are ponzi.
pub fn ponzi_buyer_ratio(net: &TradeNetwork, statuses: &StatusMap, supplier: &str) -> Result<f64> {
    let i = net.index_of(supplier)?;
    let buyers = net.buyers(i);
    if buyers.is_empty() {
        return Err(NetworkError::ZeroInDegree(supplier.to_string()));
    }
    let ponzi = buyers
        .iter()
        .filter(|&&(b, _)| statuses.get(net.id(b)) == Some(&MinskyStatus::Ponzi))
        .count();
    Ok(ponzi as f64 / buyers.len() as f64)
}

/// Assigns ponzi to a uniformly random `density` share of nodes (rounded
/// half-to-even) and `rest` to the others.
pub fn plant_statuses(net: &TradeNetwork, density: f64, rest: MinskyStatus, seed: u64) -> Result<StatusMap> {
    if !(0.0..=1.0).contains(&density) {
        return Err(NetworkError::InvalidDensity(density));
    }
    let n = net.node_count();
    let k = ((density * n as f64).round_ties_even() as usize).min(n);
    let mut rng = stream(seed, Stream::Statuses);
    let chosen = sample(&mut rng, n, k);
    let mut ponzi = vec![false; n];
    for i in chosen {
        ponzi[i] = true;
    }
    Ok(net
        .ids()
        .iter()
        .zip(ponzi)
        .map(|(id, p)| (id.clone(), if p { MinskyStatus::Ponzi } else { rest }))
        .collect())
}

/// Draws `k` distinct ponzi firms of `net` as initial failures, returned in id
/// order.
pub fn pick_initial_failures(net: &TradeNetwork, statuses: &StatusMap, k: usize, seed: u64) -> Result<Vec<String>> {
    let ponzi: Vec<usize> =
        (0..net.node_count()).filter(|&i| statuses.get(net.id(i)) == Some(&MinskyStatus::Ponzi)).collect();
    if k > ponzi.len() {
        return Err(NetworkError::TooFewPonzi { wanted: k, available: ponzi.len() });
    }
    let mut rng = stream(seed, Stream::Contagion);
    let mut ids: Vec<String> = sample(&mut rng, ponzi.len(), k).into_iter().map(|j| net.id(ponzi[j]).to_string()).collect();
    ids.sort();
    Ok(ids)
}
