//! Supplier growth against the growth of their buyers.
//!
//! A supplier's estimated growth is the trade-credit weighted average of its
//! buyers' purchase growth; its realized growth is the ratio of its own sales
//! across the two years. The module also selects suppliers whose known
//! invoices cover enough of their sales, fits power-law correlations between
//! the two growth measures, and tabulates ponzi-buyer ratios for suppliers that
//! stayed hedge versus those that left.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{FitResult, MIN_FIT_POINTS};
use crate::firm_model::{classify, FirmRecord, MinskyStatus};
use crate::network::{StatusMap, TradeNetwork};
use crate::ols::ols;

/// Minimum share of annual sales the known invoices must cover.
pub const MIN_COVERAGE: f64 = 0.5;
/// Maximum share; above it the invoice data and the sales figure disagree.
pub const MAX_COVERAGE: f64 = 1.2;
pub const DEFAULT_BIN_WIDTH: f64 = 0.05;
pub const DEFAULT_SECTOR: &str = "Manufacturing";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrowthError {
    #[error("unknown firm id `{0}`")]
    UnknownFirm(String),
    #[error("supplier {supplier} has no buyer with positive prior purchases ({excluded} excluded)")]
    NoEligibleBuyers { supplier: String, excluded: usize },
    #[error("firm {0}: prior sales must be positive")]
    ZeroPriorSales(String),
    #[error("firm {0}: sales missing")]
    MissingSales(String),
    #[error("need at least {needed} pairs in the group, got {got}")]
    InsufficientPairs { needed: usize, got: usize },
    #[error("bin width must lie in (0, 1], got {0}")]
    InvalidBinWidth(f64),
    #[error("ponzi buyer ratio must lie in [0, 1], got {0}")]
    InvalidRatio(f64),
    #[error("no ratios to tabulate")]
    Empty,
    #[error("all pairs share one estimated growth value; slope undefined")]
    Degenerate,
}

type Result<T> = std::result::Result<T, GrowthError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// No usable base-year record (absent, or sales missing or not positive).
    Unmatched,
    /// Present in the base year but absent in the following year.
    Disappeared,
    /// Invoice coverage outside the accepted band in either year.
    Coverage,
    /// Sector filter mismatch.
    Sector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplierSelection {
    pub supplier_id: String,
    /// Known invoice total over annual sales, base year.
    pub coverage: Option<f64>,
    /// Same ratio for the following year.
    pub coverage_next: Option<f64>,
    pub included: bool,
    pub reason: Option<ExclusionReason>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SelectionReport {
    pub suppliers: Vec<SupplierSelection>,
    pub excluded_unmatched: usize,
    pub excluded_disappeared: usize,
    pub excluded_coverage: usize,
    pub excluded_sector: usize,
}

impl SelectionReport {
    pub fn included(&self) -> impl Iterator<Item = &str> {
        self.suppliers.iter().filter(|s| s.included).map(|s| s.supplier_id.as_str())
    }
}

fn by_id(records: &[FirmRecord]) -> HashMap<&str, &FirmRecord> {
    records.iter().map(|r| (r.firm_id.as_str(), r)).collect()
}

fn positive_sales(r: &FirmRecord) -> Option<f64> {
    r.sales.filter(|s| s.is_finite() && *s > 0.0)
}

fn coverage(net: &TradeNetwork, id: &str, sales: f64) -> f64 {
    net.index_of(id).map_or(0.0, |i| net.invoice_total(i)) / sales
}

fn in_band(c: f64) -> bool {
    (MIN_COVERAGE..=MAX_COVERAGE).contains(&c)
}

/// Keeps suppliers (nodes of `net_t` with at least one buyer) whose invoice
/// coverage lies in `[0.5, 1.2]` in both years and, when `sector` is given,
/// whose base-year sector matches. Exclusions are reported, never fatal.
pub fn select_suppliers(
    year_t: &[FirmRecord],
    year_t1: &[FirmRecord],
    net_t: &TradeNetwork,
    net_t1: &TradeNetwork,
    sector: Option<&str>,
) -> SelectionReport {
    let (base, next) = (by_id(year_t), by_id(year_t1));
    let mut report = SelectionReport::default();
    for i in (0..net_t.node_count()).filter(|&i| net_t.in_degree(i) > 0) {
        let id = net_t.id(i);
        let mut sel = SupplierSelection {
            supplier_id: id.to_string(),
            coverage: None,
            coverage_next: None,
            included: false,
            reason: None,
        };
        let record_t = base.get(id).copied();
        let reason = match record_t.and_then(positive_sales) {
            None => Some(ExclusionReason::Unmatched),
            Some(sales_t) => {
                sel.coverage = Some(coverage(net_t, id, sales_t));
                match next.get(id) {
                    None => Some(ExclusionReason::Disappeared),
                    Some(r1) => {
                        sel.coverage_next = positive_sales(r1).map(|s| coverage(net_t1, id, s));
                        let both_in_band = in_band(sel.coverage.unwrap_or(0.0)) && sel.coverage_next.is_some_and(in_band);
                        if !both_in_band {
                            Some(ExclusionReason::Coverage)
                        } else if sector.is_some_and(|s| record_t.is_some_and(|r| r.sector != s)) {
                            Some(ExclusionReason::Sector)
                        } else {
                            None
                        }
                    }
                }
            }
        };
        match reason {
            Some(ExclusionReason::Unmatched) => report.excluded_unmatched += 1,
            Some(ExclusionReason::Disappeared) => report.excluded_disappeared += 1,
            Some(ExclusionReason::Coverage) => report.excluded_coverage += 1,
            Some(ExclusionReason::Sector) => report.excluded_sector += 1,
            None => sel.included = true,
        }
        sel.reason = reason;
        report.suppliers.push(sel);
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub value: f64,
    /// Buyers entering the sum.
    pub buyers_used: usize,
    /// Buyers dropped for missing or non-positive prior purchases, or missing
    /// current purchases.
    pub buyers_excluded: usize,
}

/// Trade-credit weighted buyer purchase growth of `supplier`.
///
/// With `normalize` the weighted sum is divided by the total weight of the
/// buyers used, giving a dimensionless ratio; without it the result carries
/// the currency unit of the weights.
pub fn estimated_growth(
    net: &TradeNetwork,
    purchases_t: &HashMap<String, f64>,
    purchases_t1: &HashMap<String, f64>,
    supplier: &str,
    normalize: bool,
) -> Result<GrowthEstimate> {
    let i = net.index_of(supplier).map_err(|_| GrowthError::UnknownFirm(supplier.to_string()))?;
    let (mut sum, mut weight, mut used, mut excluded) = (0.0, 0.0, 0, 0);
    for &(b, w) in net.buyers(i) {
        let id = net.id(b);
        match (purchases_t.get(id), purchases_t1.get(id)) {
            (Some(&p0), Some(&p1)) if p0 > 0.0 && p0.is_finite() && p1.is_finite() => {
                sum += w * (p1 / p0);
                weight += w;
                used += 1;
            }
            _ => excluded += 1,
        }
    }
    if used == 0 {
        return Err(GrowthError::NoEligibleBuyers { supplier: supplier.to_string(), excluded });
    }
    let value = if normalize { sum / weight } else { sum };
    Ok(GrowthEstimate { value, buyers_used: used, buyers_excluded: excluded })
}

/// `sales_{t+1} / sales_t`.
pub fn realized_growth(record_t: &FirmRecord, record_t1: &FirmRecord) -> Result<f64> {
    let s0 = record_t.sales.ok_or_else(|| GrowthError::MissingSales(record_t.firm_id.clone()))?;
    let s1 = record_t1.sales.ok_or_else(|| GrowthError::MissingSales(record_t1.firm_id.clone()))?;
    if !(s0 > 0.0) {
        return Err(GrowthError::ZeroPriorSales(record_t.firm_id.clone()));
    }
    Ok(s1 / s0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthPair {
    pub supplier_id: String,
    pub estimated: f64,
    pub realized: f64,
    pub status_from: MinskyStatus,
    pub status_to: MinskyStatus,
    pub ponzi_buyer_ratio: f64,
}

/// Counts of suppliers dropped while building pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairSkips {
    pub no_eligible_buyers: usize,
    pub unclassifiable: usize,
    pub bad_sales: usize,
}

/// Builds a growth pair for every supplier in `suppliers`, using base-year
/// statuses for the ponzi-buyer ratio.
pub fn growth_pairs<'a>(
    suppliers: impl IntoIterator<Item = &'a str>,
    year_t: &[FirmRecord],
    year_t1: &[FirmRecord],
    net: &TradeNetwork,
    normalize: bool,
) -> (Vec<GrowthPair>, PairSkips) {
    let (base, next) = (by_id(year_t), by_id(year_t1));
    let purchases = |recs: &[FirmRecord]| -> HashMap<String, f64> {
        recs.iter().filter_map(|r| r.purchases.map(|p| (r.firm_id.clone(), p))).collect()
    };
    let (p0, p1) = (purchases(year_t), purchases(year_t1));
    let statuses: StatusMap = year_t
        .iter()
        .filter(|r| net.contains(&r.firm_id))
        .filter_map(|r| classify(r).ok().map(|s| (r.firm_id.clone(), s)))
        .collect();

    let mut pairs = Vec::new();
    let mut skips = PairSkips::default();
    for id in suppliers {
        let (Some(r0), Some(r1)) = (base.get(id), next.get(id)) else {
            skips.bad_sales += 1;
            continue;
        };
        let (Ok(from), Ok(to)) = (classify(r0), classify(r1)) else {
            skips.unclassifiable += 1;
            continue;
        };
        let Ok(realized) = realized_growth(r0, r1) else {
            skips.bad_sales += 1;
            continue;
        };
        let Ok(est) = estimated_growth(net, &p0, &p1, id, normalize) else {
            skips.no_eligible_buyers += 1;
            continue;
        };
        let ratio = crate::network::ponzi_buyer_ratio(net, &statuses, id).unwrap_or(0.0);
        pairs.push(GrowthPair {
            supplier_id: id.to_string(),
            estimated: est.value,
            realized,
            status_from: from,
            status_to: to,
            ponzi_buyer_ratio: ratio,
        });
    }
    (pairs, skips)
}

/// Selects pairs by status, e.g. hedge to anything-but-hedge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusPattern {
    Any,
    Is(MinskyStatus),
    Not(MinskyStatus),
}

impl StatusPattern {
    pub fn matches(self, s: MinskyStatus) -> bool {
        match self {
            Self::Any => true,
            Self::Is(t) => s == t,
            Self::Not(t) => s != t,
        }
    }
}

/// OLS of `ln realized` on `ln estimated` over the pairs matching the group.
/// Pairs with a non-positive ratio are skipped and counted in `n_excluded`.
pub fn fit_growth_correlation(pairs: &[GrowthPair], from: StatusPattern, to: StatusPattern) -> Result<FitResult> {
    let group = pairs.iter().filter(|p| from.matches(p.status_from) && to.matches(p.status_to));
    let (mut xs, mut ys, mut excluded) = (Vec::new(), Vec::new(), 0);
    for p in group {
        if p.estimated > 0.0 && p.realized > 0.0 {
            xs.push(p.estimated.ln());
            ys.push(p.realized.ln());
        } else {
            excluded += 1;
        }
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(GrowthError::InsufficientPairs { needed: MIN_FIT_POINTS, got: xs.len() });
    }
    let fit = ols(&xs, &ys).ok_or(GrowthError::Degenerate)?;
    Ok(FitResult {
        slope: fit.slope,
        intercept: fit.intercept,
        bound_rate: None,
        r_squared: fit.r_squared.clamp(0.0, 1.0),
        n_points: fit.n,
        cutoff: None,
        n_excluded: excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionHistogram {
    pub bin_width: f64,
    /// Bin centres `0, w, 2w, ...`; a ratio `r` falls in bin `round(r / w)`.
    pub centers: Vec<f64>,
    pub stayers: Vec<f64>,
    pub leavers: Vec<f64>,
    pub n_stayers: usize,
    pub n_leavers: usize,
    /// Centre of the first bin where the leaver frequency exceeds the stayer
    /// frequency.
    pub crossing: Option<f64>,
}

/// Normalized histograms of ponzi-buyer ratios for suppliers that stayed
/// hedge (`true`) and those that left (`false`). An empty subgroup yields an
/// all-zero histogram.
pub fn transition_histogram(ratios: &[(f64, bool)], bin_width: f64) -> Result<TransitionHistogram> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(GrowthError::InvalidBinWidth(bin_width));
    }
    if ratios.is_empty() {
        return Err(GrowthError::Empty);
    }
    if let Some(&(r, _)) = ratios.iter().find(|(r, _)| !(0.0..=1.0).contains(r)) {
        return Err(GrowthError::InvalidRatio(r));
    }
    let n_bins = (1.0 / bin_width).round() as usize + 1;
    let bin = |r: f64| ((r / bin_width).round() as usize).min(n_bins - 1);
    let mut stay = vec![0usize; n_bins];
    let mut leave = vec![0usize; n_bins];
    for &(r, stayed) in ratios {
        if stayed {
            stay[bin(r)] += 1;
        } else {
            leave[bin(r)] += 1;
        }
    }
    let normalize = |counts: &[usize]| -> (Vec<f64>, usize) {
        let total: usize = counts.iter().sum();
        let freq = counts.iter().map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect();
        (freq, total)
    };
    let (stayers, n_stayers) = normalize(&stay);
    let (leavers, n_leavers) = normalize(&leave);
    let centers: Vec<f64> = (0..n_bins).map(|k| (k as f64 * bin_width * 1e12).round() / 1e12).collect();
    let crossing = (0..n_bins).find(|&k| leavers[k] > stayers[k]).map(|k| centers[k]);
    Ok(TransitionHistogram { bin_width, centers, stayers, leavers, n_stayers, n_leavers, crossing })
}

/// Pair counts by quadrant of `(estimated - 1, realized - 1)`; pairs on an axis
/// are counted separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QuadrantCounts {
    pub first: usize,
    /// Estimated below 1, realized above 1.
    pub second: usize,
    pub third: usize,
    pub fourth: usize,
    pub on_axis: usize,
}

pub fn quadrant_counts(pairs: &[GrowthPair]) -> QuadrantCounts {
    let mut q = QuadrantCounts::default();
    for p in pairs {
        let (x, y) = (p.estimated - 1.0, p.realized - 1.0);
        match (x.partial_cmp(&0.0), y.partial_cmp(&0.0)) {
            (Some(std::cmp::Ordering::Greater), Some(std::cmp::Ordering::Greater)) => q.first += 1,
            (Some(std::cmp::Ordering::Less), Some(std::cmp::Ordering::Greater)) => q.second += 1,
            (Some(std::cmp::Ordering::Less), Some(std::cmp::Ordering::Less)) => q.third += 1,
            (Some(std::cmp::Ordering::Greater), Some(std::cmp::Ordering::Less)) => q.fourth += 1,
            _ => q.on_axis += 1,
        }
    }
    q
}
