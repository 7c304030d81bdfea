//! Firm records and the hedge / speculative / ponzi classification.
//!
//! A firm is hedge when its operating profit covers the bank loans falling due
//! (`EBIT >= BL`), speculative when it only covers its financial costs
//! (`EBTDA >= FC`), and ponzi otherwise. Ties are inclusive on the hedge and
//! speculative side; ponzi is the strict residual.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FirmError {
    #[error("firm {firm_id} ({year}): missing field `{field}`")]
    MissingField {
        firm_id: String,
        year: i32,
        field: &'static str,
    },
    #[error("firm {firm_id} ({year}): field `{field}` is not finite")]
    NonFinite {
        firm_id: String,
        year: i32,
        field: &'static str,
    },
    #[error("resilience undefined for non-positive debt {debt}")]
    NonPositiveDebt { debt: f64 },
    #[error("unknown Minsky status `{0}`")]
    UnknownStatus(String),
}

/// One firm-year of balance-sheet aggregates.
///
/// Monetary fields are optional because the ingestion CSV allows empty cells;
/// operations that need a field report it as missing instead of defaulting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmRecord {
    pub firm_id: String,
    pub year: i32,
    pub ebit: Option<f64>,
    pub bank_loans: Option<f64>,
    pub ebtda: Option<f64>,
    pub financial_costs: Option<f64>,
    pub sales: Option<f64>,
    pub purchases: Option<f64>,
    pub sector: String,
}

impl FirmRecord {
    /// A record with every monetary field populated.
    #[allow(clippy::too_many_arguments)]
    pub fn complete(
        firm_id: impl Into<String>,
        year: i32,
        ebit: f64,
        bank_loans: f64,
        ebtda: f64,
        financial_costs: f64,
        sales: f64,
        purchases: f64,
        sector: impl Into<String>,
    ) -> Self {
        Self {
            firm_id: firm_id.into(),
            year,
            ebit: Some(ebit),
            bank_loans: Some(bank_loans),
            ebtda: Some(ebtda),
            financial_costs: Some(financial_costs),
            sales: Some(sales),
            purchases: Some(purchases),
            sector: sector.into(),
        }
    }

    /// Reads a field, failing when it is absent or non-finite.
    pub fn require(&self, field: &'static str) -> Result<f64, FirmError> {
        let value = match field {
            "ebit" => self.ebit,
            "bank_loans" => self.bank_loans,
            "ebtda" => self.ebtda,
            "financial_costs" => self.financial_costs,
            "sales" => self.sales,
            "purchases" => self.purchases,
            other => panic!("FirmRecord has no field `{other}`"),
        };
        match value {
            None => Err(FirmError::MissingField {
                firm_id: self.firm_id.clone(),
                year: self.year,
                field,
            }),
            Some(v) if !v.is_finite() => Err(FirmError::NonFinite {
                firm_id: self.firm_id.clone(),
                year: self.year,
                field,
            }),
            Some(v) => Ok(v),
        }
    }

    /// `EBIT / BL`, when both components are strictly positive.
    pub fn ebit_to_loans(&self) -> Option<f64> {
        positive_ratio(self.ebit, self.bank_loans)
    }

    /// `EBTDA / FC`, when both components are strictly positive.
    pub fn ebtda_to_costs(&self) -> Option<f64> {
        positive_ratio(self.ebtda, self.financial_costs)
    }
}

fn positive_ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    match (num, den) {
        (Some(n), Some(d)) if n > 0.0 && d > 0.0 && n.is_finite() && d.is_finite() => {
            let r = n / d;
            (r.is_finite() && r > 0.0).then_some(r)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MinskyStatus {
    Hedge,
    Speculative,
    Ponzi,
}

impl MinskyStatus {
    pub const ALL: [MinskyStatus; 3] = [Self::Hedge, Self::Speculative, Self::Ponzi];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hedge => "hedge",
            Self::Speculative => "speculative",
            Self::Ponzi => "ponzi",
        }
    }
}

impl fmt::Display for MinskyStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MinskyStatus {
    type Err = FirmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hedge" | "h" => Ok(Self::Hedge),
            "speculative" | "s" => Ok(Self::Speculative),
            "ponzi" | "p" => Ok(Self::Ponzi),
            _ => Err(FirmError::UnknownStatus(s.to_string())),
        }
    }
}

/// Classifies raw aggregates. The decision order is hedge, then speculative,
/// then ponzi.
pub fn classify_values(ebit: f64, bank_loans: f64, ebtda: f64, financial_costs: f64) -> MinskyStatus {
    if ebit >= bank_loans {
        MinskyStatus::Hedge
    } else if ebtda >= financial_costs {
        MinskyStatus::Speculative
    } else {
        MinskyStatus::Ponzi
    }
}

/// Classifies a record. All four aggregates must be present, even when the
/// hedge test alone decides the outcome.
pub fn classify(record: &FirmRecord) -> Result<MinskyStatus, FirmError> {
    let ebit = record.require("ebit")?;
    let bank_loans = record.require("bank_loans")?;
    let ebtda = record.require("ebtda")?;
    let financial_costs = record.require("financial_costs")?;
    Ok(classify_values(ebit, bank_loans, ebtda, financial_costs))
}

/// Income-to-debt ratio, the firm's tolerance to the interest rate.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Resilience(pub f64);

impl Resilience {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn resilience(income: f64, debt: f64) -> Result<Resilience, FirmError> {
    if !(debt > 0.0) {
        return Err(FirmError::NonPositiveDebt { debt });
    }
    Ok(Resilience(income / debt))
}

/// True when income does not cover the interest due on `debt` at `rate`
/// (both expressed in the same period and currency).
pub fn ponzi_condition(income: f64, debt: f64, rate: f64) -> bool {
    income - debt * rate < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(ebit: f64, bl: f64, ebtda: f64, fc: f64) -> FirmRecord {
        FirmRecord::complete("f", 2007, ebit, bl, ebtda, fc, 100.0, 60.0, "Manufacturing")
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&rec(10.0, 5.0, -3.0, 99.0)).unwrap(), MinskyStatus::Hedge);
        assert_eq!(classify(&rec(3.0, 5.0, 8.0, 4.0)).unwrap(), MinskyStatus::Speculative);
        assert_eq!(classify(&rec(3.0, 5.0, 3.0, 4.0)).unwrap(), MinskyStatus::Ponzi);
        // inclusive boundary
        assert_eq!(classify(&rec(5.0, 5.0, 0.0, 9.0)).unwrap(), MinskyStatus::Hedge);
        assert_eq!(classify(&rec(1.0, 5.0, 4.0, 4.0)).unwrap(), MinskyStatus::Speculative);
    }

    #[test]
    fn zero_loans_is_hedge() {
        assert_eq!(classify(&rec(0.0, 0.0, -1.0, 2.0)).unwrap(), MinskyStatus::Hedge);
    }

    #[test]
    fn missing_field_is_named() {
        let mut r = rec(10.0, 5.0, 1.0, 1.0);
        r.financial_costs = None;
        match classify(&r) {
            Err(FirmError::MissingField { field, .. }) => assert_eq!(field, "financial_costs"),
            other => panic!("unexpected {other:?}"),
        }
        r.financial_costs = Some(f64::NAN);
        assert!(matches!(classify(&r), Err(FirmError::NonFinite { .. })));
    }

    #[test]
    fn resilience_examples() {
        assert_eq!(resilience(6.0, 3.0).unwrap().value(), 2.0);
        assert_eq!(resilience(0.0, 3.0).unwrap().value(), 0.0);
        assert!(resilience(5.0, 0.0).is_err());
        assert!(resilience(5.0, -1.0).is_err());
    }

    #[test]
    fn ponzi_condition_examples() {
        assert!(!ponzi_condition(10.0, 100.0, 0.05));
        assert!(ponzi_condition(4.0, 100.0, 0.05));
        assert!(!ponzi_condition(5.0, 100.0, 0.05));
    }

    #[test]
    fn status_round_trips_through_text() {
        for s in MinskyStatus::ALL {
            assert_eq!(s.to_string().parse::<MinskyStatus>().unwrap(), s);
        }
        assert!("bankrupt".parse::<MinskyStatus>().is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn status_rank(s: MinskyStatus) -> u8 {
            match s {
                MinskyStatus::Hedge => 0,
                MinskyStatus::Speculative => 1,
                MinskyStatus::Ponzi => 2,
            }
        }

        proptest! {
            #[test]
            fn exactly_one_condition_holds(
                ebit in -1e6f64..1e6, bl in 0f64..1e6, ebtda in -1e6f64..1e6, fc in 0f64..1e6
            ) {
                let hedge = ebit >= bl;
                let speculative = ebit < bl && ebtda >= fc;
                let ponzi = ebit < bl && ebtda < fc;
                prop_assert_eq!(hedge as u8 + speculative as u8 + ponzi as u8, 1);
                let expected = if hedge { MinskyStatus::Hedge } else if speculative { MinskyStatus::Speculative } else { MinskyStatus::Ponzi };
                prop_assert_eq!(classify_values(ebit, bl, ebtda, fc), expected);
            }

            #[test]
            fn more_costs_never_improve_status(
                ebit in -1e3f64..1e3, bl in 0f64..1e3, ebtda in -1e3f64..1e3, fc in 0f64..1e3, extra in 0f64..1e3
            ) {
                let before = classify_values(ebit, bl, ebtda, fc);
                let after = classify_values(ebit, bl, ebtda, fc + extra);
                prop_assert!(status_rank(after) >= status_rank(before));
                let richer = classify_values(ebit + extra, bl, ebtda, fc);
                prop_assert!(status_rank(richer) <= status_rank(before));
            }

            #[test]
            fn ponzi_condition_is_monotone(
                income in -1e3f64..1e3, debt in 0f64..1e3, rate in 0f64..1.0, d in 0f64..10.0
            ) {
                let base = ponzi_condition(income, debt, rate);
                if base {
                    prop_assert!(ponzi_condition(income, debt, rate + d));
                    prop_assert!(ponzi_condition(income, debt + d, rate));
                    prop_assert!(ponzi_condition(income - d, debt, rate));
                }
            }
        }
    }
}
