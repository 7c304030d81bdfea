//! Minsky crisis-accelerator toolkit.
//!
//! The crate couples three scales of a credit economy:
//!
//! - firm level: [`firm_model`] classifies balance-sheet records as hedge,
//!   speculative or ponzi;
//! - macro level: [`dynamics`] iterates the two-regime cobweb map between the
//!   interest rate and the loans fraction / ponzi density, and
//!   [`estimation`] fits its exponents and bounds from firm records;
//! - network level: [`network`] runs failure and bootstrap contagion on a
//!   directed trade-credit graph, and [`growth_analysis`] compares supplier
//!   growth with the growth of their buyers.
//!
//! [`scenario`] ties these together into reproducible, seeded runs and
//! [`io`] reads and writes the CSV/JSON formats used by the `minsky` CLI.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod firm_model;
pub mod growth_analysis;
pub mod io;
pub mod network;
pub mod ols;
pub mod rng;
pub mod scenario;

pub use dynamics::{ModelParams, Regime, StabilityClass, Stability, SystemState};
pub use error::{Error, Result};
pub use estimation::FitResult;
pub use firm_model::{classify, FirmRecord, MinskyStatus};
pub use network::{CascadeReport, TradeNetwork};
