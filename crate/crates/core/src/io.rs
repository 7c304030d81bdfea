//! CSV ingestion with row-level validation, and CSV/JSON emission.
//!
//! Readers check the header against a fixed schema, then validate every row.
//! Invalid rows are rejected with their line number and a reason; if more than
//! `max_invalid_fraction` of the rows are invalid the whole file is refused.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::TrajectoryPoint;
use crate::estimation::{Period, RateSeries};
use crate::firm_model::FirmRecord;
use crate::network::{CascadeReport, NetworkError, TradeNetwork};
use crate::scenario::PopulationUpdate;

pub const FIRM_HEADER: &[&str] = &[
    "firm_id",
    "year",
    "ebit",
    "bank_loans",
    "ebtda",
    "financial_costs",
    "sales",
    "purchases",
    "sector",
];
pub const EDGE_HEADER: &[&str] = &["buyer_id", "supplier_id", "weight"];
pub const RATE_HEADER: &[&str] = &["period", "rate"];
pub const POPULATION_HEADER: &[&str] = &["year", "n_tot", "n_hedge", "n_ponzi"];

pub const DEFAULT_MAX_INVALID_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema mismatch: expected header `{expected}`, found `{found}`")]
    Schema { expected: String, found: String },
    #[error("{invalid} of {total} rows invalid, above the {max_fraction} limit; first: line {}: {}", first.line, first.reason)]
    TooManyInvalid {
        invalid: usize,
        total: usize,
        max_fraction: f64,
        first: RowError,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("write: {0}")]
    Write(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    pub max_invalid_fraction: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { max_invalid_fraction: DEFAULT_MAX_INVALID_FRACTION }
    }
}

/// Accepted rows plus the rejected ones and any warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub rows: Vec<T>,
    pub rejected: Vec<RowError>,
    pub warnings: Vec<String>,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })
}

/// Shared reader: schema check, per-row deserialization and validation, and
/// the invalid-fraction limit.
fn read_rows<T, U, R>(
    reader: R,
    header: &[&str],
    opts: IngestOptions,
    mut validate: impl FnMut(T) -> std::result::Result<U, String>,
) -> Result<Dataset<U>>
where
    T: DeserializeOwned,
    R: Read,
{
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
    let found = rdr.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(IngestError::Schema { expected: header.join(","), found: found.iter().collect::<Vec<_>>().join(",") });
    }
    let mut out = Dataset { rows: Vec::new(), rejected: Vec::new(), warnings: Vec::new() };
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(line, |p| p.line());
                let parsed = if record.len() != header.len() {
                    Err(format!("expected {} fields, found {}", header.len(), record.len()))
                } else {
                    record.deserialize::<T>(Some(&found)).map_err(|e| deser_reason(&e)).and_then(&mut validate)
                };
                match parsed {
                    Ok(row) => out.rows.push(row),
                    Err(reason) => out.rejected.push(RowError { line, reason }),
                }
            }
            Err(e) => {
                out.rejected.push(RowError { line, reason: e.to_string() });
                if !matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) {
                    return Err(e.into());
                }
            }
        }
    }
    let total = out.rows.len() + out.rejected.len();
    if total == 0 {
        out.warnings.push("file has a header but no data rows".to_string());
    }
    let invalid = out.rejected.len();
    if invalid > 0 && invalid as f64 > opts.max_invalid_fraction * total as f64 {
        return Err(IngestError::TooManyInvalid {
            invalid,
            total,
            max_fraction: opts.max_invalid_fraction,
            first: out.rejected[0].clone(),
        });
    }
    Ok(out)
}

fn deser_reason(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => match err.field() {
            Some(i) => format!("field {}: {}", i + 1, err.kind()),
            None => err.kind().to_string(),
        },
        _ => e.to_string(),
    }
}

fn check_firm(r: &FirmRecord) -> std::result::Result<(), String> {
    if r.firm_id.is_empty() {
        return Err("empty firm_id".into());
    }
    let fields = [
        ("ebit", r.ebit, false),
        ("bank_loans", r.bank_loans, true),
        ("ebtda", r.ebtda, false),
        ("financial_costs", r.financial_costs, true),
        ("sales", r.sales, true),
        ("purchases", r.purchases, true),
    ];
    for (name, value, non_negative) in fields {
        if let Some(v) = value {
            if !v.is_finite() {
                return Err(format!("{name} is not finite"));
            }
            if non_negative && v < 0.0 {
                return Err(format!("{name} is negative ({v})"));
            }
        }
    }
    Ok(())
}

/// Firm records. Empty cells are missing values; negative bank loans,
/// financial costs, sales or purchases and repeated `(firm_id, year)` pairs
/// are rejected.
pub fn read_firms<R: Read>(reader: R, opts: IngestOptions) -> Result<Dataset<FirmRecord>> {
    let mut seen = HashSet::new();
    read_rows(reader, FIRM_HEADER, opts, |r: FirmRecord| {
        check_firm(&r)?;
        if !seen.insert((r.firm_id.clone(), r.year)) {
            return Err(format!("duplicate record for firm {} in {}", r.firm_id, r.year));
        }
        Ok(r)
    })
}

pub fn read_firms_path(path: &Path, opts: IngestOptions) -> Result<Dataset<FirmRecord>> {
    read_firms(open(path)?, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRow {
    pub buyer_id: String,
    pub supplier_id: String,
    pub weight: f64,
}

pub fn read_edges<R: Read>(reader: R, opts: IngestOptions) -> Result<Dataset<EdgeRow>> {
    read_rows(reader, EDGE_HEADER, opts, |e: EdgeRow| {
        if e.buyer_id.is_empty() || e.supplier_id.is_empty() {
            Err("empty firm id".to_string())
        } else if e.buyer_id == e.supplier_id {
            Err(format!("self-loop on {}", e.buyer_id))
        } else if !(e.weight.is_finite() && e.weight > 0.0) {
            Err(format!("weight must be positive, got {}", e.weight))
        } else {
            Ok(e)
        }
    })
}

pub fn read_edges_path(path: &Path, opts: IngestOptions) -> Result<Dataset<EdgeRow>> {
    read_edges(open(path)?, opts)
}

pub fn network_from_rows(rows: &[EdgeRow]) -> std::result::Result<TradeNetwork, NetworkError> {
    TradeNetwork::from_edges(rows.iter().map(|e| (e.buyer_id.as_str(), e.supplier_id.as_str(), e.weight)))
}

pub fn network_rows(net: &TradeNetwork) -> Vec<EdgeRow> {
    net.edges()
        .map(|(b, s, w)| EdgeRow { buyer_id: net.id(b).to_string(), supplier_id: net.id(s).to_string(), weight: w })
        .collect()
}

#[derive(Debug, Deserialize)]
struct RateRow {
    period: String,
    rate: f64,
}

/// Rate series; any invalid row is fatal because the series must be complete.
pub fn read_rates<R: Read>(reader: R) -> Result<RateSeries> {
    let strict = IngestOptions { max_invalid_fraction: 0.0 };
    let data = read_rows(reader, RATE_HEADER, strict, |r: RateRow| {
        let p = Period::from_str(&r.period).map_err(|e| e.to_string())?;
        Ok((p, r.rate))
    })?;
    RateSeries::new(data.rows).map_err(|e| IngestError::Invalid(e.to_string()))
}

pub fn read_rates_path(path: &Path) -> Result<RateSeries> {
    read_rates(open(path)?)
}

pub fn read_population<R: Read>(reader: R, opts: IngestOptions) -> Result<Dataset<PopulationUpdate>> {
    read_rows(reader, POPULATION_HEADER, opts, |p: PopulationUpdate| p.validate().map(|_| p))
}

pub fn read_population_path(path: &Path, opts: IngestOptions) -> Result<Dataset<PopulationUpdate>> {
    read_population(open(path)?, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// Writes rows as CSV with a header, or as a pretty JSON array.
pub fn write_rows<T: Serialize, W: Write>(mut writer: W, rows: &[T], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut writer, rows)?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Like [`write_rows`], but writes the header even when `rows` is empty.
pub fn write_rows_with_header<T: Serialize, W: Write>(writer: W, header: &[&str], rows: &[T], format: Format) -> Result<()> {
    if format == Format::Csv && rows.is_empty() {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(header)?;
        w.flush()?;
        return Ok(());
    }
    write_rows(writer, rows, format)
}

pub fn write_json<T: Serialize + ?Sized, W: Write>(mut writer: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub const TRAJECTORY_HEADER: &[&str] =
    &["t", "regime", "rate", "loans_fraction", "ponzi_density", "n_tot", "n_loans", "n_ponzi", "clamped"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: u32,
    pub regime: String,
    pub rate: f64,
    pub loans_fraction: f64,
    pub ponzi_density: f64,
    pub n_tot: u64,
    pub n_loans: u64,
    pub n_ponzi: u64,
    pub clamped: bool,
}

impl From<&TrajectoryPoint> for TrajectoryRow {
    fn from(p: &TrajectoryPoint) -> Self {
        let s = &p.state;
        Self {
            t: s.t,
            regime: p.regime.to_string(),
            rate: s.rate,
            loans_fraction: s.loans_fraction,
            ponzi_density: s.ponzi_density,
            n_tot: s.n_tot,
            n_loans: s.n_loans,
            n_ponzi: s.n_ponzi,
            clamped: s.clamped,
        }
    }
}

pub fn trajectory_rows(points: &[TrajectoryPoint]) -> Vec<TrajectoryRow> {
    points.iter().map(TrajectoryRow::from).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeRow {
    pub round: usize,
    pub new_failures: usize,
    pub cumulative_failures: usize,
}

pub fn cascade_rows(report: &CascadeReport) -> Vec<CascadeRow> {
    report
        .rows()
        .into_iter()
        .map(|(round, new_failures, cumulative_failures)| CascadeRow { round, new_failures, cumulative_failures })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "firm_id,year,ebit,bank_loans,ebtda,financial_costs,sales,purchases,sector\n";

    fn lenient() -> IngestOptions {
        IngestOptions { max_invalid_fraction: 1.0 }
    }

    #[test]
    fn header_only_gives_empty_dataset_with_warning() {
        let d = read_firms(HEADER.as_bytes(), IngestOptions::default()).unwrap();
        assert!(d.rows.is_empty());
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn missing_cells_and_rejections() {
        let csv = format!(
            "{HEADER}a,2007,10,5,3,1,100,60,Manufacturing\n\
             b,2007,,5,3,1,100,60,Manufacturing\n\
             c,2007,10,-5,3,1,100,60,Manufacturing\n\
             a,2007,1,1,1,1,1,1,Manufacturing\n\
             d,20x7,1,1,1,1,1,1,Manufacturing\n\
             e,2007,1,1,1\n"
        );
        let d = read_firms(csv.as_bytes(), lenient()).unwrap();
        assert_eq!(d.rows.len(), 2);
        assert_eq!(d.rows[1].ebit, None);
        let lines: Vec<u64> = d.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![4, 5, 6, 7]);
        assert!(d.rejected[0].reason.contains("bank_loans"), "{}", d.rejected[0].reason);
        assert!(d.rejected[1].reason.contains("duplicate"));
    }

    #[test]
    fn invalid_share_limit() {
        let mut csv = HEADER.to_string();
        for k in 0..199 {
            csv.push_str(&format!("f{k},2007,1,1,1,1,1,1,M\n"));
        }
        csv.push_str("bad,2007,1,-1,1,1,1,1,M\n");
        let d = read_firms(csv.as_bytes(), IngestOptions::default()).unwrap();
        assert_eq!((d.rows.len(), d.rejected.len()), (199, 1));
        csv.push_str("bad2,2007,1,-1,1,1,1,1,M\n");
        csv.push_str("bad3,2007,1,-1,1,1,1,1,M\n");
        assert!(matches!(
            read_firms(csv.as_bytes(), IngestOptions::default()),
            Err(IngestError::TooManyInvalid { invalid: 3, total: 202, .. })
        ));
    }

    #[test]
    fn schema_mismatch() {
        let err = read_firms("firm,year\nx,1\n".as_bytes(), IngestOptions::default()).unwrap_err();
        assert!(matches!(err, IngestError::Schema { .. }));
        assert!(read_edges("".as_bytes(), IngestOptions::default()).is_err());
    }

    #[test]
    fn firm_round_trip() {
        let recs = vec![
            FirmRecord::complete("a", 2007, 10.5, 5.0, -3.0, 1.0, 100.0, 60.0, "Manufacturing"),
            FirmRecord { ebit: None, ..FirmRecord::complete("b", 2008, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, "X") },
        ];
        let mut buf = Vec::new();
        write_rows(&mut buf, &recs, Format::Csv).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with(&HEADER[..HEADER.len() - 1]));
        let back = read_firms(buf.as_slice(), IngestOptions::default()).unwrap();
        assert_eq!(back.rows, recs);
    }

    #[test]
    fn edges_and_rates() {
        let csv = "buyer_id,supplier_id,weight\na,b,2\na,b,3\nc,c,1\nd,b,0\n";
        let d = read_edges(csv.as_bytes(), lenient()).unwrap();
        assert_eq!(d.rows.len(), 2);
        assert_eq!(d.rejected.len(), 2);
        let net = network_from_rows(&d.rows).unwrap();
        assert_eq!(net.edge_count(), 1);
        assert_eq!(network_rows(&net)[0].weight, 5.0);

        let rates = read_rates("period,rate\n2007-01,5.5\n2007-02,5.6\n".as_bytes()).unwrap();
        assert_eq!(rates.len(), 2);
        assert!(read_rates("period,rate\n2007-01,5.5\n2007-01,5.6\n".as_bytes()).is_err());
        assert!(read_rates("period,rate\n2007-13,5.5\n".as_bytes()).is_err());
    }

    #[test]
    fn population_rows() {
        let csv = "year,n_tot,n_hedge,n_ponzi\n2002,469893,232432,83665\n2003,10,8,5\n";
        let d = read_population(csv.as_bytes(), lenient()).unwrap();
        assert_eq!(d.rows.len(), 1);
        assert_eq!(d.rejected[0].line, 3);
    }

    #[test]
    fn json_output_is_an_array() {
        let rows = vec![CascadeRow { round: 0, new_failures: 1, cumulative_failures: 1 }];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows, Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["cumulative_failures"], 1);
        let mut buf = Vec::new();
        write_rows_with_header::<CascadeRow, _>(&mut buf, &["round", "new_failures", "cumulative_failures"], &[], Format::Csv)
            .unwrap();
        assert_eq!(buf, b"round,new_failures,cumulative_failures\n");
    }
}
