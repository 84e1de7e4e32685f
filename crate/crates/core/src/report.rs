//! Machine-readable run reports and the plot-ready CSV files written next
//! to them.
//!
//! Reports are JSON. Every floating-point number is rounded to 12
//! significant digits before it is written, so a report read back and
//! written again is byte-identical. Series never appear inline; they go to
//! sibling CSV files named in the report.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::backtest::TrackingStats;
use crate::diagnostics::ResidualDiagnostics;
use crate::error::{Error, Result};
use crate::logprice::SimulationParams;
use crate::market_data::{format_date, InstrumentId};
use crate::strategies::{PortfolioPlan, Position};

pub const SCHEMA_VERSION: u32 = 1;
pub const SIGNIFICANT_DIGITS: usize = 12;

/// JSON Schema for [`SCHEMA_VERSION`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.v1.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Select,
    Replicate,
    Construct,
    Sweep,
    Simulate,
    Backtest,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: Command,
    /// Seconds since the Unix epoch; the only field allowed to differ
    /// between otherwise identical runs.
    pub timestamp: u64,
    /// SHA-256 over the input files, in argument order.
    pub inputs_digest: String,
    pub parameters: BTreeMap<String, String>,
    pub result: ReportPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportPayload {
    Selection(SelectionSummary),
    Plan(PlanSummary),
    Sweep(SweepSummary),
    Simulation(SimulationSummary),
    Backtest(BacktestSummary),
    Validation(ValidationSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub n_dates: usize,
    pub first_date: String,
    pub last_date: String,
}

impl Window {
    pub fn from_dates(dates: &[NaiveDate]) -> Self {
        Self {
            n_dates: dates.len(),
            first_date: dates.first().map(|d| format_date(*d)).unwrap_or_default(),
            last_date: dates.last().map(|d| format_date(*d)).unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundSummary {
    pub fund: InstrumentId,
    pub beta: f64,
    pub intercept: Option<f64>,
    pub r_squared: f64,
    pub diagnostics: ResidualDiagnostics,
    pub residual_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub window: Window,
    pub funds: Vec<FundSummary>,
    pub ranking: Vec<InstrumentId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub window: Window,
    pub target_rate: Option<f64>,
    pub weights: Vec<Position>,
    pub intercept: f64,
    pub sum_positive: f64,
    pub cash_fraction: f64,
    pub margin_fraction: f64,
    pub r_squared: f64,
    pub condition_number: f64,
    pub diagnostics: ResidualDiagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disclosed_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingStats>,
    pub files: Vec<String>,
}

impl PlanSummary {
    pub fn from_plan(plan: &PortfolioPlan, files: Vec<String>) -> Self {
        Self {
            window: Window::from_dates(&plan.dates),
            target_rate: plan.target_rate,
            weights: plan.weights.clone(),
            intercept: plan.intercept,
            sum_positive: plan.cash.sum_positive,
            cash_fraction: plan.cash.cash_fraction,
            margin_fraction: plan.cash.margin_fraction,
            r_squared: plan.r_squared,
            condition_number: plan.condition_number,
            diagnostics: plan.diagnostics,
            disclosed_weights: None,
            tracking: None,
            files,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub plans: Vec<PlanSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub params: SimulationParams,
    pub max_abs_deviation: f64,
    pub max_rebalanced_error: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestSummary {
    pub plan: PlanSummary,
    pub capital: f64,
    pub cash_rate: f64,
    pub final_synthetic_nav: f64,
    pub final_buy_and_hold_nav: f64,
    /// Largest `|ln(synthetic) - ln(buy_and_hold)|` over the window.
    pub max_rebalancing_drift: f64,
    pub synthetic_tracking: TrackingStats,
    pub buy_and_hold_tracking: TrackingStats,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub holdout_fraction: f64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub coefficients: Vec<Position>,
    pub intercept: Option<f64>,
    pub in_sample: ResidualDiagnostics,
    pub out_of_sample: ResidualDiagnostics,
    pub file: String,
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_significant(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

fn check_finite(v: &Value) -> Result<()> {
    // serde_json writes non-finite floats as null, which would not read back.
    match v {
        Value::Null => Err(Error::Numeric("report contains a non-finite value".into())),
        Value::Array(items) => items.iter().try_for_each(check_finite),
        Value::Object(map) => map
            .iter()
            .filter(|(k, _)| !OPTIONAL_FIELDS.contains(&k.as_str()))
            .try_for_each(|(_, v)| check_finite(v)),
        _ => Ok(()),
    }
}

const OPTIONAL_FIELDS: &[&str] = &["intercept", "target_rate"];

impl RunReport {
    pub fn new(
        command: Command,
        timestamp: u64,
        inputs_digest: String,
        parameters: BTreeMap<String, String>,
        result: ReportPayload,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            timestamp,
            inputs_digest,
            parameters,
            result,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        check_finite(&value)?;
        round_value(&mut value);
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: RunReport = serde_json::from_str(text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported schema version {}",
                report.schema_version
            )));
        }
        Ok(report)
    }
}

/// SHA-256 over `(length, bytes)` of each input, hex encoded.
pub fn inputs_digest<B: AsRef<[u8]>>(inputs: &[B]) -> String {
    let mut hasher = Sha256::new();
    for bytes in inputs {
        let bytes = bytes.as_ref();
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    hex::encode(hasher.finalize())
}

/// File-name-safe form of an instrument code.
pub fn file_stem(code: &str) -> String {
    code.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes a CSV with a date column followed by numeric columns.
pub fn write_dated_columns<W: Write>(
    out: W,
    header: &[&str],
    dates: &[NaiveDate],
    columns: &[&[f64]],
) -> Result<()> {
    let io = |e: csv::Error| Error::Io {
        path: "<csv output>".into(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io)?;
    for (i, d) in dates.iter().enumerate() {
        let mut row = vec![format_date(*d)];
        row.extend(columns.iter().map(|c| c[i].to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<csv output>".into(),
        source: e,
    })
}

pub fn create_file(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}
