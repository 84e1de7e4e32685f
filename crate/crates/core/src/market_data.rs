//! Price and holdings ingestion, validation and date alignment.
//!
//! Price files are long-format CSV with header `code,date,price`. Holdings
//! files carry one disclosed holding per row under `fund,as_of,holding,weight`.
//! Instrument codes are opaque text: `000418` stays `000418`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Identifier of a fund or stock, stored verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstrumentId(String);

impl InstrumentId {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        if code.trim().is_empty() {
            return Err(Error::InvalidInstrument("empty instrument code".into()));
        }
        Ok(Self(code))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for InstrumentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn parse_date(text: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(text.trim(), DATE_FORMAT).ok()
}

pub fn format_date(date: NaiveDate) -> String {
    date.format(DATE_FORMAT).to_string()
}

/// Dated positive prices of one instrument, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    id: InstrumentId,
    observations: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    pub fn new(id: InstrumentId, observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        for w in observations.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidSeries {
                    code: id.to_string(),
                    message: format!("dates not strictly increasing at {}", format_date(w[1].0)),
                });
            }
        }
        if let Some((d, p)) = observations
            .iter()
            .find(|(_, p)| !(*p > 0.0 && p.is_finite()))
        {
            return Err(Error::InvalidSeries {
                code: id.to_string(),
                message: format!("non-positive price {p} on {}", format_date(*d)),
            });
        }
        Ok(Self { id, observations })
    }

    pub fn id(&self) -> &InstrumentId {
        &self.id
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.observations.iter().map(|(d, _)| *d)
    }

    pub fn prices(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|(_, p)| *p)
    }

    /// Restricts to the inclusive window `[from, to]`; either bound may be open.
    pub fn window(&self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> PriceSeries {
        let observations = self
            .observations
            .iter()
            .filter(|(d, _)| from.is_none_or(|f| *d >= f) && to.is_none_or(|t| *d <= t))
            .copied()
            .collect();
        PriceSeries {
            id: self.id.clone(),
            observations,
        }
    }

    fn date_range(&self) -> String {
        match (self.observations.first(), self.observations.last()) {
            (Some(a), Some(b)) => {
                format!("{}: {}..{}", self.id, format_date(a.0), format_date(b.0))
            }
            _ => format!("{}: no observations", self.id),
        }
    }
}

/// Dense dates × instruments matrix of positive prices.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    ids: Vec<InstrumentId>,
    dates: Vec<NaiveDate>,
    values: DMatrix<f64>,
}

impl AlignedPanel {
    pub fn new(
        ids: Vec<InstrumentId>,
        dates: Vec<NaiveDate>,
        values: DMatrix<f64>,
    ) -> Result<Self> {
        if values.ncols() != ids.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                actual: values.ncols(),
            });
        }
        if values.nrows() != dates.len() {
            return Err(Error::DimensionMismatch {
                expected: dates.len(),
                actual: values.nrows(),
            });
        }
        if dates.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                actual: dates.len(),
            });
        }
        if ids.is_empty() {
            return Err(Error::Alignment {
                message: "panel has no instruments".into(),
            });
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Alignment {
                message: "panel dates not strictly increasing".into(),
            });
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id) {
                return Err(Error::Alignment {
                    message: format!("instrument {id} appears twice"),
                });
            }
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Numeric("panel contains a non-positive price".into()));
        }
        Ok(Self { ids, dates, values })
    }

    pub fn ids(&self) -> &[InstrumentId] {
        &self.ids
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_instruments(&self) -> usize {
        self.ids.len()
    }

    pub fn column_index(&self, id: &InstrumentId) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// Sub-panel holding `ids` in the given order.
    pub fn select(&self, ids: &[InstrumentId]) -> Result<AlignedPanel> {
        let cols = ids
            .iter()
            .map(|id| {
                self.column_index(id)
                    .ok_or_else(|| Error::MissingInstrument(id.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let values = self.values.select_columns(cols.iter());
        AlignedPanel::new(ids.to_vec(), self.dates.clone(), values)
    }

    /// Sub-panel over rows `start..end`.
    pub fn rows(&self, start: usize, end: usize) -> Result<AlignedPanel> {
        if start > end || end > self.n_dates() {
            return Err(Error::InvalidParameter(format!(
                "row range {start}..{end} outside panel of {} rows",
                self.n_dates()
            )));
        }
        let values = self.values.rows(start, end - start).into_owned();
        AlignedPanel::new(self.ids.clone(), self.dates[start..end].to_vec(), values)
    }

    /// Each column as a standalone series.
    pub fn to_series(&self) -> Vec<PriceSeries> {
        (0..self.n_instruments())
            .map(|j| PriceSeries {
                id: self.ids[j].clone(),
                observations: self
                    .dates
                    .iter()
                    .copied()
                    .zip(self.values.column(j).iter().copied())
                    .collect(),
            })
            .collect()
    }
}

/// A fund's disclosed top holdings as of a filing date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldingsRecord {
    pub fund: InstrumentId,
    pub as_of: NaiveDate,
    pub holdings: Vec<InstrumentId>,
    /// Carried for reporting only; estimation never uses them.
    pub disclosed_weights: Option<Vec<f64>>,
}

impl HoldingsRecord {
    pub fn new(
        fund: InstrumentId,
        as_of: NaiveDate,
        holdings: Vec<InstrumentId>,
        disclosed_weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if holdings.is_empty() {
            return Err(Error::EmptyHoldings);
        }
        let mut seen = HashSet::new();
        for h in &holdings {
            if !seen.insert(h) {
                return Err(Error::DuplicateHolding(h.to_string()));
            }
        }
        if let Some(w) = &disclosed_weights {
            if w.len() != holdings.len() {
                return Err(Error::DimensionMismatch {
                    expected: holdings.len(),
                    actual: w.len(),
                });
            }
            if let Some(bad) = w.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::InvalidParameter(format!(
                    "disclosed weight {bad} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            fund,
            as_of,
            holdings,
            disclosed_weights,
        })
    }
}

fn csv_reader<R: Read>(content: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(content)
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Parses a `code,date,price` CSV into one series per code, in order of
/// first appearance, each sorted by date.
pub fn load_price_csv<R: Read>(content: R) -> Result<Vec<PriceSeries>> {
    let mut reader = csv_reader(content);
    check_header(&mut reader, &["code", "date", "price"])?;

    let mut order: Vec<InstrumentId> = Vec::new();
    let mut rows: HashMap<InstrumentId, Vec<(NaiveDate, f64, u64)>> = HashMap::new();

    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record_line(&record);
        if record.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let id = InstrumentId::new(&record[0]).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let date = parse_date(&record[1]).ok_or_else(|| Error::Parse {
            line,
            message: format!("invalid date `{}` (expected YYYY-MM-DD)", &record[1]),
        })?;
        let price: f64 = record[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid price `{}`", &record[2]),
        })?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(Error::NonPositivePrice {
                line,
                code: id.to_string(),
                date: format_date(date),
                price,
            });
        }
        rows.entry(id.clone())
            .or_insert_with(|| {
                order.push(id.clone());
                Vec::new()
            })
            .push((date, price, line));
    }

    order
        .into_iter()
        .map(|id| {
            let mut obs = rows.remove(&id).unwrap_or_default();
            obs.sort_by_key(|(d, _, line)| (*d, *line));
            if let Some(w) = obs.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::DuplicateObservation {
                    line: w[1].2,
                    code: id.to_string(),
                    date: format_date(w[1].0),
                });
            }
            let observations = obs.into_iter().map(|(d, p, _)| (d, p)).collect();
            PriceSeries::new(id, observations)
        })
        .collect()
}

/// Writes series in the `code,date,price` schema. Prices use the shortest
/// decimal text that parses back to the same `f64`.
pub fn write_price_csv<W: Write>(series: &[PriceSeries], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io {
        path: "<price csv>".into(),
        source: e.into(),
    };
    writer.write_record(["code", "date", "price"]).map_err(io)?;
    for s in series {
        for (d, p) in s.observations() {
            writer
                .write_record([s.id().as_str(), &format_date(*d), &p.to_string()])
                .map_err(io)?;
        }
    }
    writer.flush().map_err(|e| Error::Io {
        path: "<price csv>".into(),
        source: e,
    })
}

/// Inner join on dates. Column order follows the input order.
pub fn align(series: &[PriceSeries]) -> Result<AlignedPanel> {
    if series.is_empty() {
        return Err(Error::Alignment {
            message: "no series to align".into(),
        });
    }
    if let Some(empty) = series.iter().find(|s| s.is_empty()) {
        return Err(Error::Alignment {
            message: format!("series {} has no observations", empty.id()),
        });
    }

    let mut common: BTreeSet<NaiveDate> = series[0].dates().collect();
    for s in &series[1..] {
        let dates: BTreeSet<NaiveDate> = s.dates().collect();
        common = common.intersection(&dates).copied().collect();
    }
    let ranges = || {
        series
            .iter()
            .map(|s| s.date_range())
            .collect::<Vec<_>>()
            .join("; ")
    };
    if common.is_empty() {
        return Err(Error::Alignment {
            message: format!("no common dates across series ({})", ranges()),
        });
    }
    if common.len() < 2 {
        return Err(Error::Alignment {
            message: format!(
                "only {} common date across series ({})",
                common.len(),
                ranges()
            ),
        });
    }

    let dates: Vec<NaiveDate> = common.into_iter().collect();
    let mut values = DMatrix::zeros(dates.len(), series.len());
    for (j, s) in series.iter().enumerate() {
        let obs = s.observations();
        // Both sides are sorted, so a single forward scan suffices.
        let mut k = 0;
        for (i, d) in dates.iter().enumerate() {
            while obs[k].0 < *d {
                k += 1;
            }
            values[(i, j)] = obs[k].1;
        }
    }
    AlignedPanel::new(
        series.iter().map(|s| s.id().clone()).collect(),
        dates,
        values,
    )
}

/// Parses a `fund,as_of,holding,weight` CSV. Every row must name the same
/// fund and filing date; weights are either all present or all blank.
pub fn load_holdings<R: Read>(content: R) -> Result<HoldingsRecord> {
    let mut reader = csv_reader(content);
    check_header(&mut reader, &["fund", "as_of", "holding", "weight"])?;

    let mut fund: Option<(InstrumentId, NaiveDate)> = None;
    let mut holdings = Vec::new();
    let mut weights: Vec<Option<f64>> = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record_line(&record);
        if record.len() != 3 && record.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let parse_err = |message: String| Error::Parse { line, message };
        let fund_id = InstrumentId::new(&record[0]).map_err(|e| parse_err(e.to_string()))?;
        let as_of = parse_date(&record[1])
            .ok_or_else(|| parse_err(format!("invalid date `{}`", &record[1])))?;
        match &fund {
            None => fund = Some((fund_id, as_of)),
            Some((f, d)) if *f == fund_id && *d == as_of => {}
            Some((f, d)) => {
                return Err(parse_err(format!(
                    "row for {fund_id} as of {} differs from first row ({f} as of {})",
                    format_date(as_of),
                    format_date(*d)
                )))
            }
        }
        let holding = InstrumentId::new(&record[2]).map_err(|e| parse_err(e.to_string()))?;
        if holdings.contains(&holding) {
            return Err(Error::DuplicateHolding(holding.to_string()));
        }
        holdings.push(holding);
        let weight = match record.get(3).unwrap_or("") {
            "" => None,
            w => Some(
                w.parse::<f64>()
                    .map_err(|_| parse_err(format!("invalid weight `{w}`")))?,
            ),
        };
        weights.push(weight);
    }

    let (fund, as_of) = fund.ok_or(Error::EmptyHoldings)?;
    let disclosed_weights = if weights.iter().all(Option::is_none) {
        None
    } else if weights.iter().all(Option::is_some) {
        Some(weights.into_iter().flatten().collect())
    } else {
        return Err(Error::Parse {
            line: 0,
            message: "weight column must be filled for every holding or for none".into(),
        });
    };
    HoldingsRecord::new(fund, as_of, holdings, disclosed_weights)
}
