//! NAV paths for a [`PortfolioPlan`], tracking statistics, and
//! chronological holdout validation.
//!
//! Two NAVs are produced for the same plan. The synthetic NAV is the
//! log-linear combination the regression fits, `exp(Σ β_i Δln P_i)`, which
//! implicitly rebalances every day. The buy-and-hold NAV fixes share counts
//! at inception, locks short proceeds in the account and holds the
//! remainder in cash. The gap between them is the rebalancing drift.

use std::io::Write;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagnose, ResidualDiagnostics};
use crate::error::{Error, Result};
use crate::logprice::log_transform;
use crate::market_data::{align, format_date, AlignedPanel, PriceSeries};
use crate::ols::{fit, predict, FitOptions, RegressionFit};
use crate::strategies::PortfolioPlan;

pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.10;
const MIN_TRAIN_ROWS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct NavSeries {
    pub dates: Vec<NaiveDate>,
    pub nav: Vec<f64>,
    pub initial_capital: f64,
}

impl NavSeries {
    /// Writes `date,nav`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io {
            path: "nav.csv".into(),
            source: e.into(),
        };
        w.write_record(["date", "nav"]).map_err(io)?;
        for (d, v) in self.dates.iter().zip(&self.nav) {
            w.write_record([format_date(*d), v.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "nav.csv".into(),
            source: e,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingStats {
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    pub realized_annual_rate: f64,
    pub correlation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    /// Simple annual rate earned by free cash.
    pub cash_rate: f64,
    pub days_per_year: f64,
    /// When false, plans needing margin (`S > 1`) are rejected. When true,
    /// the shortfall is borrowed at `cash_rate`.
    pub allow_margin: bool,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            cash_rate: 0.0,
            days_per_year: 252.0,
            allow_margin: false,
        }
    }
}

fn check_capital(capital: f64) -> Result<()> {
    if !(capital > 0.0 && capital.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "capital must be positive, got {capital}"
        )));
    }
    Ok(())
}

fn plan_columns(plan: &PortfolioPlan, panel: &AlignedPanel) -> Result<Vec<usize>> {
    plan.weights
        .iter()
        .map(|p| {
            panel
                .column_index(&p.id)
                .ok_or_else(|| Error::MissingInstrument(p.id.to_string()))
        })
        .collect()
}

/// `nav_t = capital · exp(Σ β_i (ln P_i(t) - ln P_i(0)))`.
pub fn synthetic_nav(
    plan: &PortfolioPlan,
    panel: &AlignedPanel,
    capital: f64,
) -> Result<NavSeries> {
    check_capital(capital)?;
    let cols = plan_columns(plan, panel)?;
    let v = panel.values();
    let nav = (0..panel.n_dates())
        .map(|t| {
            let log_move: f64 = plan
                .weights
                .iter()
                .zip(&cols)
                .map(|(p, &j)| p.beta * (v[(t, j)].ln() - v[(0, j)].ln()))
                .sum();
            capital * log_move.exp()
        })
        .collect();
    Ok(NavSeries {
        dates: panel.dates().to_vec(),
        nav,
        initial_capital: capital,
    })
}

/// Literal implementation of the plan with share counts fixed at inception.
pub fn buy_and_hold_nav(
    plan: &PortfolioPlan,
    panel: &AlignedPanel,
    capital: f64,
    cfg: &BacktestConfig,
) -> Result<NavSeries> {
    check_capital(capital)?;
    if cfg.days_per_year.is_nan() || cfg.days_per_year <= 0.0 {
        return Err(Error::InvalidParameter(
            "days per year must be positive".into(),
        ));
    }
    if plan.cash.margin_fraction > 0.0 && !cfg.allow_margin {
        return Err(Error::MarginNotSupported(plan.cash.margin_fraction));
    }
    let cols = plan_columns(plan, panel)?;
    let v = panel.values();

    // Positive shares are long, negative shares are short.
    let shares: Vec<f64> = plan
        .weights
        .iter()
        .zip(&cols)
        .map(|(p, &j)| capital * p.beta / v[(0, j)])
        .collect();
    let locked_proceeds: f64 = plan
        .weights
        .iter()
        .map(|p| capital * (-p.beta).max(0.0))
        .sum();
    let free_cash = capital * (plan.cash.cash_fraction - plan.cash.margin_fraction);

    let mut nav = Vec::with_capacity(panel.n_dates());
    for t in 0..panel.n_dates() {
        if t == 0 {
            nav.push(capital);
            continue;
        }
        let positions: f64 = shares.iter().zip(&cols).map(|(s, &j)| s * v[(t, j)]).sum();
        let cash = free_cash * (1.0 + cfg.cash_rate * t as f64 / cfg.days_per_year);
        let value = positions + locked_proceeds + cash;
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Numeric(format!(
                "buy-and-hold value {value} is not positive on {}",
                format_date(panel.dates()[t])
            )));
        }
        nav.push(value);
    }
    Ok(NavSeries {
        dates: panel.dates().to_vec(),
        nav,
        initial_capital: capital,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    match (saa > 0.0, sbb > 0.0) {
        (true, true) => (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0),
        // Two flat paths move together trivially.
        (false, false) => 1.0,
        _ => 0.0,
    }
}

/// Compares a NAV path with a positive target path in log space. The
/// correlation is between the two log paths.
pub fn tracking_stats(
    nav: &NavSeries,
    target: &[f64],
    days_per_year: f64,
) -> Result<TrackingStats> {
    if nav.nav.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: nav.nav.len(),
            actual: target.len(),
        });
    }
    if target.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            actual: target.len(),
        });
    }
    if nav
        .nav
        .iter()
        .chain(target)
        .any(|v| v.is_nan() || *v <= 0.0)
    {
        return Err(Error::InvalidParameter(
            "tracking inputs must be positive".into(),
        ));
    }
    let ln_nav: Vec<f64> = nav.nav.iter().map(|v| v.ln()).collect();
    let ln_target: Vec<f64> = target.iter().map(|v| v.ln()).collect();
    let gaps: Vec<f64> = ln_nav
        .iter()
        .zip(&ln_target)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let n = gaps.len();
    Ok(TrackingStats {
        mean_abs_error: gaps.iter().sum::<f64>() / n as f64,
        max_abs_error: gaps.iter().copied().fold(0.0, f64::max),
        realized_annual_rate: (ln_nav[n - 1] - ln_nav[0]) * days_per_year / (n - 1) as f64,
        correlation: pearson(&ln_nav, &ln_target),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutReport {
    pub train_rows: usize,
    pub test_rows: usize,
    pub fit: RegressionFit,
    pub in_sample: ResidualDiagnostics,
    pub out_of_sample: ResidualDiagnostics,
    pub out_of_sample_residuals: Vec<f64>,
}

/// Rows used for training: `floor((1 - f) · n)`.
pub fn holdout_split(n: usize, fraction: f64) -> Result<(usize, usize)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction must lie in (0, 1), got {fraction}"
        )));
    }
    // The epsilon keeps exact products such as 0.9 · 300 from flooring to 269.
    let train = ((1.0 - fraction) * n as f64 + 1e-9).floor() as usize;
    Ok((train.min(n), n - train.min(n)))
}

/// Fits on the chronologically first `1 - f` of rows and diagnoses the
/// prediction errors on the remaining tail.
pub fn holdout_validate(
    y: &[f64],
    regressors: &DMatrix<f64>,
    fraction: f64,
    opts: FitOptions,
) -> Result<HoldoutReport> {
    let n = y.len();
    if regressors.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: regressors.nrows(),
        });
    }
    let (train, test) = holdout_split(n, fraction)?;
    let min_train = (regressors.ncols() + 2).max(MIN_TRAIN_ROWS);
    if train < min_train {
        return Err(Error::InsufficientData {
            needed: min_train,
            actual: train,
        });
    }
    if test < 3 {
        return Err(Error::InsufficientData {
            needed: train + 3,
            actual: n,
        });
    }
    let x_train = regressors.rows(0, train).into_owned();
    let x_test = regressors.rows(train, test).into_owned();
    let f = fit(&y[..train], &x_train, opts)?;
    let in_sample = diagnose(&f.residuals, &y[..train])?;
    let predicted = predict(&f, &x_test)?;
    let oos: Vec<f64> = y[train..]
        .iter()
        .zip(&predicted)
        .map(|(a, p)| a - p)
        .collect();
    let out_of_sample = diagnose(&oos, &y[train..])?;
    Ok(HoldoutReport {
        train_rows: train,
        test_rows: test,
        fit: f,
        in_sample,
        out_of_sample,
        out_of_sample_residuals: oos,
    })
}

/// Holdout validation of a fund against its holdings, in log space over
/// their common dates.
pub fn holdout_validate_fund(
    fund: &PriceSeries,
    holdings: &AlignedPanel,
    fraction: f64,
    opts: FitOptions,
) -> Result<HoldoutReport> {
    let mut series = vec![fund.clone()];
    series.extend(holdings.to_series());
    let joint = align(&series)?;
    let logs = log_transform(&joint);
    let y = logs.column(0);
    let x = logs
        .values()
        .columns(1, holdings.n_instruments())
        .into_owned();
    holdout_validate(&y, &x, fraction, opts)
}
