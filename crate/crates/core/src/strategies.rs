//! Fund selection, fund replication and constant-growth construction.
//!
//! All three are OLS fits on log prices:
//!
//! * selection regresses the equal-weight log index on each candidate,
//! * replication regresses `ln(fund)` on the holdings' log prices jointly,
//! * construction regresses the line `r·t` on the holdings' log prices.
//!
//! Negative betas are short positions. Short-sale proceeds stay locked in
//! the account, so the capital actually spent is the sum of positive betas.

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagnose, rank_by_whiteness, ResidualDiagnostics};
use crate::error::{Error, Result};
use crate::logprice::{equal_weight_log_index, log_transform};
use crate::market_data::{align, AlignedPanel, InstrumentId, PriceSeries};
use crate::ols::{fit, fit_simple, FitOptions, RegressionFit};

pub const DEFAULT_MIN_OBSERVATIONS: usize = 30;
pub const DEFAULT_DAYS_PER_YEAR: f64 = 252.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub fit: FitOptions,
    /// Minimum number of aligned dates for any of the algorithms.
    pub min_observations: usize,
    /// Trading days per year; row `i` of a panel sits at `t = i / days_per_year`.
    pub days_per_year: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            min_observations: DEFAULT_MIN_OBSERVATIONS,
            days_per_year: DEFAULT_DAYS_PER_YEAR,
        }
    }
}

impl StrategyConfig {
    fn check_rows(&self, n: usize) -> Result<()> {
        if n < self.min_observations {
            return Err(Error::InsufficientData {
                needed: self.min_observations,
                actual: n,
            });
        }
        Ok(())
    }

    fn check_days_per_year(&self) -> Result<()> {
        if !(self.days_per_year > 0.0 && self.days_per_year.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "days per year must be positive, got {}",
                self.days_per_year
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundSelection {
    pub fund: InstrumentId,
    pub beta: f64,
    pub intercept: Option<f64>,
    pub r_squared: f64,
    pub diagnostics: ResidualDiagnostics,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub dates: Vec<NaiveDate>,
    /// Equal-weight log index `C_t`.
    pub index_series: Vec<f64>,
    /// One entry per input fund, in input order.
    pub per_fund: Vec<FundSelection>,
    /// Whitest residual first.
    pub ranking: Vec<InstrumentId>,
}

/// Outlay split of a long-short weight vector per unit of capital.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CashPlan {
    /// `S = Σ max(β_i, 0)`.
    pub sum_positive: f64,
    /// `1 - S` when `S < 1`.
    pub cash_fraction: f64,
    /// `S - 1` when `S > 1`.
    pub margin_fraction: f64,
}

pub fn cash_accounting(betas: &[f64]) -> CashPlan {
    let sum_positive: f64 = betas.iter().map(|b| b.max(0.0)).sum();
    CashPlan {
        sum_positive,
        cash_fraction: (1.0 - sum_positive).max(0.0),
        margin_fraction: (sum_positive - 1.0).max(0.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub id: InstrumentId,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioPlan {
    /// Holdings in panel column order; negative betas are shorts.
    pub weights: Vec<Position>,
    pub intercept: f64,
    pub cash: CashPlan,
    /// Annual growth rate of the target line, when the plan came from
    /// constant-growth construction.
    pub target_rate: Option<f64>,
    pub r_squared: f64,
    pub condition_number: f64,
    pub diagnostics: ResidualDiagnostics,
    /// Dates of the estimation window.
    pub dates: Vec<NaiveDate>,
    /// `ε(t)` over the estimation window.
    pub residuals: Vec<f64>,
    /// The fitted dependent series (log fund price or `r·t`).
    pub dependent: Vec<f64>,
}

impl PortfolioPlan {
    pub fn betas(&self) -> Vec<f64> {
        self.weights.iter().map(|p| p.beta).collect()
    }

    fn from_fit(
        ids: &[InstrumentId],
        dates: &[NaiveDate],
        dependent: Vec<f64>,
        fit: RegressionFit,
        target_rate: Option<f64>,
    ) -> Result<Self> {
        let diagnostics = diagnose(&fit.residuals, &dependent)?;
        let cash = cash_accounting(&fit.coefficients);
        Ok(Self {
            weights: ids
                .iter()
                .zip(&fit.coefficients)
                .map(|(id, b)| Position {
                    id: id.clone(),
                    beta: *b,
                })
                .collect(),
            intercept: fit.intercept_or_zero(),
            cash,
            target_rate,
            r_squared: fit.r_squared,
            condition_number: fit.condition_number,
            diagnostics,
            dates: dates.to_vec(),
            residuals: fit.residuals,
            dependent,
        })
    }
}

/// Regresses the equal-weight log index on each fund's log price and ranks
/// funds by how white the residual looks.
pub fn select_fund(panel: &AlignedPanel, cfg: &StrategyConfig) -> Result<SelectionReport> {
    if panel.n_instruments() < 2 {
        return Err(Error::InvalidParameter(format!(
            "fund selection needs at least 2 funds, got {}",
            panel.n_instruments()
        )));
    }
    cfg.check_rows(panel.n_dates())?;

    let logs = log_transform(panel);
    let index = equal_weight_log_index(&logs)?;

    let per_fund = (0..logs.n_instruments())
        .into_par_iter()
        .map(|j| {
            let x = logs.column(j);
            let f = fit_simple(&index, &x, cfg.fit)?;
            let diagnostics = diagnose(&f.residuals, &index)?;
            Ok(FundSelection {
                fund: logs.ids()[j].clone(),
                beta: f.coefficients[0],
                intercept: f.intercept,
                r_squared: f.r_squared,
                diagnostics,
                residuals: f.residuals,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let labelled: Vec<(InstrumentId, ResidualDiagnostics)> = per_fund
        .iter()
        .map(|f| (f.fund.clone(), f.diagnostics))
        .collect();
    Ok(SelectionReport {
        dates: panel.dates().to_vec(),
        index_series: index,
        ranking: rank_by_whiteness(&labelled),
        per_fund,
    })
}

/// Regresses the fund's log price on all holdings' log prices jointly over
/// their common dates.
pub fn replicate_fund(
    fund: &PriceSeries,
    holdings_panel: &AlignedPanel,
    cfg: &StrategyConfig,
) -> Result<PortfolioPlan> {
    if holdings_panel.column_index(fund.id()).is_some() {
        return Err(Error::InvalidParameter(format!(
            "fund {} also appears among its holdings",
            fund.id()
        )));
    }
    let mut series = vec![fund.clone()];
    series.extend(holdings_panel.to_series());
    let joint = align(&series)?;
    cfg.check_rows(joint.n_dates())?;

    let logs = log_transform(&joint);
    let y = logs.column(0);
    let x = logs
        .values()
        .columns(1, holdings_panel.n_instruments())
        .into_owned();
    let f = fit(&y, &x, cfg.fit)?;
    PortfolioPlan::from_fit(holdings_panel.ids(), joint.dates(), y, f, None)
}

/// Log of the constant-growth curve `e^{r t}` on the panel's row grid.
pub fn growth_target(n_rows: usize, annual_rate: f64, days_per_year: f64) -> Vec<f64> {
    (0..n_rows)
        .map(|i| annual_rate * i as f64 / days_per_year)
        .collect()
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "target rate must be a non-negative number, got {rate}"
        )));
    }
    Ok(())
}

fn construct_on_logs(
    ids: &[InstrumentId],
    dates: &[NaiveDate],
    x: &DMatrix<f64>,
    annual_rate: f64,
    cfg: &StrategyConfig,
) -> Result<PortfolioPlan> {
    check_rate(annual_rate)?;
    let y = growth_target(dates.len(), annual_rate, cfg.days_per_year);
    let f = fit(&y, x, cfg.fit)?;
    PortfolioPlan::from_fit(ids, dates, y, f, Some(annual_rate))
}

/// Regresses the log of `e^{r t}` on the holdings' log prices.
pub fn construct_ultimate(
    holdings_panel: &AlignedPanel,
    annual_rate: f64,
    cfg: &StrategyConfig,
) -> Result<PortfolioPlan> {
    cfg.check_days_per_year()?;
    cfg.check_rows(holdings_panel.n_dates())?;
    let logs = log_transform(holdings_panel);
    construct_on_logs(logs.ids(), logs.dates(), logs.values(), annual_rate, cfg)
}

/// One construction per rate, in input order. Rates must be non-negative
/// and non-decreasing.
pub fn sweep_target_rate(
    holdings_panel: &AlignedPanel,
    rates: &[f64],
    cfg: &StrategyConfig,
) -> Result<Vec<PortfolioPlan>> {
    if rates.is_empty() {
        return Err(Error::InvalidParameter("rate list is empty".into()));
    }
    if rates.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "rates must be in ascending order".into(),
        ));
    }
    cfg.check_days_per_year()?;
    cfg.check_rows(holdings_panel.n_dates())?;
    let logs = log_transform(holdings_panel);
    rates
        .iter()
        .map(|r| construct_on_logs(logs.ids(), logs.dates(), logs.values(), *r, cfg))
        .collect()
}
