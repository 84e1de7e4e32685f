//! `logcoint` command-line interface.
//!
//! Each subcommand reads CSV inputs, runs one analysis and writes
//! `report.json` plus plot-ready CSV files into `--out`.
//!
//! Exit status: `0` success, `2` usage error, `3` unreadable or malformed
//! input, `4` precondition violation (too few dates, missing instrument,
//! bad parameter, margin required), `5` numeric failure (rank-deficient
//! design and similar).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use crate::backtest::{
    buy_and_hold_nav, holdout_validate, synthetic_nav, tracking_stats, BacktestConfig,
    DEFAULT_HOLDOUT_FRACTION,
};
use crate::error::{Error, Result};
use crate::logprice::{log_transform, simulate_counterexample, SimulationParams};
use crate::market_data::{
    align, format_date, load_holdings, load_price_csv, parse_date, AlignedPanel, HoldingsRecord,
    InstrumentId, PriceSeries,
};
use crate::ols::FitOptions;
use crate::report::{
    create_file, file_stem, inputs_digest, write_dated_columns, BacktestSummary, Command,
    FundSummary, PlanSummary, ReportPayload, RunReport, SelectionSummary, SimulationSummary,
    SweepSummary, ValidationSummary, Window,
};
use crate::strategies::{
    construct_ultimate, growth_target, replicate_fund, select_fund, sweep_target_rate,
    PortfolioPlan, Position, StrategyConfig, DEFAULT_MIN_OBSERVATIONS,
};

#[derive(Debug, Parser)]
#[command(
    name = "logcoint",
    version,
    about = "Fund selection, replication and long-short construction on log prices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// First date to keep (inclusive, YYYY-MM-DD)
    #[arg(long = "from", value_parser = parse_date_arg)]
    pub from: Option<NaiveDate>,

    /// Last date to keep (inclusive, YYYY-MM-DD)
    #[arg(long = "to", value_parser = parse_date_arg)]
    pub to: Option<NaiveDate>,

    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,

    /// Fit without an intercept
    #[arg(long)]
    pub no_intercept: bool,

    /// Trading days per year for the time axis
    #[arg(long, default_value_t = 252.0)]
    pub days_per_year: f64,

    /// Minimum number of aligned dates
    #[arg(long, default_value_t = DEFAULT_MIN_OBSERVATIONS)]
    pub min_obs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Rank peer funds against their equal-weight log index
    Select {
        /// Fund price CSV (code,date,price)
        #[arg(long)]
        prices: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Replicate a fund from its disclosed holdings
    Replicate {
        /// Fund price CSV
        #[arg(long)]
        fund: PathBuf,
        /// Holdings CSV (fund,as_of,holding,weight)
        #[arg(long)]
        holdings: PathBuf,
        /// Holdings' price CSV
        #[arg(long)]
        prices: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build a long-short book tracking e^{rt}
    Construct {
        #[arg(long)]
        prices: PathBuf,
        /// Restrict and order columns by this holdings file
        #[arg(long)]
        holdings: Option<PathBuf>,
        /// Annual rate, or a comma-separated ascending list
        #[arg(long, value_parser = parse_rates)]
        rate: Rates,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Repeat the construction over ascending target rates
    Sweep {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        holdings: Option<PathBuf>,
        #[arg(long, value_parser = parse_rates)]
        rate: Rates,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Two-asset return-space counterexample
    Simulate {
        #[arg(long, default_value_t = 252)]
        steps: usize,
        /// Mean daily return in percent
        #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
        mu: f64,
        /// Daily return standard deviation in percent
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100.0)]
        a0: f64,
        #[arg(long, default_value_t = 100.0)]
        b0: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// NAV backtest of a replication (with --fund) or construction (with --rate)
    Backtest {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        holdings: Option<PathBuf>,
        #[arg(long, conflicts_with = "rate", required_unless_present = "rate")]
        fund: Option<PathBuf>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        capital: f64,
        /// Simple annual rate on free cash
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        cash_rate: f64,
        /// Finance S > 1 by borrowing at the cash rate instead of failing
        #[arg(long)]
        allow_margin: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Chronological holdout validation
    Validate {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        holdings: Option<PathBuf>,
        #[arg(long, conflicts_with = "rate", required_unless_present = "rate")]
        fund: Option<PathBuf>,
        #[arg(long)]
        rate: Option<f64>,
        /// Fraction of trailing rows held out
        #[arg(long, default_value_t = DEFAULT_HOLDOUT_FRACTION)]
        holdout: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rates(pub Vec<f64>);

fn parse_date_arg(s: &str) -> std::result::Result<NaiveDate, String> {
    parse_date(s).ok_or_else(|| format!("invalid date `{s}` (expected YYYY-MM-DD)"))
}

fn parse_rates(s: &str) -> std::result::Result<Rates, String> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid rate `{part}`"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Rates)
}

/// Timestamp written into reports. `SOURCE_DATE_EPOCH` overrides the clock.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

struct Inputs {
    bytes: Vec<Vec<u8>>,
}

impl Inputs {
    fn new() -> Self {
        Self { bytes: Vec::new() }
    }

    fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let data = std::fs::read(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.bytes.push(data.clone());
        Ok(data)
    }

    fn prices(&mut self, path: &Path) -> Result<Vec<PriceSeries>> {
        let data = self.read(path)?;
        load_price_csv(data.as_slice()).map_err(|e| with_path(e, path))
    }

    fn holdings(&mut self, path: &Path) -> Result<HoldingsRecord> {
        let data = self.read(path)?;
        load_holdings(data.as_slice()).map_err(|e| with_path(e, path))
    }

    fn digest(&self) -> String {
        inputs_digest(&self.bytes)
    }
}

fn with_path(err: Error, path: &Path) -> Error {
    match err {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn new() -> Self {
        Self(BTreeMap::new())
    }

    fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    fn common(&mut self, c: &CommonArgs) -> &mut Self {
        self.set("from", c.from.map(format_date).unwrap_or_default());
        self.set("to", c.to.map(format_date).unwrap_or_default());
        self.set("intercept", !c.no_intercept);
        self.set("days_per_year", c.days_per_year);
        self.set("time_axis", format!("t = row / {}", c.days_per_year));
        self.set("min_obs", c.min_obs)
    }
}

impl CommonArgs {
    fn strategy(&self) -> StrategyConfig {
        StrategyConfig {
            fit: FitOptions {
                include_intercept: !self.no_intercept,
            },
            min_observations: self.min_obs,
            days_per_year: self.days_per_year,
        }
    }

    fn window(&self, series: Vec<PriceSeries>) -> Vec<PriceSeries> {
        series
            .into_iter()
            .map(|s| s.window(self.from, self.to))
            .collect()
    }
}

/// Picks `codes` out of `series` in the given order.
fn pick(series: &[PriceSeries], codes: &[InstrumentId]) -> Result<Vec<PriceSeries>> {
    codes
        .iter()
        .map(|c| {
            series
                .iter()
                .find(|s| s.id() == c)
                .cloned()
                .ok_or_else(|| Error::MissingInstrument(c.to_string()))
        })
        .collect()
}

fn load_regressors(
    inputs: &mut Inputs,
    prices: &Path,
    holdings: Option<&Path>,
    common: &CommonArgs,
) -> Result<(AlignedPanel, Option<HoldingsRecord>)> {
    let series = inputs.prices(prices)?;
    let (series, record) = match holdings {
        Some(path) => {
            let record = inputs.holdings(path)?;
            (pick(&series, &record.holdings)?, Some(record))
        }
        None => (series, None),
    };
    Ok((align(&common.window(series))?, record))
}

fn pick_fund(series: Vec<PriceSeries>, code: Option<&InstrumentId>) -> Result<PriceSeries> {
    if let Some(code) = code {
        if let Some(s) = series.iter().find(|s| s.id() == code) {
            return Ok(s.clone());
        }
    }
    match series.len() {
        1 => Ok(series.into_iter().next().expect("one series")),
        0 => Err(Error::InvalidParameter("fund price file is empty".into())),
        n => Err(Error::InvalidParameter(format!(
            "fund price file holds {n} series and none matches the holdings' fund code"
        ))),
    }
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })
}

fn write_report(out: &Path, report: &RunReport) -> Result<()> {
    let path = out.join("report.json");
    std::fs::write(&path, report.to_json()?).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn write_residuals(
    out: &Path,
    name: &str,
    dates: &[NaiveDate],
    residuals: &[f64],
) -> Result<String> {
    let file = format!("residual_{}.csv", file_stem(name));
    write_dated_columns(
        create_file(&out.join(&file))?,
        &["date", "residual"],
        dates,
        &[residuals],
    )?;
    Ok(file)
}

fn growth_curve(plan: &PortfolioPlan, days_per_year: f64) -> Vec<f64> {
    let rate = plan.target_rate.unwrap_or(0.0);
    growth_target(plan.dates.len(), rate, days_per_year)
        .into_iter()
        .map(f64::exp)
        .collect()
}

fn nav_file_name(rate: f64, many: bool) -> String {
    if many {
        format!("nav_{rate}.csv")
    } else {
        "nav.csv".to_string()
    }
}

fn construct_summaries(
    panel: &AlignedPanel,
    plans: &[PortfolioPlan],
    cfg: &StrategyConfig,
    out: &Path,
    many: bool,
) -> Result<Vec<PlanSummary>> {
    plans
        .iter()
        .map(|plan| {
            let rate = plan.target_rate.unwrap_or(0.0);
            let nav = synthetic_nav(plan, panel, 1.0)?;
            let nav_file = nav_file_name(rate, many);
            nav.write_csv(create_file(&out.join(&nav_file))?)?;
            let residual_file = if many {
                write_residuals(out, &format!("target_{rate}"), &plan.dates, &plan.residuals)?
            } else {
                write_residuals(out, "target", &plan.dates, &plan.residuals)?
            };
            let mut summary = PlanSummary::from_plan(plan, vec![nav_file, residual_file]);
            summary.tracking = Some(tracking_stats(
                &nav,
                &growth_curve(plan, cfg.days_per_year),
                cfg.days_per_year,
            )?);
            Ok(summary)
        })
        .collect()
}

/// Runs one subcommand, writing its output files and returning the report.
pub fn run(cli: Cli) -> Result<RunReport> {
    let mut inputs = Inputs::new();
    let mut params = Params::new();

    match cli.command {
        Commands::Select { prices, common } => {
            let cfg = common.strategy();
            params.common(&common);
            let series = common.window(inputs.prices(&prices)?);
            if series.len() < 2 {
                return Err(Error::InvalidParameter(format!(
                    "fund selection needs at least 2 funds, got {}",
                    series.len()
                )));
            }
            let panel = align(&series)?;
            let sel = select_fund(&panel, &cfg)?;
            ensure_out_dir(&common.out)?;
            let funds = sel
                .per_fund
                .iter()
                .map(|f| {
                    let file =
                        write_residuals(&common.out, f.fund.as_str(), &sel.dates, &f.residuals)?;
                    Ok(FundSummary {
                        fund: f.fund.clone(),
                        beta: f.beta,
                        intercept: f.intercept,
                        r_squared: f.r_squared,
                        diagnostics: f.diagnostics,
                        residual_file: file,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let report = RunReport::new(
                Command::Select,
                timestamp(),
                inputs.digest(),
                params.0,
                ReportPayload::Selection(SelectionSummary {
                    window: Window::from_dates(&sel.dates),
                    funds,
                    ranking: sel.ranking,
                }),
            );
            write_report(&common.out, &report)?;
            Ok(report)
        }

        Commands::Replicate {
            fund,
            holdings,
            prices,
            common,
        } => {
            let cfg = common.strategy();
            params.common(&common);
            let fund_series = inputs.prices(&fund)?;
            let (panel, record) = load_regressors(&mut inputs, &prices, Some(&holdings), &common)?;
            let record = record.expect("holdings supplied");
            let fund_series =
                pick_fund(fund_series, Some(&record.fund))?.window(common.from, common.to);
            params
                .set("fund", fund_series.id())
                .set("as_of", format_date(record.as_of));

            let plan = replicate_fund(&fund_series, &panel, &cfg)?;
            ensure_out_dir(&common.out)?;
            let residual_file = write_residuals(
                &common.out,
                fund_series.id().as_str(),
                &plan.dates,
                &plan.residuals,
            )?;
            let actual: Vec<f64> = plan.dependent.iter().map(|v| v.exp()).collect();
            let replicated: Vec<f64> = plan
                .dependent
                .iter()
                .zip(&plan.residuals)
                .map(|(y, e)| (y - e).exp())
                .collect();
            write_dated_columns(
                create_file(&common.out.join("replication.csv"))?,
                &["date", "actual", "replicated"],
                &plan.dates,
                &[&actual, &replicated],
            )?;
            let mut summary =
                PlanSummary::from_plan(&plan, vec![residual_file, "replication.csv".into()]);
            summary.disclosed_weights = record.disclosed_weights.clone();
            let report = RunReport::new(
                Command::Replicate,
                timestamp(),
                inputs.digest(),
                params.0,
                ReportPayload::Plan(summary),
            );
            write_report(&common.out, &report)?;
            Ok(report)
        }

        Commands::Construct {
            prices,
            holdings,
            rate,
            common,
        } => run_construct(
            inputs,
            params,
            &prices,
            holdings.as_deref(),
            &rate.0,
            &common,
            false,
        ),
        Commands::Sweep {
            prices,
            holdings,
            rate,
            common,
        } => run_construct(
            inputs,
            params,
            &prices,
            holdings.as_deref(),
            &rate.0,
            &common,
            true,
        ),

        Commands::Simulate {
            steps,
            mu,
            sigma,
            seed,
            a0,
            b0,
            out,
        } => {
            let sim_params = SimulationParams {
                steps,
                mu,
                sigma,
                a0,
                b0,
                seed,
            };
            let res = simulate_counterexample(&sim_params)?;
            ensure_out_dir(&out)?;
            res.write_csv(create_file(&out.join("sim.csv"))?)?;
            params
                .set("steps", steps)
                .set("mu", mu)
                .set("sigma", sigma)
                .set("seed", seed)
                .set("a0", a0)
                .set("b0", b0);
            let report = RunReport::new(
                Command::Simulate,
                timestamp(),
                inputs.digest(),
                params.0,
                ReportPayload::Simulation(SimulationSummary {
                    params: sim_params,
                    max_abs_deviation: res.max_abs_deviation,
                    max_rebalanced_error: res.max_rebalanced_error,
                    file: "sim.csv".into(),
                }),
            );
            write_report(&out, &report)?;
            Ok(report)
        }

        Commands::Backtest {
            prices,
            holdings,
            fund,
            rate,
            capital,
            cash_rate,
            allow_margin,
            common,
        } => {
            let cfg = common.strategy();
            params.common(&common);
            params
                .set("capital", capital)
                .set("cash_rate", cash_rate)
                .set("allow_margin", allow_margin);
            let fund_series = fund.as_deref().map(|p| inputs.prices(p)).transpose()?;
            let (panel, record) =
                load_regressors(&mut inputs, &prices, holdings.as_deref(), &common)?;

            let (plan, target) = match (fund_series, rate) {
                (Some(series), _) => {
                    let f = pick_fund(series, record.as_ref().map(|r| &r.fund))?
                        .window(common.from, common.to);
                    params.set("fund", f.id());
                    let plan = replicate_fund(&f, &panel, &cfg)?;
                    let target: Vec<f64> = plan.dependent.iter().map(|v| v.exp()).collect();
                    (plan, target)
                }
                (None, Some(r)) => {
                    params.set("rate", r);
                    let plan = construct_ultimate(&panel, r, &cfg)?;
                    let target = growth_curve(&plan, cfg.days_per_year);
                    (plan, target)
                }
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "backtest needs --fund or --rate".into(),
                    ))
                }
            };
            // Replication fits on the fund's common dates with the holdings.
            let panel = restrict_to_dates(&panel, &plan.dates)?;
            let bt_cfg = BacktestConfig {
                cash_rate,
                days_per_year: cfg.days_per_year,
                allow_margin,
            };
            let syn = synthetic_nav(&plan, &panel, capital)?;
            let bh = buy_and_hold_nav(&plan, &panel, capital, &bt_cfg)?;
            let target: Vec<f64> = target.iter().map(|v| v / target[0] * capital).collect();

            ensure_out_dir(&common.out)?;
            syn.write_csv(create_file(&common.out.join("nav.csv"))?)?;
            bh.write_csv(create_file(&common.out.join("nav_buy_and_hold.csv"))?)?;
            let residual_file = write_residuals(&common.out, "plan", &plan.dates, &plan.residuals)?;
            let drift = syn
                .nav
                .iter()
                .zip(&bh.nav)
                .map(|(a, b)| (a.ln() - b.ln()).abs())
                .fold(0.0, f64::max);
            let files = vec![
                "nav.csv".to_string(),
                "nav_buy_and_hold.csv".to_string(),
                residual_file.clone(),
            ];
            let report = RunReport::new(
                Command::Backtest,
                timestamp(),
                inputs.digest(),
                params.0,
                ReportPayload::Backtest(BacktestSummary {
                    plan: PlanSummary::from_plan(&plan, vec![residual_file]),
                    capital,
                    cash_rate,
                    final_synthetic_nav: *syn.nav.last().expect("non-empty nav"),
                    final_buy_and_hold_nav: *bh.nav.last().expect("non-empty nav"),
                    max_rebalancing_drift: drift,
                    synthetic_tracking: tracking_stats(&syn, &target, cfg.days_per_year)?,
                    buy_and_hold_tracking: tracking_stats(&bh, &target, cfg.days_per_year)?,
                    files,
                }),
            );
            write_report(&common.out, &report)?;
            Ok(report)
        }

        Commands::Validate {
            prices,
            holdings,
            fund,
            rate,
            holdout,
            common,
        } => {
            let cfg = common.strategy();
            params.common(&common);
            params.set("holdout", holdout);
            if !(holdout > 0.0 && holdout < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "holdout fraction must lie in (0, 1), got {holdout}"
                )));
            }
            let fund_series = fund.as_deref().map(|p| inputs.prices(p)).transpose()?;
            let (panel, record) =
                load_regressors(&mut inputs, &prices, holdings.as_deref(), &common)?;

            let (y, panel) = match (fund_series, rate) {
                (Some(series), _) => {
                    let f = pick_fund(series, record.as_ref().map(|r| &r.fund))?
                        .window(common.from, common.to);
                    params.set("fund", f.id());
                    let mut all = vec![f];
                    all.extend(panel.to_series());
                    let joint = align(&all)?;
                    let y: Vec<f64> = joint.column(0).iter().map(|v| v.ln()).collect();
                    (y, joint.select(panel.ids())?)
                }
                (None, Some(r)) => {
                    if !(r >= 0.0 && r.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "target rate must be a non-negative number, got {r}"
                        )));
                    }
                    params.set("rate", r);
                    (growth_target(panel.n_dates(), r, cfg.days_per_year), panel)
                }
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "validate needs --fund or --rate".into(),
                    ))
                }
            };
            if panel.n_dates() < cfg.min_observations {
                return Err(Error::InsufficientData {
                    needed: cfg.min_observations,
                    actual: panel.n_dates(),
                });
            }
            let logs = log_transform(&panel);
            let res = holdout_validate(&y, logs.values(), holdout, cfg.fit)?;

            ensure_out_dir(&common.out)?;
            let mut residuals = res.fit.residuals.clone();
            residuals.extend_from_slice(&res.out_of_sample_residuals);
            let segment: Vec<f64> = (0..residuals.len())
                .map(|i| if i < res.train_rows { 0.0 } else { 1.0 })
                .collect();
            write_dated_columns(
                create_file(&common.out.join("residual_holdout.csv"))?,
                &["date", "residual", "holdout"],
                panel.dates(),
                &[&residuals, &segment],
            )?;
            let report = RunReport::new(
                Command::Validate,
                timestamp(),
                inputs.digest(),
                params.0,
                ReportPayload::Validation(ValidationSummary {
                    holdout_fraction: holdout,
                    train_rows: res.train_rows,
                    test_rows: res.test_rows,
                    coefficients: panel
                        .ids()
                        .iter()
                        .zip(&res.fit.coefficients)
                        .map(|(id, b)| Position {
                            id: id.clone(),
                            beta: *b,
                        })
                        .collect(),
                    intercept: res.fit.intercept,
                    in_sample: res.in_sample,
                    out_of_sample: res.out_of_sample,
                    file: "residual_holdout.csv".into(),
                }),
            );
            write_report(&common.out, &report)?;
            Ok(report)
        }
    }
}

/// `construct` with one rate writes a single plan; a rate list, or the
/// `sweep` command, writes one plan per rate.
fn run_construct(
    mut inputs: Inputs,
    mut params: Params,
    prices: &Path,
    holdings: Option<&Path>,
    rates: &[f64],
    common: &CommonArgs,
    sweep: bool,
) -> Result<RunReport> {
    let is_sweep = sweep || rates.len() > 1;
    let cfg = common.strategy();
    params.common(common);
    params.set(
        "rate",
        rates
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    let (panel, _) = load_regressors(&mut inputs, prices, holdings, common)?;
    let plans = if is_sweep {
        sweep_target_rate(&panel, rates, &cfg)?
    } else {
        vec![construct_ultimate(&panel, rates[0], &cfg)?]
    };
    ensure_out_dir(&common.out)?;
    let mut summaries = construct_summaries(&panel, &plans, &cfg, &common.out, is_sweep)?;
    let (command, payload) = if is_sweep {
        (
            Command::Sweep,
            ReportPayload::Sweep(SweepSummary { plans: summaries }),
        )
    } else {
        (Command::Construct, ReportPayload::Plan(summaries.remove(0)))
    };
    let report = RunReport::new(command, timestamp(), inputs.digest(), params.0, payload);
    write_report(&common.out, &report)?;
    Ok(report)
}

fn restrict_to_dates(panel: &AlignedPanel, dates: &[NaiveDate]) -> Result<AlignedPanel> {
    if panel.dates() == dates {
        return Ok(panel.clone());
    }
    let keep: Vec<usize> = panel
        .dates()
        .iter()
        .enumerate()
        .filter(|(_, d)| dates.binary_search(d).is_ok())
        .map(|(i, _)| i)
        .collect();
    AlignedPanel::new(
        panel.ids().to_vec(),
        dates.to_vec(),
        panel.values().select_rows(keep.iter()),
    )
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(report) => {
            println!(
                "{} finished ({})",
                command_name(report.command),
                report.inputs_digest
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.class().exit_code()
        }
    }
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Select => "select",
        Command::Replicate => "replicate",
        Command::Construct => "construct",
        Command::Sweep => "sweep",
        Command::Simulate => "simulate",
        Command::Backtest => "backtest",
        Command::Validate => "validate",
    }
}
