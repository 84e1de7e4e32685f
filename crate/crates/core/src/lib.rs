//! Cointegration-style portfolio analytics on log prices.
//!
//! The crate covers three workflows built on one OLS engine:
//!
//! * picking the fund closest to a peer group's equal-weight log index
//!   ([`strategies::select_fund`]),
//! * replicating a fund from its disclosed top holdings
//!   ([`strategies::replicate_fund`]),
//! * building a long-short book whose log value tracks `r·t`
//!   ([`strategies::construct_ultimate`]).
//!
//! Around them sit ingestion ([`market_data`]), residual diagnostics,
//! NAV backtesting and holdout validation, and the `logcoint` CLI.

pub mod backtest;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod logprice;
pub mod market_data;
pub mod ols;
pub mod report;
pub mod strategies;
pub mod synthetic;

pub use error::{Error, Result};
