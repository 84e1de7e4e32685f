//! Regenerates the CSV files under `fixtures/`.
//!
//!     cargo run --example generate_fixtures [-- OUT_DIR]

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use logcoint::market_data::{format_date, write_price_csv};
use logcoint::synthetic::{
    add_log_noise, exact_growth_panel, fund_from_weights, noise_ladder_panel, regime_change_fund,
};

const HOLDINGS: [&str; 10] = [
    "STK01", "STK02", "STK03", "STK04", "STK05", "STK06", "STK07", "STK08", "STK09", "STK10",
];
const GROWTH_BETAS: [f64; 10] = [
    -0.0356, -0.0231, -0.0185, -0.0171, -0.0003, 0.0048, 0.0052, 0.0371, 0.0377, 0.084,
];
const FUND_WEIGHTS: [f64; 10] = [0.25, 0.10, 0.13, 0.08, 0.11, 0.05, 0.05, 0.09, 0.12, 0.02];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&out)?;

    let noise: Vec<f64> = (1..=9).map(|k| 0.002 * k as f64).collect();
    let peers = noise_ladder_panel(&noise, 252, 0.01, 42);
    write_price_csv(&peers.to_series(), File::create(out.join("peers.csv"))?)?;

    let stocks = exact_growth_panel(&HOLDINGS, &GROWTH_BETAS, 300, 0.08, 252.0, 0.015, 11)?;
    write_price_csv(
        &stocks.to_series(),
        File::create(out.join("holdings_prices.csv"))?,
    )?;

    let fund = add_log_noise(
        &fund_from_weights(&stocks, "FUND01", &FUND_WEIGHTS)?,
        0.002,
        13,
    );
    write_price_csv(&[fund], File::create(out.join("fund.csv"))?)?;

    let regime = regime_change_fund(&stocks, "FUND02", &FUND_WEIGHTS, 270)?;
    write_price_csv(&[regime], File::create(out.join("regime_fund.csv"))?)?;

    let as_of = format_date(stocks.dates()[stocks.n_dates() - 1]);
    let mut h = File::create(out.join("holdings.csv"))?;
    writeln!(h, "fund,as_of,holding,weight")?;
    for (code, w) in HOLDINGS.iter().zip(FUND_WEIGHTS) {
        writeln!(h, "FUND01,{as_of},{code},{w}")?;
    }
    Ok(())
}
