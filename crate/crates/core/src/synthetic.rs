//! Deterministic synthetic panels with known structure, used by the test
//! suites and to generate the bundled CSV fixtures.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::logprice::InverseNormalSampler;
use crate::market_data::{AlignedPanel, InstrumentId, PriceSeries};

/// `n` weekdays starting at 2019-03-01.
pub fn business_days(n: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2019, 3, 1).expect("valid date");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn ids(codes: &[&str]) -> Vec<InstrumentId> {
    codes
        .iter()
        .map(|c| InstrumentId::new(*c).expect("non-empty code"))
        .collect()
}

fn sampler(seed: u64) -> InverseNormalSampler {
    InverseNormalSampler::new(0.0, 1.0, seed).expect("unit normal")
}

/// Independent geometric random walks with daily log volatility `vol`.
pub fn random_walk_panel(codes: &[&str], n: usize, vol: f64, seed: u64) -> AlignedPanel {
    let mut z = sampler(seed);
    let mut values = DMatrix::zeros(n, codes.len());
    for j in 0..codes.len() {
        let mut level = (10.0 * (j + 1) as f64).ln();
        for i in 0..n {
            if i > 0 {
                level += vol * z.draw();
            }
            values[(i, j)] = level.exp();
        }
    }
    AlignedPanel::new(ids(codes), business_days(n), values).expect("valid synthetic panel")
}

/// Funds sharing one latent log-price walk, fund `j` perturbed by i.i.d.
/// noise of standard deviation `noise_std[j]`. Codes are `F1`, `F2`, ...
pub fn noise_ladder_panel(noise_std: &[f64], n: usize, vol: f64, seed: u64) -> AlignedPanel {
    let mut z = sampler(seed);
    let mut latent = Vec::with_capacity(n);
    let mut level = 0.0;
    for i in 0..n {
        if i > 0 {
            level += vol * z.draw();
        }
        latent.push(level);
    }
    let codes: Vec<String> = (1..=noise_std.len()).map(|k| format!("F{k}")).collect();
    let values = DMatrix::from_fn(n, noise_std.len(), |i, j| {
        (latent[i] + noise_std[j] * z.draw()).exp()
    });
    let id_list = codes
        .iter()
        .map(|c| InstrumentId::new(c.as_str()).expect("code"))
        .collect();
    AlignedPanel::new(id_list, business_days(n), values).expect("valid ladder panel")
}

/// Appends a copy of column `j` under a new code.
pub fn duplicate_column(panel: &AlignedPanel, j: usize, code: &str) -> Result<AlignedPanel> {
    let mut id_list = panel.ids().to_vec();
    id_list.push(InstrumentId::new(code)?);
    let n = panel.n_instruments();
    let mut values = panel.values().clone().insert_column(n, 0.0);
    let src = panel.values().column(j).into_owned();
    values.column_mut(n).copy_from(&src);
    AlignedPanel::new(id_list, panel.dates().to_vec(), values)
}

/// Multiplies column `j` by `k`.
pub fn scale_column(panel: &AlignedPanel, j: usize, k: f64) -> Result<AlignedPanel> {
    let mut values = panel.values().clone();
    values.column_mut(j).scale_mut(k);
    AlignedPanel::new(panel.ids().to_vec(), panel.dates().to_vec(), values)
}

/// Fund priced at `exp(Σ w_i ln P_i)`.
pub fn fund_from_weights(panel: &AlignedPanel, code: &str, weights: &[f64]) -> Result<PriceSeries> {
    if weights.len() != panel.n_instruments() {
        return Err(Error::DimensionMismatch {
            expected: panel.n_instruments(),
            actual: weights.len(),
        });
    }
    let obs = panel
        .dates()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let log: f64 = weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * panel.values()[(i, j)].ln())
                .sum();
            (*d, log.exp())
        })
        .collect();
    PriceSeries::new(InstrumentId::new(code)?, obs)
}

/// Multiplies each price by `exp(std · z)` with i.i.d. unit normal `z`.
pub fn add_log_noise(series: &PriceSeries, std: f64, seed: u64) -> PriceSeries {
    let mut z = sampler(seed);
    let obs = series
        .observations()
        .iter()
        .map(|(d, p)| (*d, p * (std * z.draw()).exp()))
        .collect();
    PriceSeries::new(series.id().clone(), obs).expect("positive prices")
}

/// One instrument priced exactly `e^{r t}`, `t = i / days_per_year`.
pub fn growth_panel(code: &str, n: usize, rate: f64, days_per_year: f64) -> AlignedPanel {
    let values = DMatrix::from_fn(n, 1, |i, _| (rate * i as f64 / days_per_year).exp());
    AlignedPanel::new(ids(&[code]), business_days(n), values).expect("valid growth panel")
}

/// Panel in which `Σ β_i ln P_i(t) = rate · t` holds exactly. All but the
/// last column are random walks trending at `sign(β_i) · rate / Σ|β|` per
/// year, so the growth is spread over the book; the last column is solved
/// for and must carry a non-zero beta.
pub fn exact_growth_panel(
    codes: &[&str],
    betas: &[f64],
    n: usize,
    rate: f64,
    days_per_year: f64,
    vol: f64,
    seed: u64,
) -> Result<AlignedPanel> {
    let k = betas.len();
    if codes.len() != k || k == 0 {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: codes.len(),
        });
    }
    let last = betas[k - 1];
    if last == 0.0 {
        return Err(Error::InvalidParameter("last beta must be non-zero".into()));
    }
    let walks = random_walk_panel(&codes[..k - 1], n, vol, seed);
    let gross: f64 = betas.iter().map(|b| b.abs()).sum();
    let mut values = DMatrix::zeros(n, k);
    for i in 0..n {
        let t = i as f64 / days_per_year;
        let mut partial = 0.0;
        for j in 0..k - 1 {
            let p = walks.values()[(i, j)] * (betas[j].signum() * rate / gross * t).exp();
            values[(i, j)] = p;
            partial += betas[j] * p.ln();
        }
        values[(i, k - 1)] = ((rate * t - partial) / last).exp();
    }
    AlignedPanel::new(ids(codes), business_days(n), values)
}

/// Fund that follows `exp(Σ w_i ln P_i)` up to row `switch_at` and
/// `exp(Σ -w_i ln P_i)` after it, continuous at the switch.
pub fn regime_change_fund(
    panel: &AlignedPanel,
    code: &str,
    weights: &[f64],
    switch_at: usize,
) -> Result<PriceSeries> {
    let before = fund_from_weights(panel, code, weights)?;
    let flipped: Vec<f64> = weights.iter().map(|w| -w).collect();
    let after = fund_from_weights(panel, code, &flipped)?;
    let pivot = switch_at.min(panel.n_dates() - 1);
    let shift = before.observations()[pivot].1.ln() - after.observations()[pivot].1.ln();
    let obs = (0..panel.n_dates())
        .map(|i| {
            let (d, p) = if i <= pivot {
                before.observations()[i]
            } else {
                let (d, p) = after.observations()[i];
                (d, (p.ln() + shift).exp())
            };
            (d, p)
        })
        .collect();
    PriceSeries::new(InstrumentId::new(code)?, obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_growth_holds() {
        let betas = [-0.0356, 0.0048, 0.084];
        let p = exact_growth_panel(&["A", "B", "C"], &betas, 100, 0.08, 252.0, 0.01, 1).unwrap();
        for i in 0..100 {
            let s: f64 = (0..3).map(|j| betas[j] * p.values()[(i, j)].ln()).sum();
            assert!((s - 0.08 * i as f64 / 252.0).abs() < 1e-12);
        }
    }

    #[test]
    fn business_days_skip_weekends() {
        let days = business_days(10);
        assert!(days
            .iter()
            .all(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)));
        assert_eq!(days.len(), 10);
    }

    #[test]
    fn regime_fund_is_continuous() {
        let p = random_walk_panel(&["A", "B"], 50, 0.01, 3);
        let f = regime_change_fund(&p, "F", &[0.5, 0.5], 40).unwrap();
        let g = fund_from_weights(&p, "F", &[0.5, 0.5]).unwrap();
        assert_eq!(f.observations()[..=40], g.observations()[..=40]);
        assert_eq!(f.len(), 50);
    }
}
