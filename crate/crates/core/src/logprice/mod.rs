//! Log-price transforms and the equal-weight log index.
//!
//! Working on `ln P` turns a price ratio into a difference, so a fixed
//! linear combination of log prices needs no rebalancing to stay fixed.

mod counterexample;

pub use counterexample::{
    simulate_counterexample, simulate_with_returns, CounterexampleResult, InverseNormalSampler,
    SimulationParams,
};

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::market_data::{AlignedPanel, InstrumentId};

/// Elementwise natural log of an [`AlignedPanel`].
#[derive(Debug, Clone, PartialEq)]
pub struct LogPanel {
    ids: Vec<InstrumentId>,
    dates: Vec<NaiveDate>,
    values: DMatrix<f64>,
}

impl LogPanel {
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

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn column_index(&self, id: &InstrumentId) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Recovers prices by exponentiation.
    pub fn to_prices(&self) -> Result<AlignedPanel> {
        AlignedPanel::new(
            self.ids.clone(),
            self.dates.clone(),
            self.values.map(f64::exp),
        )
    }
}

pub fn log_transform(panel: &AlignedPanel) -> LogPanel {
    LogPanel {
        ids: panel.ids().to_vec(),
        dates: panel.dates().to_vec(),
        values: panel.values().map(f64::ln),
    }
}

pub fn simple_return(p1: f64, p2: f64) -> f64 {
    p2 / p1 - 1.0
}

pub fn log_return(p1: f64, p2: f64) -> f64 {
    p2.ln() - p1.ln()
}

/// Upper bound on `|ln(1 + r) - r|` for `|r| < 1`.
pub fn log_return_error_bound(r: f64) -> f64 {
    r * r / (2.0 * (1.0 - r.abs()))
}

/// Per-date mean of the log prices: `C_t = (1/N) Σ_i ln P_i(t)`.
pub fn equal_weight_log_index(panel: &LogPanel) -> Result<Vec<f64>> {
    let n = panel.n_instruments();
    if n == 0 {
        return Err(Error::InvalidParameter("log panel has no columns".into()));
    }
    Ok(panel
        .values
        .row_iter()
        .map(|row| row.iter().sum::<f64>() / n as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::parse_date;
    use proptest::prelude::*;

    fn panel(cols: &[&[f64]]) -> AlignedPanel {
        let rows = cols[0].len();
        let ids = (0..cols.len())
            .map(|j| InstrumentId::new(format!("X{j}")).unwrap())
            .collect();
        let start = parse_date("2020-01-01").unwrap();
        let dates = (0..rows as u64)
            .map(|i| start + chrono::Days::new(i))
            .collect();
        let values = DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]);
        AlignedPanel::new(ids, dates, values).unwrap()
    }

    #[test]
    fn log_of_one_and_e() {
        let lp = log_transform(&panel(&[&[1.0, std::f64::consts::E]]));
        assert_eq!(lp.values()[(0, 0)], 0.0);
        assert!((lp.values()[(1, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_transform_round_trips() {
        let src = panel(&[&[0.37, 12.5, 1.0e3], &[4.2, 0.0091, 77.7]]);
        let back = log_transform(&src).to_prices().unwrap();
        for (a, b) in src.values().iter().zip(back.values().iter()) {
            assert!(((a - b) / a).abs() < 1e-12);
        }
    }

    #[test]
    fn returns() {
        assert!((simple_return(100.0, 101.0) - 0.01).abs() < 1e-15);
        assert_eq!(simple_return(100.0, 100.0), 0.0);
        assert_eq!(simple_return(50.0, 100.0), 1.0);
        assert_eq!(log_return(100.0, 100.0), 0.0);
        assert!((log_return(100.0, 101.0) - 0.00995033).abs() < 1e-6);
        assert!((log_return(100.0, 50.0) + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn index_single_and_identical_columns() {
        let col = [1.0, 2.0, 3.0];
        let lp = log_transform(&panel(&[&col]));
        assert_eq!(equal_weight_log_index(&lp).unwrap(), lp.column(0));
        let lp = log_transform(&panel(&[&col, &col, &col]));
        let idx = equal_weight_log_index(&lp).unwrap();
        for (a, b) in idx.iter().zip(lp.column(0)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn index_is_per_date_mean() {
        let cols: [&[f64]; 3] = [&[1.0, 2.0], &[4.0, 8.0], &[16.0, 0.5]];
        let lp = log_transform(&panel(&cols));
        let idx = equal_weight_log_index(&lp).unwrap();
        for (t, v) in idx.iter().enumerate() {
            let mean = (cols[0][t].ln() + cols[1][t].ln() + cols[2][t].ln()) / 3.0;
            assert!((v - mean).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn log_return_close_to_simple_return(r in -0.5f64..0.5) {
            let gap = (log_return(1.0, 1.0 + r) - simple_return(1.0, 1.0 + r)).abs();
            prop_assert!(gap <= log_return_error_bound(r) + 1e-15);
        }

        #[test]
        fn index_permutation_invariant_and_level_shift(
            a in proptest::collection::vec(0.1f64..10.0, 5),
            b in proptest::collection::vec(0.1f64..10.0, 5),
            c in proptest::collection::vec(0.1f64..10.0, 5),
            k in proptest::collection::vec(0.01f64..100.0, 3),
        ) {
            let base = equal_weight_log_index(&log_transform(&panel(&[&a, &b, &c]))).unwrap();
            let perm = equal_weight_log_index(&log_transform(&panel(&[&c, &a, &b]))).unwrap();
            for (x, y) in base.iter().zip(&perm) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let scale = |v: &[f64], k: f64| v.iter().map(|x| x * k).collect::<Vec<_>>();
            let (sa, sb, sc) = (scale(&a, k[0]), scale(&b, k[1]), scale(&c, k[2]));
            let shifted = equal_weight_log_index(&log_transform(&panel(&[&sa, &sb, &sc]))).unwrap();
            let shift = k.iter().map(|x| x.ln()).sum::<f64>() / 3.0;
            for (x, y) in base.iter().zip(&shifted) {
                prop_assert!((y - x - shift).abs() < 1e-12);
            }
        }
    }
}
