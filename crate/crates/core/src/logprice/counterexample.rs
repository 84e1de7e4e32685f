//! Two-asset simulation showing that a fixed-weight formula in return
//! space drifts away from the realized portfolio return once the weights
//! move, while the log-price formulation is insensitive to this.
//!
//! Asset A follows `A_t = A_{t-1} (1 + r_t)`, asset B follows
//! `B_t = B_{t-1} (1 - r_t / 2)` and the portfolio is `C_t = (A_t + B_t) / 2`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Simulation inputs. `mu` and `sigma` are percent per day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub steps: usize,
    pub mu: f64,
    pub sigma: f64,
    pub a0: f64,
    pub b0: f64,
    pub seed: u64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            steps: 252,
            mu: 0.2,
            sigma: 5.0,
            a0: 100.0,
            b0: 100.0,
            seed: 42,
        }
    }
}

impl SimulationParams {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter("mu must be finite".into()));
        }
        if !(self.a0 > 0.0 && self.b0 > 0.0) {
            return Err(Error::InvalidParameter(
                "initial prices must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleResult {
    /// `r_t / 4`: the fixed half-half weighting applied to the two returns.
    pub naive_returns: Vec<f64>,
    /// `C_t / C_{t-1} - 1`.
    pub actual_returns: Vec<f64>,
    /// Returns weighted by the previous day's value shares.
    pub rebalanced_returns: Vec<f64>,
    pub max_abs_deviation: f64,
    pub max_rebalanced_error: f64,
    /// `None` when the returns were injected rather than drawn.
    pub seed: Option<u64>,
}

impl CounterexampleResult {
    pub fn len(&self) -> usize {
        self.actual_returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actual_returns.is_empty()
    }

    /// Writes `t,naive,actual,rebalanced` with `t` starting at 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io {
            path: "sim.csv".into(),
            source: e.into(),
        };
        w.write_record(["t", "naive", "actual", "rebalanced"])
            .map_err(io)?;
        for t in 0..self.len() {
            w.write_record([
                (t + 1).to_string(),
                self.naive_returns[t].to_string(),
                self.actual_returns[t].to_string(),
                self.rebalanced_returns[t].to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "sim.csv".into(),
            source: e,
        })
    }
}

/// Seeded normal draws by inverse CDF of a uniform deviate.
pub struct InverseNormalSampler {
    rng: ChaCha8Rng,
    dist: Normal,
}

impl InverseNormalSampler {
    pub fn new(mean: f64, std_dev: f64, seed: u64) -> Result<Self> {
        let dist = Normal::new(mean, std_dev)
            .map_err(|e| Error::InvalidParameter(format!("normal({mean}, {std_dev}): {e}")))?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dist,
        })
    }

    pub fn draw(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return self.dist.inverse_cdf(u);
            }
        }
    }
}

/// Runs the two-asset construction on daily returns drawn from
/// `N(mu, sigma) / 100`. Draws that would make either price non-positive
/// are discarded and redrawn.
pub fn simulate_counterexample(params: &SimulationParams) -> Result<CounterexampleResult> {
    params.validate()?;
    let mut sampler = InverseNormalSampler::new(params.mu, params.sigma, params.seed)?;
    let mut returns = Vec::with_capacity(params.steps);
    while returns.len() < params.steps {
        let r = sampler.draw() / 100.0;
        if 1.0 + r > 0.0 && 1.0 - r / 2.0 > 0.0 {
            returns.push(r);
        }
    }
    let mut result = simulate_with_returns(&returns, params.a0, params.b0)?;
    result.seed = Some(params.seed);
    Ok(result)
}

/// Same construction on a caller-supplied return path.
pub fn simulate_with_returns(returns: &[f64], a0: f64, b0: f64) -> Result<CounterexampleResult> {
    if returns.is_empty() {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    if !(a0 > 0.0 && b0 > 0.0) {
        return Err(Error::InvalidParameter(
            "initial prices must be positive".into(),
        ));
    }
    let n = returns.len();
    let mut naive = Vec::with_capacity(n);
    let mut actual = Vec::with_capacity(n);
    let mut rebalanced = Vec::with_capacity(n);

    let (mut a, mut b) = (a0, b0);
    for &r in returns {
        if !(1.0 + r > 0.0 && 1.0 - r / 2.0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "return {r} drives a price non-positive"
            )));
        }
        let c_prev = (a + b) / 2.0;
        let w_a = a / (a + b);
        a *= 1.0 + r;
        b *= 1.0 - r / 2.0;
        let c = (a + b) / 2.0;

        naive.push((r - r / 2.0) / 2.0);
        actual.push(c / c_prev - 1.0);
        rebalanced.push(w_a * r - (1.0 - w_a) * r / 2.0);
    }

    let max_gap = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    };
    Ok(CounterexampleResult {
        max_abs_deviation: max_gap(&naive, &actual),
        max_rebalanced_error: max_gap(&rebalanced, &actual),
        naive_returns: naive,
        actual_returns: actual,
        rebalanced_returns: rebalanced,
        seed: None,
    })
}
