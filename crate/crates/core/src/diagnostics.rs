//! Numeric stand-ins for eyeballing a residual chart.
//!
//! A residual series looks like white noise when it is centered, small
//! next to the series being explained, and has no day-to-day persistence.
//! `whiteness_score = rel_spread * (1 + max(0, lag1_autocorr))`, lower is
//! whiter. The score ranks candidates; it does not classify them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub mean: f64,
    pub std_dev: f64,
    pub lag1_autocorr: f64,
    pub rel_spread: f64,
    pub whiteness_score: f64,
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|x| *x == xs[0])
}

fn sample_std(xs: &[f64]) -> f64 {
    if is_constant(xs) {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Lag-1 sample autocorrelation; zero for a constant series.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    if is_constant(xs) {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let denom: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    (num / denom).clamp(-1.0, 1.0)
}

/// Diagnoses `residuals` relative to the `dependent` series they came from.
///
/// The spread is normalized by the sample standard deviation of
/// `dependent`. When `dependent` is flat, its root mean square is used
/// instead, and when that is zero too the spread is left absolute.
pub fn diagnose(residuals: &[f64], dependent: &[f64]) -> Result<ResidualDiagnostics> {
    if residuals.len() != dependent.len() {
        return Err(Error::DimensionMismatch {
            expected: dependent.len(),
            actual: residuals.len(),
        });
    }
    if residuals.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            actual: residuals.len(),
        });
    }
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let std_dev = sample_std(residuals);
    let lag1_autocorr = lag1_autocorrelation(residuals);

    let dep_std = sample_std(dependent);
    let scale = if dep_std > 0.0 {
        dep_std
    } else {
        let rms = (dependent.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        if rms > 0.0 {
            rms
        } else {
            1.0
        }
    };
    let rel_spread = std_dev / scale;
    let whiteness_score = rel_spread * (1.0 + lag1_autocorr.max(0.0));
    if !(mean.is_finite() && whiteness_score.is_finite()) {
        return Err(Error::Numeric("non-finite residual diagnostics".into()));
    }
    Ok(ResidualDiagnostics {
        mean,
        std_dev,
        lag1_autocorr,
        rel_spread,
        whiteness_score,
    })
}

/// Labels ordered by ascending whiteness score, then ascending relative
/// spread, then input order.
pub fn rank_by_whiteness<L: Clone>(diags: &[(L, ResidualDiagnostics)]) -> Vec<L> {
    let mut order: Vec<usize> = (0..diags.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&diags[a].1, &diags[b].1);
        da.whiteness_score
            .total_cmp(&db.whiteness_score)
            .then(da.rel_spread.total_cmp(&db.rel_spread))
    });
    order.into_iter().map(|i| diags[i].0.clone()).collect()
}
