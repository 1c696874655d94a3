use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMode {
    /// `log(metric) ≈ a + k·log(ρ)`.
    Linear,
    /// `k·metric ≈ a + b·k`; a bounded `k·metric` means `O(1/k)`.
    Sublinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `ρ` in linear mode, the slope of `k·metric` in sublinear mode.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares of `y` on `x`: `(slope, intercept, R²)`.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

/// Fits a rate to `(k, metric)` samples.
pub fn fit_rate(ks: &[usize], metric: &[f64], mode: FitMode) -> Result<RateFit> {
    if ks.len() != metric.len() {
        return Err(Error::InvalidParameter("k and metric lengths differ".into()));
    }
    if ks.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints { needed: MIN_FIT_POINTS, got: ks.len() });
    }
    if let Some(v) = metric.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("metric values must be positive and finite, got {v}")));
    }
    let x: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let fit = match mode {
        FitMode::Linear => {
            let y: Vec<f64> = metric.iter().map(|v| v.ln()).collect();
            let (s, i, r2) = ols(&x, &y);
            RateFit { rate: s.exp(), intercept: i, r_squared: r2, points: x.len() }
        }
        FitMode::Sublinear => {
            let y: Vec<f64> = x.iter().zip(metric).map(|(k, v)| k * v).collect();
            let (s, i, r2) = ols(&x, &y);
            RateFit { rate: s, intercept: i, r_squared: r2, points: x.len() }
        }
    };
    Ok(fit)
}

/// Fits over records with `k0 ≤ k ≤ k1`.
pub fn fit_window(ks: &[usize], metric: &[f64], window: (usize, usize), mode: FitMode) -> Result<RateFit> {
    let (k0, k1) = window;
    if k0 > k1 {
        return Err(Error::InvalidParameter(format!("empty window ({k0}, {k1})")));
    }
    let (wk, wm): (Vec<usize>, Vec<f64>) =
        ks.iter().zip(metric).filter(|(k, _)| (k0..=k1).contains(*k)).map(|(k, m)| (*k, *m)).unzip();
    fit_rate(&wk, &wm, mode)
}
