//! Least-squares fits of level-set drift.

use serde::{Deserialize, Serialize};

use crate::diagnostics::level_set::LevelSetTrace;
use crate::error::{Error, Result};

/// Smallest ratio `t_last / t_first` accepted by [`fit_drift_exponent`].
pub const MIN_TIME_SPAN: f64 = 2.5;
pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub n: usize,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<Line> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::LengthMismatch { expected: n, got: ys.len() });
    }
    if n < 3 {
        return Err(Error::InsufficientData(format!("{n} points for a line fit")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let sigma2 = sse / (nf - 2.0);
    Ok(Line { slope, intercept, slope_stderr: (sigma2 / sxx).sqrt(), intercept_stderr: (sigma2 * (1.0 / nf + mx * mx / sxx)).sqrt(), n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftFit {
    /// Slope of `ln x - lambda_star t` against `ln t`.
    pub m_hat: f64,
    pub stderr: f64,
    pub samples: usize,
    pub t_first: f64,
    pub t_last: f64,
}

impl DriftFit {
    /// Distance between two fits in units of their combined standard error.
    pub fn separation(&self, other: &DriftFit) -> f64 {
        let se = (self.stderr * self.stderr + other.stderr * other.stderr).sqrt();
        (self.m_hat - other.m_hat).abs() / se
    }
}

/// Fit `ln x_lambda(t) = lambda_star t + m ln t + c` over the valid samples
/// with `t` inside `window` (all samples when `None`).
pub fn fit_drift_exponent(trace: &LevelSetTrace, lambda_star: f64, window: Option<(f64, f64)>) -> Result<DriftFit> {
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for k in 0..trace.times.len() {
        let t = trace.times[k];
        if trace.valid[k] && t >= lo && t <= hi && t > 0.0 && trace.positions[k] > 0.0 {
            ts.push(t.ln());
            ys.push(trace.positions[k].ln() - lambda_star * t);
        }
    }
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!("{} valid samples in the window, need {MIN_FIT_SAMPLES}", ts.len())));
    }
    let (t_first, t_last) = (ts[0].exp(), ts[ts.len() - 1].exp());
    if t_last < MIN_TIME_SPAN * t_first * (1.0 - 1e-12) {
        return Err(Error::InsufficientData(format!("samples span t in [{t_first}, {t_last}], need a factor {MIN_TIME_SPAN}")));
    }
    let line = ols(&ts, &ys)?;
    Ok(DriftFit { m_hat: line.slope, stderr: line.slope_stderr, samples: line.n, t_first, t_last })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let l = ols(&xs, &ys).unwrap();
        assert!((l.slope + 0.5).abs() < 1e-14);
        assert!((l.intercept - 2.0).abs() < 1e-13);
        assert!(l.slope_stderr < 1e-12);
    }

    #[test]
    fn planted_drift() {
        let times: Vec<f64> = (0..=30).map(|k| 4.0 + 0.5 * k as f64).collect();
        let trace = LevelSetTrace {
            lambda: 0.1,
            positions: times.iter().map(|t| (0.5 * t).exp() * t.powf(-0.75)).collect(),
            valid: vec![true; times.len()],
            times,
        };
        let fit = fit_drift_exponent(&trace, 0.5, None).unwrap();
        assert!((fit.m_hat + 0.75).abs() < 1e-12);
        assert!(fit_drift_exponent(&trace, 0.5, Some((4.0, 6.0))).is_err());
    }
}
