//! Road profiles sampled along `x = s t^(-m) e^(lambda* t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracop::RoadGrid;

use super::level_set::EDGE_CELLS;

pub const SCALE_MIN: f64 = 0.25;
pub const SCALE_MAX: f64 = 4.0;
pub const SCALE_POINTS: usize = 33;
/// Length of the scoring window, ending at the last frame.
pub const LATE_WINDOW: f64 = 10.0;

/// Log-spaced scales on `[SCALE_MIN, SCALE_MAX]`.
pub fn scale_grid() -> Vec<f64> {
    let (a, b) = (SCALE_MIN.ln(), SCALE_MAX.ln());
    (0..SCALE_POINTS).map(|k| (a + (b - a) * k as f64 / (SCALE_POINTS - 1) as f64).exp()).collect()
}

/// `(t_end - LATE_WINDOW, t_end)`.
pub fn late_window(t_end: f64) -> (f64, f64) {
    ((t_end - LATE_WINDOW).max(0.0), t_end)
}

/// `u` at `x >= 0`, interpolated in `(ln x, ln u)` when both logs exist.
/// `None` past the last trusted node.
pub fn sample_road(grid: &RoadGrid, u: &[f64], x: f64) -> Option<f64> {
    let x = x.abs();
    let dx = grid.dx();
    let centre = grid.nx / 2;
    let f = x / dx;
    let i = centre + f.floor() as usize;
    if !f.is_finite() || i + 1 + EDGE_CELLS >= grid.nx {
        return None;
    }
    let (x0, x1) = (grid.x(i), grid.x(i + 1));
    let (u0, u1) = (u[i], u[i + 1]);
    if x0 > 0.0 && u0 > 0.0 && u1 > 0.0 {
        let s = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
        Some((u0.ln() + s * (u1.ln() - u0.ln())).exp())
    } else {
        Some(u0 + (x - x0) / dx * (u1 - u0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormTable {
    pub m: f64,
    pub lambda_star: f64,
    pub scales: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[k][j]`: time `k`, scale `j`; NaN where flagged.
    pub values: Vec<Vec<f64>>,
    /// Outside the trusted domain or not positive.
    pub flagged: Vec<Vec<bool>>,
    /// Per scale, `max ln u - min ln u` over the window.
    pub variation: Vec<f64>,
    /// Max of `variation`.
    pub score: f64,
    pub window: (f64, f64),
}

impl RenormTable {
    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().flatten().filter(|f| **f).count()
    }
}

/// Samples every frame at `s t^(-m) e^(lambda* t)` and scores the window.
/// Frames are `(t, u)` with `t > 0`. The variation is taken on `ln u`: for
/// small `m` the sample points run into the algebraic tail, where absolute
/// changes vanish while the drift does not.
pub fn renormalized_samples(
    grid: &RoadGrid,
    frames: &[(f64, &[f64])],
    m: f64,
    lambda_star: f64,
    scales: &[f64],
    window: (f64, f64),
) -> Result<RenormTable> {
    if !(window.0 < window.1) {
        return Err(Error::InvalidParam(format!("empty window {window:?}")));
    }
    if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParam("scales must be positive".into()));
    }
    let mut times = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut flagged = Vec::new();
    for &(t, u) in frames.iter().filter(|(t, _)| *t > 0.0) {
        if u.len() != grid.nx {
            return Err(Error::LengthMismatch { expected: grid.nx, got: u.len() });
        }
        let anchor = t.powf(-m) * (lambda_star * t).exp();
        let row: Vec<Option<f64>> = scales.iter().map(|s| sample_road(grid, u, s * anchor).filter(|v| *v > 0.0)).collect();
        times.push(t);
        flagged.push(row.iter().map(Option::is_none).collect());
        values.push(row.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect());
    }
    let mut variation = vec![f64::NAN; scales.len()];
    for (j, var) in variation.iter_mut().enumerate() {
        let col = times
            .iter()
            .zip(&values)
            .filter(|(t, _)| **t >= window.0 && **t <= window.1)
            .map(|(_, row)| row[j])
            .filter(|v| !v.is_nan())
            .map(f64::ln);
        let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if hi >= lo {
            *var = hi - lo;
        }
    }
    let score = variation.iter().filter(|v| !v.is_nan()).cloned().fold(f64::NAN, f64::max);
    if score.is_nan() {
        return Err(Error::InsufficientData(format!("no resolved samples in window {window:?} for m={m}")));
    }
    Ok(RenormTable { m, lambda_star, scales: scales.to_vec(), times, values, flagged, variation, score, window })
}
