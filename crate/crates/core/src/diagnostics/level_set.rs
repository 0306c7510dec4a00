//! Level-set positions of even road profiles.

use serde::{Deserialize, Serialize};

use crate::fracop::RoadGrid;

/// Crossings closer than this many cells to `x = X` are discarded.
pub const EDGE_CELLS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Reading {
    Valid(f64),
    /// `lambda >= max u`.
    AboveMax,
    /// Crossing too close to the truncation boundary.
    NearBoundary,
}

impl Reading {
    pub fn position(&self) -> Option<f64> {
        match self {
            Reading::Valid(x) => Some(*x),
            _ => None,
        }
    }
}

/// Rightmost downcrossing of `lambda` on `x >= 0`, interpolated linearly in
/// `(ln x, ln u)`; plain linear interpolation when a log is unavailable.
pub fn track_level_set(grid: &RoadGrid, u: &[f64], lambda: f64) -> Reading {
    let n = grid.nx;
    let centre = n / 2;
    let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lambda < max) {
        return Reading::AboveMax;
    }
    let Some(i) = (centre..n).rev().find(|&i| u[i] >= lambda) else {
        return Reading::AboveMax;
    };
    if i + 1 + EDGE_CELLS >= n {
        return Reading::NearBoundary;
    }
    let (x0, x1) = (grid.x(i), grid.x(i + 1));
    let (u0, u1) = (u[i], u[i + 1]);
    if u0 == lambda {
        return Reading::Valid(x0);
    }
    if x0 > 0.0 && u1 > 0.0 {
        let s = (lambda.ln() - u0.ln()) / (u1.ln() - u0.ln());
        Reading::Valid((x0.ln() + s * (x1.ln() - x0.ln())).exp())
    } else {
        Reading::Valid(x0 + (lambda - u0) / (u1 - u0) * (x1 - x0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetTrace {
    pub lambda: f64,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub valid: Vec<bool>,
}

impl LevelSetTrace {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, times: Vec::new(), positions: Vec::new(), valid: Vec::new() }
    }

    pub fn push(&mut self, t: f64, reading: Reading) {
        self.times.push(t);
        match reading {
            Reading::Valid(x) => {
                self.positions.push(x);
                self.valid.push(true);
            }
            _ => {
                self.positions.push(f64::NAN);
                self.valid.push(false);
            }
        }
    }

    pub fn record(&mut self, grid: &RoadGrid, t: f64, u: &[f64]) {
        self.push(t, track_level_set(grid, u, self.lambda));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Valid positions nondecreasing for `t >= t_from`.
    pub fn increasing_after(&self, t_from: f64) -> bool {
        let late: Vec<f64> = (0..self.len()).filter(|&k| self.valid[k] && self.times[k] >= t_from).map(|k| self.positions[k]).collect();
        late.windows(2).all(|w| w[1] >= w[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_profile() {
        let grid = RoadGrid::new(80, 20.0);
        let u: Vec<f64> = grid.xs().iter().map(|x| (1.0 - x.abs() / 10.0).max(0.0)).collect();
        assert_eq!(track_level_set(&grid, &u, 0.5), Reading::Valid(5.0));
        assert_eq!(track_level_set(&grid, &u, 2.0), Reading::AboveMax);
    }

    #[test]
    fn power_law_is_exact() {
        let grid = RoadGrid::new(1000, 50.0);
        let u: Vec<f64> = grid.xs().iter().map(|x| if *x == 0.0 { 1e9 } else { x.powi(-2) }).collect();
        let x = track_level_set(&grid, &u, 0.01).position().unwrap();
        assert!((x - 10.0).abs() <= 1e-6);
        let y = track_level_set(&grid, &u, 0.01 * 1.1).position().unwrap();
        assert!((y - 10.0 / 1.1f64.sqrt()).abs() <= 1e-9);
    }

    #[test]
    fn edge_guard() {
        let grid = RoadGrid::new(100, 10.0);
        let u: Vec<f64> = grid.xs().iter().map(|x| 1.0 - 0.05 * x.abs()).collect();
        assert_eq!(track_level_set(&grid, &u, 0.51), Reading::NearBoundary);
    }
}
