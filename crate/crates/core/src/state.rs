//! Paired road/field densities at one time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracop::RoadGrid;
use crate::params::ModelParams;

/// Relative slack on the a priori bounds.
pub const BOUND_TOL: f64 = 1e-6;
/// Relative tolerance of the even-symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Half-width of the initial-datum mollifier, in road cells.
pub const MOLLIFIER_CELLS: f64 = 2.0;

/// Road `u(x_i)` on `x_i = -X + i dx` and field `v(x_i, y_j)` on `y_j = j dy`,
/// `j < ny`; the field vanishes at `y = ny dy = Y`.
///
/// The field is stored row-major by height: `v[j * nx + i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadFieldState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

/// Box of height `delta0` on `(-x0, x0)` smoothed by a linear ramp of width `2 dx`.
pub fn mollified_box(grid: &RoadGrid, delta0: f64, x0: f64) -> Vec<f64> {
    let dx = grid.dx();
    (0..grid.nx)
        .map(|i| {
            let x = grid.x(i);
            delta0 * ((x0 - x.abs()) / (MOLLIFIER_CELLS * dx) + 0.5).clamp(0.0, 1.0)
        })
        .collect()
}

impl RoadFieldState {
    pub fn zeros(nx: usize, ny: usize, dx: f64, dy: f64) -> Self {
        Self { t: 0.0, u: vec![0.0; nx], v: vec![0.0; nx * ny], nx, ny, dx, dy }
    }

    /// Initial datum: mollified box on the road, empty field.
    pub fn initial(p: &ModelParams) -> Self {
        let mut s = Self::zeros(p.nx, p.ny, p.dx(), p.dy());
        s.u = mollified_box(&s.road_grid(), p.delta0, p.x0_init);
        s
    }

    /// Constant state `(u, v)`.
    pub fn uniform(p: &ModelParams, u: f64, v: f64) -> Self {
        let mut s = Self::zeros(p.nx, p.ny, p.dx(), p.dy());
        s.u.fill(u);
        s.v.fill(v);
        s
    }

    pub fn road_grid(&self) -> RoadGrid {
        RoadGrid::new(self.nx, 0.5 * self.dx * self.nx as f64)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.road_grid().x(i)
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.v[j * self.nx..(j + 1) * self.nx]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.v[j * self.nx..(j + 1) * self.nx]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.v[j * self.nx + i]
    }

    /// Field row nearest to height `y`, linearly interpolated.
    pub fn slice_at_height(&self, y: f64) -> Vec<f64> {
        let pos = (y / self.dy).max(0.0);
        let j = pos.floor() as usize;
        if j + 1 >= self.ny {
            return if j + 1 == self.ny {
                let s = pos - j as f64;
                self.row(j).iter().map(|v| v * (1.0 - s)).collect()
            } else {
                vec![0.0; self.nx]
            };
        }
        let s = pos - j as f64;
        self.row(j).iter().zip(self.row(j + 1)).map(|(a, b)| a + s * (b - a)).collect()
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.u.len() != self.nx {
            return Err(Error::LengthMismatch { expected: self.nx, got: self.u.len() });
        }
        if self.v.len() != self.nx * self.ny {
            return Err(Error::LengthMismatch { expected: self.nx * self.ny, got: self.v.len() });
        }
        Ok(())
    }

    pub fn road_mass(&self) -> f64 {
        self.u.iter().sum::<f64>() * self.dx
    }

    /// Trapezoid in `y` (half weight on the exchange row).
    pub fn field_mass(&self) -> f64 {
        let mut total = 0.0;
        for j in 0..self.ny {
            let w = if j == 0 { 0.5 } else { 1.0 };
            total += w * self.row(j).iter().sum::<f64>();
        }
        total * self.dx * self.dy
    }

    pub fn total_mass(&self) -> f64 {
        self.road_mass() + self.field_mass()
    }

    pub fn max_u(&self) -> f64 {
        self.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_v(&self) -> f64 {
        self.v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max |u(x) - u(-x)|` and the worst field row, relative to the sup of each.
    pub fn asymmetry(&self) -> f64 {
        let grid = self.road_grid();
        let rel = |vals: &[f64]| {
            let scale = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            (0..self.nx).map(|i| (vals[i] - vals[grid.mirror(i)]).abs()).fold(0.0, f64::max) / scale
        };
        let mut worst = rel(&self.u);
        for j in 0..self.ny {
            worst = worst.max(rel(self.row(j)));
        }
        worst
    }

    /// Nonnegativity and the a priori bounds `u <= max(delta0, nu v0 / mu)`,
    /// `v <= max(delta0, v0)`.
    pub fn check_bounds(&self, p: &ModelParams) -> Result<()> {
        if let Some(i) = self.u.iter().chain(&self.v).position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let (u_eq, v_eq) = p.equilibrium()?;
        let u_cap = p.delta0.max(u_eq) * (1.0 + BOUND_TOL);
        let v_cap = p.delta0.max(v_eq) * (1.0 + BOUND_TOL);
        let (umin, umax) = min_max(&self.u);
        let (vmin, vmax) = min_max(&self.v);
        if umin < 0.0 || vmin < 0.0 {
            return Err(Error::Instability { t: self.t, detail: format!("negative density: min u={umin:e}, min v={vmin:e}") });
        }
        if umax > u_cap || vmax > v_cap {
            return Err(Error::Instability {
                t: self.t,
                detail: format!("bound exceeded: max u={umax} (cap {u_cap}), max v={vmax} (cap {v_cap})"),
            });
        }
        Ok(())
    }
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_is_even_and_mass_matches() {
        let grid = RoadGrid::new(400, 20.0);
        let u = mollified_box(&grid, 0.5, 3.0);
        for i in 1..400 {
            assert_eq!(u[i], u[grid.mirror(i)]);
        }
        let mass: f64 = u.iter().sum::<f64>() * grid.dx();
        assert!((mass - 0.5 * 6.0).abs() < 1e-12);
        assert_eq!(u[200], 0.5);
    }

    #[test]
    fn trapezoid_field_mass() {
        let mut s = RoadFieldState::zeros(8, 8, 0.5, 0.25);
        s.v.fill(1.0);
        assert!((s.field_mass() - 7.5 * 0.25 * 8.0 * 0.5).abs() < 1e-14);
    }

    #[test]
    fn slices_interpolate() {
        let mut s = RoadFieldState::zeros(8, 8, 1.0, 0.5);
        for j in 0..8 {
            s.row_mut(j).fill(j as f64);
        }
        assert_eq!(s.slice_at_height(1.0)[3], 2.0);
        assert_eq!(s.slice_at_height(0.75)[0], 1.5);
        assert_eq!(s.slice_at_height(3.75)[0], 3.5);
    }
}
