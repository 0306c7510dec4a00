//! Half-plane reaction-diffusion on the truncated strip `[-X, X) x [0, Y)`.
//!
//! Peaceman-Rachford ADI for the Laplacian, Strang-split reaction. The
//! bottom row `y = 0` either exchanges with the road through
//! `-v_y = mu u - nu v` (ghost-point elimination) or is held at zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::reaction::Reaction;
use crate::tridiag::Tridiagonal;

/// Values in `[-NEG_TOL, 0)` are rounding and get clipped; anything lower is an instability.
pub const NEG_TOL: f64 = 1e-12;
const COLUMN_BLOCK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BottomBoundary {
    /// `-v_y = mu u - nu v`; `mu = nu = 0` gives a no-flux wall.
    Robin {
        mu: f64,
        nu: f64,
    },
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarBoundary {
    Dirichlet,
    /// Zero flux through the cell face beyond the last node.
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripConfig {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    pub bottom: BottomBoundary,
    pub top: FarBoundary,
    pub lateral: FarBoundary,
    pub reaction: Reaction,
}

impl StripConfig {
    /// Strip matching `p` with homogeneous Dirichlet far boundaries.
    pub fn from_params(p: &ModelParams, bottom: BottomBoundary, reaction: Reaction) -> Self {
        Self {
            nx: p.nx,
            ny: p.ny,
            dx: p.dx(),
            dy: p.dy(),
            dt: p.dt,
            bottom,
            top: FarBoundary::Dirichlet,
            lateral: FarBoundary::Dirichlet,
            reaction,
        }
    }

    /// Largest `dt` keeping every half step monotone.
    pub fn positivity_limit(&self) -> f64 {
        let robin = match self.bottom {
            BottomBoundary::Robin { nu, .. } => 1.0 + nu * self.dy,
            BottomBoundary::Dirichlet => 1.0,
        };
        (self.dx * self.dx).min(self.dy * self.dy / robin)
    }
}

/// Immutable factorizations for one `(grid, dt, boundary)` combination.
#[derive(Debug, Clone)]
pub struct StripScheme {
    cfg: StripConfig,
    rx: f64,
    ry: f64,
    x_solver: Tridiagonal,
    y_solver: Tridiagonal,
}

fn second_difference_1d(n: usize, r: f64, far_lo: Option<FarBoundary>, far_hi: FarBoundary) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    // matrix of I - r D on n nodes; `far_lo = None` pins node 0
    let mut lower = vec![-r; n];
    let mut diag = vec![1.0 + 2.0 * r; n];
    let mut upper = vec![-r; n];
    match far_lo {
        None => {
            diag[0] = 1.0;
            upper[0] = 0.0;
        }
        Some(FarBoundary::Neumann) => diag[0] = 1.0 + r,
        Some(FarBoundary::Dirichlet) => {}
    }
    if far_hi == FarBoundary::Neumann {
        diag[n - 1] = 1.0 + r;
    }
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    (lower, diag, upper)
}

impl StripScheme {
    pub fn new(cfg: StripConfig) -> Result<Self> {
        if cfg.nx < 8 || cfg.ny < 8 {
            return Err(Error::InvalidParam(format!("strip grid too small: {}x{}", cfg.nx, cfg.ny)));
        }
        if !(cfg.dt > 0.0 && cfg.dx > 0.0 && cfg.dy > 0.0) {
            return Err(Error::InvalidParam("dt, dx, dy must be > 0".into()));
        }
        let rx = 0.5 * cfg.dt / (cfg.dx * cfg.dx);
        let ry = 0.5 * cfg.dt / (cfg.dy * cfg.dy);
        // lateral Dirichlet pins x = -X (node 0); x = +X is its periodic image
        let lateral_lo = match cfg.lateral {
            FarBoundary::Dirichlet => None,
            FarBoundary::Neumann => Some(FarBoundary::Neumann),
        };
        let (l, d, u) = second_difference_1d(cfg.nx, rx, lateral_lo, cfg.lateral);
        let x_solver = Tridiagonal::new(&l, &d, &u);
        let (l, mut d, mut u) = match cfg.bottom {
            BottomBoundary::Dirichlet => second_difference_1d(cfg.ny, ry, None, cfg.top),
            BottomBoundary::Robin { .. } => second_difference_1d(cfg.ny, ry, Some(FarBoundary::Dirichlet), cfg.top),
        };
        if let BottomBoundary::Robin { nu, .. } = cfg.bottom {
            d[0] = 1.0 + ry * (2.0 + 2.0 * cfg.dy * nu);
            u[0] = -2.0 * ry;
        }
        let y_solver = Tridiagonal::new(&l, &d, &u);
        Ok(Self { cfg, rx, ry, x_solver, y_solver })
    }

    pub fn config(&self) -> &StripConfig {
        &self.cfg
    }

    pub fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn check(&self, v: &[f64], u: &[f64]) -> Result<()> {
        let (nx, ny) = (self.cfg.nx, self.cfg.ny);
        if v.len() != nx * ny {
            return Err(Error::LengthMismatch { expected: nx * ny, got: v.len() });
        }
        if matches!(self.cfg.bottom, BottomBoundary::Robin { .. }) && u.len() != nx {
            return Err(Error::LengthMismatch { expected: nx, got: u.len() });
        }
        Ok(())
    }

    /// `out = v + ry * Ly v (+ source)` for one row `j`.
    fn explicit_y_row(&self, v: &[f64], u: &[f64], j: usize, out: &mut [f64]) {
        let nx = self.cfg.nx;
        let ry = self.ry;
        let cur = &v[j * nx..(j + 1) * nx];
        let above: Option<&[f64]> = if j + 1 < self.cfg.ny { Some(&v[(j + 1) * nx..(j + 2) * nx]) } else { None };
        let top_neumann = self.cfg.top == FarBoundary::Neumann;
        if j == 0 {
            match self.cfg.bottom {
                BottomBoundary::Dirichlet => out.fill(0.0),
                BottomBoundary::Robin { mu, nu } => {
                    let above = above.expect("ny >= 8");
                    let (c0, c1) = (1.0 - ry * (2.0 + 2.0 * self.cfg.dy * nu), 2.0 * ry);
                    let src = self.cfg.dt * mu / self.cfg.dy;
                    for i in 0..nx {
                        out[i] = c0 * cur[i] + c1 * above[i] + src * u[i];
                    }
                }
            }
            return;
        }
        let below = &v[(j - 1) * nx..j * nx];
        match above {
            Some(above) => {
                for i in 0..nx {
                    out[i] = cur[i] + ry * (below[i] - 2.0 * cur[i] + above[i]);
                }
            }
            None => {
                let keep = if top_neumann { 1.0 } else { 0.0 };
                for i in 0..nx {
                    out[i] = cur[i] + ry * (below[i] - (2.0 - keep) * cur[i]);
                }
            }
        }
    }

    /// `out = w + rx * Dxx w` for one row.
    fn explicit_x_row(&self, w: &[f64], out: &mut [f64]) {
        let nx = self.cfg.nx;
        let rx = self.rx;
        for i in 1..nx - 1 {
            out[i] = w[i] + rx * (w[i - 1] - 2.0 * w[i] + w[i + 1]);
        }
        match self.cfg.lateral {
            FarBoundary::Dirichlet => {
                out[0] = 0.0;
                out[nx - 1] = w[nx - 1] + rx * (w[nx - 2] - 2.0 * w[nx - 1]);
            }
            FarBoundary::Neumann => {
                out[0] = w[0] + rx * (w[1] - w[0]);
                out[nx - 1] = w[nx - 1] + rx * (w[nx - 2] - w[nx - 1]);
            }
        }
    }

    fn react(&self, v: &mut [f64], h: f64) {
        let reaction = self.cfg.reaction;
        if reaction == Reaction::None {
            return;
        }
        v.par_chunks_mut(self.cfg.nx).for_each(|row| reaction.advance_slice(row, h));
    }

    /// Advance `v` by one step with road density `u` as the Robin source
    /// (ignored for a Dirichlet bottom). `scratch` is resized as needed.
    pub fn step_with(&self, v: &mut [f64], u: &[f64], scratch: &mut Vec<f64>) -> Result<()> {
        self.check(v, u)?;
        let (nx, ny, dt) = (self.cfg.nx, self.cfg.ny, self.cfg.dt);
        scratch.resize(nx * ny, 0.0);
        self.react(v, 0.5 * dt);

        // first half: explicit y, implicit x
        {
            let v_ro: &[f64] = v;
            scratch.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
                self.explicit_y_row(v_ro, u, j, row);
                if self.cfg.lateral == FarBoundary::Dirichlet {
                    row[0] = 0.0;
                }
                if !(j == 0 && self.cfg.bottom == BottomBoundary::Dirichlet) {
                    self.x_solver.solve_in_place(row);
                }
            });
        }
        // second half: explicit x, implicit y
        {
            let w: &[f64] = scratch;
            let robin = match self.cfg.bottom {
                BottomBoundary::Robin { mu, .. } => Some(dt * mu / self.cfg.dy),
                BottomBoundary::Dirichlet => None,
            };
            v.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
                self.explicit_x_row(&w[j * nx..(j + 1) * nx], row);
                if j == 0 {
                    match robin {
                        Some(src) => row.iter_mut().zip(u).for_each(|(r, ui)| *r += src * ui),
                        None => row.fill(0.0),
                    }
                }
                if self.cfg.lateral == FarBoundary::Dirichlet {
                    row[0] = 0.0;
                }
            });
            let nblocks = nx.div_ceil(COLUMN_BLOCK);
            let mut blocks: Vec<Vec<&mut [f64]>> = (0..nblocks).map(|_| Vec::with_capacity(ny)).collect();
            for row in v.chunks_mut(nx) {
                for (b, chunk) in row.chunks_mut(COLUMN_BLOCK).enumerate() {
                    blocks[b].push(chunk);
                }
            }
            blocks.par_iter_mut().for_each(|rows| self.y_solver.solve_batched(rows));
        }
        self.react(v, 0.5 * dt);
        clip_negatives(v, "field")
    }

    pub fn step(&self, v: &mut [f64], u: &[f64]) -> Result<()> {
        let mut scratch = Vec::new();
        self.step_with(v, u, &mut scratch)
    }
}

/// Clip rounding-level negatives, report anything worse.
pub(crate) fn clip_negatives(v: &mut [f64], what: &str) -> Result<()> {
    let bad = v
        .par_iter_mut()
        .enumerate()
        .map(|(i, x)| {
            if x.is_nan() {
                Some((i, *x))
            } else if *x < 0.0 {
                if *x >= -NEG_TOL {
                    *x = 0.0;
                    None
                } else {
                    Some((i, *x))
                }
            } else {
                None
            }
        })
        .reduce(|| None, |a, b| a.or(b));
    match bad {
        None => Ok(()),
        Some((i, x)) => Err(Error::Instability { t: f64::NAN, detail: format!("{what} value {x:e} at index {i}") }),
    }
}

/// One field step returning a new array.
pub fn step_field(scheme: &StripScheme, v: &[f64], u_boundary: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    scheme.step(&mut out, u_boundary)?;
    Ok(out)
}

/// The 1D problem `v_t = v_yy + f(v)` on `y_j = j dy`, `j < n`, with
/// `v(0) = 0` and `v(n dy) = 0`: Crank-Nicolson in `y` (the `y`-sweep of the
/// strip scheme) with Strang-split reaction.
#[derive(Debug, Clone)]
pub struct ColumnSolver {
    n: usize,
    dy: f64,
    dt: f64,
    r: f64,
    reaction: Reaction,
    solver: Tridiagonal,
    top_value: f64,
}

impl ColumnSolver {
    pub fn new(n: usize, dy: f64, dt: f64, reaction: Reaction) -> Result<Self> {
        if n < 8 || !(dy > 0.0 && dt > 0.0) {
            return Err(Error::InvalidParam(format!("column needs n >= 8, dy, dt > 0 (n={n})")));
        }
        let r = 0.5 * dt / (dy * dy);
        let (l, d, u) = second_difference_1d(n, r, None, FarBoundary::Dirichlet);
        Ok(Self { n, dy, dt, r, reaction, solver: Tridiagonal::new(&l, &d, &u), top_value: 0.0 })
    }

    /// Hold `v(n dy)` at `value` instead of zero.
    pub fn with_top_value(mut self, value: f64) -> Self {
        self.top_value = value;
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.dy).collect()
    }

    /// Same column with a different step.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Ok(Self::new(self.n, self.dy, dt, self.reaction)?.with_top_value(self.top_value))
    }

    pub fn step(&self, v: &mut [f64], scratch: &mut Vec<f64>) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: v.len() });
        }
        let n = self.n;
        self.reaction.advance_slice(v, 0.5 * self.dt);
        scratch.clear();
        scratch.extend_from_slice(v);
        let w = scratch;
        v[0] = 0.0;
        for j in 1..n {
            let above = if j + 1 < n { w[j + 1] } else { self.top_value };
            v[j] = w[j] + self.r * (w[j - 1] - 2.0 * w[j] + above);
        }
        v[n - 1] += self.r * self.top_value;
        self.solver.solve_in_place(v);
        self.reaction.advance_slice(v, 0.5 * self.dt);
        clip_negatives(v, "column")
    }
}

/// One step of the 1D Dirichlet problem.
pub fn dirichlet_1d_column_solve(solver: &ColumnSolver, column: &[f64]) -> Result<Vec<f64>> {
    let mut out = column.to_vec();
    solver.step(&mut out, &mut Vec::new())?;
    Ok(out)
}
