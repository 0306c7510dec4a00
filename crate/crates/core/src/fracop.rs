//! The fractional Laplacian `(-d_xx)^alpha` on the truncated road.
//!
//! Two discretizations share one interface:
//!
//! * **spectral**: periodic extension of `[-X, X)`, Fourier multiplier
//!   `|xi|^(2 alpha)` applied with an FFT;
//! * **quadrature**: the singular integral
//!   `c_alpha * int_0^inf (2u(x) - u(x+h) - u(x-h)) h^(-1-2 alpha) dh`
//!   evaluated by product integration against the weight `h^(1-2 alpha)`, with
//!   the field extended by its value at `x = -X` and the tail closed analytically.
//!
//! The quadrature route is `O(nx^2)` and exists to cross-check the spectral one.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Uniform road grid `x_i = -X + i dx`, `dx = 2X / nx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadGrid {
    pub nx: usize,
    pub half_width: f64,
}

impl RoadGrid {
    pub fn new(nx: usize, half_width: f64) -> Self {
        Self { nx, half_width }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.nx as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * self.nx as f64) * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// Index of the mirror point `-x_i` on the periodic grid.
    pub fn mirror(&self, i: usize) -> usize {
        (self.nx - i) % self.nx
    }

    /// Signed integer wavenumber of FFT bin `k`.
    fn wavenumber(&self, k: usize) -> f64 {
        let kk = if k <= self.nx / 2 { k as f64 } else { k as f64 - self.nx as f64 };
        std::f64::consts::PI * kk / self.half_width
    }
}

/// Normalizing constant of the singular integral giving symbol `|xi|^(2 alpha)`:
/// `c_alpha = 4^alpha Gamma(1/2 + alpha) / (sqrt(pi) |Gamma(-alpha)|)`.
pub fn fractional_constant(alpha: f64) -> f64 {
    // |Gamma(-alpha)| = Gamma(1 - alpha) / alpha on (0, 1)
    let abs_gamma_neg = gamma(1.0 - alpha) / alpha;
    4f64.powf(alpha) * gamma(0.5 + alpha) / (std::f64::consts::PI.sqrt() * abs_gamma_neg)
}

/// Fourier symbol used by the spectral route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FracSymbol {
    /// `|xi|^(2 alpha)`.
    Exact,
    /// `(2 sin(xi dx / 2) / dx)^(2 alpha)`, the lattice fractional Laplacian.
    /// Its kernel is positive with `|j|^(-1-2 alpha)` tails, so the semigroup
    /// is positivity preserving on any grid; agrees with `Exact` to `O(dx^2)`.
    Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FracMethod {
    Spectral,
    Quadrature,
}

#[derive(Clone)]
struct SpectralTables {
    kind: FracSymbol,
    symbol: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

#[derive(Clone)]
struct QuadratureTables {
    c_alpha: f64,
    /// Weight of `q(h_k)` from cell `[h_k, h_{k+1}]`.
    left_end: Vec<f64>,
    /// Weight of `q(h_{k+1})` from cell `[h_k, h_{k+1}]`.
    right_end: Vec<f64>,
}

#[derive(Clone)]
enum Tables {
    Spectral(SpectralTables),
    Quadrature(QuadratureTables),
}

/// Discrete `(-d_xx)^alpha`. Immutable after construction.
#[derive(Clone)]
pub struct FracOperator {
    alpha: f64,
    grid: RoadGrid,
    tables: Tables,
}

impl std::fmt::Debug for FracOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FracOperator").field("alpha", &self.alpha).field("grid", &self.grid).field("method", &self.method()).finish()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("alpha out of range: {alpha} not in (0,1)")))
    }
}

fn check_grid(grid: &RoadGrid) -> Result<()> {
    if grid.nx < 8 || !(grid.half_width > 0.0 && grid.half_width.is_finite()) {
        return Err(Error::InvalidParam(format!("road grid needs nx >= 8 and X > 0 (nx={}, X={})", grid.nx, grid.half_width)));
    }
    Ok(())
}

impl FracOperator {
    pub fn spectral(alpha: f64, grid: RoadGrid) -> Result<Self> {
        Self::spectral_with(alpha, grid, FracSymbol::Exact)
    }

    pub fn spectral_with(alpha: f64, grid: RoadGrid, kind: FracSymbol) -> Result<Self> {
        check_alpha(alpha)?;
        check_grid(&grid)?;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.nx);
        let inverse = planner.plan_fft_inverse(grid.nx);
        let dx = grid.dx();
        let symbol = (0..grid.nx)
            .map(|k| {
                let xi = grid.wavenumber(k).abs();
                match kind {
                    FracSymbol::Exact => xi.powf(2.0 * alpha),
                    FracSymbol::Lattice => (2.0 * (0.5 * xi * dx).sin().abs() / dx).powf(2.0 * alpha),
                }
            })
            .collect();
        Ok(Self { alpha, grid, tables: Tables::Spectral(SpectralTables { kind, symbol, forward, inverse }) })
    }

    pub fn quadrature(alpha: f64, grid: RoadGrid) -> Result<Self> {
        check_alpha(alpha)?;
        check_grid(&grid)?;
        let (left_end, right_end) = product_weights(alpha, grid.dx(), grid.nx + 2);
        Ok(Self { alpha, grid, tables: Tables::Quadrature(QuadratureTables { c_alpha: fractional_constant(alpha), left_end, right_end }) })
    }

    pub fn new(alpha: f64, grid: RoadGrid, method: FracMethod) -> Result<Self> {
        match method {
            FracMethod::Spectral => Self::spectral(alpha, grid),
            FracMethod::Quadrature => Self::quadrature(alpha, grid),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> RoadGrid {
        self.grid
    }

    /// Symbol of the spectral route; `None` for quadrature.
    pub fn symbol(&self) -> Option<FracSymbol> {
        match &self.tables {
            Tables::Spectral(tab) => Some(tab.kind),
            Tables::Quadrature(_) => None,
        }
    }

    pub fn method(&self) -> FracMethod {
        match self.tables {
            Tables::Spectral(_) => FracMethod::Spectral,
            Tables::Quadrature(_) => FracMethod::Quadrature,
        }
    }

    fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.grid.nx {
            return Err(Error::LengthMismatch { expected: self.grid.nx, got: field.len() });
        }
        Ok(())
    }

    /// `(-d_xx)^alpha field`.
    pub fn apply(&self, field: &[f64]) -> Result<Vec<f64>> {
        self.check_len(field)?;
        match &self.tables {
            Tables::Spectral(tab) => {
                let factors = &tab.symbol;
                Ok(spectral_filter(&tab.forward, &tab.inverse, field, |k| factors[k]))
            }
            Tables::Quadrature(tab) => Ok(quadrature_apply(tab, self.alpha, self.grid.dx(), field)),
        }
    }

    /// Exact integration of `w_t = -(-d_xx)^alpha w + r w` over `dt`.
    pub fn heat_step(&self, field: &[f64], dt: f64, growth_rate: f64) -> Result<Vec<f64>> {
        self.check_len(field)?;
        let mut mult = self.multiplier(dt, growth_rate)?;
        let mut out = field.to_vec();
        mult.apply_in_place(&mut out);
        Ok(out)
    }

    /// Precomputed Fourier multiplier `exp((r - |xi|^(2 alpha)) dt)` for repeated steps.
    pub fn multiplier(&self, dt: f64, growth_rate: f64) -> Result<FracMultiplier> {
        match &self.tables {
            Tables::Spectral(tab) => Ok(FracMultiplier {
                factors: tab.symbol.iter().map(|s| ((growth_rate - s) * dt).exp()).collect(),
                forward: tab.forward.clone(),
                inverse: tab.inverse.clone(),
                buffer: Vec::new(),
            }),
            Tables::Quadrature(_) => Err(Error::Unsupported("the heat multiplier needs a spectral operator".into())),
        }
    }
}

/// `(-d_xx)^alpha field`.
pub fn apply_frac_lap(op: &FracOperator, field: &[f64]) -> Result<Vec<f64>> {
    op.apply(field)
}

/// One exact step of the linear fractional heat flow with growth `r`.
pub fn frac_heat_multiplier_step(op: &FracOperator, field: &[f64], dt: f64, growth_rate: f64) -> Result<Vec<f64>> {
    op.heat_step(field, dt, growth_rate)
}

/// Cached multiplier with its own FFT workspace.
#[derive(Clone)]
pub struct FracMultiplier {
    factors: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
}

impl FracMultiplier {
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn apply_in_place(&mut self, field: &mut [f64]) {
        let n = self.factors.len();
        assert_eq!(field.len(), n);
        self.buffer.clear();
        self.buffer.extend(field.iter().map(|&x| Complex64::new(x, 0.0)));
        self.forward.process(&mut self.buffer);
        let scale = 1.0 / n as f64;
        for (c, f) in self.buffer.iter_mut().zip(&self.factors) {
            *c *= f * scale;
        }
        self.inverse.process(&mut self.buffer);
        for (x, c) in field.iter_mut().zip(&self.buffer) {
            *x = c.re;
        }
    }
}

fn spectral_filter(forward: &Arc<dyn Fft<f64>>, inverse: &Arc<dyn Fft<f64>>, field: &[f64], factor: impl Fn(usize) -> f64) -> Vec<f64> {
    let n = field.len();
    let mut buf: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward.process(&mut buf);
    let scale = 1.0 / n as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= factor(k) * scale;
    }
    inverse.process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Product weights are integrated exactly below this offset, by 8-point
/// Gauss-Legendre beyond.
pub const QUAD_EXACT_CELLS: usize = 64;

const GAUSS8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GAUSS8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Product-integration weights of the hat basis against `h^(1-2 alpha)` on
/// cells `[k dx, (k+1) dx]`, `k = 0..n`.
fn product_weights(alpha: f64, dx: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let beta = 1.0 - 2.0 * alpha;
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    for k in 0..n {
        let a = k as f64 * dx;
        let b = a + dx;
        if k < QUAD_EXACT_CELLS {
            let m0 = (b.powf(beta + 1.0) - a.powf(beta + 1.0)) / (beta + 1.0);
            let m1 = (b.powf(beta + 2.0) - a.powf(beta + 2.0)) / (beta + 2.0);
            left[k] = (b * m0 - m1) / dx;
            right[k] = (m1 - a * m0) / dx;
        } else {
            let (mid, half) = (0.5 * (a + b), 0.5 * dx);
            let (mut wl, mut wr) = (0.0, 0.0);
            for (z, w) in GAUSS8_NODES.iter().zip(GAUSS8_WEIGHTS.iter()) {
                let h = mid + half * z;
                let wh = w * half * h.powf(beta);
                wl += wh * (b - h) / dx;
                wr += wh * (h - a) / dx;
            }
            left[k] = wl;
            right[k] = wr;
        }
    }
    (left, right)
}

fn quadrature_apply(tab: &QuadratureTables, alpha: f64, dx: f64, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    // u_0 sits at x = -X, which is also the value at x = +X; beyond the grid the
    // field is frozen at that edge value
    let edge = u[0];
    let sample = |j: isize| -> f64 {
        if j <= 0 || j as usize >= n {
            edge
        } else {
            u[j as usize]
        }
    };
    let mut out = vec![0.0; n];
    let mut q = Vec::with_capacity(n + 2);
    for (i, o) in out.iter_mut().enumerate() {
        let ui = u[i];
        let reach = i.max(n - i) + 1;
        q.clear();
        q.push(0.0);
        for k in 1..=reach {
            let h = k as f64 * dx;
            let d = 2.0 * ui - (sample(i as isize + k as isize) + sample(i as isize - k as isize));
            q.push(d / (h * h));
        }
        // q is even in h: q(h) = q0 + q2 h^2 + ...
        q[0] = (4.0 * q[1] - q[2]) / 3.0;
        let mut acc = 0.0;
        for k in 0..reach {
            acc += tab.left_end[k] * q[k] + tab.right_end[k] * q[k + 1];
        }
        let far = 2.0 * (ui - edge);
        let h_reach = reach as f64 * dx;
        acc += far * h_reach.powf(-2.0 * alpha) / (2.0 * alpha);
        *o = tab.c_alpha * acc;
    }
    out
}

/// One row of the far-field kernel table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailSample {
    pub x: f64,
    pub kernel: f64,
    /// `G(t,x) |x|^(1+2 alpha) / t`.
    pub ratio: f64,
    pub far_field: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailTable {
    pub alpha: f64,
    pub t: f64,
    pub samples: Vec<TailSample>,
    /// All far-field ratios finite and positive.
    pub bounded: bool,
    /// `(max - min) / max` of the far-field ratios over the last decade of `x`.
    pub last_decade_variation: f64,
}

impl TailTable {
    pub fn flattening(&self, tolerance: f64) -> bool {
        self.bounded && self.last_decade_variation <= tolerance
    }
}

const MAX_TAIL_GRID: usize = 1 << 23;

/// Evaluate the fractional heat kernel on a wide periodic grid and tabulate
/// `G_alpha(t,x) |x|^(1+2 alpha) / t` at the requested points.
pub fn kernel_tail_check(alpha: f64, t: f64, x_samples: &[f64]) -> Result<TailTable> {
    check_alpha(alpha)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParam(format!("t={t} must be > 0")));
    }
    if x_samples.is_empty() || x_samples.iter().any(|x| !x.is_finite() || *x == 0.0) {
        return Err(Error::Precondition("samples must be finite and nonzero".into()));
    }
    let x_max = x_samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let core = t.powf(1.0 / (2.0 * alpha));
    // resolve the kernel: Nyquist modes damped by exp(-40), at least 8 cells per core width
    let xi_nyquist = (40.0 / t).powf(1.0 / (2.0 * alpha));
    let dx = (std::f64::consts::PI / xi_nyquist).min(core / 8.0);
    let half_width = 20.0 * x_max.max(core);
    let mut nx = (2.0 * half_width / dx).ceil() as usize;
    nx = smooth_size(nx);
    if nx > MAX_TAIL_GRID {
        return Err(Error::Precondition(format!("samples outside resolved domain: would need {nx} grid points")));
    }
    let grid = RoadGrid::new(nx, half_width);
    let op = FracOperator::spectral(alpha, grid)?;
    let mut delta = vec![0.0; nx];
    delta[nx / 2] = 1.0 / grid.dx();
    let g = op.heat_step(&delta, t, 0.0)?;
    let samples: Vec<TailSample> = x_samples
        .iter()
        .map(|&x| {
            let kernel = interpolate_even(&grid, &g, x.abs());
            TailSample { x, kernel, ratio: kernel * x.abs().powf(1.0 + 2.0 * alpha) / t, far_field: x.abs() >= 10.0 * core }
        })
        .collect();
    let far: Vec<&TailSample> = samples.iter().filter(|s| s.far_field).collect();
    let bounded = !far.is_empty() && far.iter().all(|s| s.ratio.is_finite() && s.ratio > 0.0);
    let far_max = far.iter().fold(0.0f64, |m, s| m.max(s.x.abs()));
    let decade: Vec<f64> = far.iter().filter(|s| s.x.abs() >= far_max / 10.0).map(|s| s.ratio).collect();
    let last_decade_variation = if decade.is_empty() {
        f64::INFINITY
    } else {
        let hi = decade.iter().cloned().fold(f64::MIN, f64::max);
        let lo = decade.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo) / hi
    };
    Ok(TailTable { alpha, t, samples, bounded, last_decade_variation })
}

/// Log-log interpolation on the right half of an even grid function.
fn interpolate_even(grid: &RoadGrid, values: &[f64], x: f64) -> f64 {
    let dx = grid.dx();
    let centre = grid.nx / 2;
    let pos = x / dx;
    let i = pos.floor() as usize;
    let j = centre + i;
    if j + 1 >= grid.nx {
        return values[grid.nx - 1];
    }
    let (x0, x1) = (i as f64 * dx, (i + 1) as f64 * dx);
    let (u0, u1) = (values[j], values[j + 1]);
    if x0 > 0.0 && u0 > 0.0 && u1 > 0.0 {
        let s = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
        (u0.ln() + s * (u1.ln() - u0.ln())).exp()
    } else {
        u0 + (x - x0) / dx * (u1 - u0)
    }
}

/// Smallest integer >= n whose prime factors are all 2, 3 or 5.
pub fn smooth_size(n: usize) -> usize {
    let mut m = n.max(2);
    if m % 2 == 1 {
        m += 1;
    }
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 2;
    }
}
