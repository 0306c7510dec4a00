//! Half-line Fisher-KPP transients with a small initial bump:
//! `v_t = v_yy + f(v)`, `v(0, y) = eps 1_[1/2, 1](y)`, `v(t, 0) = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};

use crate::error::{Error, Result};
use crate::field::ColumnSolver;
use crate::reaction::{Nonlinearity, Reaction};

/// Bisection width for `T1`.
pub const ROOT_TOL: f64 = 1e-12;
/// Allowed relative offset of the exact argmax from `z0 sqrt(t)`.
pub const ARGMAX_TOL: f64 = 0.15;

/// Maximizer and maximum of `z exp(-z^2 / 5)` by golden-section search.
pub fn envelope_peak() -> (f64, f64) {
    let m = |z: f64| z * (-z * z / 5.0).exp();
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, 5.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    while b - a > 1e-12 {
        if m(c) > m(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - ratio * (b - a);
        d = a + ratio * (b - a);
    }
    let z0 = 0.5 * (a + b);
    (z0, m(z0))
}

/// Closed form of the linear (`f(v) = v`) solution.
pub fn linear_dirichlet_exact(t: f64, y: f64, epsilon: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParam(format!("t={t} must be > 0")));
    }
    Ok(epsilon * t.exp() * heat_part(t, y))
}

/// `erf(a) - erf(b)` without cancellation in the tails.
fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 && b >= 0.0 {
        erfc(b) - erfc(a)
    } else if a <= 0.0 && b <= 0.0 {
        erfc(-a) - erfc(-b)
    } else {
        erf(a) - erf(b)
    }
}

/// The erf closed form of the linear solution. The direct and image terms
/// cancel to about `1e-9` relative once `t` is of order one.
pub fn linear_dirichlet_erf_form(t: f64, y: f64, epsilon: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParam(format!("t={t} must be > 0")));
    }
    Ok(epsilon * t.exp() * heat_part_erf(t, y))
}

fn heat_part_erf(t: f64, y: f64) -> f64 {
    let s = 2.0 * t.sqrt();
    0.5 * (erf_diff((y - 0.5) / s, (y - 1.0) / s) - erf_diff((y + 1.0) / s, (y + 0.5) / s))
}

/// `v / (eps e^t)`: the Dirichlet heat evolution of `1_[1/2, 1]`.
///
/// Short times use the erf form; later the kernel is integrated as
/// `exp(-(y - y')^2 / 4t) (1 - exp(-y y' / t))`, which has no cancellation.
fn heat_part(t: f64, y: f64) -> f64 {
    if t > 0.05 {
        image_kernel_quadrature(t, y)
    } else {
        heat_part_erf(t, y)
    }
}

fn image_kernel_quadrature(t: f64, y: f64) -> f64 {
    const NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_2];
    const WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_47, 0.101_228_536_290_376_26];
    let k = |yp: f64| (-(y - yp).powi(2) / (4.0 * t)).exp() * -(-y * yp / t).exp_m1();
    let panels = 16;
    let width = 0.5 / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = 0.5 + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        for (z, w) in NODES.iter().zip(WEIGHTS) {
            acc += w * half * (k(mid + half * z) + k(mid - half * z));
        }
    }
    acc / (4.0 * std::f64::consts::PI * t).sqrt()
}

/// Cell average of `eps 1_[1/2, 1]` on nodes `j dy`.
pub fn initial_column(n: usize, dy: f64, epsilon: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let (lo, hi) = ((j as f64 - 0.5) * dy, (j as f64 + 0.5) * dy);
            let overlap = (hi.min(1.0) - lo.max(0.5)).max(0.0);
            if j == 0 {
                0.0
            } else {
                epsilon * overlap / dy
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub t: f64,
    pub epsilon: f64,
    /// Smallest `C` with `v <= C eps (e^t / t) (y / sqrt t) exp(-y^2 / 5t)` on the sweep.
    pub c_min: f64,
    pub argmax_y: f64,
    pub predicted_argmax: f64,
    pub argmax_rel_offset: f64,
    pub argmax_ok: bool,
}

fn envelope_shape(t: f64, y: f64) -> f64 {
    (1.0 / t) * (y / t.sqrt()) * (-y * y / (5.0 * t)).exp()
}

/// Envelope constant and argmax location at time `t >= 2`.
pub fn envelope_bound_check(t: f64, epsilon: f64) -> Result<EnvelopeReport> {
    if t < 2.0 {
        return Err(Error::Precondition(format!("envelope check needs t >= 2, got {t}")));
    }
    let (z0, _) = envelope_peak();
    let y_max = 20.0 * t.sqrt();
    let n = 20_000;
    let mut c_min: f64 = 0.0;
    let (mut best_y, mut best_v) = (0.0, f64::NEG_INFINITY);
    for k in 1..=n {
        let y = y_max * k as f64 / n as f64;
        let h = heat_part(t, y);
        let env = envelope_shape(t, y);
        if env > 0.0 {
            c_min = c_min.max(h / env);
        }
        if h > best_v {
            best_v = h;
            best_y = y;
        }
    }
    let predicted = z0 * t.sqrt();
    let offset = (best_y - predicted).abs() / predicted;
    Ok(EnvelopeReport {
        t,
        epsilon,
        c_min,
        argmax_y: best_y,
        predicted_argmax: predicted,
        argmax_rel_offset: offset,
        argmax_ok: offset <= ARGMAX_TOL,
    })
}

/// Envelope constant valid for every `t` in `[2, t_max]`.
pub fn uniform_envelope_constant(t_max: f64) -> Result<f64> {
    let n = ((t_max - 2.0) * 4.0).ceil().max(1.0) as usize;
    let mut c: f64 = 0.0;
    for k in 0..=n {
        let t = 2.0 + (t_max - 2.0) * k as f64 / n as f64;
        c = c.max(envelope_bound_check(t, 1.0)?.c_min);
    }
    Ok(c)
}

/// Root `T >= 2` of `e^T / T = rhs`.
pub fn solve_t1_rhs(rhs: f64) -> Result<f64> {
    let floor = std::f64::consts::E.powi(2) / 2.0;
    if !(rhs >= floor * (1.0 - 1e-12)) || !rhs.is_finite() {
        return Err(Error::Precondition(format!("right-hand side {rhs} below e^2/2: no root on T >= 2")));
    }
    let h = |t: f64| t - t.ln() - rhs.ln();
    let (mut lo, mut hi) = (2.0, 4.0);
    while h(hi) < 0.0 {
        hi *= 2.0;
    }
    if h(lo) >= 0.0 {
        return Ok(2.0);
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `T1` with `e^T1 / T1 = theta / (m0 C eps)`.
pub fn solve_t1(epsilon: f64, theta: f64, c: f64, m0: f64) -> Result<f64> {
    solve_t1_rhs(theta / (m0 * c * epsilon))
}

pub fn dirichlet_eigenvalue(l: f64) -> f64 {
    let w = std::f64::consts::PI / (l - 1.0);
    w * w
}

/// Eigenfunction subsolution on `[1, L]` started at `T1`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EigenSubsolution {
    pub l: f64,
    pub epsilon: f64,
    pub t1: f64,
    /// `min_[1, L] v_lin(T1, y) sqrt(T1) / eps`.
    pub c_l: f64,
    pub lambda1: f64,
}

impl EigenSubsolution {
    pub fn new(l: f64, epsilon: f64, t1: f64) -> Result<Self> {
        if !(l > 1.0) {
            return Err(Error::InvalidParam(format!("L={l} must exceed 1")));
        }
        let n = 4000;
        let mut c_l = f64::INFINITY;
        for k in 0..=n {
            let y = 1.0 + (l - 1.0) * k as f64 / n as f64;
            c_l = c_l.min(linear_dirichlet_exact(t1, y, epsilon)? * t1.sqrt() / epsilon);
        }
        Ok(Self { l, epsilon, t1, c_l, lambda1: dirichlet_eigenvalue(l) })
    }

    pub fn eval(&self, t: f64, y: f64) -> Result<f64> {
        if !(1.0..=self.l).contains(&y) {
            return Err(Error::Precondition(format!("y={y} outside [1, {}]", self.l)));
        }
        if t < self.t1 {
            return Err(Error::Precondition(format!("t={t} before T1={}", self.t1)));
        }
        if y == 1.0 || y == self.l {
            return Ok(0.0);
        }
        let amp = self.epsilon * self.c_l / self.t1.sqrt();
        let phase = std::f64::consts::PI * (y - 1.0) / (self.l - 1.0);
        Ok(amp * ((1.0 - self.lambda1) * (t - self.t1)).exp() * phase.sin())
    }

    /// End of the window on which the subsolution stays below `theta`.
    pub fn window_end(&self, theta: f64) -> f64 {
        self.t1 + (theta * theta * self.t1).ln() / (2.0 * (1.0 - self.lambda1))
    }
}

pub fn eigen_subsolution(l: f64, t: f64, y: f64, epsilon: f64, t1: f64) -> Result<f64> {
    EigenSubsolution::new(l, epsilon, t1)?.eval(t, y)
}

/// Discretization of the half-line problem.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ColumnGrid {
    pub dy: f64,
    pub dt: f64,
    pub height: f64,
    pub t_max: f64,
    /// Step refinement inside the crossing bracket.
    pub refine: usize,
}

impl ColumnGrid {
    /// Grid sized for a given `eps`: `Y >= 2 T + z0 sqrt T` with a safety margin.
    pub fn for_epsilon(epsilon: f64, dy: f64, dt: f64) -> Self {
        let t_guess = (1.0 / epsilon).ln() + 1.5 * (1.0 / epsilon).ln().max(1.0).ln() + 3.0;
        let (z0, _) = envelope_peak();
        Self { dy, dt, height: 2.0 * t_guess + z0 * t_guess.sqrt() + 10.0, t_max: 2.0 * t_guess + 10.0, refine: 10 }
    }

    pub fn nodes(&self) -> usize {
        (self.height / self.dy).round() as usize
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransientResult {
    pub epsilon: f64,
    pub lambda_target: f64,
    pub t_eps: f64,
    pub t1_eps: f64,
    /// Crossing time of the linear solution, a lower bound for `t_eps`.
    pub t_linear: f64,
    pub ratio: f64,
    /// `(t, v(t, 1))` at every coarse step.
    pub trace: Vec<(f64, f64)>,
}

fn value_at(v: &[f64], dy: f64, y: f64) -> f64 {
    let pos = y / dy;
    let j = pos.floor() as usize;
    let s = pos - j as f64;
    if s == 0.0 || j + 1 >= v.len() {
        v[j.min(v.len() - 1)]
    } else {
        v[j] + s * (v[j + 1] - v[j])
    }
}

/// First time the linear solution reaches `lambda` at `y = 1`.
pub fn linear_crossing_time(epsilon: f64, lambda: f64) -> Result<f64> {
    let v = |t: f64| epsilon * t.exp() * heat_part(t, 1.0);
    let (mut lo, mut hi) = (1e-6, 1.0);
    while v(hi) < lambda {
        lo = hi;
        hi += 1.0;
        if hi > 1e3 {
            return Err(Error::HorizonExhausted { t: hi, last: v(hi) });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if v(mid) < lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Integrate until `v(t, 1) >= lambda`; the crossing is refined by rerunning
/// the bracketing step with `dt / refine` and interpolating linearly in time.
pub fn measure_t_eps(epsilon: f64, lambda: f64, nl: &Nonlinearity, grid: &ColumnGrid) -> Result<TransientResult> {
    let theta = nl.theta();
    if !(epsilon > 0.0 && epsilon < theta && theta < lambda) {
        return Err(Error::Precondition(format!("need 0 < eps < theta < lambda (eps={epsilon}, theta={theta}, lambda={lambda})")));
    }
    let v0 = nl.positive_zero()?;
    if lambda >= v0 {
        return Err(Error::Precondition(format!("lambda={lambda} must stay below v0={v0}")));
    }
    let n = grid.nodes();
    let solver = ColumnSolver::new(n, grid.dy, grid.dt, Reaction::Kpp(*nl))?;
    let fine = solver.with_dt(grid.dt / grid.refine.max(1) as f64)?;
    let mut v = initial_column(n, grid.dy, epsilon);
    let mut scratch = Vec::new();
    let mut t = 0.0;
    let mut trace = vec![(0.0, value_at(&v, grid.dy, 1.0))];
    loop {
        if t >= grid.t_max {
            return Err(Error::HorizonExhausted { t, last: value_at(&v, grid.dy, 1.0) });
        }
        let before = v.clone();
        solver.step(&mut v, &mut scratch)?;
        let now = value_at(&v, grid.dy, 1.0);
        if now >= lambda {
            let mut w = before;
            let mut tw = t;
            let mut prev = value_at(&w, grid.dy, 1.0);
            let mut crossing = None;
            for _ in 0..grid.refine.max(1) {
                fine.step(&mut w, &mut scratch)?;
                let cur = value_at(&w, grid.dy, 1.0);
                let tn = tw + fine.dt();
                if cur >= lambda {
                    crossing = Some(tw + fine.dt() * (lambda - prev) / (cur - prev));
                    break;
                }
                prev = cur;
                tw = tn;
            }
            let t_cross = crossing.unwrap_or(t + grid.dt);
            t += grid.dt;
            trace.push((t, now));
            let c = uniform_envelope_constant(t_cross.max(3.0))?;
            let (_, m0) = envelope_peak();
            let t1 = solve_t1(epsilon, theta, c, m0).unwrap_or(f64::NAN);
            return Ok(TransientResult {
                epsilon,
                lambda_target: lambda,
                t_eps: t_cross,
                t1_eps: t1,
                t_linear: linear_crossing_time(epsilon, lambda)?,
                ratio: epsilon * t_cross.exp() / t_cross.powf(1.5),
                trace,
            });
        }
        t += grid.dt;
        trace.push((t, now));
    }
}

/// Independent runs over an `eps` sweep, in parallel.
pub fn transient_sweep(epsilons: &[f64], lambda: f64, nl: &Nonlinearity, dy: f64, dt: f64) -> Result<Vec<TransientResult>> {
    epsilons.par_iter().map(|&e| measure_t_eps(e, lambda, nl, &ColumnGrid::for_epsilon(e, dy, dt))).collect()
}

/// Solution of `-w'' = f(w)`, `w(0) = 0`, `w -> v0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyProfile {
    pub h: f64,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub slope0: f64,
    pub v0: f64,
    /// Max of `|w'' + f(w)|` with `w''` from a 5-point derivative of `w'`.
    pub residual: f64,
    /// Max drift of `(w')^2 / 2 + F(w)` along the stored orbit.
    pub hamiltonian_drift: f64,
}

impl SteadyProfile {
    pub fn height(&self) -> f64 {
        self.h * (self.w.len() - 1) as f64
    }

    /// Cubic Hermite interpolation; constant `v0` beyond the stored range.
    pub fn eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let pos = y / self.h;
        let j = pos.floor() as usize;
        if j + 1 >= self.w.len() {
            return *self.w.last().unwrap();
        }
        let s = pos - j as f64;
        let (p0, p1) = (self.w[j], self.w[j + 1]);
        let (m0, m1) = (self.dw[j] * self.h, self.dw[j + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1
    }
}

enum Shot {
    Overshoot,
    Undershoot,
    /// Reached the end of the interval without deciding.
    Undecided,
}

fn rk4(nl: &Nonlinearity, w: f64, p: f64, h: f64) -> (f64, f64) {
    let f = |w: f64| -nl.eval(w);
    let (k1w, k1p) = (p, f(w));
    let (k2w, k2p) = (p + 0.5 * h * k1p, f(w + 0.5 * h * k1w));
    let (k3w, k3p) = (p + 0.5 * h * k2p, f(w + 0.5 * h * k2w));
    let (k4w, k4p) = (p + h * k3p, f(w + h * k3w));
    (w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w), p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p))
}

fn shoot(nl: &Nonlinearity, v0: f64, slope: f64, h: f64, n: usize, keep: bool) -> (Shot, Vec<(f64, f64)>) {
    let (mut w, mut p) = (0.0, slope);
    let mut path = Vec::new();
    if keep {
        path.push((w, p));
    }
    for _ in 0..n {
        let (nw, np) = rk4(nl, w, p, h);
        w = nw;
        p = np;
        if keep {
            path.push((w, p));
        }
        if w > v0 {
            return (Shot::Overshoot, path);
        }
        if p < 0.0 {
            return (Shot::Undershoot, path);
        }
    }
    (Shot::Undecided, path)
}

/// Speed along the heteroclinic orbit: `sqrt(2 int_w^v0 f)`.
fn manifold_speed(nl: &Nonlinearity, w: f64, v0: f64) -> f64 {
    const NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_2];
    const WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_47, 0.101_228_536_290_376_26];
    let (mid, half) = (0.5 * (w + v0), 0.5 * (v0 - w));
    let mut acc = 0.0;
    for (z, wt) in NODES.iter().zip(WEIGHTS) {
        acc += wt * (nl.eval(mid + half * z) + nl.eval(mid - half * z));
    }
    (2.0 * half * acc).max(0.0).sqrt()
}

/// Shooting on `w'(0)` with bisection. Close to `v0` the shot orbit is
/// replaced by the first-order flow `w' = sqrt(2 int_w^v0 f)` along the stable
/// manifold, which the shot can only follow up to rounding.
pub fn steady_state(nl: &Nonlinearity, height: f64) -> Result<SteadyProfile> {
    if height < 30.0 {
        return Err(Error::Precondition(format!("steady state needs Y >= 30, got {height}")));
    }
    let v0 = nl.positive_zero()?;
    let h = 1e-3;
    let n = (height / h).round() as usize;
    let guess = (2.0 * nl.primitive(v0)).sqrt();
    let (mut lo, mut hi) = (0.0, 2.0 * guess + 1.0);
    if !matches!(shoot(nl, v0, hi, h, n, false).0, Shot::Overshoot) {
        return Err(Error::Bracket("upper shooting slope does not overshoot".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(nl, v0, mid, h, n, false).0 {
            Shot::Overshoot => hi = mid,
            Shot::Undershoot => lo = mid,
            Shot::Undecided => {
                lo = mid;
                break;
            }
        }
    }
    let slope0 = lo;
    let (_, path) = shoot(nl, v0, slope0, h, n, true);
    let cut = path
        .iter()
        .enumerate()
        .filter(|(_, &(w, _))| v0 - w < 1e-2 * v0)
        .min_by(|a, b| {
            let da = (a.1 .1 - manifold_speed(nl, a.1 .0, v0)).abs();
            let db = (b.1 .1 - manifold_speed(nl, b.1 .0, v0)).abs();
            da.total_cmp(&db)
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Bracket("shot never approaches v0".into()))?;
    let mut w = Vec::with_capacity(n + 1);
    let mut dw = Vec::with_capacity(n + 1);
    for &(a, b) in &path[..=cut] {
        w.push(a);
        dw.push(b);
    }
    let mut cur = path[cut].0;
    for _ in cut..n {
        let k1 = manifold_speed(nl, cur, v0);
        let k2 = manifold_speed(nl, cur + 0.5 * h * k1, v0);
        let k3 = manifold_speed(nl, cur + 0.5 * h * k2, v0);
        let k4 = manifold_speed(nl, cur + h * k3, v0);
        cur = (cur + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).min(v0);
        w.push(cur);
        dw.push(manifold_speed(nl, cur, v0));
    }
    let residual = steady_residual(nl, &w, &dw, h);
    let energy = |a: f64, b: f64| 0.5 * b * b + nl.primitive(a);
    let e0 = energy(w[0], dw[0]);
    let hamiltonian_drift = w.iter().zip(&dw).map(|(&a, &b)| (energy(a, b) - e0).abs()).fold(0.0, f64::max);
    Ok(SteadyProfile { h, w, dw, slope0, v0, residual, hamiltonian_drift })
}

fn steady_residual(nl: &Nonlinearity, w: &[f64], dw: &[f64], h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 2..w.len() - 2 {
        let d2 = (dw[j - 2] - 8.0 * dw[j - 1] + 8.0 * dw[j + 1] - dw[j + 2]) / (12.0 * h);
        worst = worst.max((d2 + nl.eval(w[j])).abs());
    }
    worst
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransientFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// `slope +- 2 stderr`.
    pub band: (f64, f64),
    /// Slope inside `[1.2, 1.8]`.
    pub consistent: bool,
}

/// Least squares of `T - ln(1/eps)` on `ln ln(1/eps)`.
pub fn transient_law_fit(samples: &[(f64, f64)]) -> Result<TransientFit> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!("{} sweep points", samples.len())));
    }
    let decades = samples.iter().map(|s| -s.0.log10()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    if decades.1 - decades.0 < 5.0 - 1e-9 {
        return Err(Error::InsufficientData(format!("sweep spans {:.2} decades of eps, need 5", decades.1 - decades.0)));
    }
    if samples.iter().any(|s| !(s.0 > 0.0 && s.0 < 1.0 / std::f64::consts::E)) {
        return Err(Error::InvalidParam("eps must lie in (0, 1/e)".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| (1.0 / s.0).ln().ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1 - (1.0 / s.0).ln()).collect();
    let line = crate::diagnostics::fit::ols(&xs, &ys)?;
    Ok(TransientFit {
        slope: line.slope,
        intercept: line.intercept,
        stderr: line.slope_stderr,
        band: (line.slope - 2.0 * line.slope_stderr, line.slope + 2.0 * line.slope_stderr),
        consistent: (1.2..=1.8).contains(&line.slope),
    })
}
