//! Road/field communication constants and the Dirichlet-run ratio.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::coupled::CoupledStepper;
use crate::error::{Error, Result};
use crate::field::{BottomBoundary, FarBoundary, StripConfig, StripScheme};
use crate::params::{ModelParams, RunMode};
use crate::reaction::Reaction;
use crate::state::RoadFieldState;
use crate::transients::{envelope_peak, solve_t1, uniform_envelope_constant};

const TIME_EPS: f64 = 1e-9;

fn state_at(states: &[RoadFieldState], t: f64) -> Result<&RoadFieldState> {
    states.iter().find(|s| (s.t - t).abs() <= TIME_EPS * t.abs().max(1.0)).ok_or_else(|| Error::Precondition(format!("no state at t0={t}")))
}

fn nodes_in(s: &RoadFieldState, lo: f64, hi: f64) -> Vec<usize> {
    (0..s.nx).filter(|&i| (lo..=hi).contains(&s.x(i))).collect()
}

fn window_states(states: &[RoadFieldState], t0: f64) -> Result<Vec<&RoadFieldState>> {
    let w: Vec<_> = states.iter().filter(|s| s.t >= t0 + 1.0 - TIME_EPS && s.t <= t0 + 2.0 + TIME_EPS).collect();
    if w.is_empty() {
        return Err(Error::InsufficientData(format!("no states in [{}, {}]", t0 + 1.0, t0 + 2.0)));
    }
    Ok(w)
}

fn field_min(s: &RoadFieldState, cols: &[usize]) -> f64 {
    let mut m = f64::INFINITY;
    for j in (0..s.ny).take_while(|&j| s.y(j) <= 1.0 + TIME_EPS) {
        for &i in cols {
            m = m.min(s.at(i, j));
        }
    }
    m
}

/// Road-to-field constant: `min v / eps` over `[t0+1, t0+2] x [x0-L, x0+L] x [0, 1]`,
/// given `u(t0) >= eps` on `[x0-L, x0+L]`.
pub fn probe_road_to_field(states: &[RoadFieldState], t0: f64, x0: f64, l: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && l > 0.0) {
        return Err(Error::InvalidParam(format!("eps={eps}, L={l} must be > 0")));
    }
    let start = state_at(states, t0)?;
    let cols = nodes_in(start, x0 - l, x0 + l);
    if cols.is_empty() {
        return Err(Error::Precondition(format!("no road nodes in [{}, {}]", x0 - l, x0 + l)));
    }
    if let Some(&i) = cols.iter().find(|&&i| start.u[i] < eps) {
        return Err(Error::Precondition(format!("u(t0, {}) = {} < eps = {eps}", start.x(i), start.u[i])));
    }
    let m = window_states(states, t0)?.iter().map(|s| field_min(s, &cols)).fold(f64::INFINITY, f64::min);
    Ok(m / eps)
}

/// Field-to-road constant: `min(u, v) / eps` over `[t0+1, t0+2] x [x0-2L, x0+2L] x [0, 1]`,
/// given `v(t0, x0, 1) >= eps`.
pub fn probe_field_to_road(states: &[RoadFieldState], t0: f64, x0: f64, l: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && l > 0.0) {
        return Err(Error::InvalidParam(format!("eps={eps}, L={l} must be > 0")));
    }
    let start = state_at(states, t0)?;
    let grid = start.road_grid();
    let i0 = ((x0 / grid.dx()).round() + (start.nx / 2) as f64) as usize;
    let v01 = start.slice_at_height(1.0).get(i0).copied().unwrap_or(0.0);
    if !(v01 >= eps) {
        return Err(Error::Precondition(format!("v(t0, {x0}, 1) = {v01} < eps = {eps}")));
    }
    let cols = nodes_in(start, x0 - 2.0 * l, x0 + 2.0 * l);
    let m = window_states(states, t0)?
        .iter()
        .map(|s| {
            let road = cols.iter().map(|&i| s.u[i]).fold(f64::INFINITY, f64::min);
            road.min(field_min(s, &cols))
        })
        .fold(f64::INFINITY, f64::min);
    Ok(m / eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Communication {
    RoadToField,
    FieldToRoad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSweep {
    pub kind: Communication,
    pub l: f64,
    pub epsilons: Vec<f64>,
    pub constants: Vec<f64>,
    /// `max / min` of the constants.
    pub variation: f64,
    pub min_constant: f64,
}

/// Probe start time; the bounds need `t0 >= 1`.
pub const PROBE_T0: f64 = 1.0;
/// States kept every this many steps inside the window.
const PROBE_STRIDE: usize = 2;

/// Prepared datum at `t0 = PROBE_T0`: road box of height `eps` on `[-L, L]`,
/// or a field bump of height `eps` on `[-1/2, 1/2] x [1/2, 3/2]`.
pub fn probe_datum(p: &ModelParams, kind: Communication, l: f64, eps: f64) -> RoadFieldState {
    let mut s = RoadFieldState::zeros(p.nx, p.ny, p.dx(), p.dy());
    s.t = PROBE_T0;
    match kind {
        Communication::RoadToField => {
            for i in 0..s.nx {
                if s.x(i).abs() <= l {
                    s.u[i] = eps;
                }
            }
        }
        Communication::FieldToRoad => {
            for j in 1..s.ny {
                if (s.y(j) - 1.0).abs() <= 0.5 {
                    for i in 0..s.nx {
                        if s.x(i).abs() <= 0.5 {
                            s.v[j * s.nx + i] = eps;
                        }
                    }
                }
            }
        }
    }
    s
}

/// Runs the nonlinear system from [`probe_datum`] for every `eps` and measures
/// the constant at `x0 = 0`.
pub fn communication_sweep(p: &ModelParams, kind: Communication, l: f64, epsilons: &[f64]) -> Result<ProbeSweep> {
    let mut p = p.clone();
    p.mode = RunMode::Nonlinear;
    let constants = epsilons
        .par_iter()
        .map(|&eps| {
            let mut state = probe_datum(&p, kind, l, eps);
            let mut stepper = CoupledStepper::new(&p)?;
            let n = ((2.0 / p.dt) - 1e-9).ceil() as usize;
            let mut kept = vec![state.clone()];
            for k in 1..=n {
                stepper.step(&mut state)?;
                if state.t >= PROBE_T0 + 1.0 - TIME_EPS && (k % PROBE_STRIDE == 0 || k == n) {
                    kept.push(state.clone());
                }
            }
            match kind {
                Communication::RoadToField => probe_road_to_field(&kept, PROBE_T0, 0.0, l, eps),
                Communication::FieldToRoad => probe_field_to_road(&kept, PROBE_T0, 0.0, l, eps),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let hi = constants.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ProbeSweep { kind, l, epsilons: epsilons.to_vec(), constants, variation: hi / lo, min_constant: lo })
}

/// Linear Dirichlet solution from `1_[0,1](y)` without the `e^t` factor.
pub fn unit_box_column(t: f64, y: f64) -> f64 {
    let s = 2.0 * t.sqrt();
    0.5 * (2.0 * erf(y / s) - erf((y - 1.0) / s) - erf((y + 1.0) / s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorSetup {
    pub x0: f64,
    pub alpha: f64,
    /// Defaults to `1 / (1 + x0^(1+2 alpha))`.
    pub epsilon: Option<f64>,
    /// Height factor of the datum.
    pub c: f64,
    pub theta: f64,
    pub reaction: Reaction,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorResult {
    pub x0: f64,
    pub epsilon: f64,
    pub t1: f64,
    pub v_at: f64,
    /// `v(T1, 0, 1) sqrt(T1)`.
    pub ratio: f64,
    /// Same ratio for the linear problem, by the product formula.
    pub linear_reference: f64,
    pub warnings: Vec<String>,
}

pub fn floor_epsilon(x0: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + x0.powf(1.0 + 2.0 * alpha))
}

/// Dirichlet-bottom field run from `c eps 1_[-sqrt x0, sqrt x0](x) 1_[0,1](y)`
/// up to `T1`, reporting `v(T1, 0, 1) sqrt(T1)`.
pub fn probe_floor(setup: &FloorSetup) -> Result<FloorResult> {
    let expected = floor_epsilon(setup.x0, setup.alpha);
    let mut warnings = Vec::new();
    let epsilon = match setup.epsilon {
        Some(e) => {
            if ((e - expected) / expected).abs() > 1e-9 {
                warnings.push(format!("epsilon {e} does not match 1/(1+x0^(1+2 alpha)) = {expected}"));
            }
            e
        }
        None => expected,
    };
    let (_, m0) = envelope_peak();
    let env = uniform_envelope_constant(40.0)?;
    let t1 = solve_t1(setup.c * epsilon, setup.theta, env, m0)?;
    let half = setup.x0.sqrt();
    let width = half + 10.0 * t1.sqrt() + 5.0;
    let nx = 2 * (width / setup.dx).ceil() as usize;
    let height = 2.0 * t1 + 10.0;
    let ny = (height / setup.dy).ceil() as usize;
    let steps = (t1 / setup.dt).ceil() as usize;
    let dt = t1 / steps as f64;
    let scheme = StripScheme::new(StripConfig {
        nx,
        ny,
        dx: setup.dx,
        dy: setup.dy,
        dt,
        bottom: BottomBoundary::Dirichlet,
        top: FarBoundary::Dirichlet,
        lateral: FarBoundary::Dirichlet,
        reaction: setup.reaction,
    })?;
    let mut state = RoadFieldState::zeros(nx, ny, setup.dx, setup.dy);
    let amp = setup.c * epsilon;
    for j in 1..ny {
        let y = state.y(j);
        // trapezoid weight on a node sitting on the box edge
        let w = if (y - 1.0).abs() < 1e-9 {
            0.5
        } else if y < 1.0 {
            1.0
        } else {
            0.0
        };
        if w == 0.0 {
            continue;
        }
        for i in 0..nx {
            if state.x(i).abs() <= half {
                state.v[j * nx + i] = w * amp;
            }
        }
    }
    let zero_road = vec![0.0; nx];
    let mut scratch = Vec::new();
    for _ in 0..steps {
        scheme.step_with(&mut state.v, &zero_road, &mut scratch)?;
    }
    let v_at = state.slice_at_height(1.0)[nx / 2];
    let lin = amp * t1.exp() * unit_box_column(t1, 1.0) * erf(half / (2.0 * t1.sqrt()));
    Ok(FloorResult { x0: setup.x0, epsilon, t1, v_at, ratio: v_at * t1.sqrt(), linear_reference: lin * t1.sqrt(), warnings })
}

/// `probe_floor` over several `x0`, in parallel; the ratio spread is
/// `max / min`.
pub fn floor_sweep(base: &FloorSetup, x0s: &[f64]) -> Result<(Vec<FloorResult>, f64)> {
    let results = x0s.par_iter().map(|&x0| probe_floor(&FloorSetup { x0, epsilon: None, ..base.clone() })).collect::<Result<Vec<_>>>()?;
    let hi = results.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let lo = results.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok((results, hi / lo))
}
