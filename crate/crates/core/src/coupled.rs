//! Road-field stepping: the nonlinear system, its linearization and the
//! pure fractional KPP equation on the road.

use serde::{Deserialize, Serialize};

use crate::diagnostics::level_set::LevelSetTrace;
use crate::error::{Error, Result};
use crate::field::{BottomBoundary, FarBoundary, StripConfig, StripScheme};
use crate::fracop::{FracMultiplier, FracOperator, FracSymbol, RoadGrid};
use crate::params::{ModelParams, RunMode};
use crate::reaction::Reaction;
use crate::state::RoadFieldState;

/// Symbol of the road semigroup in every simulation.
pub const ROAD_SYMBOL: FracSymbol = FracSymbol::Lattice;

/// Road values in `[-ROAD_NEG_TOL * max u, 0)` are spectral ringing and get clipped.
pub const ROAD_NEG_TOL: f64 = 1e-8;

/// Everything one coupled step needs, prepared once.
pub struct CoupledStepper {
    params: ModelParams,
    grid: RoadGrid,
    road: FracMultiplier,
    road_reaction: Reaction,
    field: Option<StripScheme>,
    mu: f64,
    nu: f64,
    field_scratch: Vec<f64>,
    exchange: Vec<f64>,
    steps: u64,
}

impl std::fmt::Debug for CoupledStepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoupledStepper").field("mode", &self.params.mode).field("grid", &self.grid).field("steps", &self.steps).finish()
    }
}

impl CoupledStepper {
    /// Stepper for `p.mode` with homogeneous Dirichlet far boundaries.
    pub fn new(p: &ModelParams) -> Result<Self> {
        p.check_numerics()?;
        match p.mode {
            RunMode::Nonlinear => Self::custom(p, Reaction::Kpp(p.nonlinearity), 0.0, FarBoundary::Dirichlet, FarBoundary::Dirichlet),
            RunMode::Linearized => Self::custom(p, Reaction::Linear { rate: p.a }, -p.k, FarBoundary::Dirichlet, FarBoundary::Dirichlet),
            RunMode::FractionalKpp => Self::road_only(p, Reaction::Kpp(p.nonlinearity)),
        }
    }

    /// Coupled stepper with an explicit field reaction, road growth rate and
    /// far boundaries.
    pub fn custom(p: &ModelParams, field_reaction: Reaction, road_rate: f64, top: FarBoundary, lateral: FarBoundary) -> Result<Self> {
        let grid = RoadGrid::new(p.nx, p.domain_half_width);
        let road = FracOperator::spectral_with(p.alpha, grid, ROAD_SYMBOL)?.multiplier(p.dt, road_rate)?;
        let mut cfg = StripConfig::from_params(p, BottomBoundary::Robin { mu: p.mu, nu: p.nu }, field_reaction);
        cfg.top = top;
        cfg.lateral = lateral;
        Ok(Self {
            params: p.clone(),
            grid,
            road,
            road_reaction: Reaction::None,
            field: Some(StripScheme::new(cfg)?),
            mu: p.mu,
            nu: p.nu,
            field_scratch: Vec::new(),
            exchange: vec![0.0; p.nx],
            steps: 0,
        })
    }

    /// `u_t + (-d_xx)^alpha u = f(u)` with no field.
    pub fn road_only(p: &ModelParams, reaction: Reaction) -> Result<Self> {
        let grid = RoadGrid::new(p.nx, p.domain_half_width);
        let road = FracOperator::spectral_with(p.alpha, grid, ROAD_SYMBOL)?.multiplier(p.dt, 0.0)?;
        Ok(Self {
            params: p.clone(),
            grid,
            road,
            road_reaction: reaction,
            field: None,
            mu: 0.0,
            nu: 0.0,
            field_scratch: Vec::new(),
            exchange: Vec::new(),
            steps: 0,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> RoadGrid {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        self.params.dt
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn has_field(&self) -> bool {
        self.field.is_some()
    }

    /// Advance `state` by one step.
    ///
    /// Field first, with the old road density as its Robin source; then the
    /// road takes the explicit exchange `-mu u^n + nu (v0^n + v0^(n+1)) / 2`
    /// followed by the exact fractional multiplier. The pairing makes
    /// `int u + int int v` (trapezoid in `y`) exactly conserved by the exchange.
    pub fn step(&mut self, state: &mut RoadFieldState) -> Result<()> {
        let dt = self.params.dt;
        let t_next = (self.steps + 1) as f64 * dt;
        match &self.field {
            Some(field) => {
                let nx = self.grid.nx;
                self.exchange.copy_from_slice(&state.v[..nx]);
                field.step_with(&mut state.v, &state.u, &mut self.field_scratch).map_err(|e| locate(e, state, t_next))?;
                for i in 0..nx {
                    let v_mid = 0.5 * (self.exchange[i] + state.v[i]);
                    state.u[i] += dt * (self.nu * v_mid - self.mu * state.u[i]);
                }
                self.road.apply_in_place(&mut state.u);
            }
            None => {
                self.road_reaction.advance_slice(&mut state.u, 0.5 * dt);
                self.road.apply_in_place(&mut state.u);
                self.road_reaction.advance_slice(&mut state.u, 0.5 * dt);
            }
        }
        clip_road(&mut state.u, t_next)?;
        self.steps += 1;
        state.t = t_next;
        Ok(())
    }
}

fn clip_road(u: &mut [f64], t: f64) -> Result<()> {
    let max = u.iter().cloned().fold(0.0f64, f64::max);
    let floor = -ROAD_NEG_TOL * max;
    for (i, x) in u.iter_mut().enumerate() {
        if !x.is_finite() {
            return Err(Error::Instability { t, detail: format!("road value {x} at index {i}") });
        }
        if *x < 0.0 {
            if *x >= floor {
                *x = 0.0;
            } else {
                return Err(Error::Instability {
                    t,
                    detail: format!("road value {x:e} at index {i} below -{ROAD_NEG_TOL:e} * max u = {floor:e}"),
                });
            }
        }
    }
    Ok(())
}

/// Attach the grid location and neighbourhood of a field failure.
fn locate(err: Error, state: &RoadFieldState, t: f64) -> Error {
    let Error::Instability { detail, .. } = err else {
        return err;
    };
    let index = detail.rsplit("index ").next().and_then(|s| s.trim().parse::<usize>().ok());
    let mut out = detail;
    if let Some(k) = index {
        let (i, j) = (k % state.nx, k / state.nx);
        out.push_str(&format!(" (x={}, y={})", state.x(i), state.y(j)));
        let mut near = Vec::new();
        for jj in j.saturating_sub(1)..(j + 2).min(state.ny) {
            for ii in i.saturating_sub(1)..(i + 2).min(state.nx) {
                near.push(format!("{:.3e}", state.at(ii, jj)));
            }
        }
        out.push_str(&format!("; neighbourhood [{}]", near.join(", ")));
    }
    Error::Instability { t, detail: out }
}

/// One coupled step with a freshly prepared stepper.
pub fn step_coupled(state: &RoadFieldState, params: &ModelParams) -> Result<RoadFieldState> {
    let mut stepper = CoupledStepper::new(params)?;
    stepper.steps = (state.t / params.dt).round() as u64;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    next.t = state.t + params.dt;
    Ok(next)
}

/// Heights at which field slices are kept with every snapshot.
pub const SLICE_HEIGHTS: [f64; 2] = [0.0, 1.0];

/// Immutable copy handed to a sink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub index: usize,
    pub t: f64,
    pub u: Vec<f64>,
    /// Field rows at [`SLICE_HEIGHTS`].
    pub slices: Vec<Vec<f64>>,
    /// Full field, at the coarse cadence only.
    pub field: Option<Vec<f64>>,
}

/// Receiver of snapshots. `finish` gets the failure, if any, so partial
/// outputs can be marked.
pub trait SnapshotSink {
    fn accept(&mut self, snapshot: Snapshot) -> Result<()>;
    fn finish(&mut self, failure: Option<&Error>) -> Result<()>;
}

/// Keeps everything in memory.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub truncated: bool,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn nearest(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }

    /// `(t, u)` pairs for the diagnostics.
    pub fn frames(&self) -> Vec<(f64, &[f64])> {
        self.snapshots.iter().map(|s| (s.t, s.u.as_slice())).collect()
    }

    pub fn level_set_trace(&self, grid: &RoadGrid, lambda: f64) -> LevelSetTrace {
        let mut trace = LevelSetTrace::new(lambda);
        for s in &self.snapshots {
            trace.record(grid, s.t, &s.u);
        }
        trace
    }
}

impl SnapshotSink for Trajectory {
    fn accept(&mut self, snapshot: Snapshot) -> Result<()> {
        self.snapshots.push(snapshot);
        Ok(())
    }

    fn finish(&mut self, failure: Option<&Error>) -> Result<()> {
        self.truncated = failure.is_some();
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRun {
    pub params: ModelParams,
    pub snapshot_times: Vec<f64>,
    /// Every `k`-th snapshot also carries the full field; `None` disables.
    pub full_field_every: Option<usize>,
    /// Check the a priori bounds at each snapshot; off for linearized runs,
    /// which grow without bound.
    pub check_bounds: bool,
}

impl SimulationRun {
    pub fn new(params: ModelParams, snapshot_times: Vec<f64>) -> Self {
        let check_bounds = params.mode != RunMode::Linearized;
        Self { params, snapshot_times, full_field_every: None, check_bounds }
    }

    /// Snapshots every `interval` from 0 through `t_final`.
    pub fn every(params: ModelParams, interval: f64) -> Self {
        let n = (params.t_final / interval + 1e-9).floor() as usize;
        let times = (0..=n).map(|k| k as f64 * interval).collect();
        Self::new(params, times)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.snapshot_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParam("snapshot times must be strictly increasing".into()));
        }
        if let Some(&last) = self.snapshot_times.last() {
            if last > self.params.t_final + 1e-9 * self.params.dt {
                return Err(Error::InvalidParam(format!("snapshot at t={last} beyond t_final={}", self.params.t_final)));
            }
        }
        if self.snapshot_times.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::InvalidParam("negative snapshot time".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: u64,
    pub snapshots: usize,
    pub t_reached: f64,
    pub total_mass: f64,
    pub max_u: f64,
}

fn snapshot_of(state: &RoadFieldState, index: usize, full: bool, has_field: bool) -> Snapshot {
    Snapshot {
        index,
        t: state.t,
        u: state.u.clone(),
        slices: if has_field { SLICE_HEIGHTS.iter().map(|&y| state.slice_at_height(y)).collect() } else { Vec::new() },
        field: if full && has_field { Some(state.v.clone()) } else { None },
    }
}

/// Step from the initial datum to `t_final`, emitting snapshots on schedule.
pub fn run_simulation(run: &SimulationRun, sink: &mut dyn SnapshotSink) -> Result<RunSummary> {
    run.validate()?;
    let p = &run.params;
    let mut stepper = CoupledStepper::new(p)?;
    let mut state = RoadFieldState::initial(p);
    if !stepper.has_field() {
        state.v.clear();
        state.ny = 0;
    }
    let outcome = drive(run, &mut stepper, &mut state, sink);
    sink.finish(outcome.as_ref().err())?;
    outcome
}

fn drive(run: &SimulationRun, stepper: &mut CoupledStepper, state: &mut RoadFieldState, sink: &mut dyn SnapshotSink) -> Result<RunSummary> {
    let p = &run.params;
    let total_steps = (p.t_final / p.dt - 1e-9).ceil().max(0.0) as u64;
    let targets: Vec<u64> = run.snapshot_times.iter().map(|t| (t / p.dt).round() as u64).collect();
    let mut next = 0;
    let mut emitted = 0;
    let has_field = stepper.has_field();
    let mut emit = |state: &RoadFieldState, next: &mut usize, step: u64, sink: &mut dyn SnapshotSink| -> Result<()> {
        while *next < targets.len() && targets[*next] <= step {
            if run.check_bounds && has_field {
                state.check_bounds(p)?;
            }
            let full = run.full_field_every.is_some_and(|k| k > 0 && next.is_multiple_of(k));
            sink.accept(snapshot_of(state, *next, full, has_field))?;
            *next += 1;
            emitted += 1;
        }
        Ok(())
    };
    emit(state, &mut next, 0, sink)?;
    for step in 1..=total_steps {
        stepper.step(state)?;
        emit(state, &mut next, step, sink)?;
    }
    Ok(RunSummary {
        steps: stepper.steps(),
        snapshots: emitted,
        t_reached: state.t,
        total_mass: if has_field { state.total_mass() } else { state.road_mass() },
        max_u: state.max_u(),
    })
}

/// Fractional KPP on the road alone, tracking the level `lambda` at `sample_times`.
pub fn run_fractional_kpp(
    params: &ModelParams,
    reaction: Reaction,
    lambda: f64,
    sample_times: &[f64],
) -> Result<(LevelSetTrace, RoadFieldState)> {
    params.check_numerics()?;
    let mut stepper = CoupledStepper::road_only(params, reaction)?;
    let grid = stepper.grid();
    let mut state = RoadFieldState::zeros(params.nx, 0, params.dx(), params.dy());
    state.u = crate::state::mollified_box(&grid, params.delta0, params.x0_init);
    let mut trace = LevelSetTrace::new(lambda);
    let total_steps = (params.t_final / params.dt - 1e-9).ceil().max(0.0) as u64;
    let targets: Vec<u64> = sample_times.iter().map(|t| (t / params.dt).round() as u64).collect();
    let mut next = 0;
    while next < targets.len() && targets[next] == 0 {
        trace.record(&grid, 0.0, &state.u);
        next += 1;
    }
    for step in 1..=total_steps {
        stepper.step(&mut state)?;
        while next < targets.len() && targets[next] <= step {
            trace.record(&grid, state.t, &state.u);
            next += 1;
        }
    }
    Ok((trace, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::Nonlinearity;

    fn small() -> ModelParams {
        ModelParams {
            alpha: 0.5,
            a: 1.0,
            mu: 1.0,
            nu: 1.0,
            k: 0.0,
            delta0: 0.1,
            x0_init: 1.0,
            domain_half_width: 32.0,
            strip_height: 12.0,
            nx: 64,
            ny: 24,
            dt: 0.05,
            t_final: 1.0,
            nonlinearity: Nonlinearity::logistic(1.0).unwrap(),
            mode: RunMode::Nonlinear,
        }
    }

    #[test]
    fn rest_state() {
        let p = small();
        let mut st = RoadFieldState::zeros(p.nx, p.ny, p.dx(), p.dy());
        let mut s = CoupledStepper::new(&p).unwrap();
        for _ in 0..5 {
            s.step(&mut st).unwrap();
        }
        assert!(st.u.iter().chain(&st.v).all(|&x| x == 0.0));
        assert!((st.t - 0.25).abs() < 1e-15);
    }

    #[test]
    fn snapshot_schedule_is_validated() {
        let mut p = small();
        p.domain_half_width = 64.0;
        p.nx = 128;
        p.strip_height = 14.0;
        p.ny = 28;
        let mut run = SimulationRun::new(p.clone(), vec![0.0, 0.5, 0.4]);
        assert!(run.validate().is_err());
        run.snapshot_times = vec![0.0, 2.0];
        assert!(run.validate().is_err());
        p.t_final = 0.0;
        let run = SimulationRun::new(p, vec![0.0]);
        let mut traj = Trajectory::default();
        let summary = run_simulation(&run, &mut traj).unwrap();
        assert_eq!(summary.steps, 0);
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0].t, 0.0);
    }
}
