use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use frontlab::coupled::{run_simulation, SimulationRun, Trajectory};
use frontlab::diagnostics::{
    asymptote, communication_sweep, fit_drift_exponent, floor_sweep, kernel_asymptote, late_window, renormalized_samples, scale_grid,
    validate_linearized_far_field, Communication, DriftFit, FloorSetup, LevelSetTrace, RenormTable,
};
use frontlab::fracop::{kernel_tail_check, FracOperator, RoadGrid};
use frontlab::io::sink::DEFAULT_QUEUE;
use frontlab::io::{parse_trace, trace_table, DirectorySink, LinePlot, SinkLayout, Table, Tee};
use frontlab::params::{drift_exponent, make_params, spreading_rate, ModelParams, RawConfig, RunMode};
use frontlab::reaction::{Nonlinearity, Reaction};
use frontlab::state::RoadFieldState;
use frontlab::transients::{transient_law_fit, transient_sweep};
use serde::Serialize;

use crate::rundir::{execute, RunDir};

pub const RENORM_PRESET: &str = include_str!("../../../configs/renorm.conf");
pub const LINEARIZED_PRESET: &str = include_str!("../../../configs/linearized.conf");
pub const PROBES_PRESET: &str = include_str!("../../../configs/probes.conf");

/// Road nodes written per snapshot when `road_stride` is unset.
const DEFAULT_ROAD_NODES: usize = 4096;

/// Preset, then the config file, then flag overrides.
pub fn load_config(preset: &str, path: Option<&Path>, overrides: &[(&str, Option<String>)]) -> Result<RawConfig> {
    let mut raw = RawConfig::parse(preset)?;
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (k, v) in RawConfig::parse(&text)?.iter() {
            raw.set(k, v);
        }
    }
    for (k, v) in overrides {
        if let Some(v) = v {
            raw.set(k, v);
        }
    }
    Ok(raw)
}

/// Canonical `key = value` text; the manifest stores this so a run can be
/// repeated with `--config`.
pub fn config_text(raw: &RawConfig) -> String {
    raw.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

fn window(raw: &RawConfig, p: &ModelParams, default_start: f64) -> Result<(f64, f64)> {
    Ok((raw.f64_or("fit_window_start", default_start)?, raw.f64_or("fit_window_end", p.t_final)?))
}

/// Runs the configured system, persisting strided snapshots under `road/`
/// and `slices/`, and returns the in-memory trajectory.
fn simulate_into(run: &mut RunDir, raw: &RawConfig, p: &ModelParams, default_interval: f64) -> Result<Trajectory> {
    let interval = raw.f64_or("snapshot_interval", default_interval)?;
    let mut sim = SimulationRun::every(p.clone(), interval);
    if let Some(every) = raw.get("field_dump_interval") {
        let every: f64 = every.parse().context("field_dump_interval")?;
        sim.full_field_every = Some(((every / interval).round() as usize).max(1));
    }
    let stride = match raw.get("road_stride") {
        Some(_) => raw.usize("road_stride")?,
        None => (p.nx / DEFAULT_ROAD_NODES).max(1),
    };
    run.option("road_stride", stride);
    let grid = RoadGrid::new(p.nx, p.domain_half_width);
    let layout = SinkLayout { grid, ny: p.ny, dy: p.dy(), road_stride: stride };
    let mut traj = Trajectory::default();
    let mut sink = DirectorySink::spawn(run.path(), layout, DEFAULT_QUEUE)?;
    let outcome = run_simulation(&sim, &mut Tee { first: &mut traj, second: &mut sink });
    let files = sink.files().to_vec();
    for f in &files {
        run.record(f)?;
    }
    let summary = outcome?;
    run.manifest.steps = summary.steps;
    run.json("summary.json", &summary)?;
    Ok(traj)
}

fn trace_outputs(run: &mut RunDir, trace: &LevelSetTrace) -> Result<()> {
    run.csv("trace.csv", &trace_table(trace))?;
    let pts = (0..trace.len()).filter(|&k| trace.valid[k]).map(|k| (trace.times[k], trace.positions[k])).collect();
    let mut plot = LinePlot::new(&format!("level set u = {}", trace.lambda), "t", "x").with_series("x_lambda(t)", pts);
    plot.log_y = true;
    run.svg("trace.svg", &plot)
}

fn describe_fit(fit: &Result<DriftFit, frontlab::error::Error>) -> String {
    match fit {
        Ok(f) => format!("m_hat = {:.4} +- {:.4} ({} samples)", f.m_hat, f.stderr, f.samples),
        Err(e) => format!("fit unavailable: {e}"),
    }
}

pub fn simulate(config: Option<&Path>, out: &Path, lambda: Option<f64>) -> Result<()> {
    let Some(config) = config else { bail!(frontlab::error::Error::InvalidParam("simulate needs --config".into())) };
    let raw = load_config("", Some(config), &[("lambda", lambda.map(|l| l.to_string()))])?;
    let p = make_params(&raw)?;
    let lambda = raw.f64_or("lambda", 0.1)?;
    let win = window(&raw, &p, 0.4 * p.t_final)?;
    let run = RunDir::create(out, "simulate", &config_text(&raw), Some(&p))?;
    execute(run, |run| {
        let traj = simulate_into(run, &raw, &p, 0.25)?;
        let trace = traj.level_set_trace(&RoadGrid::new(p.nx, p.domain_half_width), lambda);
        trace_outputs(run, &trace)?;
        let fit = fit_drift_exponent(&trace, p.lambda_star(), Some(win));
        if let Ok(f) = &fit {
            run.json("fit.json", f)?;
        }
        Ok(format!("{} run to t = {}: {}", p.mode.as_str(), p.t_final, describe_fit(&fit)))
    })
}

pub fn linearized(config: Option<&Path>, out: &Path) -> Result<()> {
    let mut raw = load_config(LINEARIZED_PRESET, config, &[])?;
    raw.set("mode", RunMode::Linearized.as_str());
    let p = make_params(&raw)?;
    let win = window(&raw, &p, 10.0)?;
    let run = RunDir::create(out, "linearized", &config_text(&raw), Some(&p))?;
    execute(run, |run| {
        let mass = RoadFieldState::initial(&p).road_mass();
        let traj = simulate_into(run, &raw, &p, 1.0)?;
        let grid = RoadGrid::new(p.nx, p.domain_half_width);
        let report = validate_linearized_far_field(&grid, &traj.frames(), &p, mass, win)?;
        let mut samples = Table::new(&["t", "x", "u", "ratio"]);
        for s in &report.samples {
            samples.rows.push(vec![s.t, s.x, s.u, s.ratio]);
        }
        run.csv("far_field.csv", &samples)?;
        let mut trend = Table::new(&["t", "ratio"]);
        trend.rows.extend(report.trend.iter().map(|&(t, r)| vec![t, r]));
        run.csv("far_field_trend.csv", &trend)?;
        run.json("far_field.json", &report)?;
        let plot = LinePlot::new("far-field ratio", "t", "u t^(3/2) e^(-t) / (mass K(x))")
            .with_series("fan mean", report.trend.clone())
            .with_series("unit-mass limit", report.trend.iter().map(|&(t, _)| (t, report.constant_unit_mass)).collect());
        run.svg("far_field_trend.svg", &plot)?;
        if report.inconclusive {
            return Ok("far field inconclusive: no samples above the noise floor".into());
        }
        Ok(format!(
            "ratio(t = {}) = {:.5}; finite-time prediction {:.5}, unit-mass limit {:.5}, theory constant {:.5}; monotone {}",
            report.trend.last().map(|x| x.0).unwrap_or(f64::NAN),
            report.latest_ratio(),
            report.finite_time_prediction,
            report.constant_unit_mass,
            report.constant_theory,
            report.monotone
        ))
    })
}

#[derive(Debug, Clone, Copy)]
pub struct Kpp1dArgs {
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_count: usize,
    pub theta: f64,
    pub lambda: f64,
    pub dy: f64,
    pub dt: f64,
}

#[derive(Serialize)]
struct Kpp1dReport {
    fit: frontlab::transients::TransientFit,
    /// `max / min` of `eps e^T / T^(3/2)`.
    timing_ratio_variation: f64,
}

pub fn kpp1d(a: Kpp1dArgs, out: &Path) -> Result<()> {
    if !(a.eps_min > 0.0 && a.eps_min < a.eps_max && a.eps_max < 1.0) || a.eps_count < 3 {
        bail!(frontlab::error::Error::InvalidParam("need 0 < eps-min < eps-max < 1 and eps-count >= 3".into()));
    }
    let nl = Nonlinearity::threshold(1.0, a.theta)?;
    let text = format!(
        "eps_min = {}\neps_max = {}\neps_count = {}\ntheta = {}\nlambda = {}\ndy = {}\ndt = {}\n",
        a.eps_min, a.eps_max, a.eps_count, a.theta, a.lambda, a.dy, a.dt
    );
    let run = RunDir::create(out, "kpp1d", &text, None)?;
    execute(run, |run| {
        let (l0, l1) = (a.eps_min.ln(), a.eps_max.ln());
        let eps: Vec<f64> = (0..a.eps_count).map(|k| (l1 + (l0 - l1) * k as f64 / (a.eps_count - 1) as f64).exp()).collect();
        let results = transient_sweep(&eps, a.lambda, &nl, a.dy, a.dt)?;
        let mut table = Table::new(&["epsilon", "t_eps", "t1_eps", "ratio"]);
        for r in &results {
            table.rows.push(vec![r.epsilon, r.t_eps, r.t1_eps, r.ratio]);
        }
        run.csv("sweep.csv", &table)?;
        let fit = transient_law_fit(&results.iter().map(|r| (r.epsilon, r.t_eps)).collect::<Vec<_>>())?;
        let timing: Vec<f64> = results.iter().map(|r| r.epsilon * r.t_eps.exp() / r.t_eps.powf(1.5)).collect();
        let hi = timing.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = timing.iter().cloned().fold(f64::INFINITY, f64::min);
        let report = Kpp1dReport { fit, timing_ratio_variation: hi / lo };
        run.json("fit.json", &report)?;
        let pts = results.iter().map(|r| ((1.0 / r.epsilon).ln().ln(), r.t_eps - (1.0 / r.epsilon).ln())).collect();
        run.svg("timing.svg", &LinePlot::new("transient timing", "ln ln(1/eps)", "T_eps - ln(1/eps)").with_series("measured", pts))?;
        Ok(format!(
            "slope = {:.4} +- {:.4} (band [1.2, 1.8]: {}); eps e^T / T^(3/2) varies by {:.3}",
            report.fit.slope,
            report.fit.stderr,
            if report.fit.consistent { "inside" } else { "outside" },
            report.timing_ratio_variation
        ))
    })
}

pub fn fracop_check(alpha: f64, out: &Path) -> Result<()> {
    let text = format!("alpha = {alpha}\n");
    let run = RunDir::create(out, "fracop-check", &text, None)?;
    execute(run, |run| {
        let grid = RoadGrid::new(128, PI);
        let op = FracOperator::spectral(alpha, grid)?;
        let mut modes = Table::new(&["mode", "eigenvalue", "max_error"]);
        println!("{:>5} {:>14} {:>12}", "mode", "eigenvalue", "max error");
        let mut worst: f64 = 0.0;
        for m in 1..=16 {
            let f: Vec<f64> = grid.xs().iter().map(|x| (m as f64 * x).sin()).collect();
            let lam = (m as f64).powf(2.0 * alpha);
            let err = op.apply(&f)?.iter().zip(&f).map(|(o, v)| (o - lam * v).abs()).fold(0.0, f64::max);
            println!("{m:>5} {lam:>14.8} {err:>12.3e}");
            modes.rows.push(vec![m as f64, lam, err]);
            worst = worst.max(err);
        }
        run.csv("eigenfunctions.csv", &modes)?;

        let wide = RoadGrid::new(8192, 160.0);
        let g: Vec<f64> = wide.xs().iter().map(|x| (-x * x).exp()).collect();
        let s = FracOperator::spectral(alpha, wide)?.apply(&g)?;
        let q = FracOperator::quadrature(alpha, wide)?.apply(&g)?;
        let bulk = |i: &usize| wide.x(*i).abs() <= 80.0;
        let scale = (0..wide.nx).filter(bulk).map(|i| s[i].abs()).fold(0.0, f64::max);
        let agree = (0..wide.nx).filter(bulk).map(|i| (s[i] - q[i]).abs()).fold(0.0, f64::max) / scale;

        let xs: Vec<f64> = (0..=10).map(|k| 100.0 * 10f64.powf(k as f64 / 10.0)).collect();
        let tail = kernel_tail_check(alpha, 5.0, &xs)?;
        let mut tt = Table::new(&["x", "kernel", "ratio"]);
        for smp in &tail.samples {
            tt.rows.push(vec![smp.x, smp.kernel, smp.ratio]);
        }
        run.csv("kernel_tail.csv", &tt)?;
        Ok(format!(
            "alpha = {alpha}: worst eigenfunction error {worst:.3e}; spectral vs quadrature on exp(-x^2) {agree:.3e}; kernel tail variation {:.3}",
            tail.last_decade_variation
        ))
    })
}

#[derive(Debug, Clone, Copy)]
pub struct AsymptoteArgs {
    pub alpha: f64,
    pub mu: f64,
    pub t: f64,
    pub x: f64,
    pub a: f64,
    pub nu: f64,
    pub k: f64,
    pub c: f64,
    pub delta: f64,
}

#[derive(Serialize)]
struct AsymptoteOut {
    constant: f64,
    unit_mass_constant: f64,
    leading: f64,
    envelope: f64,
    front: f64,
    far_field: bool,
}

pub fn kernel_asymptote_cmd(a: AsymptoteArgs, out: &Path) -> Result<()> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) || !(a.t > 0.0) || a.x == 0.0 {
        bail!(frontlab::error::Error::InvalidParam("need 0 < alpha < 1, t > 0, x != 0".into()));
    }
    let text = format!(
        "alpha = {}\nmu = {}\nt = {}\nx = {}\na = {}\nnu = {}\nk = {}\nc = {}\ndelta = {}\n",
        a.alpha, a.mu, a.t, a.x, a.a, a.nu, a.k, a.c, a.delta
    );
    let run = RunDir::create(out, "kernel-asymptote", &text, None)?;
    execute(run, |run| {
        let audit = asymptote::RemainderAudit { c: a.c, delta: a.delta };
        let pred = kernel_asymptote(a.t, a.x, a.alpha, a.mu, audit);
        let front = (spreading_rate(a.a, a.alpha) * a.t).exp() * a.t.powf(-drift_exponent(a.alpha));
        let far_field = a.x.abs() >= asymptote::FAN.0 * front;
        let res = AsymptoteOut {
            constant: asymptote::theory_constant(a.alpha, a.mu),
            unit_mass_constant: asymptote::unit_mass_constant(a.alpha, a.a, a.mu, a.nu, a.k),
            leading: pred.leading,
            envelope: pred.envelope,
            front,
            far_field,
        };
        run.json("prediction.json", &res)?;
        Ok(format!(
            "constant = {:.6}; leading = {:.6e}; remainder envelope = {:.3e}; {}",
            res.constant,
            res.leading,
            res.envelope,
            if far_field { "far field".to_string() } else { format!("not far-field (|x| < {} x front {:.4e})", asymptote::FAN.0, front) }
        ))
    })
}

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub trace: PathBuf,
    pub alpha: f64,
    pub a: f64,
    pub lambda: f64,
    pub window: Option<(f64, f64)>,
}

pub fn fit(args: &FitArgs, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(&args.trace).with_context(|| format!("reading {}", args.trace.display()))?;
    let trace = parse_trace(&text, args.lambda)?;
    let lambda_star = spreading_rate(args.a, args.alpha);
    let mut cfg = format!("alpha = {}\na = {}\nlambda = {}\n", args.alpha, args.a, args.lambda);
    if let Some((s, e)) = args.window {
        cfg.push_str(&format!("fit_window_start = {s}\nfit_window_end = {e}\n"));
    }
    let mut run = RunDir::create(out, "fit", &cfg, None)?;
    run.option("trace", args.trace.display());
    execute(run, |run| {
        let f = fit_drift_exponent(&trace, lambda_star, args.window)?;
        run.json("fit.json", &f)?;
        Ok(format!(
            "m_hat = {:.4} +- {:.4} over t in [{}, {}] ({} samples); target {:.4}",
            f.m_hat,
            f.stderr,
            f.t_first,
            f.t_last,
            f.samples,
            -drift_exponent(args.alpha)
        ))
    })
}

fn renorm_outputs(run: &mut RunDir, name: &str, table: &RenormTable) -> Result<()> {
    let mut long = Table::new(&["t", "s", "u"]);
    for (k, &t) in table.times.iter().enumerate() {
        for (j, &s) in table.scales.iter().enumerate() {
            if !table.flagged[k][j] {
                long.rows.push(vec![t, s, table.values[k][j]]);
            }
        }
    }
    run.csv(&format!("{name}.csv"), &long)?;
    let mut plot = LinePlot::new(&format!("u(t, s t^(-m) e^(lambda* t)), m = {:.3}", table.m), "s", "u");
    plot.log_x = true;
    plot.log_y = true;
    let t_end = table.times.last().copied().unwrap_or(0.0);
    for target in [0.2, 0.4, 0.6, 0.8, 1.0].map(|f| f * t_end) {
        let Some(k) = table.times.iter().position(|&t| t >= target - 1e-9) else { continue };
        let pts = table.scales.iter().enumerate().filter(|(j, _)| !table.flagged[k][*j]).map(|(j, &s)| (s, table.values[k][j])).collect();
        plot = plot.with_series(&format!("t = {}", table.times[k]), pts);
    }
    run.svg(&format!("{name}.svg"), &plot)
}

#[derive(Serialize)]
struct RenormScores {
    m: [f64; 3],
    score: [f64; 3],
    window: (f64, f64),
    fit: Option<DriftFit>,
}

pub fn figure1(config: Option<&Path>, out: &Path, alpha: Option<f64>) -> Result<()> {
    let mut raw = load_config(RENORM_PRESET, config, &[("alpha", alpha.map(|a| a.to_string()))])?;
    raw.set("mode", RunMode::Nonlinear.as_str());
    let p = make_params(&raw)?;
    let lambda = raw.f64_or("lambda", 0.1)?;
    let win = window(&raw, &p, 0.4 * p.t_final)?;
    let run = RunDir::create(out, "figure1", &config_text(&raw), Some(&p))?;
    execute(run, |run| {
        let traj = simulate_into(run, &raw, &p, 0.25)?;
        let grid = RoadGrid::new(p.nx, p.domain_half_width);
        let m_star = p.drift_exponent();
        let ms = [0.0, m_star, 2.0 * m_star];
        let late = late_window(p.t_final);
        let frames = traj.frames();
        let mut score = [0.0; 3];
        for (n, (m, name)) in ms.iter().zip(["renorm_m0", "renorm_mstar", "renorm_2mstar"]).enumerate() {
            let table = renormalized_samples(&grid, &frames, *m, p.lambda_star(), &scale_grid(), late)?;
            renorm_outputs(run, name, &table)?;
            score[n] = table.score;
        }
        let trace = traj.level_set_trace(&grid, lambda);
        trace_outputs(run, &trace)?;
        let fit = fit_drift_exponent(&trace, p.lambda_star(), Some(win));
        run.json("scores.json", &RenormScores { m: ms, score, window: late, fit: fit.as_ref().ok().copied() })?;
        Ok(format!(
            "scores on t in [{}, {}]: m = 0 -> {:.4}, m* = {:.3} -> {:.4}, 2m* -> {:.4}; {}",
            late.0,
            late.1,
            score[0],
            m_star,
            score[1],
            score[2],
            describe_fit(&fit)
        ))
    })
}

#[derive(Debug, Clone)]
pub struct ProbeArgs {
    pub l: f64,
    pub epsilons: Vec<f64>,
    pub x0s: Vec<f64>,
    pub theta: f64,
}

#[derive(Serialize)]
struct ProbeReport {
    road_to_field: frontlab::diagnostics::ProbeSweep,
    field_to_road: frontlab::diagnostics::ProbeSweep,
    floor: Vec<frontlab::diagnostics::probes::FloorResult>,
    floor_spread: Option<f64>,
}

pub fn probes(config: Option<&Path>, out: &Path, args: &ProbeArgs) -> Result<()> {
    let raw = load_config(PROBES_PRESET, config, &[])?;
    let p = make_params(&raw)?;
    let mut text = config_text(&raw);
    text.push_str(&format!("# l = {}\n# epsilons = {:?}\n# x0s = {:?}\n# theta = {}\n", args.l, args.epsilons, args.x0s, args.theta));
    let run = RunDir::create(out, "probes", &text, Some(&p))?;
    execute(run, |run| {
        let rf = communication_sweep(&p, Communication::RoadToField, args.l, &args.epsilons)?;
        let fr = communication_sweep(&p, Communication::FieldToRoad, args.l, &args.epsilons)?;
        for (name, s) in [("road_to_field.csv", &rf), ("field_to_road.csv", &fr)] {
            let mut t = Table::new(&["epsilon", "c_l"]);
            t.rows.extend(s.epsilons.iter().zip(&s.constants).map(|(e, c)| vec![*e, *c]));
            run.csv(name, &t)?;
        }
        let (floor, spread) = if args.x0s.is_empty() {
            (Vec::new(), None)
        } else {
            let base = FloorSetup {
                x0: args.x0s[0],
                alpha: p.alpha,
                epsilon: None,
                c: 1.0,
                theta: args.theta,
                reaction: Reaction::Kpp(p.nonlinearity),
                dx: 1.0,
                dy: 0.2,
                dt: 0.04,
            };
            let (r, s) = floor_sweep(&base, &args.x0s)?;
            let mut t = Table::new(&["x0", "epsilon", "t1", "v", "ratio", "linear_reference"]);
            t.rows.extend(r.iter().map(|x| vec![x.x0, x.epsilon, x.t1, x.v_at, x.ratio, x.linear_reference]));
            run.csv("dirichlet_floor.csv", &t)?;
            (r, Some(s))
        };
        let mut line = format!(
            "road->field c_L min {:.4} variation {:.3}; field->road c_L min {:.4} variation {:.3}",
            rf.min_constant, rf.variation, fr.min_constant, fr.variation
        );
        if let Some(s) = spread {
            let q = floor.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
            line.push_str(&format!("; dirichlet floor ratio q >= {q:.4} spread {s:.3}"));
        }
        run.json("probes.json", &ProbeReport { road_to_field: rf, field_to_road: fr, floor, floor_spread: spread })?;
        Ok(line)
    })
}
