use frontlab::coupled::{run_fractional_kpp, run_simulation, CoupledStepper, SimulationRun, Trajectory};
use frontlab::diagnostics::{fit_drift_exponent, track_level_set};
use frontlab::field::FarBoundary;
use frontlab::fracop::RoadGrid;
use frontlab::params::{ModelParams, RunMode};
use frontlab::reaction::{Nonlinearity, Reaction};
use frontlab::state::RoadFieldState;
use proptest::prelude::*;

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
fn equilibrium_is_a_fixed_point() {
    for (mu, nu) in [(1.0, 1.0), (2.0, 0.5)] {
        let p = ModelParams { mu, nu, ..small() };
        let (ue, ve) = p.equilibrium().unwrap();
        assert!((ue - nu * ve / mu).abs() < 1e-15);
        let nl = Reaction::Kpp(p.nonlinearity);
        let mut s = CoupledStepper::custom(&p, nl, 0.0, FarBoundary::Neumann, FarBoundary::Neumann).unwrap();
        let mut st = RoadFieldState::uniform(&p, ue, ve);
        for _ in 0..50 {
            let before = st.clone();
            s.step(&mut st).unwrap();
            let du = st.u.iter().zip(&before.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let dv = st.v.iter().zip(&before.v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(du <= 1e-10 && dv <= 1e-10, "mu={mu} nu={nu}: du={du:e} dv={dv:e}");
        }
    }
}

#[test]
fn exchange_conserves_mass_without_growth() {
    let p = small();
    let mut s = CoupledStepper::custom(&p, Reaction::None, 0.0, FarBoundary::Neumann, FarBoundary::Neumann).unwrap();
    let mut st = RoadFieldState::initial(&p);
    for j in 0..p.ny {
        for i in 0..p.nx {
            let (x, y) = (st.x(i), st.y(j));
            st.v[j * p.nx + i] = 0.3 * (-(x * x) / 4.0 - (y - 2.0).powi(2)).exp();
        }
    }
    let m0 = st.total_mass();
    let t_end = 5.0;
    for _ in 0..(t_end / p.dt).round() as usize {
        s.step(&mut st).unwrap();
    }
    let drift = (st.total_mass() - m0).abs() / m0 / t_end;
    assert!(drift <= 1e-8, "relative drift per unit time {drift:e}");
    // mass did move between the components
    let r0 = RoadFieldState::initial(&p).road_mass();
    assert!((st.road_mass() - r0).abs() > 0.1 * r0);
}

#[test]
fn even_data_stay_even() {
    let p = ModelParams { delta0: 1.0, ..small() };
    let mut s = CoupledStepper::new(&p).unwrap();
    let mut st = RoadFieldState::initial(&p);
    assert!(st.asymmetry() == 0.0);
    for _ in 0..40 {
        s.step(&mut st).unwrap();
    }
    assert!(st.asymmetry() <= 1e-10, "{:e}", st.asymmetry());
}

#[test]
fn linearized_damping_lowers_the_road() {
    let base = ModelParams { mode: RunMode::Linearized, ..small() };
    let damped = ModelParams { k: 0.5, ..base.clone() };
    let mut s0 = CoupledStepper::new(&base).unwrap();
    let mut s1 = CoupledStepper::new(&damped).unwrap();
    let mut a = RoadFieldState::initial(&base);
    let mut b = a.clone();
    for _ in 0..20 {
        s0.step(&mut a).unwrap();
        s1.step(&mut b).unwrap();
    }
    assert!(a.u.iter().zip(&b.u).all(|(x, y)| y <= x));
    assert!(b.road_mass() < a.road_mass());
}

/// Position of the level `u = 0.01` at `t_final` and the sup-u history.
fn small_datum_run(refine: usize) -> (f64, Vec<f64>) {
    let p = ModelParams {
        delta0: 0.1,
        x0_init: 1.0,
        domain_half_width: 32.0,
        strip_height: 18.0,
        nx: 256 * refine,
        ny: 72 * refine,
        dt: 0.05 / refine as f64,
        t_final: 4.0,
        ..small()
    };
    let run = SimulationRun::every(p.clone(), 0.5);
    let mut traj = Trajectory::default();
    run_simulation(&run, &mut traj).unwrap();
    let grid = RoadGrid::new(p.nx, p.domain_half_width);
    let last = traj.snapshots.last().unwrap();
    let r = track_level_set(&grid, &last.u, 0.01);
    let x = r.position().unwrap_or_else(|| panic!("{r:?} sup {}", last.u.iter().cloned().fold(0.0, f64::max)));
    (x, traj.snapshots.iter().map(|s| s.u.iter().cloned().fold(0.0, f64::max)).collect())
}

#[test]
fn small_datum_self_convergence() {
    let (x1, sup1) = small_datum_run(1);
    let (x2, sup2) = small_datum_run(2);
    let rel = (x1 - x2).abs() / x2;
    assert!(rel <= 0.02, "x coarse {x1} fine {x2} rel {rel}");
    // the bump first spreads out, then growth takes over for good
    for sup in [&sup1, &sup2] {
        let k = (0..sup.len()).min_by(|&a, &b| sup[a].total_cmp(&sup[b])).unwrap();
        assert!(k + 2 < sup.len(), "{sup:?}");
        assert!(sup[k..].windows(2).all(|w| w[1] > w[0]), "{sup:?}");
    }
}

#[test]
fn small_datum_spreads_everywhere() {
    let p = ModelParams { strip_height: 12.0, t_final: 1.0, ..small() };
    let mut s = CoupledStepper::new(&p).unwrap();
    let mut st = RoadFieldState::initial(&p);
    assert!(st.u.contains(&0.0));
    for _ in 0..3 {
        s.step(&mut st).unwrap();
    }
    assert!(st.u.iter().all(|&x| x > 0.0));
}

#[test]
fn reruns_are_bit_identical() {
    let p = ModelParams { t_final: 1.0, ..small() };
    let mut run = SimulationRun::every(p, 0.25);
    run.full_field_every = Some(2);
    let mut a = Trajectory::default();
    let mut b = Trajectory::default();
    run_simulation(&run, &mut a).unwrap();
    run_simulation(&run, &mut b).unwrap();
    assert_eq!(a.snapshots.len(), 5);
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        assert!(x.u.iter().zip(&y.u).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert_eq!(x.field.is_some(), y.field.is_some());
        if let (Some(f), Some(g)) = (&x.field, &y.field) {
            assert!(f.iter().zip(g).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}

#[test]
fn fractional_kpp_equilibrium() {
    let p = ModelParams { mode: RunMode::FractionalKpp, ..small() };
    let mut s = CoupledStepper::new(&p).unwrap();
    let mut st = RoadFieldState::zeros(p.nx, 0, p.dx(), p.dy());
    st.u.fill(1.0);
    for _ in 0..20 {
        s.step(&mut st).unwrap();
    }
    assert!(st.u.iter().all(|x| (x - 1.0).abs() <= 1e-12));
}

#[test]
fn fractional_kpp_has_no_algebraic_drift() {
    // half-order road: lambda* = 1/2, front ~ e^(t/2)
    let p = ModelParams {
        mode: RunMode::FractionalKpp,
        delta0: 1.0,
        domain_half_width: 4.0 * 8f64.exp() * 1.001,
        nx: 1 << 16,
        dt: 0.05,
        t_final: 12.0,
        ..small()
    };
    let times: Vec<f64> = (0..=48).map(|k| k as f64 * 0.25).collect();
    let (trace, _) = run_fractional_kpp(&p, Reaction::Kpp(p.nonlinearity), 0.1, &times).unwrap();
    assert!(trace.valid.iter().rev().take(32).all(|&v| v), "{trace:?}");
    let fit = fit_drift_exponent(&trace, p.lambda_star(), Some((4.0, 12.0))).unwrap();
    assert!(fit.m_hat.abs() <= 0.15, "{fit:?}");
}

#[test]
fn road_heat_level_sets_follow_the_tail() {
    // f = 0: u ~ c t / |x|^(1+2 alpha), so x_lambda ~ (t / lambda)^(1/(1+2 alpha))
    let p = ModelParams {
        mode: RunMode::FractionalKpp,
        delta0: 1.0,
        domain_half_width: 4096.0,
        nx: 1 << 15,
        dt: 0.05,
        t_final: 20.0,
        ..small()
    };
    let times: Vec<f64> = (1..=20).map(|k| k as f64).collect();
    let lambda = 1e-4;
    let (trace, _) = run_fractional_kpp(&p, Reaction::None, lambda, &times).unwrap();
    let scaled: Vec<f64> = (0..trace.len())
        .filter(|&k| trace.valid[k] && trace.times[k] >= 5.0)
        .map(|k| trace.positions[k] * (lambda / trace.times[k]).powf(1.0 / (1.0 + 2.0 * p.alpha)))
        .collect();
    assert!(scaled.len() >= 10);
    let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 1.1, "{scaled:?}");
}

fn ordered_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let p = small();
    (
        prop::collection::vec(0.0f64..1.0, p.nx),
        prop::collection::vec(0.0f64..0.5, p.nx),
        prop::collection::vec(0.0f64..1.0, p.nx * p.ny),
        prop::collection::vec(0.0f64..0.5, p.nx * p.ny),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coupled_comparison_principle((u, du, v, dv) in ordered_pair()) {
        let p = small();
        let mut s1 = CoupledStepper::new(&p).unwrap();
        let mut s2 = CoupledStepper::new(&p).unwrap();
        let mut lo = RoadFieldState::zeros(p.nx, p.ny, p.dx(), p.dy());
        lo.u = u.clone();
        lo.v = v.clone();
        let mut hi = lo.clone();
        hi.u.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
        hi.v.iter_mut().zip(&dv).for_each(|(a, b)| *a += b);
        for _ in 0..10 {
            s1.step(&mut lo).unwrap();
            s2.step(&mut hi).unwrap();
        }
        for (a, b) in lo.u.iter().zip(&hi.u).chain(lo.v.iter().zip(&hi.v)) {
            prop_assert!(*a <= b + 1e-10, "{a} > {b}");
        }
        prop_assert!(lo.u.iter().chain(&lo.v).all(|x| *x >= 0.0));
    }
}
