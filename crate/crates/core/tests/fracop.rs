use std::f64::consts::PI;

use frontlab::fracop::{kernel_tail_check, FracMethod, FracOperator, FracSymbol, RoadGrid};
use proptest::prelude::*;

fn rel_linf(a: &[f64], b: &[f64], mask: impl Fn(usize) -> bool) -> f64 {
    let scale = b.iter().enumerate().filter(|(i, _)| mask(*i)).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    a.iter().zip(b).enumerate().filter(|(i, _)| mask(*i)).map(|(_, (x, y))| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn fourier_modes_match_symbol() {
    let grid = RoadGrid::new(128, PI);
    for &alpha in &[0.2, 0.5, 0.75, 0.95] {
        let op = FracOperator::spectral(alpha, grid).unwrap();
        for m in 1..10 {
            let f: Vec<f64> = grid.xs().iter().map(|x| (m as f64 * x).cos()).collect();
            let out = op.apply(&f).unwrap();
            let lam = (m as f64).powf(2.0 * alpha);
            for (o, v) in out.iter().zip(&f) {
                assert!((o - lam * v).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn spectral_and_quadrature_agree_on_gaussians() {
    let grid = RoadGrid::new(8192, 160.0);
    let f: Vec<f64> = grid.xs().iter().map(|x| (-x * x).exp()).collect();
    for &alpha in &[0.25, 0.5, 0.75] {
        let s = FracOperator::spectral(alpha, grid).unwrap().apply(&f).unwrap();
        let q = FracOperator::quadrature(alpha, grid).unwrap().apply(&f).unwrap();
        let err = rel_linf(&q, &s, |i| grid.x(i).abs() <= 80.0);
        assert!(err <= 1e-3, "alpha={alpha} err={err}");
    }
}

#[test]
fn half_order_semigroup_is_cauchy() {
    // periodized Poisson kernel: (1/P) sinh(2 pi t / P) / (cosh(2 pi t / P) - cos(2 pi x / P))
    let grid = RoadGrid::new(1 << 16, 2000.0);
    let op = FracOperator::spectral(0.5, grid).unwrap();
    let mut delta = vec![0.0; grid.nx];
    delta[grid.nx / 2] = 1.0 / grid.dx();
    let t = 5.0;
    let g = op.heat_step(&delta, t, 0.0).unwrap();
    let p = 2.0 * grid.half_width;
    let exact: Vec<f64> = grid
        .xs()
        .iter()
        .map(|x| {
            let w = 2.0 * PI / p;
            (w * t).sinh() / (p * ((w * t).cosh() - (w * x).cos()))
        })
        .collect();
    let bulk = |i: usize| grid.x(i).abs() <= 50.0;
    let err = g.iter().zip(&exact).enumerate().filter(|(i, _)| bulk(*i)).map(|(_, (a, b))| ((a - b) / b).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-4, "err={err}");
    // and the free-space kernel t / (pi (t^2 + x^2)) away from the wrap region
    for i in (0..grid.nx).filter(|&i| grid.x(i).abs() <= 10.0) {
        let x = grid.x(i);
        let free = t / (PI * (t * t + x * x));
        assert!(((g[i] - free) / free).abs() <= 1e-4);
    }
}

#[test]
fn cauchy_tail_ratio_limit() {
    let t = 5.0;
    let ratio = |x: f64| t / (PI * (t * t + x * x)) * x * x / t;
    assert!((ratio(1e6) - 1.0 / PI).abs() < 1e-10);
    let table = kernel_tail_check(0.5, t, &[100.0, 200.0, 400.0, 700.0, 1000.0]).unwrap();
    assert!(table.bounded);
    assert!(table.flattening(0.2), "{table:?}");
    for s in &table.samples {
        assert!((s.ratio - ratio(s.x)).abs() < 0.02 * ratio(s.x), "{s:?}");
    }
}

#[test]
fn quadrature_weights_reproduce_sine_symbol() {
    let grid = RoadGrid::new(512, 64.0 * PI);
    let f: Vec<f64> = grid.xs().iter().map(|x| (x / 2.0).sin() * (-(x / 60.0).powi(2)).exp()).collect();
    let s = FracOperator::spectral(0.6, grid).unwrap().apply(&f).unwrap();
    let q = FracOperator::new(0.6, grid, FracMethod::Quadrature).unwrap().apply(&f).unwrap();
    let err = rel_linf(&q, &s, |i| grid.x(i).abs() <= 50.0);
    assert!(err < 2e-2, "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn semigroup_keeps_positivity_and_mass(
        alpha in 0.1f64..0.95,
        dt in 0.01f64..2.0,
        bumps in proptest::collection::vec((0usize..256, 0.0f64..1.0), 1..8),
    ) {
        let grid = RoadGrid::new(256, 30.0);
        let mut f = vec![0.0; 256];
        for (i, h) in bumps {
            f[i] += h;
        }
        // Only the lattice symbol is positive at the grid scale; the exact one,
        // cut at Nyquist, rings below zero next to a spike for small dt.
        let max = f.iter().cloned().fold(0.0, f64::max).max(1e-300);
        let m0: f64 = f.iter().sum();
        for kind in [FracSymbol::Lattice, FracSymbol::Exact] {
            let g = FracOperator::spectral_with(alpha, grid, kind).unwrap().heat_step(&f, dt, 0.0).unwrap();
            if kind == FracSymbol::Lattice {
                let min = g.iter().cloned().fold(f64::INFINITY, f64::min);
                prop_assert!(min >= -1e-12 * max, "{min}");
            }
            let m1: f64 = g.iter().sum();
            prop_assert!((m0 - m1).abs() <= 1e-10 * m0.max(1.0));
        }
    }
}
