use frontlab::field::{BottomBoundary, FarBoundary, StripConfig, StripScheme};
use frontlab::reaction::{Nonlinearity, Reaction};
use proptest::prelude::*;
use statrs::function::erf::erf;

fn strip(nx: usize, ny: usize, dx: f64, dy: f64, dt: f64, bottom: BottomBoundary, reaction: Reaction) -> StripConfig {
    StripConfig { nx, ny, dx, dy, dt, bottom, top: FarBoundary::Dirichlet, lateral: FarBoundary::Dirichlet, reaction }
}

#[test]
fn all_neumann_equilibrium() {
    let mut cfg =
        strip(32, 16, 0.5, 0.25, 0.05, BottomBoundary::Robin { mu: 0.0, nu: 0.0 }, Reaction::Kpp(Nonlinearity::logistic(1.0).unwrap()));
    cfg.top = FarBoundary::Neumann;
    cfg.lateral = FarBoundary::Neumann;
    let s = StripScheme::new(cfg).unwrap();
    let mut v = vec![1.0; 32 * 16];
    let u = vec![0.0; 32];
    for _ in 0..200 {
        s.step(&mut v, &u).unwrap();
    }
    let drift = v.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-12, "{drift}");
}

/// `e^t` times the heat flow of `1_[-l,l](x)` times the Dirichlet flow of
/// `1_[0,1](y)`.
fn product_formula(t: f64, x: f64, y: f64, l: f64) -> f64 {
    let s = 2.0 * t.sqrt();
    let fx = 0.5 * (erf((x + l) / s) - erf((x - l) / s));
    let fy = 0.5 * (2.0 * erf(y / s) - erf((y - 1.0) / s) - erf((y + 1.0) / s));
    t.exp() * fx * fy
}

#[test]
fn linear_dirichlet_run_factorizes() {
    let (dx, dy, dt) = (0.05, 0.05, 0.005);
    let (half, height) = (12.0, 12.0);
    let nx = (2.0 * half / dx) as usize;
    let ny = (height / dy) as usize;
    let s = StripScheme::new(strip(nx, ny, dx, dy, dt, BottomBoundary::Dirichlet, Reaction::Linear { rate: 1.0 })).unwrap();
    let x = |i: usize| (i as f64 - (nx / 2) as f64) * dx;
    let l = 1.0;
    let mut v = vec![0.0; nx * ny];
    for j in 1..ny {
        let y = j as f64 * dy;
        let wy = if (y - 1.0).abs() < 1e-9 {
            0.5
        } else if y < 1.0 {
            1.0
        } else {
            0.0
        };
        for i in 0..nx {
            let wx = if (x(i).abs() - l).abs() < 1e-9 {
                0.5
            } else if x(i).abs() < l {
                1.0
            } else {
                0.0
            };
            v[j * nx + i] = wx * wy;
        }
    }
    let u = vec![0.0; nx];
    let t = 2.0;
    for _ in 0..(t / dt).round() as usize {
        s.step(&mut v, &u).unwrap();
    }
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..ny / 2 {
        for i in nx / 4..3 * nx / 4 {
            let exact = product_formula(t, x(i), j as f64 * dy, l);
            err = err.max((v[j * nx + i] - exact).abs());
            scale = scale.max(exact.abs());
        }
    }
    assert!(err / scale <= 1e-3, "relative error {}", err / scale);
}

#[test]
fn product_formula_oracle_is_sane() {
    // vanishes on the road and integrates the datum at small times
    assert!(product_formula(1.0, 0.3, 0.0, 1.0).abs() < 1e-15);
    let t = 1e-6;
    let v = product_formula(t, 0.0, 0.5, 1.0);
    assert!((v - t.exp()).abs() < 1e-12);
}

/// Steady state of `v_t = v_yy - v` with `-v_y(0) = mu u - nu v(0)` and
/// `v(Y) = 0` is `C sinh(Y - y)` with `C = mu u / (cosh Y + nu sinh Y)`.
fn robin_steady_error(dy: f64) -> f64 {
    let (mu, nu, u0, height) = (1.0, 1.0, 0.7, 6.0);
    let ny = (height / dy).round() as usize;
    let mut cfg = strip(8, ny, 1.0, dy, dy, BottomBoundary::Robin { mu, nu }, Reaction::Linear { rate: -1.0 });
    cfg.lateral = FarBoundary::Neumann;
    let s = StripScheme::new(cfg).unwrap();
    let mut v = vec![0.0; 8 * ny];
    let u = vec![u0; 8];
    for _ in 0..(40.0 / dy) as usize {
        s.step(&mut v, &u).unwrap();
    }
    let big_y = ny as f64 * dy;
    let c = mu * u0 / (big_y.cosh() + nu * big_y.sinh());
    (0..ny).map(|j| (v[j * 8 + 3] - c * (big_y - j as f64 * dy).sinh()).abs()).fold(0.0, f64::max)
}

#[test]
fn robin_boundary_is_second_order() {
    let e: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&h| robin_steady_error(h)).collect();
    let p1 = (e[0] / e[1]).log2();
    let p2 = (e[1] / e[2]).log2();
    assert!(p1 >= 1.9 && p2 >= 1.9, "errors {e:?}, orders {p1:.3} {p2:.3}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ordered_data_stay_ordered(
        base in prop::collection::vec(0.0f64..1.0, 16 * 12),
        bump in prop::collection::vec(0.0f64..0.5, 16 * 12),
        road in prop::collection::vec(0.0f64..1.5, 16),
        road_bump in prop::collection::vec(0.0f64..0.5, 16),
    ) {
        let cfg = strip(16, 12, 0.5, 0.5, 0.1, BottomBoundary::Robin { mu: 1.0, nu: 1.0 }, Reaction::Kpp(Nonlinearity::logistic(1.0).unwrap()));
        let s = StripScheme::new(cfg).unwrap();
        let mut lo = base.clone();
        let mut hi: Vec<f64> = base.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let u_hi: Vec<f64> = road.iter().zip(&road_bump).map(|(a, b)| a + b).collect();
        for _ in 0..10 {
            s.step(&mut lo, &road).unwrap();
            s.step(&mut hi, &u_hi).unwrap();
        }
        for (a, b) in lo.iter().zip(&hi) {
            prop_assert!(*a <= b + 1e-10);
        }
        prop_assert!(lo.iter().all(|x| *x >= 0.0));
    }
}
