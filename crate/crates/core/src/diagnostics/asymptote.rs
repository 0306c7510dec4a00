//! Far-field density of the linearized road-field system.
//!
//! For a road datum of unit mass the far field is
//! `u(t, x) ~ c_alpha (M * M)(t) / |x|^(1 + 2 alpha)`, where `M` is the road
//! mass of the `xi = 0` system and `*` is time convolution. Its Laplace
//! transform is `U(s) = 1 / (s + mu + k - mu nu / (sqrt(s - a) + nu))`, so
//! `(M * M)(t) ~ mu e^(a t) / (nu (a + k)^3 sqrt(pi) t^(3/2))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fracop::{fractional_constant, RoadGrid};
use crate::params::ModelParams;

use super::renorm::sample_road;

/// Samples below this are noise.
pub const NOISE_FLOOR: f64 = 1e-14;
/// Fan `x / x_front` sampled by the validator.
pub const FAN: (f64, f64) = (3.0, 10.0);
pub const FAN_POINTS: usize = 8;
const TALBOT_TERMS: usize = 24;

/// `8 alpha mu sin(alpha pi) Gamma(2 alpha) Gamma(3/2) / pi`.
pub fn theory_constant(alpha: f64, mu: f64) -> f64 {
    8.0 * alpha * mu * (alpha * PI).sin() * gamma(2.0 * alpha) * gamma(1.5) / PI
}

/// Limit of `u t^(3/2) |x|^(1+2 alpha) e^(-a t)` per unit road mass.
pub fn unit_mass_constant(alpha: f64, a: f64, mu: f64, nu: f64, k: f64) -> f64 {
    fractional_constant(alpha) * mu / (nu * (a + k).powi(3) * PI.sqrt())
}

/// Fixed Talbot inversion of `f` at `t > 0`; singularities of `f` must lie
/// on the closed negative real axis.
fn talbot(f: impl Fn(Complex64) -> Complex64, t: f64) -> f64 {
    let m = TALBOT_TERMS as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut acc = 0.5 * (f(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..TALBOT_TERMS {
        let th = k as f64 * PI / m;
        let cot = th.cos() / th.sin();
        let s = Complex64::new(r * th * cot, r * th);
        let sigma = th + (th * cot - 1.0) * cot;
        acc += ((s * t).exp() * f(s) * Complex64::new(1.0, sigma)).re;
    }
    acc * r / m
}

fn road_transform(p: Complex64, a: f64, mu: f64, nu: f64, k: f64) -> Complex64 {
    // s = a + p
    1.0 / (a + p + mu + k - mu * nu / (p.sqrt() + nu))
}

/// `e^(-a t) M(t)` and `e^(-a t) (M * M)(t)` for a unit road impulse.
pub fn road_response(t: f64, a: f64, mu: f64, nu: f64, k: f64) -> (f64, f64) {
    let m = talbot(|p| road_transform(p, a, mu, nu, k), t);
    let mm = talbot(
        |p| {
            let u = road_transform(p, a, mu, nu, k);
            u * u
        },
        t,
    );
    (m, mm)
}

/// `sum_n |x + 2 n X|^(-1-2 alpha)`: the tail seen on a periodic road.
pub fn image_sum(x: f64, half_width: f64, alpha: f64) -> f64 {
    let p = 1.0 + 2.0 * alpha;
    let period = 2.0 * half_width;
    let mut sum = x.abs().powf(-p);
    const TERMS: i64 = 2000;
    for n in 1..=TERMS {
        let n = n as f64;
        sum += (period * n + x).abs().powf(-p) + (period * n - x).abs().powf(-p);
    }
    // remaining images, by the integral of the pair sum
    let tail = 2.0 * period.powf(-p) * (TERMS as f64 + 0.5).powf(1.0 - p) / (p - 1.0);
    sum + tail
}

/// Constants of the remainder envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderAudit {
    pub c: f64,
    pub delta: f64,
}

impl Default for RemainderAudit {
    fn default() -> Self {
        Self { c: 1.0, delta: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptotePrediction {
    pub leading: f64,
    pub envelope: f64,
}

/// `e^(-delta t) + e^t / |x|^min(1+4 alpha, 3) + e^t / (|x|^(1+2 alpha) t^(5/2))`.
pub fn envelope_shape(t: f64, x: f64, alpha: f64, delta: f64) -> f64 {
    let x = x.abs();
    (-delta * t).exp() + t.exp() / x.powf((1.0 + 4.0 * alpha).min(3.0)) + t.exp() / (x.powf(1.0 + 2.0 * alpha) * t.powf(2.5))
}

/// Leading far-field term with the theory constant, and its remainder bound.
pub fn kernel_asymptote(t: f64, x: f64, alpha: f64, mu: f64, audit: RemainderAudit) -> AsymptotePrediction {
    let leading = theory_constant(alpha, mu) * t.exp() / (t.powf(1.5) * x.abs().powf(1.0 + 2.0 * alpha));
    AsymptotePrediction { leading, envelope: audit.c * envelope_shape(t, x, alpha, audit.delta) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanSample {
    pub t: f64,
    pub x: f64,
    pub u: f64,
    /// `u t^(3/2) e^(-a t) / (mass image_sum(x))`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteReport {
    pub constant_theory: f64,
    pub constant_unit_mass: f64,
    /// Unit-mass prediction at the latest sampled time.
    pub finite_time_prediction: f64,
    pub mass: f64,
    pub samples: Vec<FanSample>,
    /// Fan mean of `ratio` per sampled time.
    pub trend: Vec<(f64, f64)>,
    pub monotone: bool,
    /// Latest time: worst `|ratio / constant_theory - 1|` over the fan.
    pub latest_deviation: f64,
    /// Latest time: `|ratio(2x) / ratio(x) - 1|` worst case on the fan.
    pub doubling_change: f64,
    pub remainder: RemainderAudit,
    /// Largest `|u - leading| / (C shape)` over the samples.
    pub max_excess: f64,
    pub inconclusive: bool,
}

impl AsymptoteReport {
    pub fn latest_ratio(&self) -> f64 {
        self.trend.last().map(|(_, r)| *r).unwrap_or(f64::NAN)
    }
}

/// Front position `e^(lambda* t) t^(-m*)`.
pub fn front_position(t: f64, p: &ModelParams) -> f64 {
    (p.lambda_star() * t).exp() * t.powf(-p.drift_exponent())
}

/// Least-squares `(C, delta)` of `|dev| ~ C shape(delta)` on relative
/// residuals, `delta` scanned on `[0.05, 2]`.
fn fit_remainder(points: &[(f64, f64, f64)], alpha: f64) -> RemainderAudit {
    let mut best = (f64::INFINITY, RemainderAudit::default());
    for i in 0..=39 {
        let delta = 0.05 + 0.05 * i as f64;
        let ratios: Vec<f64> = points.iter().map(|&(t, x, dev)| dev / envelope_shape(t, x, alpha, delta)).collect();
        let c = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let resid: f64 = ratios.iter().map(|r| (r / c - 1.0).powi(2)).sum();
        if resid < best.0 {
            best = (resid, RemainderAudit { c, delta });
        }
    }
    best.1
}

/// Ratios on the far-field fan of a linearized run. Frames are `(t, u)`;
/// those outside `window` are skipped. `mass` is the initial road mass.
pub fn validate_linearized_far_field(
    grid: &RoadGrid,
    frames: &[(f64, &[f64])],
    params: &ModelParams,
    mass: f64,
    window: (f64, f64),
) -> Result<AsymptoteReport> {
    if !(mass > 0.0) {
        return Err(Error::InvalidParam(format!("initial mass {mass} must be > 0")));
    }
    let alpha = params.alpha;
    let fan: Vec<f64> = (0..FAN_POINTS).map(|j| FAN.0 * (FAN.1 / FAN.0).powf(j as f64 / (FAN_POINTS - 1) as f64)).collect();
    let mut samples = Vec::new();
    let mut trend = Vec::new();
    for &(t, u) in frames.iter().filter(|(t, _)| *t >= window.0 && *t <= window.1 && *t > 0.0) {
        let xf = front_position(t, params);
        let mut row = Vec::new();
        for s in &fan {
            let x = s * xf;
            let Some(val) = sample_road(grid, u, x) else { continue };
            if val < NOISE_FLOOR {
                continue;
            }
            let ratio = val * t.powf(1.5) * (-params.a * t).exp() / (mass * image_sum(x, grid.half_width, alpha));
            row.push(FanSample { t, x, u: val, ratio });
        }
        if !row.is_empty() {
            trend.push((t, row.iter().map(|s| s.ratio).sum::<f64>() / row.len() as f64));
        }
        samples.extend(row);
    }
    let constant_theory = theory_constant(alpha, params.mu);
    let constant_unit_mass = unit_mass_constant(alpha, params.a, params.mu, params.nu, params.k);
    let Some(&(t_last, _)) = trend.last() else {
        return Ok(AsymptoteReport {
            constant_theory,
            constant_unit_mass,
            finite_time_prediction: f64::NAN,
            mass,
            samples,
            trend,
            monotone: false,
            latest_deviation: f64::NAN,
            doubling_change: f64::NAN,
            remainder: RemainderAudit::default(),
            max_excess: f64::NAN,
            inconclusive: true,
        });
    };
    let monotone = trend.windows(2).all(|w| w[1].1 >= w[0].1);
    let latest: Vec<&FanSample> = samples.iter().filter(|s| s.t == t_last).collect();
    let latest_deviation = latest.iter().map(|s| (s.ratio / constant_theory - 1.0).abs()).fold(0.0, f64::max);
    let mut doubling_change: f64 = 0.0;
    for s in &latest {
        if let Some(d) = latest.iter().find(|d| (d.x / s.x - 2.0).abs() < 0.35) {
            doubling_change = doubling_change.max((d.ratio / s.ratio - 1.0).abs());
        }
    }
    // remainder audit in density units, per unit mass
    let points: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|s| {
            let lead = kernel_asymptote(s.t, s.x, alpha, params.mu, RemainderAudit::default()).leading;
            let u_free = s.u / mass * s.x.abs().powf(-1.0 - 2.0 * alpha) / image_sum(s.x, grid.half_width, alpha);
            (s.t, s.x, (u_free - lead).abs())
        })
        .collect();
    let remainder = fit_remainder(&points, alpha);
    let max_excess =
        points.iter().map(|&(t, x, dev)| dev / (remainder.c * envelope_shape(t, x, alpha, remainder.delta))).fold(0.0, f64::max);
    let (_, mm) = road_response(t_last, params.a, params.mu, params.nu, params.k);
    Ok(AsymptoteReport {
        constant_theory,
        constant_unit_mass,
        finite_time_prediction: fractional_constant(alpha) * mm * t_last.powf(1.5),
        mass,
        samples,
        trend,
        monotone,
        latest_deviation,
        doubling_change,
        remainder,
        max_excess,
        inconclusive: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_alpha_constant() {
        assert!((theory_constant(0.5, 1.0) - 2.0 / PI.sqrt()).abs() < 1e-12);
        assert!((theory_constant(0.3, 2.0) - 2.0 * theory_constant(0.3, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn theory_is_two_pi_times_unit_mass() {
        for alpha in [0.2, 0.5, 0.8] {
            let r = theory_constant(alpha, 1.0) / unit_mass_constant(alpha, 1.0, 1.0, 1.0, 0.0);
            assert!((r / (2.0 * PI) - 1.0).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn talbot_on_known_pairs() {
        // 1/(s+1) -> e^-t ; 1/sqrt(s) -> 1/sqrt(pi t)
        let e = talbot(|s| 1.0 / (s + 1.0), 2.0);
        assert!((e - (-2.0f64).exp()).abs() < 1e-10, "{e}");
        let h = talbot(|s| 1.0 / s.sqrt(), 3.0);
        assert!((h - 1.0 / (PI * 3.0).sqrt()).abs() < 1e-10, "{h}");
    }

    #[test]
    fn response_matches_reference() {
        // 30-digit Talbot inversions of U and U^2, a = mu = nu = 1, k = 0
        let (m, mm) = road_response(25.0, 1.0, 1.0, 1.0, 0.0);
        assert!((m * 125.0 / 0.256_815_289_438_808_8 - 1.0).abs() < 1e-9, "{m}");
        assert!((mm / 0.003_940_215_442_470_738 - 1.0).abs() < 1e-9, "{mm}");
        let (_, mm) = road_response(10.0, 1.0, 1.0, 1.0, 0.0);
        assert!((mm / 0.013_959_269_463_610_586 - 1.0).abs() < 1e-9, "{mm}");
    }

    #[test]
    fn response_approaches_limit() {
        let lim = 1.0 / PI.sqrt();
        let a = road_response(50.0, 1.0, 1.0, 1.0, 0.0).1 * 50f64.powf(1.5);
        let b = road_response(400.0, 1.0, 1.0, 1.0, 0.0).1 * 400f64.powf(1.5);
        assert!((b - lim).abs() < (a - lim).abs());
        assert!((b / lim - 1.0).abs() < 0.02, "{b}");
    }

    #[test]
    fn image_sum_limits() {
        let x = 10.0;
        assert!((image_sum(x, 1e9, 0.5) - 0.01).abs() < 1e-12);
        // every image at distance 2X n, alpha = 1/2: sum_n 1/(2Xn)^2 pairs
        let s = image_sum(1e-3, 1.0, 0.5) - 1e6;
        assert!((s - PI * PI / 12.0).abs() < 1e-5, "{s}");
    }
}
