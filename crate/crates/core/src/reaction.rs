//! Fisher-KPP reaction terms `f(v) = a v - g(v)`.
//!
//! Two concrete families are provided: the logistic term `g(v) = v^2` and a
//! cubic threshold term `g(v) = ((v - theta)_+ / (1 - theta))^3` that vanishes
//! identically on `[0, theta]`. The threshold family is C^2 and convex with
//! `g(1) = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    Logistic,
    Threshold { theta: f64 },
}

/// A Fisher-KPP nonlinearity with linear growth rate `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub a: f64,
}

impl Nonlinearity {
    pub fn logistic(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParam(format!("growth rate a={a} must be > 0")));
        }
        Ok(Self { kind: NonlinearityKind::Logistic, a })
    }

    pub fn threshold(a: f64, theta: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParam(format!("growth rate a={a} must be > 0")));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParam(format!("theta={theta} must lie in (0,1)")));
        }
        Ok(Self { kind: NonlinearityKind::Threshold { theta }, a })
    }

    /// Lower end of the support of `g` (0 for the logistic family).
    pub fn theta(&self) -> f64 {
        match self.kind {
            NonlinearityKind::Logistic => 0.0,
            NonlinearityKind::Threshold { theta } => theta,
        }
    }

    pub fn g(&self, v: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Logistic => v * v,
            NonlinearityKind::Threshold { theta } => {
                let s = (v - theta).max(0.0) / (1.0 - theta);
                s * s * s
            }
        }
    }

    pub fn g_prime(&self, v: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Logistic => 2.0 * v,
            NonlinearityKind::Threshold { theta } => {
                let s = (v - theta).max(0.0) / (1.0 - theta);
                3.0 * s * s / (1.0 - theta)
            }
        }
    }

    /// `f(v) = a v - g(v)`.
    pub fn eval(&self, v: f64) -> f64 {
        self.a * v - self.g(v)
    }

    /// Primitive `F(v) = int_0^v f`.
    pub fn primitive(&self, v: f64) -> f64 {
        let lin = 0.5 * self.a * v * v;
        match self.kind {
            NonlinearityKind::Logistic => lin - v * v * v / 3.0,
            NonlinearityKind::Threshold { theta } => {
                let s = (v - theta).max(0.0) / (1.0 - theta);
                lin - 0.25 * (1.0 - theta) * s.powi(4)
            }
        }
    }

    /// Unique positive zero of `f`, found by bisection.
    pub fn positive_zero(&self) -> Result<f64> {
        let mut lo = match self.kind {
            NonlinearityKind::Logistic => self.a * 1e-3,
            NonlinearityKind::Threshold { theta } => theta,
        };
        if self.eval(lo) <= 0.0 {
            return Err(Error::Bracket(format!("f({lo}) = {} is not positive above the support threshold", self.eval(lo))));
        }
        let mut hi = lo.max(1.0);
        let mut expansions = 0;
        while self.eval(hi) >= 0.0 {
            hi *= 2.0;
            expansions += 1;
            if expansions > 200 {
                return Err(Error::Bracket("f never becomes negative".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // both ends sit within one ulp of the root; keep the smaller residual
        let root = if self.eval(lo).abs() <= self.eval(hi).abs() { lo } else { hi };
        if self.eval(root).abs() > 1e-12 {
            return Err(Error::Bracket(format!("bisection stalled with residual {}", self.eval(root))));
        }
        Ok(root)
    }

    /// Flow of `dv/dt = f(v)` over a time `h`.
    ///
    /// Exact for the logistic family and for the threshold family while the
    /// trajectory stays below `theta`; Heun's method otherwise.
    pub fn advance(&self, v: f64, h: f64) -> f64 {
        let a = self.a;
        match self.kind {
            NonlinearityKind::Logistic => {
                if v == 0.0 {
                    return 0.0;
                }
                let e = (a * h).exp();
                a * v * e / (a + v * (e - 1.0))
            }
            NonlinearityKind::Threshold { theta } => {
                let grown = v * (a * h).exp();
                if grown <= theta {
                    return grown;
                }
                let k1 = self.eval(v);
                let k2 = self.eval(v + h * k1);
                v + 0.5 * h * (k1 + k2)
            }
        }
    }
}

/// `f(v) = a v - g(v)`.
pub fn eval_reaction(nl: &Nonlinearity, v: f64) -> f64 {
    nl.eval(v)
}

/// The positive zero `v0` of `f`.
pub fn positive_zero_v0(nl: &Nonlinearity) -> Result<f64> {
    nl.positive_zero()
}

/// Reaction term used by the steppers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reaction {
    /// `f = 0`.
    None,
    /// `f(v) = rate * v`.
    Linear {
        rate: f64,
    },
    Kpp(Nonlinearity),
}

impl Reaction {
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            Reaction::None => 0.0,
            Reaction::Linear { rate } => rate * v,
            Reaction::Kpp(nl) => nl.eval(v),
        }
    }

    pub fn advance(&self, v: f64, h: f64) -> f64 {
        match self {
            Reaction::None => v,
            Reaction::Linear { rate } => v * (rate * h).exp(),
            Reaction::Kpp(nl) => nl.advance(v, h),
        }
    }

    pub fn advance_slice(&self, values: &mut [f64], h: f64) {
        match self {
            Reaction::None => {}
            Reaction::Linear { rate } => {
                let e = (rate * h).exp();
                values.iter_mut().for_each(|v| *v *= e);
            }
            Reaction::Kpp(nl) => values.iter_mut().for_each(|v| *v = nl.advance(*v, h)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn logistic_zeros() {
        let nl = Nonlinearity::logistic(1.0).unwrap();
        assert_eq!(eval_reaction(&nl, 0.0), 0.0);
        assert_eq!(eval_reaction(&nl, 1.0), 0.0);
        assert!((positive_zero_v0(&nl).unwrap() - 1.0).abs() < 1e-12);
        let nl2 = Nonlinearity::logistic(2.0).unwrap();
        assert!((positive_zero_v0(&nl2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_linear_below_theta() {
        let nl = Nonlinearity::threshold(1.0, 0.3).unwrap();
        assert_eq!(eval_reaction(&nl, 0.2), 0.2);
        assert_eq!(nl.g(0.3), 0.0);
        assert!((nl.g(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_zero_matches_independent_bisection() {
        // plain bisection on v - ((v - 0.3)/0.7)^3 over (0.3, 2)
        let h = |v: f64| v - ((v - 0.3) / 0.7).powi(3);
        let (mut lo, mut hi) = (0.3 + 1e-9, 2.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if h(m) > 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        let nl = Nonlinearity::threshold(1.0, 0.3).unwrap();
        let v0 = positive_zero_v0(&nl).unwrap();
        assert!((v0 - lo).abs() < 1e-12);
        assert!(nl.eval(v0).abs() <= 1e-10);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Nonlinearity::logistic(0.0).is_err());
        assert!(Nonlinearity::threshold(1.0, 1.2).is_err());
    }

    #[test]
    fn logistic_flow_is_exact() {
        let nl = Nonlinearity::logistic(1.0).unwrap();
        let v = 0.1f64;
        let t = 2.0f64;
        let exact = v * t.exp() / (1.0 + v * (t.exp() - 1.0));
        // composition of many small steps agrees with one large step
        let mut w = v;
        for _ in 0..200 {
            w = nl.advance(w, t / 200.0);
        }
        assert!((w - exact).abs() < 1e-13);
        assert!((nl.advance(v, t) - exact).abs() < 1e-15);
    }

    #[test]
    fn primitive_matches_quadrature() {
        for nl in [Nonlinearity::logistic(1.0).unwrap(), Nonlinearity::threshold(1.0, 0.3).unwrap()] {
            let n = 20_000;
            let v = 0.9;
            let h = v / n as f64;
            let mut s = 0.0;
            for k in 0..n {
                let a = k as f64 * h;
                s += h / 6.0 * (nl.eval(a) + 4.0 * nl.eval(a + 0.5 * h) + nl.eval(a + h));
            }
            assert!((s - nl.primitive(v)).abs() < 1e-12);
        }
    }

    #[test]
    fn concavity_envelope_and_convexity() {
        for nl in [Nonlinearity::logistic(1.0).unwrap(), Nonlinearity::threshold(1.0, 0.3).unwrap()] {
            let v0 = nl.positive_zero().unwrap();
            for k in 0..=10_000 {
                let v = v0 * k as f64 / 10_000.0;
                assert!(nl.eval(v) <= nl.a * v);
            }
            let h = 1e-3;
            for k in 1..1000 {
                let v = k as f64 / 1000.0;
                let d2 = (nl.g(v + h) - 2.0 * nl.g(v) + nl.g(v - h)) / (h * h);
                assert!(d2 >= -1e-8, "g'' < 0 at {v}");
            }
            assert_eq!(nl.g(0.0), 0.0);
            assert_eq!(nl.g_prime(0.0), 0.0);
        }
    }

    proptest! {
        #[test]
        fn reaction_flow_stays_in_invariant_interval(v in 0.0f64..1.0, h in 0.0f64..0.5) {
            for nl in [Nonlinearity::logistic(1.0).unwrap(), Nonlinearity::threshold(1.0, 0.3).unwrap()] {
                let w = nl.advance(v, h);
                prop_assert!(w >= v - 1e-15);
                prop_assert!(w <= 1.0 + 1e-12);
            }
        }
    }
}
