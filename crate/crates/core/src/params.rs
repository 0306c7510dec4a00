//! Model parameters and the flat key-value configuration format.
//!
//! A config file holds one `key = value` pair per line. Blank lines and
//! anything after `#` are ignored. Keys are case-sensitive; `X` and `Y` are
//! accepted as aliases for `domain_half_width` and `strip_height`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reaction::{Nonlinearity, NonlinearityKind};

/// Which system a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Road-field system with the KPP nonlinearity in the field.
    Nonlinear,
    /// Same system with `f(v) = a v` and extra road damping `k`.
    Linearized,
    /// Line-only fractional KPP equation (no field).
    FractionalKpp,
}

impl RunMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "nonlinear" => Ok(RunMode::Nonlinear),
            "linearized" => Ok(RunMode::Linearized),
            "fractional_kpp" => Ok(RunMode::FractionalKpp),
            other => Err(Error::InvalidParam(format!("unknown mode `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::Nonlinear => "nonlinear",
            RunMode::Linearized => "linearized",
            RunMode::FractionalKpp => "fractional_kpp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub a: f64,
    pub mu: f64,
    pub nu: f64,
    pub k: f64,
    pub delta0: f64,
    pub x0_init: f64,
    /// Road truncation: the road is `[-X, X)` with periodic extension.
    pub domain_half_width: f64,
    /// Field truncation height `Y`.
    pub strip_height: f64,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_final: f64,
    pub nonlinearity: Nonlinearity,
    pub mode: RunMode,
}

/// Stability budget of the split scheme.
pub const MAX_REACTION_CFL: f64 = 0.25;
pub const MAX_EXCHANGE_CFL: f64 = 0.2;

impl ModelParams {
    pub fn dx(&self) -> f64 {
        2.0 * self.domain_half_width / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.strip_height / self.ny as f64
    }

    /// Exponential spreading rate `a / (1 + 2 alpha)`.
    pub fn lambda_star(&self) -> f64 {
        spreading_rate(self.a, self.alpha)
    }

    /// Algebraic drift exponent `3 / (2 (1 + 2 alpha))`.
    pub fn drift_exponent(&self) -> f64 {
        drift_exponent(self.alpha)
    }

    /// Equilibrium pair `(nu v0 / mu, v0)`.
    pub fn equilibrium(&self) -> Result<(f64, f64)> {
        let v0 = self.nonlinearity.positive_zero()?;
        Ok((self.nu * v0 / self.mu, v0))
    }

    /// Grid and time-step sanity shared by every stepper.
    pub fn check_numerics(&self) -> Result<()> {
        if self.nx < 8 || self.ny < 8 {
            return Err(Error::InvalidParam(format!("grid too small: nx={} ny={} (need >= 8)", self.nx, self.ny)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParam(format!("dt={} must be > 0", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParam(format!("t_final={} must be >= 0", self.t_final)));
        }
        if !(self.domain_half_width > 0.0 && self.strip_height > 0.0) {
            return Err(Error::InvalidParam("truncation lengths must be > 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParam(format!("alpha out of range: {} not in (0,1)", self.alpha)));
        }
        if self.mode != RunMode::FractionalKpp && self.dt > self.dy() {
            return Err(Error::InvalidParam(format!("violated dt <= dy: dt={} dy={}", self.dt, self.dy())));
        }
        if self.dt * self.a.abs() > MAX_REACTION_CFL {
            return Err(Error::InvalidParam(format!("violated dt*a <= {MAX_REACTION_CFL}: dt*a={}", self.dt * self.a)));
        }
        if self.mode != RunMode::FractionalKpp && self.dt * (self.mu + self.nu) > MAX_EXCHANGE_CFL {
            return Err(Error::InvalidParam(format!(
                "violated dt*(mu+nu) <= {MAX_EXCHANGE_CFL}: dt*(mu+nu)={}",
                self.dt * (self.mu + self.nu)
            )));
        }
        Ok(())
    }

    /// Full validation: physical ranges, scheme budget and truncation margins.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParam(format!("alpha out of range: {} not in (0,1)", self.alpha)));
        }
        for (name, value) in [("a", self.a), ("mu", self.mu), ("nu", self.nu), ("delta0", self.delta0), ("x0_init", self.x0_init)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParam(format!("{name}={value} must be > 0")));
            }
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParam(format!("k={} must be >= 0", self.k)));
        }
        if (self.nonlinearity.a - self.a).abs() > 0.0 {
            return Err(Error::InvalidParam("nonlinearity growth rate differs from a".into()));
        }
        self.check_numerics()?;
        let y_min = 2.0 * self.a.sqrt() * self.t_final + 10.0;
        if self.mode != RunMode::FractionalKpp && self.strip_height < y_min {
            return Err(Error::InvalidParam(format!("violated Y >= 2*sqrt(a)*t_final + 10: Y={} < {y_min}", self.strip_height)));
        }
        if self.mode != RunMode::Linearized {
            let x_min = 4.0 * (self.a * self.t_final / (1.0 + 2.0 * self.alpha)).exp();
            if self.domain_half_width < x_min {
                return Err(Error::InvalidParam(format!(
                    "violated X >= 4*exp(a*t_final/(1+2*alpha)): X={} < {x_min}",
                    self.domain_half_width
                )));
            }
        }
        Ok(())
    }
}

pub fn spreading_rate(a: f64, alpha: f64) -> f64 {
    a / (1.0 + 2.0 * alpha)
}

pub fn drift_exponent(alpha: f64) -> f64 {
    3.0 / (2.0 * (1.0 + 2.0 * alpha))
}

/// Parsed but unvalidated configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

/// Keys understood by [`make_params`] plus the run-control keys read by the CLI.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "a",
    "mu",
    "nu",
    "k",
    "delta0",
    "x0_init",
    "domain_half_width",
    "strip_height",
    "nx",
    "ny",
    "dt",
    "t_final",
    "nonlinearity",
    "theta",
    "mode",
    "lambda",
    "snapshot_interval",
    "field_dump_interval",
    "fit_window_start",
    "fit_window_end",
    "road_stride",
];

fn canonical_key(key: &str) -> &str {
    match key {
        "X" => "domain_half_width",
        "Y" => "strip_height",
        other => other,
    }
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::ConfigSyntax { line: line_no, msg: "expected `key = value`".into() })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::ConfigSyntax { line: line_no, msg: format!("invalid key `{key}`") });
            }
            if value.is_empty() {
                return Err(Error::ConfigSyntax { line: line_no, msg: format!("empty value for `{key}`") });
            }
            let key = canonical_key(key);
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::ConfigSyntax { line: line_no, msg: format!("unknown key `{key}`") });
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::ConfigSyntax { line: line_no, msg: format!("duplicate key `{key}`") });
            }
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.insert(canonical_key(key).to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(canonical_key(key)).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self.get(key).ok_or_else(|| Error::MissingKey(key.into()))?;
        let value: f64 = raw.parse().map_err(|_| Error::InvalidParam(format!("`{key}`: `{raw}` is not a number")))?;
        if !value.is_finite() {
            return Err(Error::InvalidParam(format!("`{key}` must be finite")));
        }
        Ok(value)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.get(key).is_some() {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let raw = self.get(key).ok_or_else(|| Error::MissingKey(key.into()))?;
        raw.parse().map_err(|_| Error::InvalidParam(format!("`{key}`: `{raw}` is not a count")))
    }
}

/// Parse the flat config format.
pub fn parse_config(text: &str) -> Result<RawConfig> {
    RawConfig::parse(text)
}

/// Build validated [`ModelParams`] from a raw key-value map.
pub fn make_params(raw: &RawConfig) -> Result<ModelParams> {
    let alpha = raw.f64("alpha")?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParam(format!("alpha out of range: {alpha} not in (0,1)")));
    }
    let a = raw.f64_or("a", 1.0)?;
    let nonlinearity = match raw.get("nonlinearity").unwrap_or("logistic") {
        "logistic" => Nonlinearity::logistic(a)?,
        "threshold" => Nonlinearity::threshold(a, raw.f64_or("theta", 0.3)?)?,
        other => return Err(Error::InvalidParam(format!("unknown nonlinearity `{other}`"))),
    };
    let mode = RunMode::parse(raw.get("mode").unwrap_or("nonlinear"))?;
    let params = ModelParams {
        alpha,
        a,
        mu: raw.f64("mu")?,
        nu: raw.f64_or("nu", 1.0)?,
        k: raw.f64_or("k", 0.0)?,
        delta0: raw.f64_or("delta0", 1.0)?,
        x0_init: raw.f64_or("x0_init", 1.0)?,
        domain_half_width: raw.f64("domain_half_width")?,
        strip_height: raw.f64("strip_height")?,
        nx: raw.usize("nx")?,
        ny: raw.usize("ny")?,
        dt: raw.f64("dt")?,
        t_final: raw.f64("t_final")?,
        nonlinearity,
        mode,
    };
    params.validate()?;
    Ok(params)
}

/// Write parameters back in the config format (used by manifests and the CLI).
pub fn to_config_text(p: &ModelParams) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("alpha", format!("{:?}", p.alpha));
    push("a", format!("{:?}", p.a));
    push("mu", format!("{:?}", p.mu));
    push("nu", format!("{:?}", p.nu));
    push("k", format!("{:?}", p.k));
    push("delta0", format!("{:?}", p.delta0));
    push("x0_init", format!("{:?}", p.x0_init));
    push("domain_half_width", format!("{:?}", p.domain_half_width));
    push("strip_height", format!("{:?}", p.strip_height));
    push("nx", p.nx.to_string());
    push("ny", p.ny.to_string());
    push("dt", format!("{:?}", p.dt));
    push("t_final", format!("{:?}", p.t_final));
    match p.nonlinearity.kind {
        NonlinearityKind::Logistic => push("nonlinearity", "logistic".into()),
        NonlinearityKind::Threshold { theta } => {
            push("nonlinearity", "threshold".into());
            push("theta", format!("{theta:?}"));
        }
    }
    push("mode", p.mode.as_str().into());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RawConfig {
        let mut raw = RawConfig::new();
        raw.set("alpha", 0.5)
            .set("a", 1)
            .set("mu", 1)
            .set("nu", 1)
            .set("t_final", 10)
            .set("X", 600)
            .set("Y", 40)
            .set("nx", 1024)
            .set("ny", 80)
            .set("dt", 0.05);
        raw
    }

    #[test]
    fn derived_quantities() {
        let p = make_params(&base()).unwrap();
        assert_eq!(p.lambda_star(), 0.5);
        assert_eq!(p.dx(), 1200.0 / 1024.0);
        assert_eq!(p.dy(), 0.5);
        let mut raw = base();
        raw.set("alpha", 0.75).set("X", 1000);
        let p = make_params(&raw).unwrap();
        assert!((p.lambda_star() - 0.4).abs() < 1e-15);
        assert!((p.drift_exponent() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_alpha_out_of_range() {
        let mut raw = base();
        raw.set("alpha", 1.5);
        let err = make_params(&raw).unwrap_err().to_string();
        assert!(err.contains("alpha out of range"), "{err}");
    }

    #[test]
    fn reports_violated_truncation() {
        let mut raw = base();
        raw.set("Y", 20);
        let err = make_params(&raw).unwrap_err().to_string();
        assert!(err.contains("Y >= 2*sqrt(a)*t_final + 10"), "{err}");
        let mut raw = base();
        raw.set("X", 100);
        let err = make_params(&raw).unwrap_err().to_string();
        assert!(err.contains("X >= 4*exp"), "{err}");
        // the X margin is not required for linearized runs
        raw.set("mode", "linearized");
        assert!(make_params(&raw).is_ok());
    }

    #[test]
    fn rejects_nonpositive_rates() {
        for key in ["mu", "nu", "a", "dt"] {
            let mut raw = base();
            raw.set(key, 0);
            assert!(make_params(&raw).is_err(), "{key}");
        }
    }

    #[test]
    fn parses_file_format() {
        let text = "# comment\nalpha = 0.5\n a=1 # trailing\n\nmu = 1\nX = 600\n";
        let raw = parse_config(text).unwrap();
        assert_eq!(raw.get("alpha"), Some("0.5"));
        assert_eq!(raw.get("domain_half_width"), Some("600"));
        assert!(parse_config("alpha 0.5").is_err());
        assert!(parse_config("alpha = 1\nalpha = 2").is_err());
        assert!(parse_config("bogus = 1").is_err());
        assert!(matches!(make_params(&raw), Err(Error::MissingKey(_))));
    }

    #[test]
    fn config_text_round_trip() {
        let mut raw = base();
        raw.set("nonlinearity", "threshold").set("theta", 0.25);
        let p = make_params(&raw).unwrap();
        let again = make_params(&parse_config(&to_config_text(&p)).unwrap()).unwrap();
        assert_eq!(p, again);
    }
}
