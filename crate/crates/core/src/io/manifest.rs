//! Run manifests: everything needed to repeat a run and check its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Component, Path};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::params::{ModelParams, MAX_EXCHANGE_CFL, MAX_REACTION_CFL};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputEntry {
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridInfo {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    pub domain_half_width: f64,
    pub strip_height: f64,
}

impl GridInfo {
    pub fn of(p: &ModelParams) -> Self {
        Self { nx: p.nx, ny: p.ny, dx: p.dx(), dy: p.dy(), dt: p.dt, domain_half_width: p.domain_half_width, strip_height: p.strip_height }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format: u32,
    pub command: String,
    pub code_version: String,
    /// Config file contents, verbatim.
    pub config_text: String,
    pub params: Option<ModelParams>,
    /// Subcommand options beyond the config.
    pub options: BTreeMap<String, String>,
    pub schemes: BTreeMap<String, String>,
    pub tolerances: BTreeMap<String, f64>,
    pub grid: Option<GridInfo>,
    pub wall_clock_secs: f64,
    pub steps: u64,
    pub truncated: bool,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn new(command: &str, config_text: &str, params: Option<&ModelParams>) -> Self {
        Self {
            format: FORMAT_VERSION,
            command: command.into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            config_text: config_text.into(),
            params: params.cloned(),
            options: BTreeMap::new(),
            schemes: schemes(),
            tolerances: tolerances(),
            grid: params.map(GridInfo::of),
            wall_clock_secs: 0.0,
            steps: 0,
            truncated: false,
            outputs: Vec::new(),
        }
    }

    /// Hashes `rel` inside `dir` and records it.
    pub fn record_output(&mut self, dir: &Path, rel: &str) -> Result<()> {
        let path = dir.join(rel);
        let (sha256, bytes) = sha256_file(&path)?;
        self.outputs.retain(|o| o.path != rel);
        self.outputs.push(OutputEntry { path: rel.into(), sha256, bytes });
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Parses and checks a manifest: known format, relative output paths,
    /// well-formed hashes, valid parameters.
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if m.format != FORMAT_VERSION {
            return Err(Error::Format(format!("manifest format {} unsupported", m.format)));
        }
        for o in &m.outputs {
            let p = Path::new(&o.path);
            if o.path.is_empty() || !p.components().all(|c| matches!(c, Component::Normal(_))) {
                return Err(Error::Format(format!("output path `{}` must be relative", o.path)));
            }
            if o.sha256.len() != 64 || !o.sha256.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase()) {
                return Err(Error::Format(format!("bad sha256 for `{}`", o.path)));
            }
        }
        if let Some(p) = &m.params {
            p.validate()?;
        }
        if m.tolerances.values().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite tolerance".into()));
        }
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, self.to_json()?).map_err(|e| Error::io(&path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Outputs whose current hash differs from the recorded one.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for o in &self.outputs {
            let (h, _) = sha256_file(&dir.join(&o.path))?;
            if h != o.sha256 {
                bad.push(o.path.clone());
            }
        }
        Ok(bad)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
        total += n as u64;
    }
    Ok((format!("{:x}", h.finalize()), total))
}

/// `<timestamp>-<12 hex of sha256(command, config)>`.
pub fn run_dir_name(timestamp: &str, command: &str, config_text: &str) -> String {
    let hash = sha256_hex(format!("{command}\n{config_text}").as_bytes());
    format!("{timestamp}-{}", &hash[..12])
}

/// Numerical scheme identifiers recorded with every run.
pub fn schemes() -> BTreeMap<String, String> {
    use crate::coupled::ROAD_SYMBOL;
    [
        ("road", format!("spectral exponential multiplier, symbol {ROAD_SYMBOL:?}")),
        ("field", "Peaceman-Rachford ADI with Strang-split reaction".to_string()),
        ("exchange", "explicit road update, trapezoid in v(.,0)".to_string()),
        ("initial_datum", format!("box mollified over {} cells", crate::state::MOLLIFIER_CELLS)),
        ("transients", "Crank-Nicolson column, Strang reaction".to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Every numerical tolerance and fixed constant used by the modules.
pub fn tolerances() -> BTreeMap<String, f64> {
    use crate::diagnostics::{asymptote, fit, level_set, renorm};
    [
        ("field_neg_tol", crate::field::NEG_TOL),
        ("road_neg_tol_rel", crate::coupled::ROAD_NEG_TOL),
        ("bound_tol", crate::state::BOUND_TOL),
        ("symmetry_tol", crate::state::SYMMETRY_TOL),
        ("mollifier_cells", crate::state::MOLLIFIER_CELLS),
        ("max_reaction_cfl", MAX_REACTION_CFL),
        ("max_exchange_cfl", MAX_EXCHANGE_CFL),
        ("quad_exact_cells", crate::fracop::QUAD_EXACT_CELLS as f64),
        ("t1_root_tol", crate::transients::ROOT_TOL),
        ("envelope_argmax_tol", crate::transients::ARGMAX_TOL),
        ("level_set_edge_cells", level_set::EDGE_CELLS as f64),
        ("fit_min_time_span", fit::MIN_TIME_SPAN),
        ("fit_min_samples", fit::MIN_FIT_SAMPLES as f64),
        ("renorm_scale_min", renorm::SCALE_MIN),
        ("renorm_scale_max", renorm::SCALE_MAX),
        ("renorm_scale_points", renorm::SCALE_POINTS as f64),
        ("renorm_late_window", renorm::LATE_WINDOW),
        ("asymptote_noise_floor", asymptote::NOISE_FLOOR),
        ("asymptote_fan_lo", asymptote::FAN.0),
        ("asymptote_fan_hi", asymptote::FAN.1),
        ("probe_t0", crate::diagnostics::probes::PROBE_T0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut m = RunManifest::new("fit", "alpha = 0.5\n", None);
        m.outputs.push(OutputEntry { path: "trace.csv".into(), sha256: sha256_hex(b"x"), bytes: 1 });
        let back = RunManifest::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn escaping_paths_rejected() {
        let mut m = RunManifest::new("fit", "", None);
        m.outputs.push(OutputEntry { path: "../etc/passwd".into(), sha256: sha256_hex(b""), bytes: 0 });
        assert!(RunManifest::from_json(&m.to_json().unwrap()).is_err());
    }

    #[test]
    fn dir_name_is_stable() {
        let a = run_dir_name("20260101T000000Z", "simulate", "alpha = 0.5\n");
        assert_eq!(a, run_dir_name("20260101T000000Z", "simulate", "alpha = 0.5\n"));
        assert_ne!(a, run_dir_name("20260101T000000Z", "simulate", "alpha = 0.6\n"));
        assert_eq!(a.len(), "20260101T000000Z".len() + 13);
    }

    #[test]
    fn tolerances_are_complete() {
        let t = tolerances();
        for key in ["field_neg_tol", "road_neg_tol_rel", "bound_tol", "fit_min_samples", "renorm_late_window"] {
            assert!(t.contains_key(key), "{key}");
        }
    }
}
