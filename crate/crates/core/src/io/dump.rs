//! Field dumps: raw little-endian `f64` plus a JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::RoadFieldState;

pub const DTYPE: &str = "f64le";
/// `v[j * nx + i]`: `x` fastest.
pub const LAYOUT: &str = "row_major_y";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub dtype: String,
    pub layout: String,
    pub x_origin: f64,
    pub y_origin: f64,
    pub dx: f64,
    pub dy: f64,
    pub t: f64,
}

impl FieldHeader {
    pub fn of(state: &RoadFieldState) -> Self {
        Self {
            nx: state.nx,
            ny: state.ny,
            dtype: DTYPE.into(),
            layout: LAYOUT.into(),
            x_origin: state.x(0),
            y_origin: 0.0,
            dx: state.dx,
            dy: state.dy,
            t: state.t,
        }
    }

    pub fn cell_count(&self) -> Result<usize> {
        self.nx.checked_mul(self.ny).ok_or_else(|| Error::Format(format!("{} x {} overflows", self.nx, self.ny)))
    }

    pub fn check(&self) -> Result<()> {
        if self.dtype != DTYPE {
            return Err(Error::Format(format!("dtype `{}`, expected `{DTYPE}`", self.dtype)));
        }
        if self.layout != LAYOUT {
            return Err(Error::Format(format!("layout `{}`, expected `{LAYOUT}`", self.layout)));
        }
        if ![self.x_origin, self.y_origin, self.dx, self.dy, self.t].iter().all(|v| v.is_finite()) {
            return Err(Error::Format("non-finite grid metadata".into()));
        }
        if !(self.dx > 0.0 && self.dy > 0.0) {
            return Err(Error::Format("spacings must be > 0".into()));
        }
        self.cell_count().map(|_| ())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let h: Self = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        h.check()?;
        Ok(h)
    }
}

pub fn encode_field(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Checks the header and the byte count, then reinterprets the bytes.
pub fn decode_field(header: &FieldHeader, bytes: &[u8]) -> Result<Vec<f64>> {
    header.check()?;
    let n = header.cell_count()?;
    let want = n.checked_mul(8).ok_or_else(|| Error::Format("byte count overflows".into()))?;
    if bytes.len() != want {
        return Err(Error::Format(format!("{} bytes for {} values, expected {want}", bytes.len(), n)));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect())
}

/// Writes `<stem>.bin` and `<stem>.json`; returns both paths.
pub fn write_field_dump(stem: &Path, state: &RoadFieldState) -> Result<(PathBuf, PathBuf)> {
    write_field_values(stem, &FieldHeader::of(state), &state.v)
}

pub fn write_field_values(stem: &Path, header: &FieldHeader, values: &[f64]) -> Result<(PathBuf, PathBuf)> {
    if values.len() != header.cell_count()? {
        return Err(Error::LengthMismatch { expected: header.cell_count()?, got: values.len() });
    }
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    fs::write(&bin, encode_field(values)).map_err(|e| Error::io(&bin, e))?;
    let text = serde_json::to_string_pretty(header).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    Ok((bin, json))
}

pub fn read_field_dump(stem: &Path) -> Result<(FieldHeader, Vec<f64>)> {
    let json = stem.with_extension("json");
    let bin = stem.with_extension("bin");
    let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let header = FieldHeader::from_json(&text)?;
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    let values = decode_field(&header, &bytes)?;
    Ok((header, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_round_trip_bit_exact() {
        let vals = vec![0.0, -0.0, 1.0 / 3.0, f64::MIN_POSITIVE, 1e308, f64::NAN];
        let h = FieldHeader {
            nx: 3,
            ny: 2,
            dtype: DTYPE.into(),
            layout: LAYOUT.into(),
            x_origin: -1.0,
            y_origin: 0.0,
            dx: 1.0,
            dy: 0.5,
            t: 0.0,
        };
        let back = decode_field(&h, &encode_field(&vals)).unwrap();
        for (a, b) in vals.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let h = FieldHeader {
            nx: 2,
            ny: 2,
            dtype: DTYPE.into(),
            layout: LAYOUT.into(),
            x_origin: 0.0,
            y_origin: 0.0,
            dx: 1.0,
            dy: 1.0,
            t: 0.0,
        };
        assert!(decode_field(&h, &[0u8; 31]).is_err());
        let bad = FieldHeader { dtype: "f32".into(), ..h };
        assert!(decode_field(&bad, &[0u8; 32]).is_err());
    }

    #[test]
    fn huge_dimensions_do_not_overflow() {
        let text =
            r#"{"nx":18446744073709551615,"ny":3,"dtype":"f64le","layout":"row_major_y","x_origin":0,"y_origin":0,"dx":1,"dy":1,"t":0}"#;
        assert!(FieldHeader::from_json(text).is_err());
    }
}
