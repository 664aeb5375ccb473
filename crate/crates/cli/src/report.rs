//! JSON reports with a fixed number of significant digits, and PLY export of
//! a face partition.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sweepout_core::pipeline::BoundReport;
use sweepout_core::surface::{Domain, Surface};
use sweepout_core::{Error, Result};

const NONE: u32 = u32::MAX;

/// Significant digits kept for every float written to a report.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`]. Idempotent, and maps `-0` to `0`.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// The JSON tree of `value` with every float rounded.
pub fn to_rounded_value<T: Serialize>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    Ok(v)
}

/// `value` as it reads back after export.
pub fn rounded<T: Serialize + DeserializeOwned>(value: &T) -> Result<T> {
    Ok(serde_json::from_value(to_rounded_value(value)?)?)
}

/// Pretty JSON text with rounded floats and a trailing newline.
pub fn to_json_text<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&to_rounded_value(value)?)?;
    text.push('\n');
    Ok(text)
}

pub fn export_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, to_json_text(value)?)?;
    Ok(())
}

pub fn export_report(report: &BoundReport, path: &Path) -> Result<()> {
    export_json(report, path)
}

pub fn read_report(path: &Path) -> Result<BoundReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Region id per face, dense from 0 in piece order. Fails unless the pieces
/// partition the faces.
pub fn region_ids(surface: &Surface, pieces: &[Domain]) -> Result<Vec<u32>> {
    let mut ids = vec![NONE; surface.face_count()];
    for (i, piece) in pieces.iter().enumerate() {
        for &f in piece.faces() {
            let slot = ids
                .get_mut(f as usize)
                .ok_or_else(|| Error::InvalidArgument(format!("piece {i} has face {f} outside the mesh")))?;
            if *slot != NONE {
                return Err(Error::InvalidArgument(format!("face {f} belongs to pieces {} and {i}", *slot)));
            }
            *slot = i as u32;
        }
    }
    if let Some(f) = ids.iter().position(|&id| id == NONE) {
        return Err(Error::InvalidArgument(format!("face {f} is in no piece")));
    }
    Ok(ids)
}

/// ASCII PLY with a `region` property on every face.
pub fn export_colored_mesh(surface: &Surface, pieces: &[Domain], path: &Path) -> Result<()> {
    let ids = region_ids(surface, pieces)?;
    let mut out = String::new();
    let _ = write!(
        out,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
         element face {}\nproperty list uchar int vertex_indices\nproperty int region\nend_header\n",
        surface.vertex_count(),
        surface.face_count()
    );
    for p in surface.positions() {
        let _ = writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    for (f, id) in surface.faces().iter().zip(&ids) {
        let _ = writeln!(out, "3 {} {} {} {}", f[0], f[1], f[2], id);
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_idempotent() {
        for x in [1.0 / 3.0, 2.0f64.sqrt() * 1e-7, -123456.789012345678, 1e300, -0.0] {
            let once = round_sig(x);
            assert_eq!(round_sig(once).to_bits(), once.to_bits());
            assert!((once - x).abs() <= 1e-11 * x.abs());
        }
        assert_eq!(round_sig(-0.0).to_bits(), 0.0f64.to_bits());
        assert_eq!(round_sig(f64::INFINITY), f64::INFINITY);
    }
}
