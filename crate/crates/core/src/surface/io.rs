//! OFF meshes and plain-text conformal factors.

use std::fs;
use std::path::Path;

use super::{Ambient, Surface, SurfaceOptions};
use crate::error::{Error, Result};

/// Vertex positions and triangles read from an OFF file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMesh {
    pub positions: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 3]>,
}

fn mesh_err(msg: impl Into<String>) -> Error {
    Error::Mesh(msg.into())
}

/// Parses OFF text. `#` starts a comment; the header keyword may share a
/// line with the counts. Only triangular faces are accepted.
pub fn parse_off(text: &str) -> Result<RawMesh> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let mut next = |what: &str| tokens.next().ok_or_else(|| mesh_err(format!("unexpected end of file reading {what}")));

    let mut first = next("header")?;
    if first == "OFF" {
        first = next("vertex count")?;
    } else if let Some(rest) = first.strip_prefix("OFF") {
        if !rest.is_empty() {
            return Err(mesh_err(format!("unsupported OFF variant '{first}'")));
        }
    }
    let parse_count = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| mesh_err(format!("bad {what} '{s}'")))
    };
    let nv = parse_count(first, "vertex count")?;
    let nf = parse_count(next("face count")?, "face count")?;
    let _edges = next("edge count")?;

    let mut positions = Vec::with_capacity(nv);
    for i in 0..nv {
        let mut p = [0.0f64; 3];
        for c in p.iter_mut() {
            let tok = next("vertex coordinate")?;
            *c = tok.parse().map_err(|_| mesh_err(format!("bad coordinate '{tok}' at vertex {i}")))?;
            if !c.is_finite() {
                return Err(mesh_err(format!("non-finite coordinate at vertex {i}")));
            }
        }
        positions.push(p);
    }
    let mut faces = Vec::with_capacity(nf);
    for i in 0..nf {
        let arity = parse_count(next("face size")?, "face size")?;
        if arity != 3 {
            return Err(mesh_err(format!("face {i} has {arity} vertices; only triangles are supported")));
        }
        let mut f = [0u32; 3];
        for v in f.iter_mut() {
            let tok = next("face index")?;
            *v = tok.parse().map_err(|_| mesh_err(format!("bad vertex index '{tok}' in face {i}")))?;
        }
        faces.push(f);
    }
    Ok(RawMesh { positions, faces })
}

pub fn read_off(path: &Path) -> Result<RawMesh> {
    parse_off(&fs::read_to_string(path)?)
}

/// One real per non-empty line; line `i` is the value at vertex `i`.
pub fn parse_phi(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad conformal factor on line {}: '{}'", i + 1, l.trim())))
        })
        .collect()
}

pub fn read_phi(path: &Path) -> Result<Vec<f64>> {
    parse_phi(&fs::read_to_string(path)?)
}

pub fn write_phi(path: &Path, phi: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(phi.len() * 20);
    for p in phi {
        out.push_str(&format!("{p:?}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_off(path: &Path, surface: &Surface) -> Result<()> {
    let mut out = format!("OFF\n{} {} 0\n", surface.vertex_count(), surface.face_count());
    for p in surface.positions() {
        out.push_str(&format!("{:?} {:?} {:?}\n", p[0], p[1], p[2]));
    }
    for f in surface.faces() {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads an OFF mesh embedded in R^3, with `phi = 0` when no factor file is
/// given.
pub fn load_surface(mesh: &Path, phi: Option<&Path>) -> Result<Surface> {
    let raw = read_off(mesh)?;
    let phi = match phi {
        Some(p) => read_phi(p)?,
        None => vec![0.0; raw.positions.len()],
    };
    Surface::new(raw.positions, raw.faces, phi, Ambient::Euclidean, SurfaceOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_off_with_comments() {
        let text = "OFF # header\n# a square\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n";
        let mesh = parse_off(text).unwrap();
        assert_eq!(mesh.positions.len(), 4);
        assert_eq!(mesh.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn rejects_quads_and_truncation() {
        assert!(parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n").is_err());
        assert!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n").is_err());
    }

    #[test]
    fn phi_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.txt");
        let phi = vec![0.0, -1.25, 2f64.ln()];
        write_phi(&path, &phi).unwrap();
        assert_eq!(read_phi(&path).unwrap(), phi);
        assert!(parse_phi("1\nx\n").is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_surface(Path::new("/nonexistent/mesh.off"), None).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
