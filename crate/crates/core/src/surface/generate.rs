//! Built-in test surfaces: flat hexagonal tori, icospheres and a genus-two
//! surface made by gluing two flat tori crosswise along a slit.

use std::collections::HashMap;
use std::str::FromStr;

use super::{Ambient, Surface, SurfaceOptions};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceSpec {
    /// Unit flat torus with `n` lattice columns.
    Torus(usize),
    /// Unit round sphere, icosahedron subdivided `level` times.
    Sphere(usize),
    /// Two unit tori glued along a slit, `n` columns each.
    GenusTwo(usize),
}

impl FromStr for SurfaceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("expected <kind>:<size>, got '{s}'")))?;
        let size: usize = arg
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad size '{arg}' in '{s}'")))?;
        match kind.trim() {
            "torus" => Ok(SurfaceSpec::Torus(size)),
            "sphere" => Ok(SurfaceSpec::Sphere(size)),
            "genus2" => Ok(SurfaceSpec::GenusTwo(size)),
            other => invalid(format!("unknown surface kind '{other}' (torus, sphere, genus2)")),
        }
    }
}

impl std::fmt::Display for SurfaceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SurfaceSpec::Torus(n) => write!(f, "torus:{n}"),
            SurfaceSpec::Sphere(l) => write!(f, "sphere:{l}"),
            SurfaceSpec::GenusTwo(n) => write!(f, "genus2:{n}"),
        }
    }
}

pub fn generate(spec: SurfaceSpec) -> Result<Surface> {
    match spec {
        SurfaceSpec::Torus(n) => torus(n),
        SurfaceSpec::Sphere(l) => icosphere(l),
        SurfaceSpec::GenusTwo(n) => genus_two(n),
    }
}

/// Row count of the hexagonal lattice with `n` columns: even, and close to
/// `2n/sqrt(3)` so triangles are nearly equilateral.
fn lattice_rows(n: usize) -> usize {
    (2 * (n as f64 / 3f64.sqrt()).round() as usize).max(4)
}

struct Lattice {
    n: usize,
    m: usize,
    positions: Vec<[f64; 3]>,
    faces: Vec<[u32; 3]>,
}

fn hex_lattice(n: usize) -> Lattice {
    let m = lattice_rows(n);
    let id = |i: usize, j: usize| ((j % m) * n + (i % n)) as u32;
    let mut positions = Vec::with_capacity(n * m);
    for j in 0..m {
        let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
        for i in 0..n {
            positions.push([(i as f64 + shift) / n as f64, j as f64 / m as f64, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * n * m);
    for j in 0..m {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            if j % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([b, d, c]);
            } else {
                faces.push([a, d, c]);
                faces.push([a, b, d]);
            }
        }
    }
    Lattice { n, m, positions, faces }
}

/// Unit flat torus `[0,1)^2` triangulated by a near-equilateral lattice with
/// `n` columns. Edge length is about `1/n`.
pub fn torus(n: usize) -> Result<Surface> {
    torus_with(n, SurfaceOptions::default())
}

pub fn torus_with(n: usize, options: SurfaceOptions) -> Result<Surface> {
    if n < 4 {
        return invalid(format!("torus needs at least 4 columns, got {n}"));
    }
    let lat = hex_lattice(n);
    let nv = lat.positions.len();
    Surface::new(lat.positions, lat.faces, vec![0.0; nv], Ambient::Periodic([1.0, 1.0]), options)
}

/// Unit round sphere from an icosahedron subdivided `level` times
/// (`20 * 4^level` faces).
pub fn icosphere(level: usize) -> Result<Surface> {
    if level > 8 {
        return invalid(format!("icosphere level {level} is too large (max 8)"));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut positions: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    let normalize = |p: [f64; 3]| {
        let l = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        [p[0] / l, p[1] / l, p[2] / l]
    };
    for p in positions.iter_mut() {
        *p = normalize(*p);
    }
    for _ in 0..level {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::with_capacity(faces.len() * 3 / 2);
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: u32, b: u32, positions: &mut Vec<[f64; 3]>| -> u32 {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (positions[a as usize], positions[b as usize]);
                positions.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                (positions.len() - 1) as u32
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut positions);
            let bc = mid(b, c, &mut positions);
            let ca = mid(c, a, &mut positions);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let nv = positions.len();
    Surface::new(positions, faces, vec![0.0; nv], Ambient::Euclidean, SurfaceOptions::default())
}

/// Genus-two surface of area 2: two unit flat tori cut open along the same
/// horizontal slit (columns `n/4..3n/4` of row 0) and glued crosswise. The
/// slit endpoints become cone points of angle `4 pi`.
///
/// Edge lengths come from the periodic plane, but straight-line distances
/// are not a valid reference across the gluing, so the distortion estimate
/// is disabled.
pub fn genus_two(n: usize) -> Result<Surface> {
    if n < 8 {
        return invalid(format!("genus-two surface needs at least 8 columns, got {n}"));
    }
    let lat = hex_lattice(n);
    let (n, m) = (lat.n, lat.m);
    let nv = lat.positions.len() as u32;
    let (s0, s1) = (n / 4, 3 * n / 4);
    let row0_col = |v: u32| -> Option<usize> { ((v as usize) < n).then_some(v as usize) };
    let inside_slit = |v: u32| row0_col(v).is_some_and(|i| i > s0 && i < s1);
    let endpoint = |v: u32| row0_col(v).is_some_and(|i| i == s0 || i == s1);

    let faces_per_row = 2 * n;
    let bottom_strip = (m - 1) * faces_per_row..m * faces_per_row;
    let mut faces = Vec::with_capacity(2 * lat.faces.len());
    for copy in 0..2u32 {
        let (own, other) = (copy * nv, (1 - copy) * nv);
        for (fi, tri) in lat.faces.iter().enumerate() {
            let below = bottom_strip.contains(&fi);
            faces.push(tri.map(|v| {
                if endpoint(v) {
                    v
                } else if below && inside_slit(v) {
                    v + other
                } else {
                    v + own
                }
            }));
        }
    }

    // Drop the second copy's unused slit endpoints and compact the ids.
    let mut positions = Vec::with_capacity(2 * nv as usize);
    let mut remap = vec![u32::MAX; 2 * nv as usize];
    for copy in 0..2u32 {
        for v in 0..nv {
            if copy == 1 && endpoint(v) {
                continue;
            }
            remap[(copy * nv + v) as usize] = positions.len() as u32;
            let p = lat.positions[v as usize];
            positions.push([p[0], p[1], copy as f64]);
        }
    }
    let faces: Vec<[u32; 3]> = faces.into_iter().map(|f| f.map(|v| remap[v as usize])).collect();
    let count = positions.len();
    Ok(Surface::new(positions, faces, vec![0.0; count], Ambient::Periodic([1.0, 1.0]), SurfaceOptions::default())?
        .without_ambient_reference())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::Metric;

    #[test]
    fn torus_is_closed_flat_unit() {
        let s = torus(24).unwrap();
        assert!(s.is_closed());
        assert_eq!(s.euler_characteristic(), 0);
        assert!((s.area(Metric::G) - 1.0).abs() < 1e-12);
        assert!((s.area(Metric::G0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_area_converges() {
        let s = icosphere(5).unwrap();
        assert_eq!(s.face_count(), 20480);
        assert_eq!(s.euler_characteristic(), 2);
        let rel = (s.area(Metric::G) - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI);
        assert!(rel < 0.01, "relative area error {rel}");
    }

    #[test]
    fn genus_two_topology() {
        let s = genus_two(16).unwrap();
        assert!(s.is_closed());
        assert_eq!(s.euler_characteristic(), -2);
        assert!((s.area(Metric::G) - 2.0).abs() < 1e-12);
        assert!(s.distortion().is_none());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("torus:40".parse::<SurfaceSpec>().unwrap(), SurfaceSpec::Torus(40));
        assert_eq!("sphere:3".parse::<SurfaceSpec>().unwrap(), SurfaceSpec::Sphere(3));
        assert_eq!("genus2:32".parse::<SurfaceSpec>().unwrap(), SurfaceSpec::GenusTwo(32));
        assert!("cube:3".parse::<SurfaceSpec>().is_err());
        assert!("torus".parse::<SurfaceSpec>().is_err());
        assert_eq!(SurfaceSpec::Torus(7).to_string(), "torus:7");
    }
}
