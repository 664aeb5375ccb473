//! Triangulated surfaces carrying a base metric `g` (edge lengths) and a
//! conformal factor `phi`, which together define `g0 = exp(2 phi) g`.
//!
//! Conformal lengths use the midpoint rule on edges and the vertex average on
//! faces, so a constant `phi = c` scales every g0 length by exactly `exp(c)`
//! and every g0 area by `exp(2c)`.

mod curvature;
mod distance;
mod domain;
mod generate;
pub mod io;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use curvature::{curvature_report, CurvatureReport};
pub use distance::{
    farthest_point_seeds, DistanceField, DistanceScratch, NeighborhoodQuery,
};
pub use domain::{BoundarySplit, Domain, FaceMask};
pub use generate::{generate, genus_two, icosphere, torus, torus_with, SurfaceSpec};

pub(crate) const NONE: u32 = u32::MAX;

/// Smallest admissible face area in the base metric.
pub const MIN_FACE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// The base metric `g`.
    G,
    /// The conformal comparison metric `g0 = exp(2 phi) g`.
    G0,
}

/// How straight-line ambient distances are measured when estimating the
/// graph-distance distortion of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ambient {
    /// Vertex positions are points in R^3 and edges are straight segments.
    Euclidean,
    /// Positions live in the plane with the given periods (flat tori).
    Periodic([f64; 2]),
    /// No meaningful ambient comparison is available.
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceOptions {
    /// Add one-ring chords across every interior edge whose two faces unfold
    /// to a convex quad.
    pub chords: bool,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        SurfaceOptions { chords: true }
    }
}

/// Compressed adjacency used by the shortest-path routines.
#[derive(Debug, Clone, Default)]
pub(crate) struct Graph {
    pub offsets: Vec<u32>,
    pub targets: Vec<u32>,
    pub len_g: Vec<f64>,
    pub len_g0: Vec<f64>,
}

impl Graph {
    #[inline]
    pub fn arcs(&self, v: u32) -> std::ops::Range<usize> {
        self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize
    }
}

/// Immutable triangulated surface with both metrics precomputed.
#[derive(Debug, Clone)]
pub struct Surface {
    positions: Vec<[f64; 3]>,
    faces: Vec<[u32; 3]>,
    phi: Vec<f64>,
    edges: Vec<[u32; 2]>,
    edge_faces: Vec<[u32; 2]>,
    edge_len_g: Vec<f64>,
    edge_len_g0: Vec<f64>,
    face_edges: Vec<[u32; 3]>,
    face_area_g: Vec<f64>,
    face_area_g0: Vec<f64>,
    vf_offsets: Vec<u32>,
    vf_faces: Vec<u32>,
    graph: Graph,
    chord_count: usize,
    ambient: Ambient,
    comparable: bool,
    closed: bool,
}

fn heron(a: f64, b: f64, c: f64) -> f64 {
    // Kahan's ordering keeps needle triangles accurate.
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    if p <= 0.0 {
        0.0
    } else {
        0.25 * p.sqrt()
    }
}

/// Places the apex of a triangle with base `(0,0)-(base,0)` and side lengths
/// `to_a` (from the origin) and `to_b` (from the base end). `None` when the
/// three lengths violate the triangle inequality.
fn apex(base: f64, to_a: f64, to_b: f64) -> Option<(f64, f64)> {
    let x = (base * base + to_a * to_a - to_b * to_b) / (2.0 * base);
    let h2 = to_a * to_a - x * x;
    if !(h2 > 0.0) {
        return None;
    }
    Some((x, h2.sqrt()))
}

impl Surface {
    /// Builds a surface from faces, per-vertex conformal factor and an edge
    /// length rule. Positions are kept for export and distortion estimates.
    pub fn new(
        positions: Vec<[f64; 3]>,
        faces: Vec<[u32; 3]>,
        phi: Vec<f64>,
        ambient: Ambient,
        options: SurfaceOptions,
    ) -> Result<Surface> {
        let nv = positions.len();
        if phi.len() != nv {
            return Err(Error::Mesh(format!(
                "conformal factor has {} values but the mesh has {} vertices",
                phi.len(),
                nv
            )));
        }
        if let Some(bad) = phi.iter().position(|p| !p.is_finite()) {
            return Err(Error::Mesh(format!("conformal factor at vertex {bad} is not finite")));
        }
        if faces.is_empty() {
            return Err(Error::Mesh("mesh has no faces".into()));
        }
        if nv >= NONE as usize {
            return Err(Error::Mesh("too many vertices".into()));
        }

        let mut edge_index: HashMap<(u32, u32), u32> = HashMap::with_capacity(faces.len() * 2);
        let mut edges: Vec<[u32; 2]> = Vec::with_capacity(faces.len() * 3 / 2 + 8);
        let mut edge_faces: Vec<[u32; 2]> = Vec::with_capacity(faces.len() * 3 / 2 + 8);
        let mut face_edges = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v as usize >= nv) {
                return Err(Error::Mesh(format!("face {fi} references a missing vertex")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Mesh(format!("face {fi} repeats a vertex")));
            }
            let mut fe = [0u32; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_faces.push([NONE, NONE]);
                    (edges.len() - 1) as u32
                });
                let slot = &mut edge_faces[id as usize];
                if slot[0] == NONE {
                    slot[0] = fi as u32;
                } else if slot[1] == NONE {
                    slot[1] = fi as u32;
                } else {
                    return Err(Error::Mesh(format!(
                        "non-manifold edge ({}, {}) shared by more than two faces",
                        key.0, key.1
                    )));
                }
                fe[k] = id;
            }
            face_edges.push(fe);
        }
        drop(edge_index);

        let edge_len_g: Vec<f64> = edges
            .iter()
            .map(|&[a, b]| ambient_distance(ambient, &positions[a as usize], &positions[b as usize]))
            .collect();
        let edge_len_g0: Vec<f64> = edges
            .iter()
            .zip(&edge_len_g)
            .map(|(&[a, b], &l)| l * (0.5 * (phi[a as usize] + phi[b as usize])).exp())
            .collect();

        let mut face_area_g = Vec::with_capacity(faces.len());
        let mut face_area_g0 = Vec::with_capacity(faces.len());
        for (fi, (f, fe)) in faces.iter().zip(&face_edges).enumerate() {
            let [a, b, c] = fe.map(|e| edge_len_g[e as usize]);
            if a + b < c || b + c < a || a + c < b {
                return Err(Error::Mesh(format!("face {fi} violates the triangle inequality")));
            }
            let area = heron(a, b, c);
            if !(area >= MIN_FACE_AREA) {
                return Err(Error::Mesh(format!("face {fi} is degenerate (area {area:e})")));
            }
            let mean_phi = (phi[f[0] as usize] + phi[f[1] as usize] + phi[f[2] as usize]) / 3.0;
            face_area_g.push(area);
            face_area_g0.push(area * (2.0 * mean_phi).exp());
        }

        let mut vf_count = vec![0u32; nv + 1];
        for f in &faces {
            for &v in f {
                vf_count[v as usize + 1] += 1;
            }
        }
        for i in 0..nv {
            vf_count[i + 1] += vf_count[i];
        }
        let vf_offsets = vf_count;
        let mut cursor = vf_offsets.clone();
        let mut vf_faces = vec![0u32; vf_offsets[nv] as usize];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vf_faces[cursor[v as usize] as usize] = fi as u32;
                cursor[v as usize] += 1;
            }
        }

        let closed = edge_faces.iter().all(|ef| ef[1] != NONE);

        let mut surface = Surface {
            positions,
            faces,
            phi,
            edges,
            edge_faces,
            edge_len_g,
            edge_len_g0,
            face_edges,
            face_area_g,
            face_area_g0,
            vf_offsets,
            vf_faces,
            graph: Graph::default(),
            chord_count: 0,
            ambient,
            comparable: !matches!(ambient, Ambient::Unknown),
            closed,
        };
        surface.build_graph(options.chords);
        Ok(surface)
    }

    fn chord(&self, e: usize, lens: &[f64]) -> Option<(u32, u32, f64)> {
        let [f1, f2] = self.edge_faces[e];
        if f2 == NONE {
            return None;
        }
        let [a, b] = self.edges[e];
        let opposite = |f: u32| -> u32 {
            *self.faces[f as usize].iter().find(|&&v| v != a && v != b).unwrap()
        };
        let (c, d) = (opposite(f1), opposite(f2));
        if c == d {
            return None;
        }
        let len_between = |f: u32, u: u32, v: u32| -> f64 {
            let fe = self.face_edges[f as usize];
            for &id in &fe {
                let [p, q] = self.edges[id as usize];
                if (p == u && q == v) || (p == v && q == u) {
                    return lens[id as usize];
                }
            }
            unreachable!("vertex pair is not an edge of the face")
        };
        let base = lens[e];
        let (cx, cy) = apex(base, len_between(f1, a, c), len_between(f1, b, c))?;
        let (dx, dy) = apex(base, len_between(f2, a, d), len_between(f2, b, d))?;
        let dy = -dy;
        // The chord must cross the shared edge strictly inside it.
        let t = cy / (cy - dy);
        let x = cx + t * (dx - cx);
        if !(x > 0.0 && x < base) {
            return None;
        }
        Some((c, d, ((cx - dx).powi(2) + (cy - dy).powi(2)).sqrt()))
    }

    fn build_graph(&mut self, chords: bool) {
        let nv = self.positions.len();
        // chords found once, then arcs are placed by counting sort so the
        // build never holds a second copy of the arc list
        let mut chord_list: Vec<(u32, u32, f64, f64)> = Vec::new();
        if chords {
            for e in 0..self.edges.len() {
                let (Some((c, d, lg)), Some((c0, d0, lg0))) =
                    (self.chord(e, &self.edge_len_g), self.chord(e, &self.edge_len_g0))
                else {
                    continue;
                };
                debug_assert_eq!((c, d), (c0, d0));
                chord_list.push((c, d, lg, lg0));
            }
        }
        let mut offsets = vec![0u32; nv + 1];
        let pairs = self.edges.iter().map(|&[a, b]| (a, b)).chain(chord_list.iter().map(|x| (x.0, x.1)));
        for (a, b) in pairs {
            offsets[a as usize + 1] += 1;
            offsets[b as usize + 1] += 1;
        }
        for i in 0..nv {
            offsets[i + 1] += offsets[i];
        }
        let total = offsets[nv] as usize;
        let mut targets = vec![0u32; total];
        let mut len_g = vec![0.0; total];
        let mut len_g0 = vec![0.0; total];
        let mut cursor: Vec<u32> = offsets[..nv].to_vec();
        let mut place = |a: u32, b: u32, lg: f64, lg0: f64| {
            let slot = cursor[a as usize] as usize;
            cursor[a as usize] += 1;
            targets[slot] = b;
            len_g[slot] = lg;
            len_g0[slot] = lg0;
        };
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            let (lg, lg0) = (self.edge_len_g[e], self.edge_len_g0[e]);
            place(a, b, lg, lg0);
            place(b, a, lg, lg0);
        }
        for &(c, d, lg, lg0) in &chord_list {
            place(c, d, lg, lg0);
            place(d, c, lg, lg0);
        }
        drop(cursor);
        // arcs of each vertex in (target, g0 length) order
        let mut order: Vec<usize> = Vec::new();
        let mut buf: Vec<(u32, f64, f64)> = Vec::new();
        for v in 0..nv {
            let range = offsets[v] as usize..offsets[v + 1] as usize;
            order.clear();
            order.extend(range.clone());
            order.sort_by(|&x, &y| targets[x].cmp(&targets[y]).then(len_g0[x].total_cmp(&len_g0[y])));
            buf.clear();
            buf.extend(order.iter().map(|&i| (targets[i], len_g[i], len_g0[i])));
            for (slot, &(t, lg, lg0)) in range.zip(&buf) {
                targets[slot] = t;
                len_g[slot] = lg;
                len_g0[slot] = lg0;
            }
        }
        self.chord_count = chord_list.len();
        self.graph = Graph { offsets, targets, len_g, len_g0 };
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn chord_count(&self) -> usize {
        self.chord_count
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face(&self, f: u32) -> [u32; 3] {
        self.faces[f as usize]
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    /// True when every edge has two incident faces.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    pub fn edge_faces(&self, e: usize) -> [u32; 2] {
        self.edge_faces[e]
    }

    pub fn face_edges(&self, f: u32) -> [u32; 3] {
        self.face_edges[f as usize]
    }

    pub fn edge_length(&self, e: usize, metric: Metric) -> f64 {
        match metric {
            Metric::G => self.edge_len_g[e],
            Metric::G0 => self.edge_len_g0[e],
        }
    }

    pub fn edge_lengths(&self, metric: Metric) -> &[f64] {
        match metric {
            Metric::G => &self.edge_len_g,
            Metric::G0 => &self.edge_len_g0,
        }
    }

    pub fn face_area(&self, f: u32, metric: Metric) -> f64 {
        match metric {
            Metric::G => self.face_area_g[f as usize],
            Metric::G0 => self.face_area_g0[f as usize],
        }
    }

    pub fn face_areas(&self, metric: Metric) -> &[f64] {
        match metric {
            Metric::G => &self.face_area_g,
            Metric::G0 => &self.face_area_g0,
        }
    }

    pub fn vertex_faces(&self, v: u32) -> &[u32] {
        &self.vf_faces[self.vf_offsets[v as usize] as usize..self.vf_offsets[v as usize + 1] as usize]
    }

    pub(crate) fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Total area in the given metric.
    pub fn area(&self, metric: Metric) -> f64 {
        self.face_areas(metric).iter().sum()
    }

    pub fn max_edge_length(&self, metric: Metric) -> f64 {
        self.edge_lengths(metric).iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_edge_length(&self, metric: Metric) -> f64 {
        let l = self.edge_lengths(metric);
        l.iter().sum::<f64>() / l.len() as f64
    }

    /// Euler characteristic V - E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    /// Straight-line distance between two vertices in the ambient model, if
    /// one exists.
    pub fn ambient_distance(&self, u: u32, v: u32) -> Option<f64> {
        if !self.comparable {
            return None;
        }
        Some(ambient_distance(self.ambient, &self.positions[u as usize], &self.positions[v as usize]))
    }

    /// Keeps the ambient rule for edge lengths but stops using it as a
    /// distance reference (e.g. for surfaces glued along slits).
    pub fn without_ambient_reference(mut self) -> Self {
        self.comparable = false;
        self
    }

    /// A copy of this surface with a different conformal factor.
    pub fn with_phi(&self, phi: Vec<f64>) -> Result<Surface> {
        let mut s = Surface::new(
            self.positions.clone(),
            self.faces.clone(),
            phi,
            self.ambient,
            SurfaceOptions { chords: self.chord_count > 0 },
        )?;
        s.comparable = self.comparable;
        Ok(s)
    }

    /// Estimated graph-distance distortion `eps_h`: the largest observed
    /// excess of base-metric graph distance over ambient straight-line
    /// distance for sampled pairs a few edges apart. `None` when the surface
    /// has no ambient model.
    pub fn distortion(&self) -> Option<f64> {
        if !self.comparable {
            return None;
        }
        let h = self.mean_edge_length(Metric::G);
        let seeds = farthest_point_seeds(self, None, Metric::G, 16.min(self.vertex_count()));
        let mut scratch = DistanceScratch::new(self.vertex_count());
        let mut worst: f64 = 0.0;
        for &s in &seeds {
            let reached = scratch.run(self, &[s], Metric::G, 6.0 * h, None);
            for &(v, d) in reached {
                if d < 3.0 * h {
                    continue;
                }
                if let Some(a) = self.ambient_distance(s, v) {
                    if a > 0.0 {
                        worst = worst.max(d / a - 1.0);
                    }
                }
            }
        }
        Some(worst)
    }
}

fn ambient_distance(ambient: Ambient, p: &[f64; 3], q: &[f64; 3]) -> f64 {
    match ambient {
        Ambient::Periodic([lx, ly]) => {
            let wrap = |d: f64, l: f64| d - l * (d / l).round();
            let dx = wrap(q[0] - p[0], lx);
            let dy = wrap(q[1] - p[1], ly);
            (dx * dx + dy * dy).sqrt()
        }
        _ => {
            let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> (Vec<[f64; 3]>, Vec<[u32; 3]>) {
        (
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
    }

    #[test]
    fn square_with_boundary() {
        let (p, f) = two_triangles();
        let s = Surface::new(p, f, vec![0.0; 4], Ambient::Euclidean, SurfaceOptions::default()).unwrap();
        assert!(!s.is_closed());
        assert!((s.area(Metric::G) - 1.0).abs() < 1e-15);
        assert_eq!(s.edge_count(), 5);
        // the diagonal 0-2 is shared; its chord 1-3 crosses it
        assert_eq!(s.chord_count(), 1);
        assert_eq!(s.euler_characteristic(), 1);
    }

    #[test]
    fn rejects_phi_count_mismatch() {
        let (p, f) = two_triangles();
        let err = Surface::new(p, f, vec![0.0; 3], Ambient::Euclidean, SurfaceOptions::default());
        assert!(matches!(err, Err(Error::Mesh(_))));
    }

    #[test]
    fn rejects_non_manifold_edge() {
        let p = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let f = vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        let err = Surface::new(p, f, vec![0.0; 5], Ambient::Euclidean, SurfaceOptions::default());
        match err {
            Err(Error::Mesh(msg)) => assert!(msg.contains("non-manifold")),
            other => panic!("expected non-manifold error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_degenerate_triangle() {
        let p = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let err = Surface::new(p, vec![[0, 1, 2]], vec![0.0; 3], Ambient::Euclidean, SurfaceOptions::default());
        assert!(matches!(err, Err(Error::Mesh(_))));
    }

    #[test]
    fn conformal_scaling_is_exact_for_constant_phi() {
        let (p, f) = two_triangles();
        let c = 2f64.ln();
        let s = Surface::new(p, f, vec![c; 4], Ambient::Euclidean, SurfaceOptions::default()).unwrap();
        for e in 0..s.edge_count() {
            let ratio = s.edge_length(e, Metric::G0) / s.edge_length(e, Metric::G);
            assert!((ratio - 2.0).abs() < 1e-12);
        }
        for f in 0..s.face_count() as u32 {
            let ratio = s.face_area(f, Metric::G0) / s.face_area(f, Metric::G);
            assert!((ratio - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn heron_matches_right_triangle() {
        assert!((heron(3.0, 4.0, 5.0) - 6.0).abs() < 1e-14);
        assert_eq!(heron(1.0, 1.0, 2.0), 0.0);
    }
}
