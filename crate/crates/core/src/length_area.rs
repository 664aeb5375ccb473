//! Length-area slicing: grow `D` inside `N` along the level sets of the g0
//! distance to `D` and keep the level whose cut is shortest.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::certificate::Certificate;
use crate::error::{invalid, Result};
use crate::surface::{Domain, DistanceScratch, FaceMask, Metric, Surface, NONE};

/// Relative tolerance used when comparing cut lengths, so that runs which
/// differ only by a uniform rescaling pick the same level.
pub const TIE_TOL: f64 = 1e-9;

/// Multiplicative slack allowed on `cut <= bound` in slice certificates. The
/// bound is an averaging argument over continuous levels; a face-granular
/// level set can exceed it by a few percent on coarse annuli.
pub const SLICE_TOL: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceCertificate {
    pub r: f64,
    pub annulus_area_g: f64,
    pub annulus_area_g0: f64,
    pub chosen_t: f64,
    pub cut_length_g: f64,
    /// `(1/r) sqrt(annulus_area_g0 * annulus_area_g)`.
    #[serde(with = "crate::certificate::lenient")]
    pub bound: f64,
    #[serde(with = "crate::certificate::lenient")]
    pub ratio: f64,
    /// Graph-distance distortion of the mesh, when known.
    pub distortion: Option<f64>,
    /// Number of distinct levels examined, the baseline included.
    pub levels: usize,
    /// Faces toggled by the local descent after the level was chosen.
    #[serde(default)]
    pub smoothing_moves: usize,
    /// Longest g0 edge touching the annulus.
    #[serde(default)]
    pub edge_g0: f64,
}

impl SliceCertificate {
    /// [`SLICE_TOL`] widened by two discretization factors. Levels of a
    /// distance that overestimates by `1 + eps` are that much closer in the
    /// true metric. A face enters at the largest distance of its corners, so
    /// its level sits up to one edge `h` past the true one and only a band of
    /// width `r - h` is swept by distinct levels. The second factor is capped
    /// at 2, the `r >= 2h` resolution floor.
    pub fn tolerance(&self) -> f64 {
        let h = self.edge_g0.min(0.5 * self.r).max(0.0);
        let band = if self.r > 0.0 { self.r / (self.r - h) } else { 1.0 };
        (1.0 + SLICE_TOL) * (1.0 + self.distortion.unwrap_or(0.0)) * band - 1.0
    }

    pub fn certificate(&self, name: &str, tol: f64) -> Certificate {
        let mut c = Certificate::le_tol(name, self.cut_length_g, self.bound, tol)
            .with("r", self.r)
            .with("annulus_area_g", self.annulus_area_g)
            .with("annulus_area_g0", self.annulus_area_g0)
            .with("chosen_t", self.chosen_t);
        if let Some(d) = self.distortion {
            c = c.with("distortion", d);
        }
        c = c.with("edge_g0", self.edge_g0);
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub domain: Domain,
    pub certificate: SliceCertificate,
}

pub(crate) fn less_with_tol(a: f64, b: f64) -> bool {
    a < b - TIE_TOL * a.abs().max(b.abs())
}

/// Reusable buffers for repeated slicing on one surface.
#[derive(Debug, Clone)]
pub struct SliceScratch {
    pub(crate) dist: DistanceScratch,
    in_v: FaceMask,
    movable: FaceMask,
}

impl SliceScratch {
    pub fn new(surface: &Surface) -> Self {
        SliceScratch {
            dist: DistanceScratch::new(surface.vertex_count()),
            in_v: FaceMask::new(surface.face_count()),
            movable: FaceMask::new(surface.face_count()),
        }
    }
}

/// Core of [`slice`] on masks. `d_faces` must be sorted, nonempty and inside
/// `n_mask`. Returns the faces of `V` in ascending order.
pub(crate) fn slice_masked(
    surface: &Surface,
    n_mask: &FaceMask,
    d_faces: &[u32],
    r: f64,
    scratch: &mut SliceScratch,
    distortion: Option<f64>,
) -> (Vec<u32>, SliceCertificate) {
    let mut seeds: Vec<u32> = d_faces.iter().flat_map(|&f| surface.face(f)).collect();
    seeds.sort_unstable();
    seeds.dedup();
    scratch.dist.run(surface, &seeds, Metric::G0, r, None);

    let len_g = surface.edge_lengths(Metric::G);
    let in_v = &mut scratch.in_v;
    for &f in d_faces {
        in_v.insert(f);
    }
    // running length and edge count; the count makes an empty cut exact
    let mut cut = (0.0, 0i64);
    let grow = |f: u32, in_v: &mut FaceMask, cut: &mut (f64, i64)| {
        in_v.insert(f);
        for e in surface.face_edges(f) {
            let [f1, f2] = surface.edge_faces(e as usize);
            let other = if f1 == f { f2 } else { f1 };
            if other == NONE || !n_mask.contains(other) {
                continue;
            }
            if in_v.contains(other) {
                cut.0 -= len_g[e as usize];
                cut.1 -= 1;
            } else {
                cut.0 += len_g[e as usize];
                cut.1 += 1;
            }
        }
    };
    for &f in d_faces {
        for e in surface.face_edges(f) {
            let [f1, f2] = surface.edge_faces(e as usize);
            let other = if f1 == f { f2 } else { f1 };
            if other != NONE && n_mask.contains(other) && !in_v.contains(other) {
                cut.0 += len_g[e as usize];
                cut.1 += 1;
            }
        }
    }
    let cut_value = |c: (f64, i64)| if c.1 == 0 { 0.0 } else { c.0 };

    let dist = &scratch.dist;
    let mut annulus: Vec<(f64, u32)> = Vec::new();
    let (mut area_g, mut area_g0) = (0.0, 0.0);
    let mut edge_g0: f64 = 0.0;
    let len_g0 = surface.edge_lengths(Metric::G0);
    dist.for_each_face_within(surface, r, |f| {
        if n_mask.contains(f) && !in_v.contains(f) {
            for e in surface.face_edges(f) {
                edge_g0 = edge_g0.max(len_g0[e as usize]);
            }
            let key = surface.face(f).iter().map(|&v| dist.distance(v)).fold(0.0, f64::max);
            annulus.push((key, f));
            area_g += surface.face_area(f, Metric::G);
            area_g0 += surface.face_area(f, Metric::G0);
        }
    });
    annulus.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // baseline: faces spanned by D's own vertices
    let mut taken = 0;
    while taken < annulus.len() && annulus[taken].0 == 0.0 {
        grow(annulus[taken].1, in_v, &mut cut);
        taken += 1;
    }
    let first_level = annulus.get(taken).map(|a| a.0).filter(|&t| t < r);
    let mut best = (cut_value(cut), first_level.map_or(0.5 * r, |t| 0.5 * t), taken);
    let mut levels = 1;
    while taken < annulus.len() && annulus[taken].0 < r {
        let t = annulus[taken].0;
        while taken < annulus.len() && annulus[taken].0 == t {
            grow(annulus[taken].1, in_v, &mut cut);
            taken += 1;
        }
        levels += 1;
        let c = cut_value(cut);
        if less_with_tol(c, best.0) {
            best = (c, t, taken);
        }
    }

    // back off to the chosen level, then shorten the cut locally
    for &(_, f) in &annulus[best.2..taken] {
        in_v.remove(f);
    }
    let movable = &mut scratch.movable;
    for &(_, f) in &annulus {
        movable.insert(f);
    }
    let smoothing_moves = descend(surface, n_mask, in_v, movable, &annulus);

    let mut faces: Vec<u32> = d_faces.to_vec();
    faces.extend(annulus.iter().map(|a| a.1).filter(|&f| in_v.contains(f)));
    faces.sort_unstable();

    // reset the scratch masks for the next call
    for &f in d_faces {
        in_v.remove(f);
    }
    for &(_, f) in &annulus {
        in_v.remove(f);
        movable.remove(f);
    }

    // recompute the chosen cut from scratch so it carries no drift
    let cut_length_g = cut_length_in(surface, &faces, n_mask, in_v);
    let bound = (area_g0 * area_g).sqrt() / r;
    let ratio = if bound > 0.0 {
        cut_length_g / bound
    } else if cut_length_g == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let cert = SliceCertificate {
        r,
        annulus_area_g: area_g,
        annulus_area_g0: area_g0,
        chosen_t: best.1,
        cut_length_g,
        bound,
        ratio,
        distortion,
        levels,
        smoothing_moves,
        edge_g0,
    };
    (faces, cert)
}

/// Toggles movable faces in or out of `in_v` while doing so strictly
/// shortens the cut inside `n_mask`. Each move removes at least a fixed
/// fraction of an edge, so the loop terminates. Returns the move count.
fn descend(
    surface: &Surface,
    n_mask: &FaceMask,
    in_v: &mut FaceMask,
    movable: &FaceMask,
    annulus: &[(f64, u32)],
) -> usize {
    let len_g = surface.edge_lengths(Metric::G);
    let mut order: Vec<u32> = annulus.iter().map(|a| a.1).collect();
    order.sort_unstable();
    let mut queue: VecDeque<u32> = order.into_iter().collect();
    let mut queued: HashSet<u32> = queue.iter().copied().collect();
    let mut moves = 0;
    while let Some(f) = queue.pop_front() {
        queued.remove(&f);
        let inside = in_v.contains(f);
        let (mut same, mut other_side, mut total) = (0.0, 0.0, 0.0);
        for e in surface.face_edges(f) {
            let [f1, f2] = surface.edge_faces(e as usize);
            let g = if f1 == f { f2 } else { f1 };
            if g == NONE || !n_mask.contains(g) {
                continue;
            }
            let l = len_g[e as usize];
            total += l;
            if in_v.contains(g) == inside {
                same += l;
            } else {
                other_side += l;
            }
        }
        // toggling turns `same` edges into cut edges and heals `other_side`
        if same - other_side < -1e-9 * total {
            if inside {
                in_v.remove(f);
            } else {
                in_v.insert(f);
            }
            moves += 1;
            for e in surface.face_edges(f) {
                let [f1, f2] = surface.edge_faces(e as usize);
                let g = if f1 == f { f2 } else { f1 };
                if g != NONE && movable.contains(g) && queued.insert(g) {
                    queue.push_back(g);
                }
            }
        }
    }
    moves
}

/// g-length of the edges between `faces` (sorted) and the rest of `n_mask`.
/// `scratch` must be empty and is left empty.
pub(crate) fn cut_length_in(surface: &Surface, faces: &[u32], n_mask: &FaceMask, scratch: &mut FaceMask) -> f64 {
    for &f in faces {
        scratch.insert(f);
    }
    let len_g = surface.edge_lengths(Metric::G);
    let mut cut = 0.0;
    for &f in faces {
        for e in surface.face_edges(f) {
            let [f1, f2] = surface.edge_faces(e as usize);
            let other = if f1 == f { f2 } else { f1 };
            if other != NONE && n_mask.contains(other) && !scratch.contains(other) {
                cut += len_g[e as usize];
            }
        }
    }
    for &f in faces {
        scratch.remove(f);
    }
    cut
}

/// Finds `V` with `D ⊆ V ⊆ N ∩ N_r(D)` whose boundary inside `N` is the
/// shortest among the face-granular level sets of the g0 distance to `D`.
/// Ties go to the smallest level.
pub fn slice(surface: &Surface, n: &Domain, d: &Domain, r: f64) -> Result<Slice> {
    if d.is_empty() {
        return invalid("slice needs a nonempty inner domain");
    }
    if !(r > 0.0) || !r.is_finite() {
        return invalid(format!("slice radius must be positive, got {r}"));
    }
    if !d.is_subset(n) {
        return invalid("inner domain is not contained in the outer domain");
    }
    let mut scratch = SliceScratch::new(surface);
    let n_mask = n.mask(surface);
    let (faces, certificate) = slice_masked(surface, &n_mask, d.faces(), r, &mut scratch, surface.distortion());
    Ok(Slice { domain: Domain::from_sorted(faces), certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{torus, NeighborhoodQuery};

    #[test]
    fn vacuous_annulus_takes_everything() {
        let s = torus(16).unwrap();
        let n = s.geodesic_ball(0, 0.3, Metric::G0).unwrap();
        let d = s.geodesic_ball(0, 0.2, Metric::G0).unwrap();
        let out = slice(&s, &n, &d, 0.5).unwrap();
        assert_eq!(out.domain, n);
        assert_eq!(out.certificate.cut_length_g, 0.0);
    }

    #[test]
    fn sandwich_holds() {
        let s = torus(30).unwrap();
        let n = Domain::whole(&s);
        let d = s.geodesic_ball(7, 0.1, Metric::G0).unwrap();
        let out = slice(&s, &n, &d, 0.1).unwrap();
        assert!(d.is_subset(&out.domain));
        let grown = s.neighborhood(&d, 0.1, Metric::G0).unwrap();
        assert!(out.domain.is_subset(&grown));
        let direct = out.domain.boundary_measure(&s, Metric::G, &n).unwrap();
        assert!((direct - out.certificate.cut_length_g).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let s = torus(8).unwrap();
        let n = Domain::new(vec![0, 1, 2]);
        assert!(slice(&s, &n, &Domain::empty(), 0.1).is_err());
        assert!(slice(&s, &n, &Domain::new(vec![5]), 0.1).is_err());
        assert!(slice(&s, &n, &Domain::new(vec![1]), 0.0).is_err());
    }
}
