//! Incremental argmax of residual ball areas, shared by the greedy loops.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::surface::{DistanceScratch, FaceMask, Metric, Surface};

#[derive(Clone, Copy, PartialEq)]
struct Top {
    area: f64,
    vertex: u32,
}

impl Eq for Top {}

impl Ord for Top {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on area, then lowest vertex id first
        self.area.total_cmp(&other.area).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Top {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// g-area of `B0_r(v)` intersected with `residual`.
pub(crate) fn residual_ball_area(
    surface: &Surface,
    residual: &FaceMask,
    v: u32,
    r: f64,
    scratch: &mut DistanceScratch,
) -> f64 {
    let areas = surface.face_areas(Metric::G);
    scratch.ball_face_sum(surface, v, Metric::G0, r, |f| if residual.contains(f) { areas[f as usize] } else { 0.0 })
}

/// Tracks `|B0_r(v) ∩ residual|_g` for every vertex while faces leave the
/// residual. Areas only shrink, so a stored value stays an upper bound after
/// a removal: affected vertices are marked dirty and recomputed from scratch
/// only when they reach the top of the heap. Recomputation is always fresh,
/// never a decrement, so values carry no drift and equal a direct
/// evaluation bit for bit.
pub(crate) struct BallTracker<'a> {
    surface: &'a Surface,
    r: f64,
    residual: FaceMask,
    areas: Vec<f64>,
    dirty: Vec<bool>,
    heap: BinaryHeap<Top>,
    scratch: DistanceScratch,
    /// No residual face has an id below this.
    first_face: u32,
}

fn slightly_above(r: f64) -> f64 {
    // graph distances are not exactly symmetric under rounding
    r * (1.0 + 1e-9)
}

impl<'a> BallTracker<'a> {
    pub fn new(surface: &'a Surface, residual: FaceMask, r: f64) -> Self {
        let nv = surface.vertex_count();
        let mut tracker = BallTracker {
            surface,
            r,
            residual,
            areas: vec![0.0; nv],
            dirty: vec![false; nv],
            heap: BinaryHeap::new(),
            scratch: DistanceScratch::new(nv),
            first_face: 0,
        };
        let seeds = tracker.residual_vertices_all();
        tracker.compute_all(&seeds);
        tracker
    }

    fn residual_vertices_all(&self) -> Vec<u32> {
        let mut seen = vec![false; self.surface.vertex_count()];
        for (f, &inside) in self.residual.as_slice().iter().enumerate() {
            if inside {
                for v in self.surface.face(f as u32) {
                    seen[v as usize] = true;
                }
            }
        }
        (0..seen.len() as u32).filter(|&v| seen[v as usize]).collect()
    }

    fn compute_all(&mut self, vertices: &[u32]) {
        let (surface, residual, r) = (self.surface, &self.residual, self.r);
        let nv = surface.vertex_count();
        let fresh: Vec<f64> = vertices
            .par_iter()
            .map_init(|| DistanceScratch::new(nv), |sc, &v| residual_ball_area(surface, residual, v, r, sc))
            .collect();
        for (&v, &a) in vertices.iter().zip(&fresh) {
            self.areas[v as usize] = a;
            if a > 0.0 {
                self.heap.push(Top { area: a, vertex: v });
            }
        }
    }

    fn refresh(&mut self, v: u32) {
        let a = residual_ball_area(self.surface, &self.residual, v, self.r, &mut self.scratch);
        self.areas[v as usize] = a;
        self.dirty[v as usize] = false;
        if a > 0.0 {
            self.heap.push(Top { area: a, vertex: v });
        }
    }

    pub fn residual(&self) -> &FaceMask {
        &self.residual
    }

    #[cfg(test)]
    pub fn area(&mut self, v: u32) -> f64 {
        if self.dirty[v as usize] {
            self.refresh(v);
        }
        self.areas[v as usize]
    }

    /// Vertex with the largest residual ball area, lowest id on ties, or
    /// `None` when every area is zero.
    pub fn argmax(&mut self) -> Option<(u32, f64)> {
        while let Some(&top) = self.heap.peek() {
            let v = top.vertex as usize;
            if self.areas[v].to_bits() != top.area.to_bits() {
                self.heap.pop();
            } else if self.dirty[v] {
                // every other stored value bounds its vertex from above, so
                // a clean top is the true maximum
                self.heap.pop();
                self.refresh(top.vertex);
            } else {
                return Some((top.vertex, top.area));
            }
        }
        None
    }

    /// Lowest-id residual face.
    pub fn first_residual_face(&mut self) -> Option<u32> {
        let fc = self.surface.face_count() as u32;
        while self.first_face < fc && !self.residual.contains(self.first_face) {
            self.first_face += 1;
        }
        (self.first_face < fc).then_some(self.first_face)
    }

    /// Removes `faces` from the residual. Vertices within `r` of them become
    /// dirty, except those with no residual corner within `r`, whose area is
    /// now exactly zero.
    pub fn remove(&mut self, faces: &[u32]) {
        let mut touched = Vec::with_capacity(faces.len() * 3);
        for &f in faces {
            if self.residual.remove(f) {
                touched.extend(self.surface.face(f));
            }
        }
        if touched.is_empty() {
            return;
        }
        touched.sort_unstable();
        touched.dedup();
        let surface = self.surface;
        let r = slightly_above(self.r);

        // a vertex with positive area has a residual corner within r, and
        // that corner is within 2r of the removed faces
        let corners: Vec<u32> = self
            .scratch
            .run(surface, &touched, Metric::G0, slightly_above(2.0 * self.r), None)
            .iter()
            .map(|x| x.0)
            .filter(|&u| surface.vertex_faces(u).iter().any(|&f| self.residual.contains(f)))
            .collect();
        let mut live = vec![];
        if !corners.is_empty() {
            live = self.scratch.run(surface, &corners, Metric::G0, r, None).iter().map(|x| x.0).collect();
            live.sort_unstable();
        }
        let near: Vec<u32> = self.scratch.run(surface, &touched, Metric::G0, r, None).iter().map(|x| x.0).collect();
        for v in near {
            if live.binary_search(&v).is_ok() {
                self.dirty[v as usize] = true;
            } else {
                self.areas[v as usize] = 0.0;
                self.dirty[v as usize] = false;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::torus;

    #[test]
    fn incremental_matches_fresh() {
        let s = torus(24).unwrap();
        let r = 0.12;
        let mut t = BallTracker::new(&s, FaceMask::full(s.face_count()), r);
        let removed: Vec<u32> = (0..s.face_count() as u32).filter(|f| f % 7 == 0 || *f < 300).collect();
        t.remove(&removed);
        let mut sc = DistanceScratch::new(s.vertex_count());
        let mut best = (0u32, -1.0f64);
        for v in 0..s.vertex_count() as u32 {
            let fresh = residual_ball_area(&s, t.residual(), v, r, &mut sc);
            assert_eq!(fresh.to_bits(), t.area(v).to_bits(), "vertex {v}");
            if fresh > best.1 {
                best = (v, fresh);
            }
        }
        assert_eq!(t.argmax(), Some(best));
    }

    #[test]
    fn lazy_argmax_follows_a_removal_sequence() {
        let s = torus(24).unwrap();
        let r = 0.1;
        let mut t = BallTracker::new(&s, FaceMask::full(s.face_count()), r);
        let mut sc = DistanceScratch::new(s.vertex_count());
        for step in 0..6u32 {
            let got = t.argmax();
            let mut best: Option<(u32, f64)> = None;
            for v in 0..s.vertex_count() as u32 {
                let a = residual_ball_area(&s, t.residual(), v, r, &mut sc);
                if a > 0.0 && best.is_none_or(|b| a > b.1) {
                    best = Some((v, a));
                }
            }
            assert_eq!(got, best, "step {step}");
            let (p, _) = got.unwrap();
            sc.run(&s, &[p], Metric::G0, 0.2, None);
            let faces = sc.faces_within(&s, 0.2);
            t.remove(&faces);
        }
    }
}
