//! Shortest-path distances on the edge graph (plus chords).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Domain, Metric, Surface};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on vertex id
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable Dijkstra buffers. Only the entries touched by the previous run
/// are reset, so bounded searches cost time proportional to what they reach.
#[derive(Debug, Clone)]
pub struct DistanceScratch {
    dist: Vec<f64>,
    settled: Vec<bool>,
    touched: Vec<u32>,
    reached: Vec<(u32, f64)>,
    heap: BinaryHeap<Entry>,
}

impl std::fmt::Debug for Entry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.vertex, self.dist)
    }
}

impl DistanceScratch {
    pub fn new(vertex_count: usize) -> Self {
        DistanceScratch {
            dist: vec![f64::INFINITY; vertex_count],
            settled: vec![false; vertex_count],
            touched: Vec::new(),
            reached: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.dist[v as usize] = f64::INFINITY;
            self.settled[v as usize] = false;
        }
        self.touched.clear();
        self.reached.clear();
        self.heap.clear();
    }

    /// Multi-source Dijkstra from `seeds`, settling every vertex with
    /// distance `<= cutoff`. When `allowed` is given, only those vertices are
    /// entered. Returns the settled vertices in settling order.
    pub fn run(
        &mut self,
        surface: &Surface,
        seeds: &[u32],
        metric: Metric,
        cutoff: f64,
        allowed: Option<&[bool]>,
    ) -> &[(u32, f64)] {
        self.run_visit(surface, seeds, metric, cutoff, allowed, true, |_, _| {});
        &self.reached
    }

    /// Sum of `weight(f)` over the faces whose three corners lie within
    /// `radius` of `seed`. A face is counted when its last corner settles, so
    /// no second pass over the ball is needed. The order of summation is
    /// the settling order, which makes the result reproducible.
    pub(crate) fn ball_face_sum(
        &mut self,
        surface: &Surface,
        seed: u32,
        metric: Metric,
        radius: f64,
        mut weight: impl FnMut(u32) -> f64,
    ) -> f64 {
        let mut total = 0.0;
        self.run_visit(surface, &[seed], metric, radius, None, false, |settled, v| {
            for &f in surface.vertex_faces(v) {
                let [a, b, c] = surface.face(f);
                let others_done = [a, b, c].iter().all(|&u| u == v || settled[u as usize]);
                if others_done {
                    total += weight(f);
                }
            }
        });
        total
    }

    #[allow(clippy::too_many_arguments)]
    fn run_visit(
        &mut self,
        surface: &Surface,
        seeds: &[u32],
        metric: Metric,
        cutoff: f64,
        allowed: Option<&[bool]>,
        record: bool,
        mut on_settle: impl FnMut(&[bool], u32),
    ) {
        self.reset();
        let graph = surface.graph();
        let lens = match metric {
            Metric::G => &graph.len_g,
            Metric::G0 => &graph.len_g0,
        };
        for &s in seeds {
            if allowed.is_some_and(|a| !a[s as usize]) {
                continue;
            }
            if self.dist[s as usize] > 0.0 {
                if self.dist[s as usize].is_infinite() {
                    self.touched.push(s);
                }
                self.dist[s as usize] = 0.0;
                self.heap.push(Entry { dist: 0.0, vertex: s });
            }
        }
        while let Some(Entry { dist, vertex }) = self.heap.pop() {
            let vi = vertex as usize;
            if self.settled[vi] || dist > self.dist[vi] {
                continue;
            }
            if dist > cutoff {
                break;
            }
            self.settled[vi] = true;
            if record {
                self.reached.push((vertex, dist));
            }
            on_settle(&self.settled, vertex);
            for arc in graph.arcs(vertex) {
                let w = graph.targets[arc];
                let wi = w as usize;
                if self.settled[wi] || allowed.is_some_and(|a| !a[wi]) {
                    continue;
                }
                let nd = dist + lens[arc];
                if nd < self.dist[wi] {
                    if self.dist[wi].is_infinite() {
                        self.touched.push(w);
                    }
                    self.dist[wi] = nd;
                    self.heap.push(Entry { dist: nd, vertex: w });
                }
            }
        }
    }

    /// Distance of `v` from the last run, or infinity if it was not settled.
    #[inline]
    pub fn distance(&self, v: u32) -> f64 {
        if self.settled[v as usize] {
            self.dist[v as usize]
        } else {
            f64::INFINITY
        }
    }

    pub fn reached(&self) -> &[(u32, f64)] {
        &self.reached
    }

    /// Faces whose three vertices were settled within `radius` in the last
    /// run, in ascending face order.
    pub fn faces_within(&self, surface: &Surface, radius: f64) -> Vec<u32> {
        let mut out = Vec::new();
        self.for_each_face_within(surface, radius, |f| out.push(f));
        out.sort_unstable();
        out
    }

    /// Visits each face whose vertices all lie within `radius`, once, in an
    /// order determined by the last run.
    pub fn for_each_face_within(&self, surface: &Surface, radius: f64, mut visit: impl FnMut(u32)) {
        for &(v, d) in &self.reached {
            if d > radius {
                continue;
            }
            for &f in surface.vertex_faces(v) {
                let tri = surface.face(f);
                // visit from the lowest-id vertex only
                if tri.iter().copied().min() != Some(v) {
                    continue;
                }
                if tri.iter().all(|&u| self.distance(u) <= radius) {
                    visit(f);
                }
            }
        }
    }
}

/// Shortest-path distances from a seed set to every vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub seeds: Vec<u32>,
    pub metric: Metric,
    pub dist: Vec<f64>,
}

impl DistanceField {
    /// Full distance field from `seeds`. Unreachable vertices get infinity.
    pub fn compute(surface: &Surface, seeds: &[u32], metric: Metric) -> Result<Self> {
        Self::compute_within(surface, seeds, metric, None)
    }

    pub fn compute_within(
        surface: &Surface,
        seeds: &[u32],
        metric: Metric,
        allowed: Option<&[bool]>,
    ) -> Result<Self> {
        if seeds.is_empty() {
            return invalid("distance field needs a nonempty seed set");
        }
        if let Some(&bad) = seeds.iter().find(|&&s| s as usize >= surface.vertex_count()) {
            return invalid(format!("seed vertex {bad} does not exist"));
        }
        let mut scratch = DistanceScratch::new(surface.vertex_count());
        scratch.run(surface, seeds, metric, f64::INFINITY, allowed);
        let dist = (0..surface.vertex_count() as u32).map(|v| scratch.distance(v)).collect();
        let mut seeds = seeds.to_vec();
        seeds.sort_unstable();
        seeds.dedup();
        Ok(DistanceField { seeds, metric, dist })
    }

    /// Distance field seeded at every vertex of `domain`.
    pub fn from_domain(surface: &Surface, domain: &Domain, metric: Metric) -> Result<Self> {
        Self::compute(surface, &domain.vertices(surface), metric)
    }

    pub fn get(&self, v: u32) -> f64 {
        self.dist[v as usize]
    }

    /// Largest value of `f(v) = max over the face's vertices`.
    pub fn face_key(&self, surface: &Surface, f: u32) -> f64 {
        surface.face(f).iter().map(|&v| self.dist[v as usize]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Geodesic balls and neighborhoods, face-granular.
pub trait NeighborhoodQuery {
    /// Faces whose three vertices are within `r` of `p`.
    fn geodesic_ball(&self, p: u32, r: f64, metric: Metric) -> Result<Domain>;
    /// Faces whose three vertices are within `r` of the vertices of `domain`.
    fn neighborhood(&self, domain: &Domain, r: f64, metric: Metric) -> Result<Domain>;
}

impl NeighborhoodQuery for Surface {
    fn geodesic_ball(&self, p: u32, r: f64, metric: Metric) -> Result<Domain> {
        if !(r >= 0.0) {
            return invalid(format!("ball radius must be nonnegative, got {r}"));
        }
        if p as usize >= self.vertex_count() {
            return invalid(format!("vertex {p} does not exist"));
        }
        let mut scratch = DistanceScratch::new(self.vertex_count());
        scratch.run(self, &[p], metric, r, None);
        Ok(Domain::from_sorted(scratch.faces_within(self, r)))
    }

    fn neighborhood(&self, domain: &Domain, r: f64, metric: Metric) -> Result<Domain> {
        if domain.is_empty() {
            return invalid("neighborhood of an empty domain");
        }
        if !(r >= 0.0) {
            return invalid(format!("neighborhood radius must be nonnegative, got {r}"));
        }
        let mut scratch = DistanceScratch::new(self.vertex_count());
        scratch.run(self, &domain.vertices(self), metric, r, None);
        let grown = Domain::from_sorted(scratch.faces_within(self, r));
        Ok(grown.union(domain))
    }
}

/// Farthest-point sampling: starts from the lowest allowed vertex and then
/// repeatedly adds the vertex farthest from the current set (ties to the
/// lowest id). Vertices unreachable from the set count as infinitely far.
pub fn farthest_point_seeds(
    surface: &Surface,
    allowed: Option<&[bool]>,
    metric: Metric,
    count: usize,
) -> Vec<u32> {
    let nv = surface.vertex_count();
    let is_allowed = |v: usize| allowed.map_or(true, |a| a[v]);
    let Some(first) = (0..nv).find(|&v| is_allowed(v)) else {
        return Vec::new();
    };
    let mut seeds = vec![first as u32];
    let mut nearest = vec![f64::INFINITY; nv];
    let graph = surface.graph();
    let lens = match metric {
        Metric::G => &graph.len_g,
        Metric::G0 => &graph.len_g0,
    };
    let mut heap = BinaryHeap::new();
    while seeds.len() < count {
        // only vertices the new seed brings closer are expanded
        let last = *seeds.last().unwrap();
        nearest[last as usize] = 0.0;
        heap.push(Entry { dist: 0.0, vertex: last });
        while let Some(Entry { dist, vertex }) = heap.pop() {
            if dist > nearest[vertex as usize] {
                continue;
            }
            for arc in graph.arcs(vertex) {
                let w = graph.targets[arc];
                if !is_allowed(w as usize) {
                    continue;
                }
                let nd = dist + lens[arc];
                if nd < nearest[w as usize] {
                    nearest[w as usize] = nd;
                    heap.push(Entry { dist: nd, vertex: w });
                }
            }
        }
        let mut best: Option<(f64, usize)> = None;
        for v in (0..nv).filter(|&v| is_allowed(v)) {
            let d = nearest[v];
            if d == 0.0 {
                continue;
            }
            if best.map_or(true, |(bd, _)| d > bd) {
                best = Some((d, v));
            }
        }
        match best {
            Some((_, v)) => seeds.push(v as u32),
            None => break,
        }
    }
    seeds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::torus;

    #[test]
    fn scratch_resets_between_runs() {
        let s = torus(12).unwrap();
        let mut scratch = DistanceScratch::new(s.vertex_count());
        let a: Vec<_> = scratch.run(&s, &[0], Metric::G, 0.2, None).to_vec();
        scratch.run(&s, &[5], Metric::G, 0.05, None);
        assert!(scratch.distance(0).is_infinite() || scratch.distance(0) <= 0.05);
        let again: Vec<_> = scratch.run(&s, &[0], Metric::G, 0.2, None).to_vec();
        assert_eq!(a, again);
    }

    #[test]
    fn empty_seed_is_rejected() {
        let s = torus(6).unwrap();
        assert!(DistanceField::compute(&s, &[], Metric::G).is_err());
    }

    #[test]
    fn zero_radius_ball_is_empty() {
        let s = torus(10).unwrap();
        assert!(s.geodesic_ball(3, 0.0, Metric::G0).unwrap().is_empty());
    }

    #[test]
    fn fps_spreads_out_on_torus() {
        let s = torus(20).unwrap();
        let seeds = farthest_point_seeds(&s, None, Metric::G, 4);
        assert_eq!(seeds.len(), 4);
        let field = DistanceField::compute(&s, &seeds[..1], Metric::G).unwrap();
        // the second seed is (close to) the farthest point, near (1/2, 1/2)
        assert!(field.get(seeds[1]) > 0.6);
    }
}
