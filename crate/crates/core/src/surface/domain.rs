//! Face-granular subsets of a surface.

use serde::{Deserialize, Serialize};

use super::{Metric, Surface, NONE};
use crate::error::{invalid, Result};

/// A set of faces, stored sorted and deduplicated so that equal sets compare
/// equal and iterate in the same order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Domain {
    faces: Vec<u32>,
}

/// Boundary edges of a domain relative to an enclosing one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundarySplit {
    /// Edges whose other face lies in the enclosing domain.
    pub cut: Vec<u32>,
    /// Edges on the boundary of the enclosing domain (or of the surface).
    pub sealed: Vec<u32>,
}

impl Domain {
    pub fn new(mut faces: Vec<u32>) -> Self {
        faces.sort_unstable();
        faces.dedup();
        Domain { faces }
    }

    /// Wraps a list the caller guarantees is strictly increasing.
    pub fn from_sorted(faces: Vec<u32>) -> Self {
        debug_assert!(faces.windows(2).all(|w| w[0] < w[1]));
        Domain { faces }
    }

    pub fn empty() -> Self {
        Domain::default()
    }

    pub fn whole(surface: &Surface) -> Self {
        Domain { faces: (0..surface.face_count() as u32).collect() }
    }

    pub fn faces(&self) -> &[u32] {
        &self.faces
    }

    pub fn into_faces(self) -> Vec<u32> {
        self.faces
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn contains(&self, f: u32) -> bool {
        self.faces.binary_search(&f).is_ok()
    }

    pub fn mask(&self, surface: &Surface) -> FaceMask {
        FaceMask::from_domain(surface, self)
    }

    /// Sorted, deduplicated vertices of the domain's faces.
    pub fn vertices(&self, surface: &Surface) -> Vec<u32> {
        let mut out: Vec<u32> = self.faces.iter().flat_map(|&f| surface.face(f)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Per-vertex membership mask of the domain's vertices.
    pub fn vertex_mask(&self, surface: &Surface) -> Vec<bool> {
        let mut mask = vec![false; surface.vertex_count()];
        for &f in &self.faces {
            for v in surface.face(f) {
                mask[v as usize] = true;
            }
        }
        mask
    }

    pub fn union(&self, other: &Domain) -> Domain {
        let (a, b) = (&self.faces, &other.faces);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Domain { faces: out }
    }

    pub fn intersection(&self, other: &Domain) -> Domain {
        let (a, b) = (&self.faces, &other.faces);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Domain { faces: out }
    }

    pub fn difference(&self, other: &Domain) -> Domain {
        let b = &other.faces;
        let mut j = 0;
        let mut out = Vec::with_capacity(self.faces.len());
        for &f in &self.faces {
            while j < b.len() && b[j] < f {
                j += 1;
            }
            if j >= b.len() || b[j] != f {
                out.push(f);
            }
        }
        Domain { faces: out }
    }

    pub fn is_subset(&self, other: &Domain) -> bool {
        let b = &other.faces;
        let mut j = 0;
        for &f in &self.faces {
            while j < b.len() && b[j] < f {
                j += 1;
            }
            if j >= b.len() || b[j] != f {
                return false;
            }
        }
        true
    }

    pub fn is_disjoint(&self, other: &Domain) -> bool {
        self.intersection(other).is_empty()
    }

    /// Total face area in the given metric.
    pub fn measure(&self, surface: &Surface, metric: Metric) -> f64 {
        let areas = surface.face_areas(metric);
        self.faces.iter().map(|&f| areas[f as usize]).sum()
    }

    /// Boundary edges of `self`, split into those interior to `relative_to`
    /// and those on its boundary.
    pub fn boundary_split(&self, surface: &Surface, relative_to: &Domain) -> Result<BoundarySplit> {
        if !self.is_subset(relative_to) {
            return invalid("domain is not contained in the reference domain");
        }
        let inner = self.mask(surface);
        let outer = relative_to.mask(surface);
        let mut split = BoundarySplit::default();
        for &f in &self.faces {
            for e in surface.face_edges(f) {
                let [f1, f2] = surface.edge_faces(e as usize);
                let other = if f1 == f { f2 } else { f1 };
                if other != NONE && inner.contains(other) {
                    continue;
                }
                if other != NONE && outer.contains(other) {
                    split.cut.push(e);
                } else {
                    split.sealed.push(e);
                }
            }
        }
        split.cut.sort_unstable();
        split.sealed.sort_unstable();
        Ok(split)
    }

    /// Length of the part of the boundary lying inside `relative_to`.
    pub fn boundary_measure(&self, surface: &Surface, metric: Metric, relative_to: &Domain) -> Result<f64> {
        let split = self.boundary_split(surface, relative_to)?;
        let lens = surface.edge_lengths(metric);
        Ok(split.cut.iter().map(|&e| lens[e as usize]).sum())
    }

    /// Connected components under edge adjacency, each sorted, ordered by
    /// their smallest face.
    pub fn components(&self, surface: &Surface) -> Vec<Domain> {
        let mask = self.mask(surface);
        let mut seen = FaceMask::new(surface.face_count());
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for &start in &self.faces {
            if seen.contains(start) {
                continue;
            }
            let mut comp = Vec::new();
            seen.insert(start);
            stack.push(start);
            while let Some(f) = stack.pop() {
                comp.push(f);
                for e in surface.face_edges(f) {
                    for g in surface.edge_faces(e as usize) {
                        if g != NONE && g != f && mask.contains(g) && !seen.contains(g) {
                            seen.insert(g);
                            stack.push(g);
                        }
                    }
                }
            }
            out.push(Domain::new(comp));
        }
        out
    }
}

/// Dense per-face membership flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceMask {
    bits: Vec<bool>,
    count: usize,
}

impl FaceMask {
    pub fn new(face_count: usize) -> Self {
        FaceMask { bits: vec![false; face_count], count: 0 }
    }

    pub fn full(face_count: usize) -> Self {
        FaceMask { bits: vec![true; face_count], count: face_count }
    }

    pub fn from_domain(surface: &Surface, domain: &Domain) -> Self {
        let mut mask = FaceMask::new(surface.face_count());
        for &f in domain.faces() {
            mask.bits[f as usize] = true;
        }
        mask.count = domain.len();
        mask
    }

    #[inline]
    pub fn contains(&self, f: u32) -> bool {
        self.bits[f as usize]
    }

    pub fn insert(&mut self, f: u32) -> bool {
        let slot = &mut self.bits[f as usize];
        let fresh = !*slot;
        if fresh {
            *slot = true;
            self.count += 1;
        }
        fresh
    }

    pub fn remove(&mut self, f: u32) -> bool {
        let slot = &mut self.bits[f as usize];
        let present = *slot;
        if present {
            *slot = false;
            self.count -= 1;
        }
        present
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn to_domain(&self) -> Domain {
        Domain::from_sorted(
            self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u32).collect(),
        )
    }

    /// Vertices touched by at least one member face.
    pub fn vertex_mask(&self, surface: &Surface) -> Vec<bool> {
        let mut mask = vec![false; surface.vertex_count()];
        for (f, _) in self.bits.iter().enumerate().filter(|(_, &b)| b) {
            for v in surface.face(f as u32) {
                mask[v as usize] = true;
            }
        }
        mask
    }
}
