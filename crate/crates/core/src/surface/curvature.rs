//! Advisory Gaussian curvature of `g0` by angle defects.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Metric, Surface, NONE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// Angle defect over the mixed Voronoi g0 area; `None` on
    /// boundary vertices.
    pub per_vertex: Vec<Option<f64>>,
    pub min: f64,
    pub max: f64,
    /// Sum of interior angle defects.
    pub total: f64,
    /// `2 pi chi` for closed surfaces.
    pub gauss_bonnet: Option<f64>,
    /// Interior vertices with curvature below -1.
    pub below_minus_one: usize,
    pub hypothesis_holds: bool,
}

fn corner_angle(opposite: f64, a: f64, b: f64) -> f64 {
    ((a * a + b * b - opposite * opposite) / (2.0 * a * b)).clamp(-1.0, 1.0).acos()
}

pub fn curvature_report(surface: &Surface) -> CurvatureReport {
    let nv = surface.vertex_count();
    let lens = surface.edge_lengths(Metric::G0);
    let areas = surface.face_areas(Metric::G0);
    let mut angle = vec![0.0; nv];
    let mut dual = vec![0.0; nv];
    for f in 0..surface.face_count() as u32 {
        let tri = surface.face(f);
        let fe = surface.face_edges(f);
        // edge k joins tri[k] and tri[k+1], so it is opposite tri[k+2]
        let l = fe.map(|e| lens[e as usize]);
        let area = areas[f as usize];
        // theta[k] is the corner angle at tri[k + 2], opposite edge k
        let theta: [f64; 3] =
            std::array::from_fn(|k| corner_angle(l[k], l[(k + 1) % 3], l[(k + 2) % 3]));
        let obtuse = theta.iter().position(|&t| t > 0.5 * PI);
        for k in 0..3 {
            let v = tri[(k + 2) % 3] as usize;
            angle[v] += theta[k];
            dual[v] += match obtuse {
                Some(o) if o == k => 0.5 * area,
                Some(_) => 0.25 * area,
                None => {
                    // Voronoi share: the two edges at this corner, weighted by
                    // the cotangents of the angles opposite them
                    let (e1, e2) = ((k + 1) % 3, (k + 2) % 3);
                    let cot = |t: f64| t.cos() / t.sin();
                    (l[e1] * l[e1] * cot(theta[e1]) + l[e2] * l[e2] * cot(theta[e2])) / 8.0
                }
            };
        }
    }
    let mut on_boundary = vec![false; nv];
    for (e, &[a, b]) in surface.edges().iter().enumerate() {
        if surface.edge_faces(e)[1] == NONE {
            on_boundary[a as usize] = true;
            on_boundary[b as usize] = true;
        }
    }
    let mut per_vertex = Vec::with_capacity(nv);
    let (mut min, mut max, mut total, mut below) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0);
    for v in 0..nv {
        if on_boundary[v] || dual[v] == 0.0 {
            per_vertex.push(None);
            continue;
        }
        let defect = 2.0 * PI - angle[v];
        let k = defect / dual[v];
        total += defect;
        min = f64::min(min, k);
        max = f64::max(max, k);
        if k < -1.0 {
            below += 1;
        }
        per_vertex.push(Some(k));
    }
    CurvatureReport {
        per_vertex,
        min,
        max,
        total,
        gauss_bonnet: surface.is_closed().then(|| 2.0 * PI * surface.euler_characteristic() as f64),
        below_minus_one: below,
        hypothesis_holds: below == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{icosphere, torus};

    #[test]
    fn flat_torus_has_zero_curvature() {
        let r = curvature_report(&torus(16).unwrap());
        assert!(r.min.abs() < 1e-9 && r.max.abs() < 1e-9);
        assert!(r.total.abs() < 1e-9);
    }

    #[test]
    fn unit_sphere_is_near_one() {
        let r = curvature_report(&icosphere(4).unwrap());
        assert!((r.min - 1.0).abs() < 0.05 && (r.max - 1.0).abs() < 0.05, "{} {}", r.min, r.max);
        assert!((r.total - r.gauss_bonnet.unwrap()).abs() < 1e-9);
        assert!(r.hypothesis_holds);
    }
}
