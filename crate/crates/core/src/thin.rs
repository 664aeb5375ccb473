//! Greedy decomposition of a thin domain, where every g0-ball of radius `r`
//! carries g-area at most `alpha`, into pieces trapped between the `3r`- and
//! `4r`-balls of their centers.

use serde::{Deserialize, Serialize};

use crate::balls::BallTracker;
use crate::certificate::{all_pass, Certificate};
use crate::constants::{ConstantBundle, Mode};
use crate::error::{invalid, Error, Result};
use crate::length_area::{slice_masked, SliceCertificate, SliceScratch, SLICE_TOL};
use crate::surface::{DistanceScratch, Domain, FaceMask, Metric, Surface, NONE};
use crate::width::width_one_bound_dim;

/// Outcome of checking the thin hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinCheck {
    pub holds: bool,
    /// Vertex with the largest ball area (lowest id on ties).
    pub worst_vertex: Option<u32>,
    pub worst_area: f64,
    pub alpha: f64,
    pub r: f64,
}

/// `max_p |B0_r(p) ∩ N|_g <= alpha` over all vertices.
pub fn verify_thin_hypothesis(surface: &Surface, n: &Domain, r: f64, alpha: f64) -> Result<ThinCheck> {
    if !(r > 0.0) || !(alpha > 0.0) {
        return invalid(format!("radius and alpha must be positive, got r={r}, alpha={alpha}"));
    }
    let mut tracker = BallTracker::new(surface, n.mask(surface), r);
    let (worst_vertex, worst_area) = match tracker.argmax() {
        Some((v, a)) => (Some(v), a),
        None => (None, 0.0),
    };
    Ok(ThinCheck { holds: worst_area <= alpha, worst_vertex, worst_area, alpha, r })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinPiece {
    pub domain: Domain,
    pub center: u32,
    /// Set when the greedy step could not grow a ball and removed the faces
    /// around the center instead.
    pub forced: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinDecomposition {
    pub pieces: Vec<ThinPiece>,
    pub per_piece: Vec<SliceCertificate>,
    pub boundary_total_g: f64,
    pub boundary_bound: f64,
    pub width_bounds: Vec<f64>,
    pub alpha: f64,
    pub r: f64,
    pub multiplicity_max: u64,
    pub multiplicity_bound: u64,
    pub certificates: Vec<Certificate>,
}

impl ThinDecomposition {
    pub fn pass(&self) -> bool {
        all_pass(&self.certificates)
    }

    pub fn max_width_bound(&self) -> f64 {
        self.width_bounds.iter().copied().fold(0.0, f64::max)
    }

    pub fn centers(&self) -> Vec<u32> {
        self.pieces.iter().map(|p| p.center).collect()
    }
}

/// Per-center ball measurements reused by several certificates.
struct BallStats {
    /// Pieces whose `4r`-ball contains the vertex, maximized over vertices.
    vertex_multiplicity: u64,
    /// Same count over faces of `N`.
    face_multiplicity: u64,
    /// `|B0_4r(p_j) ∩ N|_g` and `|B0_4r(p_j) ∩ N|_g0` summed over pieces.
    sum_big_g: f64,
    sum_big_g0: f64,
    /// `|B0_4r(p_j)|_g0` per piece, whole surface.
    big_g0: Vec<f64>,
    /// Pieces violating `V_j ⊆ B0_4r(p_j)`.
    outside_big: usize,
    /// Pairs of centers at g0-distance `<= 2r`.
    close_pairs: usize,
    /// Faces lying in two `r`-balls.
    ball_overlaps: usize,
}

fn ball_stats(surface: &Surface, n_mask: &FaceMask, pieces: &[ThinPiece], r: f64) -> BallStats {
    let nv = surface.vertex_count();
    let mut scratch = DistanceScratch::new(nv);
    let mut vcount = vec![0u32; nv];
    let mut fcount = vec![0u32; surface.face_count()];
    let mut in_small = vec![false; surface.face_count()];
    let mut is_center = vec![false; nv];
    for p in pieces {
        is_center[p.center as usize] = true;
    }
    let big = 4.0 * r * (1.0 + 1e-12);
    let mut stats = BallStats {
        vertex_multiplicity: 0,
        face_multiplicity: 0,
        sum_big_g: 0.0,
        sum_big_g0: 0.0,
        big_g0: Vec::with_capacity(pieces.len()),
        outside_big: 0,
        close_pairs: 0,
        ball_overlaps: 0,
    };
    for p in pieces {
        scratch.run(surface, &[p.center], Metric::G0, big, None);
        for &(v, d) in scratch.reached() {
            vcount[v as usize] += 1;
            if is_center[v as usize] && v != p.center && d <= 2.0 * r {
                stats.close_pairs += 1;
            }
        }
        let mut whole_g0 = 0.0;
        scratch.for_each_face_within(surface, big, |f| {
            whole_g0 += surface.face_area(f, Metric::G0);
            if n_mask.contains(f) {
                fcount[f as usize] += 1;
                stats.sum_big_g += surface.face_area(f, Metric::G);
                stats.sum_big_g0 += surface.face_area(f, Metric::G0);
            }
        });
        stats.big_g0.push(whole_g0);
        if p.domain.faces().iter().any(|&f| surface.face(f).iter().any(|&v| scratch.distance(v) > big)) {
            stats.outside_big += 1;
        }
        scratch.for_each_face_within(surface, r, |f| {
            if std::mem::replace(&mut in_small[f as usize], true) {
                stats.ball_overlaps += 1;
            }
        });
    }
    stats.vertex_multiplicity = vcount.iter().copied().max().unwrap_or(0) as u64;
    stats.face_multiplicity = fcount.iter().copied().max().unwrap_or(0) as u64;
    // each close pair was seen from both ends
    stats.close_pairs /= 2;
    stats
}

/// Length of the edges of `N` whose two faces lie in different pieces.
fn inter_piece_length(surface: &Surface, n_mask: &FaceMask, pieces: &[ThinPiece]) -> f64 {
    let mut owner = vec![NONE; surface.face_count()];
    for (i, p) in pieces.iter().enumerate() {
        for &f in p.domain.faces() {
            owner[f as usize] = i as u32;
        }
    }
    let len_g = surface.edge_lengths(Metric::G);
    let mut total = 0.0;
    for e in 0..surface.edge_count() {
        let [f1, f2] = surface.edge_faces(e);
        if f1 == NONE || f2 == NONE || !n_mask.contains(f1) || !n_mask.contains(f2) {
            continue;
        }
        if owner[f1 as usize] != owner[f2 as usize] {
            total += len_g[e];
        }
    }
    total
}

/// Ball measurements taken at a greedy step, before the piece is removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GreedyStep {
    pub center: u32,
    /// `|B0_r(p) ∩ residual|_g`.
    pub ball_area_g: f64,
    /// `|B0_4r(p) ∩ residual|_g`.
    pub big_area_g: f64,
    /// `|B0_4r(p)|_g0`.
    pub big_area_g0: f64,
}

/// Greedy pieces of `N` at radius `r`, removed from `tracker` one by one.
/// Runs until the residual is empty, or while the best ball area is at
/// least `stop_below` when that is given.
pub(crate) fn greedy_pieces(
    surface: &Surface,
    tracker: &mut BallTracker<'_>,
    r: f64,
    stop_below: Option<f64>,
) -> (Vec<ThinPiece>, Vec<SliceCertificate>, Vec<GreedyStep>) {
    let mut pieces = Vec::new();
    let mut certs = Vec::new();
    let mut steps = Vec::new();
    let mut slicer = SliceScratch::new(surface);
    let mut ball = DistanceScratch::new(surface.vertex_count());
    let distortion = surface.distortion();
    while !tracker.residual().is_empty() {
        let best = tracker.argmax();
        if let Some(threshold) = stop_below {
            if best.map_or(true, |(_, a)| a < threshold) {
                break;
            }
        }
        let (center, zero_area) = match best {
            Some((v, _)) => (v, false),
            None => {
                // every ball misses the residual: start from its lowest face
                let f = tracker.first_residual_face().unwrap();
                (surface.face(f).into_iter().min().unwrap(), true)
            }
        };
        ball.run(surface, &[center], Metric::G0, 4.0 * r, None);
        let d: Vec<u32> =
            ball.faces_within(surface, 3.0 * r).into_iter().filter(|&f| tracker.residual().contains(f)).collect();
        let mut step = GreedyStep {
            center,
            ball_area_g: best.map_or(0.0, |b| b.1),
            big_area_g: 0.0,
            big_area_g0: 0.0,
        };
        ball.for_each_face_within(surface, 4.0 * r, |f| {
            step.big_area_g0 += surface.face_area(f, Metric::G0);
            if tracker.residual().contains(f) {
                step.big_area_g += surface.face_area(f, Metric::G);
            }
        });
        steps.push(step);
        let (faces, cert, forced) = if d.is_empty() {
            let mut faces: Vec<u32> =
                surface.vertex_faces(center).iter().copied().filter(|&f| tracker.residual().contains(f)).collect();
            faces.sort_unstable();
            let mut cut_scratch = FaceMask::new(surface.face_count());
            let cut = crate::length_area::cut_length_in(surface, &faces, tracker.residual(), &mut cut_scratch);
            let area = |m| faces.iter().map(|&f| surface.face_area(f, m)).sum::<f64>();
            let cert = SliceCertificate {
                r,
                annulus_area_g: area(Metric::G),
                annulus_area_g0: area(Metric::G0),
                chosen_t: 0.0,
                cut_length_g: cut,
                bound: f64::INFINITY,
                ratio: 0.0,
                distortion,
                levels: 0,
                smoothing_moves: 0,
                edge_g0: 0.0,
            };
            (faces, cert, true)
        } else {
            let (faces, cert) = slice_masked(surface, tracker.residual(), &d, r, &mut slicer, distortion);
            (faces, cert, zero_area)
        };
        tracker.remove(&faces);
        pieces.push(ThinPiece { domain: Domain::from_sorted(faces), center, forced });
        certs.push(cert);
    }
    (pieces, certs, steps)
}

/// Decomposes a thin domain `N` greedily and certifies the result.
pub fn decompose_thin(
    surface: &Surface,
    n: &Domain,
    r: f64,
    alpha: f64,
    bundle: &ConstantBundle,
) -> Result<ThinDecomposition> {
    let check = verify_thin_hypothesis(surface, n, r, alpha)?;
    if !check.holds {
        return Err(Error::Precondition(format!(
            "domain is not thin: ball at vertex {} has g-area {} > alpha = {alpha}",
            check.worst_vertex.unwrap_or(0),
            check.worst_area
        )));
    }
    if bundle.mode == Mode::Paper && r >= 1.0 {
        return invalid(format!("paper mode needs r < 1 for the ball growth bound, got r = {r}"));
    }
    let n_mask = n.mask(surface);
    let mut tracker = BallTracker::new(surface, n_mask.clone(), r);
    let (pieces, per_piece, _) = greedy_pieces(surface, &mut tracker, r, None);
    certify_thin(surface, n, &n_mask, pieces, per_piece, r, alpha, bundle)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn certify_thin(
    surface: &Surface,
    n: &Domain,
    n_mask: &FaceMask,
    pieces: Vec<ThinPiece>,
    per_piece: Vec<SliceCertificate>,
    r: f64,
    alpha: f64,
    bundle: &ConstantBundle,
) -> Result<ThinDecomposition> {
    let dim = bundle.n;
    let area_g = n.measure(surface, Metric::G);
    let area_g0 = n.measure(surface, Metric::G0);
    let c1 = bundle.c1(r)?;
    let multiplicity_bound = bundle.covering(0.5 * r)? * bundle.covering(2.0 * r)?;
    let boundary_total_g: f64 = per_piece.iter().map(|c| c.cut_length_g).sum();
    let boundary_bound = c1 / r * area_g0.sqrt() * area_g.sqrt();

    let stats = ball_stats(surface, n_mask, &pieces, r);
    let width_bounds: Vec<f64> = pieces
        .iter()
        .zip(&stats.big_g0)
        .map(|(p, &measured)| {
            let big_g0 = match bundle.mode {
                Mode::Paper => bundle.c0 * (4.0 * r).powi(dim as i32),
                Mode::Empirical => measured,
            };
            width_one_bound_dim(p.domain.measure(surface, Metric::G), big_g0, bundle.k_width, dim)
        })
        .collect();

    let mut certs = Vec::new();
    let mut covered = FaceMask::new(surface.face_count());
    let mut overlap = false;
    for p in &pieces {
        for &f in p.domain.faces() {
            overlap |= !covered.insert(f);
        }
    }
    let exact_cover = !overlap && covered == *n_mask;
    certs.push(
        Certificate::flag("thin.pieces partition N", exact_cover)
            .with("pieces", pieces.len() as f64)
            .with("faces", n.len() as f64),
    );
    let forced = pieces.iter().filter(|p| p.forced).count();
    let mut forced_cert = Certificate::flag("thin.no forced steps", forced == 0).with("forced", forced as f64);
    if forced > 0 {
        forced_cert = forced_cert.noted("some steps removed the faces around a center without growing a ball");
    }
    certs.push(forced_cert);
    certs.push(
        Certificate::flag("thin.center separation > 2r", stats.close_pairs == 0)
            .with("close_pairs", stats.close_pairs as f64)
            .with("r", r),
    );
    certs.push(
        Certificate::flag("thin.r-balls pairwise disjoint", stats.ball_overlaps == 0)
            .with("overlapping_faces", stats.ball_overlaps as f64),
    );
    certs.push(
        Certificate::flag("thin.pieces inside 4r-balls", stats.outside_big == 0)
            .with("violations", stats.outside_big as f64),
    );

    let accounted = inter_piece_length(surface, n_mask, &pieces);
    certs.push(Certificate::eq_tol("thin.boundary accounting", boundary_total_g, accounted, 1e-9));

    let worst_slice = per_piece
        .iter()
        .filter(|c| c.bound.is_finite())
        .map(|c| c.ratio)
        .fold(0.0, f64::max);
    let slice_tol = per_piece.iter().map(SliceCertificate::tolerance).fold(SLICE_TOL, f64::max);
    let failed_slices = per_piece.iter().filter(|c| !c.certificate("", c.tolerance()).pass).count();
    certs.push(
        Certificate::le_tol("thin.worst slice ratio", worst_slice, 1.0, slice_tol)
            .with("failed", failed_slices as f64),
    );

    // Hölder chain, each link on measured quantities
    let sum_sqrt: f64 = per_piece.iter().map(|c| (c.annulus_area_g * c.annulus_area_g0).sqrt()).sum();
    let sum_ag: f64 = per_piece.iter().map(|c| c.annulus_area_g).sum();
    let sum_ag0: f64 = per_piece.iter().map(|c| c.annulus_area_g0).sum();
    let link1 = sum_sqrt / r;
    let link2 = (sum_ag * sum_ag0).sqrt() / r;
    let link3 = (stats.sum_big_g * stats.sum_big_g0).sqrt() / r;
    let j = stats.face_multiplicity as f64;
    let link4 = j / r * area_g.sqrt() * area_g0.sqrt();
    certs.push(Certificate::le_tol("thin.chain slices", boundary_total_g, link1, slice_tol));
    certs.push(Certificate::le("thin.chain cauchy-schwarz", link1, link2));
    certs.push(Certificate::le("thin.chain annuli in 4r-balls", link2, link3));
    certs.push(Certificate::le("thin.chain multiplicity", link3, link4).with("J", j));
    certs.push(Certificate::le("thin.chain J <= C1", j, c1).with("C1", c1));
    certs.push(
        Certificate::le_tol("thin.boundary total", boundary_total_g, boundary_bound, SLICE_TOL)
            .with("C1", c1)
            .with("r", r)
            .with("area_g", area_g)
            .with("area_g0", area_g0),
    );
    certs.push(
        Certificate::le(
            "thin.multiplicity",
            stats.vertex_multiplicity as f64,
            multiplicity_bound as f64,
        )
        .with("C(r/2)", bundle.covering(0.5 * r)? as f64)
        .with("C(2r)", bundle.covering(2.0 * r)? as f64),
    );
    if bundle.mode == Mode::Paper {
        let cap = c1 * alpha.sqrt();
        let worst = width_bounds.iter().copied().fold(0.0, f64::max);
        certs.push(Certificate::le("thin.width <= C1 alpha^(1/2)", worst, cap).with("C1", c1).with("alpha", alpha));
    }

    Ok(ThinDecomposition {
        pieces,
        per_piece,
        boundary_total_g,
        boundary_bound,
        width_bounds,
        alpha,
        r,
        multiplicity_max: stats.vertex_multiplicity,
        multiplicity_bound,
        certificates: certs,
    })
}

/// Largest number of pieces whose `4r`-ball contains a vertex, and the
/// covering bound it is compared against.
pub fn multiplicity_profile(decomposition: &ThinDecomposition, surface: &Surface) -> (u64, u64) {
    let mut scratch = DistanceScratch::new(surface.vertex_count());
    let mut count = vec![0u64; surface.vertex_count()];
    let big = 4.0 * decomposition.r * (1.0 + 1e-12);
    for p in &decomposition.pieces {
        for &(v, _) in scratch.run(surface, &[p.center], Metric::G0, big, None) {
            count[v as usize] += 1;
        }
    }
    (count.into_iter().max().unwrap_or(0), decomposition.multiplicity_bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{torus, NeighborhoodQuery};
    use std::sync::Arc;

    #[test]
    fn hypothesis_examples() {
        let s = torus(40).unwrap();
        let all = Domain::whole(&s);
        let yes = verify_thin_hypothesis(&s, &all, 0.1, 0.1).unwrap();
        assert!(yes.holds);
        assert!((yes.worst_area - std::f64::consts::PI * 0.01).abs() < 0.01);
        assert!(!verify_thin_hypothesis(&s, &all, 0.1, 0.01).unwrap().holds);
        let none = verify_thin_hypothesis(&s, &Domain::empty(), 0.1, 0.01).unwrap();
        assert!(none.holds);
        assert_eq!(none.worst_vertex, None);
    }

    #[test]
    fn small_disk_is_one_piece() {
        let s = Arc::new(torus(40).unwrap());
        let bundle = ConstantBundle::empirical(s.clone(), 1.0, 1.0).unwrap();
        let r = 0.05;
        let n = s.geodesic_ball(0, 2.0 * r, Metric::G0).unwrap();
        let out = decompose_thin(&s, &n, r, 1.0, &bundle).unwrap();
        assert_eq!(out.pieces.len(), 1);
        assert_eq!(out.pieces[0].domain, n);
        assert_eq!(out.boundary_total_g, 0.0);
        assert_eq!(multiplicity_profile(&out, &s).0, 1);
    }

    #[test]
    fn empty_domain() {
        let s = Arc::new(torus(16).unwrap());
        let bundle = ConstantBundle::empirical(s.clone(), 1.0, 1.0).unwrap();
        let out = decompose_thin(&s, &Domain::empty(), 0.05, 1.0, &bundle).unwrap();
        assert!(out.pieces.is_empty());
        assert_eq!(out.boundary_total_g, 0.0);
        assert_eq!(out.multiplicity_max, 0);
    }

    #[test]
    fn thick_domain_is_rejected() {
        let s = Arc::new(torus(16).unwrap());
        let bundle = ConstantBundle::empirical(s.clone(), 1.0, 1.0).unwrap();
        let err = decompose_thin(&s, &Domain::whole(&s), 0.2, 0.01, &bundle).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }
}
