use std::f64::consts::PI;
use std::sync::Arc;

use sweepout_core::constants::{schedule_parameters, ConstantBundle};
use sweepout_core::length_area::slice;
use sweepout_core::pipeline::{assemble_upper_bound, spectrum_curve, PieceKind};
use sweepout_core::surface::*;
use sweepout_core::thick::{balance_floor, decompose_thick};
use sweepout_core::thin::decompose_thin;
use sweepout_core::Error;

fn partitions(pieces: &[&Domain], whole: &Domain) -> bool {
    let mut union = Domain::empty();
    for p in pieces {
        if !union.is_disjoint(p) {
            return false;
        }
        union = union.union(p);
    }
    union == *whole
}

#[test]
fn slice_lies_between_disk_and_neighborhood() {
    let s = torus(100).unwrap();
    let all = Domain::whole(&s);
    let d = s.geodesic_ball(0, 0.1, Metric::G0).unwrap();
    let out = slice(&s, &all, &d, 0.1).unwrap();
    assert!(d.is_subset(&out.domain));
    let outer = s.neighborhood(&d, 0.1, Metric::G0).unwrap();
    assert!(out.domain.is_subset(&outer));
    let c = &out.certificate;
    assert!(c.cut_length_g <= c.bound * (1.0 + c.tolerance()));
    let measured = out.domain.boundary_measure(&s, Metric::G, &all).unwrap();
    assert!((measured - c.cut_length_g).abs() < 1e-9);
}

#[test]
fn slice_rejects_a_nonpositive_radius() {
    let s = torus(20).unwrap();
    let d = s.geodesic_ball(0, 0.1, Metric::G0).unwrap();
    assert!(slice(&s, &Domain::whole(&s), &d, 0.0).is_err());
}

#[test]
fn thin_pieces_are_separated_and_local() {
    let s = Arc::new(torus(100).unwrap());
    let bundle = ConstantBundle::empirical(s.clone(), 1.0, 1.0).unwrap();
    let all = Domain::whole(&s);
    let r = 0.1;
    let out = decompose_thin(&s, &all, r, PI * r * r * 1.2, &bundle).unwrap();
    assert!(out.pass(), "{:?}", out.certificates.iter().filter(|c| !c.pass).collect::<Vec<_>>());
    let domains: Vec<&Domain> = out.pieces.iter().map(|p| &p.domain).collect();
    assert!(partitions(&domains, &all));
    let mut scratch = DistanceScratch::new(s.vertex_count());
    for p in &out.pieces {
        let ball = s.geodesic_ball(p.center, 4.0 * r, Metric::G0).unwrap();
        assert!(p.domain.is_subset(&ball));
        for &(v, d) in scratch.run(&s, &[p.center], Metric::G0, 2.0 * r, None) {
            if v != p.center {
                assert!(d > 2.0 * r || !out.centers().contains(&v), "centers {} and {v} at {d}", p.center);
            }
        }
    }
}

#[test]
fn thick_domain_is_not_thin() {
    let s = Arc::new(torus(40).unwrap());
    let bundle = ConstantBundle::paper(2, 1.0, 1.0).unwrap();
    let err = decompose_thin(&s, &Domain::whole(&s), 0.1, 1e-3, &bundle).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn thick_torus_cuts_balanced() {
    let s = torus(100).unwrap();
    let bundle = ConstantBundle::paper(2, 1.0, 1.0).unwrap();
    let all = Domain::whole(&s);
    let out = decompose_thick(&s, &all, 10_000, &bundle).unwrap();
    assert!(out.pass());
    // the first cut splits the torus into two cylinders
    assert!((out.cuts[0].cut.sigma_length_g - 2.0).abs() < 0.05);
    for c in &out.cuts {
        assert!(c.cut.balance >= balance_floor(2));
    }
    let leaves: Vec<&Domain> = out.leaf_domains().collect();
    assert!(partitions(&leaves, &all));
}

#[test]
fn small_k_keeps_one_leaf() {
    let s = torus(40).unwrap();
    let bundle = ConstantBundle::paper(2, 1.0, 1.0).unwrap();
    let out = decompose_thick(&s, &Domain::whole(&s), 100, &bundle).unwrap();
    assert_eq!(out.leaves.len(), 1);
    assert!(out.cuts.is_empty());
    assert_eq!(out.boundary_total_g, 0.0);
}

#[test]
fn uniform_torus_bound() {
    let s = Arc::new(torus(100).unwrap());
    let bundle = ConstantBundle::empirical(s.clone(), 1.0, 1.0).unwrap();
    let out = assemble_upper_bound(&s, 25, &bundle).unwrap();
    let r = &out.report;
    assert!(r.pass);
    // no ball of a flat torus carries more than 1/k of the area
    assert_eq!(r.split.m, 0);
    assert!(r.pieces.iter().all(|p| p.kind == PieceKind::Thin));
    assert!((r.total - r.addends.iter().sum::<f64>()).abs() < 1e-9);
    assert!(r.addends.iter().all(|&a| a >= 0.0 && a <= r.total));
    assert!(r.total <= r.theorem_value);
    let pieces: Vec<&Domain> = out.pieces.iter().collect();
    assert!(partitions(&pieces, &Domain::whole(&s)));
}

#[test]
fn resolution_limit_is_reported() {
    let s = Arc::new(torus(30).unwrap());
    let bundle = ConstantBundle::empirical(s.clone(), 1.0, 1.0).unwrap();
    assert!(matches!(assemble_upper_bound(&s, 5000, &bundle), Err(Error::Resolution(_))));
}

// Flat torus of side `side`, so its area exceeds what one unit ball covers.
fn big_torus(columns: usize, side: f64) -> Surface {
    let t = torus(columns).unwrap();
    let positions = t.positions().iter().map(|p| [p[0] * side, p[1] * side, 0.0]).collect();
    let phi = vec![0.0; t.vertex_count()];
    Surface::new(positions, t.faces().to_vec(), phi, Ambient::Periodic([side, side]), SurfaceOptions::default()).unwrap()
}

#[test]
fn curve_shares_values_below_k_bar() {
    let s = Arc::new(big_torus(240, 12.0));
    let bundle = ConstantBundle::empirical(s.clone(), 1.0, 1.0).unwrap();
    let k_bar = schedule_parameters(144.0, 1, &bundle).unwrap().k_bar;
    assert!(k_bar >= 2);
    let curve = spectrum_curve(&s, &[1, k_bar], &bundle).unwrap();
    assert_eq!(curve.k_bar, k_bar);
    assert_eq!(curve.rows[0].k_used, k_bar);
    assert_eq!(curve.rows[0].total, curve.rows[1].total);
    assert!(curve.rows.iter().all(|r| r.pass));
    assert!(spectrum_curve(&s, &[4, 2], &bundle).is_err());
}
