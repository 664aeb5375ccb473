//! Whole-surface assembly: schedule, thin/thick split, dispatch to the two
//! decomposers, and the final upper bound.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::balls::BallTracker;
use crate::certificate::{all_pass, Certificate};
use crate::constants::{schedule_parameters, ConstantBundle, ConstantSummary, Mode, Schedule};
use crate::error::{invalid, Error, Result};
use crate::surface::{curvature_report, Domain, FaceMask, Metric, Surface, NONE};
use crate::thick::decompose_thick;
use crate::thin::{certify_thin, greedy_pieces, ThinDecomposition};
pub use crate::width::{width_one_bound, width_one_bound_dim};

/// Version of the report layout below.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub thick_domains: Vec<(Domain, u32)>,
    pub thin_remainder: Domain,
    pub m: usize,
    pub boundary_total_g: f64,
    pub certificates: Vec<Certificate>,
}

/// Split state kept alive so the thin pass can continue on the same
/// residual without recomputing every ball.
struct Split<'a> {
    result: SplitResult,
    tracker: BallTracker<'a>,
}

fn check_resolution(surface: &Surface, schedule: &Schedule, mode: Mode) -> Result<()> {
    let h = surface.max_edge_length(Metric::G0);
    if schedule.r_k < 2.0 * h {
        let advice = match mode {
            Mode::Paper => "use empirical mode, a smaller k or a finer mesh",
            Mode::Empirical => "use a smaller k or a finer mesh",
        };
        return Err(Error::Resolution(format!(
            "r_k = {:.3e} is below twice the longest g0 edge ({:.3e}); {advice}",
            schedule.r_k, h
        )));
    }
    Ok(())
}

fn split_inner<'a>(surface: &'a Surface, k: u64, bundle: &ConstantBundle, schedule: &Schedule) -> Result<Split<'a>> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    check_resolution(surface, schedule, bundle.mode)?;
    let n = bundle.n;
    let a = (n as f64 - 1.0) / n as f64;
    let kf = k as f64;
    let (r, alpha) = (schedule.r_k, schedule.alpha_k);
    let area = surface.area(Metric::G);

    let mut tracker = BallTracker::new(surface, FaceMask::full(surface.face_count()), r);
    let (pieces, slices, steps) = greedy_pieces(surface, &mut tracker, r, Some(alpha));
    let m = pieces.len();
    let boundary_total_g = slices.iter().map(|c| c.cut_length_g).fold(0.0, |a, b| a + b);
    let c_r = bundle.covering(r)? as f64;

    let mut certs = Vec::new();
    certs.push(Certificate::le("split.m <= k - 1", m as f64, kf - 1.0));
    let residual_max = tracker.argmax().map_or(0.0, |x| x.1);
    certs.push(Certificate::lt("split.remainder balls below alpha_k", residual_max, alpha).with("alpha_k", alpha));
    if m > 0 {
        let smallest = pieces.iter().map(|p| p.domain.measure(surface, Metric::G)).fold(f64::INFINITY, f64::min);
        certs.push(Certificate::lt("split.|D_j|_g > alpha_k", alpha, smallest));
        let largest_g0 = pieces.iter().map(|p| p.domain.measure(surface, Metric::G0)).fold(0.0, f64::max);
        certs.push(Certificate::lt("split.|D_j|_g0 < 1", largest_g0, 1.0));
        let forced = pieces.iter().filter(|p| p.forced).count();
        certs.push(Certificate::flag("split.no forced steps", forced == 0).with("forced", forced as f64));
        let worst_cover =
            steps.iter().map(|s| s.big_area_g / (c_r * s.ball_area_g)).fold(0.0, f64::max);
        certs.push(
            Certificate::le("split.4r-ball covered by C(r_k) r-balls", worst_cover, 1.0).with("C(r_k)", c_r),
        );
        let worst_g0 = steps.iter().map(|s| s.big_area_g0).fold(0.0, f64::max);
        certs.push(
            Certificate::le("split.|B_4r|_g0 <= C0 (4 r_k)^n", worst_g0, bundle.c0 * (4.0 * r).powi(n as i32))
                .with("C0", bundle.c0),
        );
        let tol = slices.iter().map(|c| c.tolerance()).fold(0.0, f64::max);
        let step_sum: f64 = steps.iter().map(|s| s.ball_area_g.powf(a)).sum();
        let slice_sum: f64 =
            slices.iter().map(|c| (c.annulus_area_g0.powf(1.0 / n as f64) * c.annulus_area_g.powf(a)) / r).sum();
        certs.push(Certificate::le_tol("split.chain slices", boundary_total_g, slice_sum, tol));
        let ball_sum: f64 = steps.iter().map(|s| s.ball_area_g).sum();
        certs.push(Certificate::le(
            "split.chain hoelder",
            step_sum,
            (m as f64).powf(1.0 / n as f64) * ball_sum.powf(a),
        ));
        certs.push(Certificate::le("split.chain disjoint balls", ball_sum, area));
    }
    let bound = 4.0 * bundle.c0 * bundle.c_one as f64 * area.powf(a) * kf.powf(1.0 / n as f64);
    certs.push(
        Certificate::le("split.boundary total", boundary_total_g, bound)
            .with("C0", bundle.c0)
            .with("C(1)", bundle.c_one as f64),
    );

    let thin_remainder = tracker.residual().to_domain();
    let result = SplitResult {
        thick_domains: pieces.into_iter().map(|p| (p.domain, p.center)).collect(),
        thin_remainder,
        m,
        boundary_total_g,
        certificates: certs,
    };
    Ok(Split { result, tracker })
}

/// Greedily removes the balls heavier than `alpha_k` and returns the pieces
/// around them together with the thin remainder.
pub fn thin_thick_split(surface: &Surface, k: u64, bundle: &ConstantBundle, schedule: &Schedule) -> Result<SplitResult> {
    Ok(split_inner(surface, k, bundle, schedule)?.result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    pub vertices: usize,
    pub faces: usize,
    pub area_g: f64,
    pub area_g0: f64,
    pub max_edge_g0: f64,
    pub closed: bool,
    /// Smallest g0 Gaussian curvature at an interior vertex.
    pub curvature_min: Option<f64>,
    /// Whether the measured curvature stays above -1.
    pub curvature_at_least_minus_one: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub m: usize,
    pub boundary: f64,
    pub centers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutSummary {
    pub node: String,
    pub sigma: f64,
    pub balance: f64,
    pub c_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThickSummary {
    /// Index of the split domain this decomposition belongs to.
    pub domain: usize,
    pub k_j: f64,
    /// Budget passed to the recursion, `floor(k_j) + 1`, or 0 when the
    /// domain was kept whole because `k_j < 1`.
    pub k_budget: u64,
    pub leaves: usize,
    pub tree: BTreeMap<String, f64>,
    pub cuts: Vec<CutSummary>,
    pub c_emp: f64,
    pub boundary: f64,
    pub claim_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinSummary {
    pub pieces: usize,
    pub r: f64,
    pub alpha: f64,
    pub boundary: f64,
    pub boundary_bound: f64,
    pub multiplicity: u64,
    pub multiplicity_bound: u64,
    pub max_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    Thick,
    Thin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceSummary {
    pub kind: PieceKind,
    pub faces: usize,
    pub area_g: f64,
    pub area_g0: f64,
    pub width_bound: f64,
}

/// Everything a run certifies, in the layout written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub schema_version: u32,
    pub k: u64,
    pub mode: Mode,
    pub constants: ConstantSummary,
    pub schedule: Schedule,
    pub surface: SurfaceSummary,
    pub split: SplitSummary,
    pub thick: Vec<ThickSummary>,
    pub thin: ThinSummary,
    pub pieces: Vec<PieceSummary>,
    /// Thick boundary, split boundary, thin boundary, `k` times the largest
    /// width bound.
    pub addends: [f64; 4],
    pub total: f64,
    pub theorem_value: f64,
    pub pass: bool,
    pub certificates: Vec<Certificate>,
}

/// A report together with the final pieces, in report order.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperBound {
    pub report: BoundReport,
    pub pieces: Vec<Domain>,
}

/// `C3 |M|_g^((n-1)/n) max(k^(1/n), |M|_g0^(1/n))`.
pub fn theorem_value(bundle: &ConstantBundle, area_g: f64, area_g0: f64, k: f64) -> f64 {
    let n = bundle.n as f64;
    bundle.c3 * area_g.powf((n - 1.0) / n) * k.powf(1.0 / n).max(area_g0.powf(1.0 / n))
}

fn prefixed<'c>(prefix: &str, certs: &'c [Certificate]) -> impl Iterator<Item = Certificate> + 'c {
    let prefix = prefix.to_string();
    certs.iter().map(move |c| {
        let mut c = c.clone();
        c.name = format!("{prefix}{}", c.name);
        c
    })
}

/// Length of the edges separating two different pieces.
fn inter_piece_length(surface: &Surface, pieces: &[Domain]) -> f64 {
    let mut owner = vec![NONE; surface.face_count()];
    for (i, d) in pieces.iter().enumerate() {
        for &f in d.faces() {
            owner[f as usize] = i as u32;
        }
    }
    let len_g = surface.edge_lengths(Metric::G);
    (0..surface.edge_count())
        .filter(|&e| {
            let [f1, f2] = surface.edge_faces(e);
            f1 != NONE && f2 != NONE && owner[f1 as usize] != owner[f2 as usize]
        })
        .map(|e| len_g[e])
        .sum()
}

/// Runs the full decomposition for one `k` and assembles the bound.
pub fn assemble_upper_bound(surface: &Surface, k: u64, bundle: &ConstantBundle) -> Result<UpperBound> {
    let n = bundle.n;
    if n != 2 {
        return invalid("geometric runs need a surface bundle (n = 2)");
    }
    let area = surface.area(Metric::G);
    let area_g0 = surface.area(Metric::G0);
    let schedule = schedule_parameters(area, k, bundle)?;
    let kf = k as f64;
    let mut certs = bundle.chain_certificates()?;

    let Split { result: split, mut tracker } = split_inner(surface, k, bundle, &schedule)?;
    certs.extend(split.certificates.iter().cloned());

    let mut pieces: Vec<Domain> = Vec::new();
    let mut summaries: Vec<PieceSummary> = Vec::new();
    let mut thick = Vec::new();
    let mut thick_total = 0.0;
    for (j, (dom, _)) in split.thick_domains.iter().enumerate() {
        let k_j = kf * dom.measure(surface, Metric::G) / area;
        if k_j < 1.0 {
            let width = width_one_bound_dim(dom.measure(surface, Metric::G), dom.measure(surface, Metric::G0), bundle.k_width, n);
            summaries.push(PieceSummary {
                kind: PieceKind::Thick,
                faces: dom.len(),
                area_g: dom.measure(surface, Metric::G),
                area_g0: dom.measure(surface, Metric::G0),
                width_bound: width,
            });
            pieces.push(dom.clone());
            thick.push(ThickSummary {
                domain: j,
                k_j,
                k_budget: 0,
                leaves: 1,
                tree: BTreeMap::new(),
                cuts: Vec::new(),
                c_emp: 0.0,
                boundary: 0.0,
                claim_bound: 0.0,
            });
            continue;
        }
        let budget = k_j.floor() as u64 + 1;
        certs.push(
            Certificate::le(
                format!("thick[{j}].(1 + [k_j])^(1/n) <= 2 k_j^(1/n)"),
                (budget as f64).powf(1.0 / n as f64),
                2.0 * k_j.powf(1.0 / n as f64),
            )
            .with("k_j", k_j),
        );
        let dec = decompose_thick(surface, dom, budget, bundle)?;
        certs.extend(prefixed(&format!("thick[{j}]."), &dec.certificates));
        thick_total += dec.boundary_total_g;
        for (leaf, width) in dec.leaf_domains().zip(&dec.width_bounds) {
            let (ag, ag0) = (leaf.measure(surface, Metric::G), leaf.measure(surface, Metric::G0));
            let _ = width;
            summaries.push(PieceSummary {
                kind: PieceKind::Thick,
                faces: leaf.len(),
                area_g: ag,
                area_g0: ag0,
                width_bound: width_one_bound_dim(ag, ag0, bundle.k_width, n),
            });
            pieces.push(leaf.clone());
        }
        thick.push(ThickSummary {
            domain: j,
            k_j,
            k_budget: budget,
            leaves: dec.leaves.len(),
            tree: dec.tree.tree.values.clone(),
            cuts: dec
                .cuts
                .iter()
                .map(|c| CutSummary {
                    node: c.node.clone(),
                    sigma: c.cut.sigma_length_g,
                    balance: c.cut.balance,
                    c_ratio: c.cut.c_ratio,
                })
                .collect(),
            c_emp: dec.c_emp,
            boundary: dec.boundary_total_g,
            claim_bound: dec.claim_bound,
        });
    }

    // the thin pass continues on the split's residual
    let remainder = split.thin_remainder.clone();
    let remainder_mask = tracker.residual().clone();
    let (thin_pieces, thin_slices, _) = greedy_pieces(surface, &mut tracker, schedule.r_k, None);
    let thin: ThinDecomposition = certify_thin(
        surface,
        &remainder,
        &remainder_mask,
        thin_pieces,
        thin_slices,
        schedule.r_k,
        schedule.alpha_k,
        bundle,
    )?;
    certs.extend(thin.certificates.iter().cloned());
    for (p, &width) in thin.pieces.iter().zip(&thin.width_bounds) {
        summaries.push(PieceSummary {
            kind: PieceKind::Thin,
            faces: p.domain.len(),
            area_g: p.domain.measure(surface, Metric::G),
            area_g0: p.domain.measure(surface, Metric::G0),
            width_bound: width,
        });
        pieces.push(p.domain.clone());
    }

    let max_width = summaries.iter().map(|p| p.width_bound).fold(0.0, f64::max);
    let addends = [thick_total, split.boundary_total_g, thin.boundary_total_g, kf * max_width];
    let total: f64 = addends.iter().sum();
    let theorem = theorem_value(bundle, area, area_g0, kf);

    let mut covered = FaceMask::new(surface.face_count());
    let mut overlap = false;
    for d in &pieces {
        for &f in d.faces() {
            overlap |= !covered.insert(f);
        }
    }
    certs.push(
        Certificate::flag("assembly.pieces partition M", !overlap && covered.count() == surface.face_count())
            .with("pieces", pieces.len() as f64),
    );
    let charged = addends[0] + addends[1] + addends[2];
    certs.push(Certificate::eq_tol(
        "assembly.every cut edge charged once",
        charged,
        inter_piece_length(surface, &pieces),
        1e-9,
    ));
    certs.push(Certificate::eq_tol("assembly.total = sum of addends", total, addends.iter().sum(), 0.0));
    certs.push(
        Certificate::le("assembly.total <= theorem value", total, theorem)
            .with("C3", bundle.c3)
            .with("k", kf)
            .with("area_g", area)
            .with("area_g0", area_g0),
    );

    let curvature = curvature_report(surface);
    let report = BoundReport {
        schema_version: SCHEMA_VERSION,
        k,
        mode: bundle.mode,
        constants: bundle.summary(),
        schedule,
        surface: SurfaceSummary {
            vertices: surface.vertex_count(),
            faces: surface.face_count(),
            area_g: area,
            area_g0,
            max_edge_g0: surface.max_edge_length(Metric::G0),
            closed: surface.is_closed(),
            curvature_min: curvature.min.is_finite().then_some(curvature.min),
            curvature_at_least_minus_one: curvature.hypothesis_holds,
        },
        split: SplitSummary {
            m: split.m,
            boundary: split.boundary_total_g,
            centers: split.thick_domains.iter().map(|d| d.1).collect(),
        },
        thick,
        thin: ThinSummary {
            pieces: thin.pieces.len(),
            r: thin.r,
            alpha: thin.alpha,
            boundary: thin.boundary_total_g,
            boundary_bound: thin.boundary_bound,
            multiplicity: thin.multiplicity_max,
            multiplicity_bound: thin.multiplicity_bound,
            max_width: thin.max_width_bound(),
        },
        pieces: summaries,
        addends,
        total,
        theorem_value: theorem,
        pass: all_pass(&certs),
        certificates: certs,
    };
    Ok(UpperBound { report, pieces })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub k: u64,
    /// The `k` actually decomposed: `k_bar` when `k < k_bar`.
    pub k_used: u64,
    pub total: f64,
    pub theorem_value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    pub k_bar: u64,
    pub rows: Vec<CurveRow>,
    /// Least-squares slope of `ln total` against `ln k`.
    pub slope: Option<f64>,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / m, b + p.1 / m));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Bounds for every `k` in the list. Values of `k` below `k_bar` share the
/// bound at `k_bar`, since the spectrum is nondecreasing in `k`.
pub fn spectrum_curve(surface: &Surface, k_list: &[u64], bundle: &ConstantBundle) -> Result<SpectrumCurve> {
    if k_list.is_empty() {
        return invalid("k list is empty");
    }
    if k_list.windows(2).any(|w| w[0] >= w[1]) || k_list[0] == 0 {
        return invalid("k list must be positive and strictly increasing");
    }
    let area = surface.area(Metric::G);
    let k_bar = schedule_parameters(area, 1, bundle)?.k_bar;
    let mut cache: BTreeMap<u64, (f64, f64, bool)> = BTreeMap::new();
    let mut rows = Vec::new();
    for &k in k_list {
        let k_used = k.max(k_bar);
        if !cache.contains_key(&k_used) {
            let run = assemble_upper_bound(surface, k_used, bundle)?;
            cache.insert(k_used, (run.report.total, run.report.theorem_value, run.report.pass));
        }
        let (total, theorem, pass) = cache[&k_used];
        rows.push(CurveRow { k, k_used, total, theorem_value: theorem, pass });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| ((r.k as f64).ln(), r.total.ln())).collect();
    Ok(SpectrumCurve { k_bar, rows, slope: fit_slope(&points) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedRow {
    pub k: u64,
    /// Lattice columns of the mesh used for this `k`.
    pub columns: usize,
    pub vertices: usize,
    pub r_k: f64,
    pub max_edge_g0: f64,
    pub total: f64,
    pub theorem_value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedCurve {
    pub rows: Vec<RefinedRow>,
    pub slope: Option<f64>,
}

/// Columns of the coarse mesh used to estimate constants before refining.
const PROBE_COLUMNS: usize = 64;
/// Target ratio of `r_k` to the longest edge; the hard floor is 2.
const REFINE_MARGIN: f64 = 2.1;

/// Like [`spectrum_curve`], but each `k` runs on its own mesh from a family
/// of lattice meshes of one smooth surface, just fine enough that `r_k`
/// clears the resolution floor. `build(n)` must return a mesh whose longest
/// edge scales like `1/n`. Empirical mode only: the constants are measured
/// again on every mesh.
pub fn refined_spectrum_curve(
    build: impl Fn(usize) -> Result<Surface>,
    k_list: &[u64],
    k_width: f64,
    c: f64,
) -> Result<RefinedCurve> {
    if k_list.is_empty() {
        return invalid("k list is empty");
    }
    if k_list.windows(2).any(|w| w[0] >= w[1]) || k_list[0] == 0 {
        return invalid("k list must be positive and strictly increasing");
    }
    let probe = std::sync::Arc::new(build(PROBE_COLUMNS)?);
    let edge_scale = probe.max_edge_length(Metric::G0) * PROBE_COLUMNS as f64;
    let area = probe.area(Metric::G);
    let probe_bundle = ConstantBundle::empirical(probe, k_width, c)?;
    let mut rows = Vec::new();
    for &k in k_list {
        let k_bar = schedule_parameters(area, 1, &probe_bundle)?.k_bar;
        let k_used = k.max(k_bar);
        let estimate = schedule_parameters(area, k_used, &probe_bundle)?.r_k;
        let mut columns = ((REFINE_MARGIN * edge_scale / estimate).ceil() as usize).max(PROBE_COLUMNS);
        let mut attempts = 0;
        let (surface, run) = loop {
            let surface = std::sync::Arc::new(build(columns)?);
            let bundle = ConstantBundle::empirical(surface.clone(), k_width, c)?;
            match assemble_upper_bound(&surface, k_used, &bundle) {
                Err(Error::Resolution(_)) if attempts < 4 => {
                    attempts += 1;
                    columns = (columns as f64 * 1.05).ceil() as usize;
                }
                other => break (surface, other?),
            }
        };
        rows.push(RefinedRow {
            k,
            columns,
            vertices: surface.vertex_count(),
            r_k: run.report.schedule.r_k,
            max_edge_g0: run.report.surface.max_edge_g0,
            total: run.report.total,
            theorem_value: run.report.theorem_value,
            pass: run.report.pass,
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| ((r.k as f64).ln(), r.total.ln())).collect();
    Ok(RefinedCurve { slope: fit_slope(&points), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|&k| (k.ln(), (3.0 * k.sqrt()).ln())).collect();
        assert!((fit_slope(&pts).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(fit_slope(&pts[..1]), None);
    }
}
