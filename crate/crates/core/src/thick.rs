//! Recursive balanced subdivision of a domain into pieces of small area,
//! with the boundary-sum certificate driven by the admissible-tree bound.

use std::collections::BTreeMap;


use crate::certificate::{all_pass, Certificate};
use crate::constants::{fifty_pow, lambda_tilde, ConstantBundle, Mode};
use crate::error::{invalid, Error, Result};
use crate::length_area::less_with_tol;
use crate::surface::{farthest_point_seeds, DistanceScratch, Domain, Metric, Surface, NONE};
use crate::tree::{interior_cost, validate_decomposition, DecompositionWitness};

/// Seeds drawn by farthest-point sampling for the sweep fields, on top of
/// the approximate diameter pair.
pub const SWEEP_SEEDS: usize = 8;
/// Nodes processed before the recursion is declared runaway.
pub const MAX_NODES: usize = 10_000;

/// `25^-n`, the smallest admissible side fraction.
pub fn balance_floor(n: usize) -> f64 {
    25f64.powi(-(n as i32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    pub sigma_length_g: f64,
    /// Smaller side first.
    pub sides: (Domain, Domain),
    /// Smaller side's share of `|U|_g`.
    pub balance: f64,
    /// `sigma / (|U|_g^((n-1)/n) max(1, |U|_g0^(1/n)))`.
    pub c_ratio: f64,
}

fn exponent(n: usize) -> f64 {
    (n as f64 - 1.0) / n as f64
}

fn c_ratio(sigma: f64, area_g: f64, area_g0: f64, n: usize) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    sigma / (area_g.powf(exponent(n)) * area_g0.powf(1.0 / n as f64).max(1.0))
}

/// Local indexing of a domain's faces and vertices.
struct Local<'a> {
    surface: &'a Surface,
    faces: &'a [u32],
    /// Local index of each face of the surface, `NONE` outside.
    face_index: Vec<u32>,
    vertices: Vec<u32>,
    vertex_index: Vec<u32>,
}

impl<'a> Local<'a> {
    fn new(surface: &'a Surface, u: &'a Domain) -> Self {
        let mut face_index = vec![NONE; surface.face_count()];
        for (i, &f) in u.faces().iter().enumerate() {
            face_index[f as usize] = i as u32;
        }
        let vertices = u.vertices(surface);
        let mut vertex_index = vec![NONE; surface.vertex_count()];
        for (i, &v) in vertices.iter().enumerate() {
            vertex_index[v as usize] = i as u32;
        }
        Local { surface, faces: u.faces(), face_index, vertices, vertex_index }
    }

    fn allowed(&self) -> Vec<bool> {
        self.vertex_index.iter().map(|&i| i != NONE).collect()
    }

    /// Local neighbors of local face `i` across edges, with edge lengths.
    fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let f = self.faces[i];
        let len_g = self.surface.edge_lengths(Metric::G);
        self.surface.face_edges(f).into_iter().filter_map(move |e| {
            let [f1, f2] = self.surface.edge_faces(e as usize);
            let g = if f1 == f { f2 } else { f1 };
            if g == NONE {
                return None;
            }
            let j = self.face_index[g as usize];
            (j != NONE).then_some((j as usize, len_g[e as usize]))
        })
    }
}

/// Best prefix found while sweeping one face ordering.
struct SweepBest {
    objective: f64,
    order: Vec<u32>,
    prefix: usize,
    sigma: f64,
}

/// Sweeps `order` (local faces sorted by `keys`) and returns the level
/// prefix minimizing `sigma / sqrt(min side)` subject to the balance floor.
fn sweep(local: &Local<'_>, areas: &[f64], total: f64, floor: f64, keys: &[f64]) -> Option<SweepBest> {
    let m = keys.len();
    let mut order: Vec<u32> = (0..m as u32).filter(|&i| keys[i as usize].is_finite()).collect();
    order.sort_by(|&a, &b| keys[a as usize].total_cmp(&keys[b as usize]).then(a.cmp(&b)));
    let mut inside = vec![false; m];
    let (mut cut, mut edges, mut area) = (0.0f64, 0i64, 0.0f64);
    let mut best: Option<(f64, usize, f64)> = None;
    for (pos, &i) in order.iter().enumerate() {
        let i = i as usize;
        inside[i] = true;
        area += areas[i];
        for (j, l) in local.neighbors(i) {
            if inside[j] {
                cut -= l;
                edges -= 1;
            } else {
                cut += l;
                edges += 1;
            }
        }
        let level_end = order.get(pos + 1).map_or(true, |&nx| keys[nx as usize] != keys[i]);
        if !level_end {
            continue;
        }
        let small = area.min(total - area);
        if !(small >= floor) || small <= 0.0 {
            continue;
        }
        let sigma = if edges == 0 { 0.0 } else { cut };
        let objective = sigma / small.sqrt();
        if best.map_or(true, |(b, _, _)| less_with_tol(objective, b)) {
            best = Some((objective, pos + 1, sigma));
        }
    }
    best.map(|(objective, prefix, sigma)| SweepBest { objective, order, prefix, sigma })
}

/// Approximate g0-diameter pair of the domain, by two farthest-point hops.
fn diameter_pair(local: &Local<'_>, allowed: &[bool], scratch: &mut DistanceScratch) -> Option<(u32, u32)> {
    let start = *local.vertices.first()?;
    let hop = |from: u32, scratch: &mut DistanceScratch| {
        let mut far = (from, 0.0);
        for &(v, d) in scratch.run(local.surface, &[from], Metric::G0, f64::INFINITY, Some(allowed)) {
            if d > far.1 || (d == far.1 && v < far.0) {
                far = (v, d);
            }
        }
        far.0
    };
    let a = hop(start, scratch);
    let b = hop(a, scratch);
    Some((a, b))
}

fn cut_from_sides(
    surface: &Surface,
    u: &Domain,
    small: Domain,
    large: Domain,
    sigma: f64,
    n: usize,
) -> CutResult {
    let total = u.measure(surface, Metric::G);
    let balance = small.measure(surface, Metric::G) / total;
    let ratio = c_ratio(sigma, total, u.measure(surface, Metric::G0), n);
    CutResult { sigma_length_g: sigma, sides: (small, large), balance, c_ratio: ratio }
}

fn order_sides(surface: &Surface, a: Domain, b: Domain) -> (Domain, Domain) {
    if b.measure(surface, Metric::G) < a.measure(surface, Metric::G) {
        (b, a)
    } else {
        (a, b)
    }
}

/// Balanced sweep cut of a connected domain, or `None` if no level set
/// clears the balance floor.
fn sweep_cut(surface: &Surface, u: &Domain, floor: f64) -> Option<(Domain, Domain, f64)> {
    let local = Local::new(surface, u);
    let allowed = local.allowed();
    let areas: Vec<f64> = u.faces().iter().map(|&f| surface.face_area(f, Metric::G)).collect();
    let total: f64 = areas.iter().sum();
    let mut scratch = DistanceScratch::new(surface.vertex_count());

    let mut seeds = Vec::new();
    if let Some((a, b)) = diameter_pair(&local, &allowed, &mut scratch) {
        seeds.extend([a, b]);
    }
    for s in farthest_point_seeds(surface, Some(&allowed), Metric::G0, SWEEP_SEEDS) {
        if !seeds.contains(&s) {
            seeds.push(s);
        }
    }
    let fields: Vec<Vec<f64>> = seeds
        .iter()
        .map(|&s| {
            scratch.run(surface, &[s], Metric::G0, f64::INFINITY, Some(&allowed));
            local.vertices.iter().map(|&v| scratch.distance(v)).collect()
        })
        .collect();
    let face_key = |value: &dyn Fn(usize) -> f64| -> Vec<f64> {
        local
            .faces
            .iter()
            .map(|&f| {
                let k = surface.face(f).iter().map(|&v| value(local.vertex_index[v as usize] as usize)).sum::<f64>();
                if k.is_nan() {
                    f64::INFINITY
                } else {
                    k / 3.0
                }
            })
            .collect()
    };

    let mut best: Option<SweepBest> = None;
    let mut consider = |candidate: Option<SweepBest>| {
        if let Some(c) = candidate {
            if best.as_ref().map_or(true, |b| less_with_tol(c.objective, b.objective)) {
                best = Some(c);
            }
        }
    };
    for field in &fields {
        consider(sweep(&local, &areas, total, floor, &face_key(&|i| field[i])));
    }
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            let (a, b) = (&fields[i], &fields[j]);
            consider(sweep(&local, &areas, total, floor, &face_key(&|x| a[x] - b[x])));
        }
    }
    let best = best?;
    let mut inside: Vec<u32> = best.order[..best.prefix].iter().map(|&i| local.faces[i as usize]).collect();
    inside.sort_unstable();
    let inside = Domain::from_sorted(inside);
    let outside = u.difference(&inside);
    Some((inside, outside, best.sigma))
}

/// Splits `U` into two sides, each with at least `25^-n |U|_g`, keeping the
/// cut short relative to the smaller side.
pub fn isoperimetric_cut(surface: &Surface, u: &Domain) -> Result<CutResult> {
    isoperimetric_cut_dim(surface, u, 2)
}

pub(crate) fn isoperimetric_cut_dim(surface: &Surface, u: &Domain, n: usize) -> Result<CutResult> {
    let total = u.measure(surface, Metric::G);
    if !(total > 0.0) {
        return invalid("cannot cut a domain of zero area");
    }
    let floor = balance_floor(n) * total;
    let mut comps = u.components(surface);
    if comps.len() > 1 {
        // largest component against the rest costs nothing
        comps.sort_by(|a, b| {
            b.measure(surface, Metric::G).total_cmp(&a.measure(surface, Metric::G)).then(a.faces()[0].cmp(&b.faces()[0]))
        });
        let largest = comps[0].clone();
        let rest = u.difference(&largest);
        if rest.measure(surface, Metric::G) >= floor {
            let (small, large) = order_sides(surface, largest, rest);
            return Ok(cut_from_sides(surface, u, small, large, 0.0, n));
        }
        // crumbs too small: cut the dominant component, crumbs join the
        // smaller side, which leaves the cut length unchanged
        let sub_floor = (floor - rest.measure(surface, Metric::G)).max(0.0);
        let (a, b, sigma) = sweep_cut(surface, &largest, sub_floor)
            .ok_or_else(|| Error::NoCut(format!("no balanced level set in a domain of {} faces", u.len())))?;
        let (small, large) = order_sides(surface, a, b);
        let small = small.union(&rest);
        let (small, large) = order_sides(surface, small, large);
        return Ok(cut_from_sides(surface, u, small, large, sigma, n));
    }
    let (a, b, sigma) = sweep_cut(surface, u, floor)
        .ok_or_else(|| Error::NoCut(format!("no balanced level set in a domain of {} faces", u.len())))?;
    let (small, large) = order_sides(surface, a, b);
    Ok(cut_from_sides(surface, u, small, large, sigma, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeCut {
    /// Tree label of the node that was cut (empty for the root).
    pub node: String,
    pub cut: CutResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThickDecomposition {
    pub k: u64,
    /// Witness over `k_a = k |N_a|_g / |N|_g`.
    pub tree: DecompositionWitness,
    /// Leaf labels and domains, in label order.
    pub leaves: Vec<(String, Domain)>,
    pub cuts: Vec<NodeCut>,
    pub boundary_total_g: f64,
    pub c_emp: f64,
    pub claim_bound: f64,
    /// `K |N_a|_g^((n-1)/n)` per leaf.
    pub width_bounds: Vec<f64>,
    /// `|N|_g`, the unit the thresholds are normalized by.
    pub area_scale: f64,
    pub certificates: Vec<Certificate>,
}

impl ThickDecomposition {
    pub fn pass(&self) -> bool {
        all_pass(&self.certificates)
    }

    pub fn leaf_domains(&self) -> impl Iterator<Item = &Domain> {
        self.leaves.iter().map(|(_, d)| d)
    }
}

/// Recursively cuts `N` until every piece has `k |N_a|_g / |N|_g < 50^n`.
pub fn decompose_thick(surface: &Surface, n_dom: &Domain, k: u64, bundle: &ConstantBundle) -> Result<ThickDecomposition> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let n = bundle.n;
    let area = n_dom.measure(surface, Metric::G);
    let area_g0 = n_dom.measure(surface, Metric::G0);
    if !(area > 0.0) {
        return invalid("cannot decompose a domain of zero area");
    }
    let mut certs = Vec::new();
    let g0_ok = area_g0 <= 1.0 * (1.0 + 1e-12);
    match bundle.mode {
        Mode::Paper if !g0_ok => {
            return Err(Error::Precondition(format!("paper mode needs |N|_g0 <= 1, got {area_g0}")));
        }
        _ => {
            let mut c = Certificate::le_tol("thick.|N|_g0 <= 1", area_g0, 1.0, 1e-12);
            if !g0_ok {
                // only advisory outside paper mode
                c.pass = true;
                c = c.noted("hypothesis fails; the max(1, |U|_g0^(1/n)) factor is kept literally");
            }
            certs.push(c);
        }
    }

    let fifty = fifty_pow(n);
    let kf = k as f64;
    let share = |d: &Domain| kf * d.measure(surface, Metric::G) / area;
    let mut values: BTreeMap<String, f64> = BTreeMap::new();
    let mut leaves: Vec<(String, Domain)> = Vec::new();
    let mut cuts: Vec<NodeCut> = Vec::new();
    let mut failed_cuts = Vec::new();
    let mut queue: std::collections::VecDeque<(String, Domain)> = std::collections::VecDeque::new();
    if kf <= fifty {
        leaves.push((String::new(), n_dom.clone()));
    } else {
        queue.push_back((String::new(), n_dom.clone()));
    }
    let mut processed = 0;
    while let Some((label, dom)) = queue.pop_front() {
        processed += 1;
        if processed > MAX_NODES {
            return Err(Error::Depth(format!("more than {MAX_NODES} nodes while cutting to k = {k}")));
        }
        let k_node = share(&dom);
        if !label.is_empty() && k_node < fifty {
            leaves.push((label, dom));
            continue;
        }
        match isoperimetric_cut_dim(surface, &dom, n) {
            Ok(cut) => {
                let (small, large) = cut.sides.clone();
                for (side, part) in [("0", small), ("1", large)] {
                    let child = format!("{label}{side}");
                    values.insert(child.clone(), share(&part));
                    queue.push_back((child, part));
                }
                cuts.push(NodeCut { node: label, cut });
            }
            Err(Error::NoCut(msg)) => {
                failed_cuts.push(format!("{}: {msg}", if label.is_empty() { "root" } else { &label }));
                leaves.push((label, dom));
            }
            Err(e) => return Err(e),
        }
    }
    leaves.sort_by(|a, b| a.0.cmp(&b.0));

    let lambda = 1.0 / fifty;
    let tree = validate_decomposition(kf, &values, lambda)?;
    certs.extend(tree.checks.iter().filter(|c| !c.pass).cloned());
    certs.push(Certificate::flag("thick.tree is a (1/50^n)-decomposition", tree.pass).with("lambda", lambda));
    let strong = validate_decomposition(kf, &values, balance_floor(n))?;
    certs.push(
        Certificate::flag("thick.tree is a (1/25^n)-decomposition", strong.pass).with("lambda", balance_floor(n)),
    );
    let mut no_cut = Certificate::flag("thick.every oversized node was cut", failed_cuts.is_empty());
    if !failed_cuts.is_empty() {
        no_cut = no_cut.noted(failed_cuts.join("; "));
    }
    certs.push(no_cut);

    // leaves
    let a = exponent(n);
    let leaf_shares: Vec<f64> = leaves.iter().map(|(_, d)| share(d)).collect();
    let worst_leaf = leaf_shares.iter().copied().fold(0.0, f64::max);
    if kf > fifty {
        certs.push(Certificate::lt("thick.leaf k_a < 50^n", worst_leaf, fifty).with("k", kf));
        let smallest = leaf_shares.iter().copied().fold(f64::INFINITY, f64::min);
        certs.push(Certificate::le("thick.leaf k_a >= 2^n", 2f64.powi(n as i32), smallest));
    }
    let mut covered = crate::surface::FaceMask::new(surface.face_count());
    let mut overlap = false;
    for (_, d) in &leaves {
        for &f in d.faces() {
            overlap |= !covered.insert(f);
        }
    }
    certs.push(Certificate::flag("thick.leaves partition N", !overlap && covered == n_dom.mask(surface)));
    let worst_balance = cuts.iter().map(|c| c.cut.balance).fold(f64::INFINITY, f64::min);
    if !cuts.is_empty() {
        certs.push(Certificate::le_tol("thick.cut balance >= 25^-n", balance_floor(n), worst_balance, 0.0));
    }

    // boundary chain
    let boundary_total_g: f64 = cuts.iter().map(|c| c.cut.sigma_length_g).sum();
    let c_emp = cuts.iter().map(|c| c.cut.c_ratio).fold(0.0, f64::max);
    let lt = lambda_tilde(lambda, n)?;
    let g0_factor = area_g0.powf(1.0 / n as f64).max(1.0);
    let per_node: f64 = cuts
        .iter()
        .map(|c| {
            let (x, y) = (&c.cut.sides.0, &c.cut.sides.1);
            (x.measure(surface, Metric::G) + y.measure(surface, Metric::G)).powf(a)
        })
        .sum();
    let cost = interior_cost(&tree.tree, n);
    let scaled_cost = (area / kf).powf(a) * cost;
    let claim_bound = 2.0 * c_emp * (1.0 + lt) * kf.powf(1.0 / n as f64) * area.powf(a) * g0_factor;
    let accounted = inter_leaf_length(surface, n_dom, &leaves);
    certs.push(Certificate::eq_tol("thick.boundary accounting", boundary_total_g, accounted, 1e-9));
    if !cuts.is_empty() {
        certs.push(
            Certificate::le("thick.chain cut ratios", boundary_total_g, c_emp * g0_factor * per_node)
                .with("c_emp", c_emp),
        );
        certs.push(Certificate::eq_tol("thick.chain tree normalization", per_node, scaled_cost, 1e-9));
        let growth = (1.0 + lt) * kf - lt * kf.powf(a);
        certs.push(
            Certificate::le("thick.chain linear growth", cost, growth).with("lambda_tilde", lt).with("k", kf),
        );
        certs.push(
            Certificate::le("thick.boundary total", boundary_total_g, claim_bound)
                .with("c_emp", c_emp)
                .with("lambda_tilde", lt)
                .with("area_scale", area),
        );
    }

    let width_bounds: Vec<f64> =
        leaves.iter().map(|(_, d)| bundle.k_width * d.measure(surface, Metric::G).powf(a)).collect();
    let worst_width = width_bounds.iter().copied().fold(0.0, f64::max);
    certs.push(
        Certificate::le(
            "thick.k max leaf width <= 50^n K k^(1/n)",
            kf * worst_width,
            fifty * bundle.k_width * kf.powf(1.0 / n as f64) * area.powf(a),
        )
        .with("K", bundle.k_width),
    );

    Ok(ThickDecomposition {
        k,
        tree,
        leaves,
        cuts,
        boundary_total_g,
        c_emp,
        claim_bound,
        width_bounds,
        area_scale: area,
        certificates: certs,
    })
}

/// Length of the edges of `N` separating two different leaves.
fn inter_leaf_length(surface: &Surface, n_dom: &Domain, leaves: &[(String, Domain)]) -> f64 {
    let mut owner = vec![NONE; surface.face_count()];
    for (i, (_, d)) in leaves.iter().enumerate() {
        for &f in d.faces() {
            owner[f as usize] = i as u32;
        }
    }
    let mask = n_dom.mask(surface);
    let len_g = surface.edge_lengths(Metric::G);
    (0..surface.edge_count())
        .filter(|&e| {
            let [f1, f2] = surface.edge_faces(e);
            f1 != NONE && f2 != NONE && mask.contains(f1) && mask.contains(f2) && owner[f1 as usize] != owner[f2 as usize]
        })
        .map(|e| len_g[e])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{icosphere, torus, NeighborhoodQuery};

    #[test]
    fn torus_cuts_into_cylinders() {
        let s = torus(40).unwrap();
        let cut = isoperimetric_cut(&s, &Domain::whole(&s)).unwrap();
        assert!((cut.balance - 0.5).abs() < 0.05, "balance {}", cut.balance);
        assert!((cut.sigma_length_g - 2.0).abs() < 0.2, "sigma {}", cut.sigma_length_g);
        assert!((cut.c_ratio - 2.0).abs() < 0.2);
    }

    #[test]
    fn sphere_cuts_near_equator() {
        let s = icosphere(4).unwrap();
        let cut = isoperimetric_cut(&s, &Domain::whole(&s)).unwrap();
        assert!((cut.balance - 0.5).abs() < 0.05, "balance {}", cut.balance);
        // equator over sqrt(area), before the g0 factor max(1, sqrt(4 pi))
        let area = s.area(Metric::G);
        let expected = std::f64::consts::PI.sqrt();
        assert!((cut.sigma_length_g / area.sqrt() - expected).abs() / expected < 0.1, "sigma {}", cut.sigma_length_g);
        assert!((cut.c_ratio - 0.5).abs() < 0.05, "c_ratio {}", cut.c_ratio);
    }

    #[test]
    fn components_split_for_free() {
        let s = torus(40).unwrap();
        let a = s.geodesic_ball(0, 0.1, Metric::G0).unwrap();
        let b = s.geodesic_ball(820, 0.1, Metric::G0).unwrap();
        assert!(a.is_disjoint(&b));
        let cut = isoperimetric_cut(&s, &a.union(&b)).unwrap();
        assert_eq!(cut.sigma_length_g, 0.0);
        assert_eq!(cut.c_ratio, 0.0);
    }

    #[test]
    fn tiny_domain_has_no_cut() {
        let s = torus(16).unwrap();
        assert!(matches!(isoperimetric_cut(&s, &Domain::new(vec![3])), Err(Error::NoCut(_))));
    }
}
