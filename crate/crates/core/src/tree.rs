//! Admissible binary trees, balanced decompositions of a value along them,
//! and the supremal cost functional over all such decompositions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::certificate::{all_pass, Certificate};
use crate::constants::lambda_tilde;
use crate::error::{invalid, Result};

/// Relative tolerance for the additivity checks `X = X0 + X1`.
pub const SUM_TOL: f64 = 1e-9;

/// Result of checking the shape of a tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeValidation {
    pub valid: bool,
    pub violations: Vec<String>,
}

/// Checks labels, prefix-closure and the sibling rule. The root is the empty
/// string and is implicit.
pub fn validate_tree<'a>(nodes: impl IntoIterator<Item = &'a str>) -> TreeValidation {
    let set: BTreeSet<&str> = nodes.into_iter().collect();
    let mut violations = Vec::new();
    for &a in &set {
        if a.is_empty() || !a.bytes().all(|b| b == b'0' || b == b'1') {
            violations.push(format!("'{a}' is not a nonempty binary string"));
            continue;
        }
        for end in 1..a.len() {
            if !set.contains(&a[..end]) {
                violations.push(format!("'{a}' is present but its prefix '{}' is not", &a[..end]));
            }
        }
        let sibling = format!("{}{}", &a[..a.len() - 1], if a.ends_with('0') { '1' } else { '0' });
        if !set.contains(sibling.as_str()) {
            violations.push(format!("'{a}' is present but its sibling '{sibling}' is not"));
        }
    }
    TreeValidation { valid: violations.is_empty(), violations }
}

/// A tree with a value at every node, rooted at `root_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleTree {
    pub root_value: f64,
    pub values: BTreeMap<String, f64>,
}

impl AdmissibleTree {
    pub fn leaf(root_value: f64) -> Self {
        AdmissibleTree { root_value, values: BTreeMap::new() }
    }

    pub fn value(&self, node: &str) -> Option<f64> {
        if node.is_empty() {
            Some(self.root_value)
        } else {
            self.values.get(node).copied()
        }
    }

    pub fn has_children(&self, node: &str) -> bool {
        self.values.contains_key(&format!("{node}0"))
    }

    /// Nodes without children (the root excluded).
    pub fn boundary(&self) -> Vec<&str> {
        self.values.keys().map(String::as_str).filter(|a| !self.has_children(a)).collect()
    }

    /// Nodes with children, the root excluded.
    pub fn interior(&self) -> Vec<&str> {
        self.values.keys().map(String::as_str).filter(|a| self.has_children(a)).collect()
    }
}

/// A tree checked rule by rule against a balance parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionWitness {
    pub tree: AdmissibleTree,
    pub lambda: f64,
    pub checks: Vec<Certificate>,
    pub pass: bool,
}

/// Checks `X_a = X_a0 + X_a1`, `X_ai >= lambda X_a` and `X_a >= 1` at every
/// node, including the root. The balance rule is non-strict everywhere.
pub fn validate_decomposition(x: f64, values: &BTreeMap<String, f64>, lambda: f64) -> Result<DecompositionWitness> {
    let shape = validate_tree(values.keys().map(String::as_str));
    if !shape.valid {
        return invalid(format!("tree is not admissible: {}", shape.violations.join("; ")));
    }
    if !(lambda > 0.0 && lambda <= 0.5) {
        return invalid(format!("lambda must lie in (0, 1/2], got {lambda}"));
    }
    let tree = AdmissibleTree { root_value: x, values: values.clone() };
    let mut checks = Vec::new();
    let mut nodes: Vec<&str> = vec![""];
    nodes.extend(values.keys().map(String::as_str));
    for node in nodes {
        let label = if node.is_empty() { "root" } else { node };
        let v = tree.value(node).unwrap();
        checks.push(Certificate::le_tol(format!("tree[{label}] value >= 1"), 1.0, v, 0.0));
        if !tree.has_children(node) {
            continue;
        }
        let (x0, x1) = (tree.value(&format!("{node}0")).unwrap(), tree.value(&format!("{node}1")).unwrap());
        checks.push(Certificate::eq_tol(format!("tree[{label}] additive"), x0 + x1, v, SUM_TOL));
        for (side, xi) in [("0", x0), ("1", x1)] {
            checks.push(
                Certificate::le_tol(format!("tree[{label}{side}] balance"), lambda * v, xi, 0.0).with("lambda", lambda),
            );
        }
    }
    let pass = all_pass(&checks);
    Ok(DecompositionWitness { tree, lambda, checks, pass })
}

fn exponent(n: usize) -> f64 {
    (n as f64 - 1.0) / n as f64
}

/// `X^a + sum over every node of X_a^a`, `a = (n-1)/n`.
pub fn decomposition_cost(witness: &DecompositionWitness, n: usize) -> f64 {
    let a = exponent(n);
    witness.tree.root_value.powf(a) + witness.tree.values.values().map(|v| v.powf(a)).sum::<f64>()
}

/// `X^a + sum over interior (non-root) nodes of X_a^a`.
pub fn interior_cost(tree: &AdmissibleTree, n: usize) -> f64 {
    let a = exponent(n);
    tree.root_value.powf(a) + tree.interior().iter().map(|node| tree.values[*node].powf(a)).sum::<f64>()
}

/// Smallest integer `i` with `i >= lambda * j`, exactly.
fn ceil_mul(lambda: f64, j: u64) -> u64 {
    let bits = lambda.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1 << 52), raw_exp - 1075) };
    let prod = mant as u128 * j as u128;
    if exp >= 0 {
        return (prod << exp) as u64;
    }
    let shift = (-exp) as u32;
    if shift >= 128 {
        return u64::from(prod != 0);
    }
    let q = prod >> shift;
    let rem = prod & ((1u128 << shift) - 1);
    (q + u128::from(rem != 0)) as u64
}

/// Dynamic program for the supremal cost on the grid of multiples of
/// `1/q`. Every grid value is the cost of an actual decomposition, so the
/// table is a lower bound for the true supremum.
#[derive(Debug, Clone)]
pub struct SupremalCostTable {
    lambda: f64,
    n: usize,
    q: u64,
    a: f64,
    /// `best[j]`: largest cost of a subtree rooted at value `j/q` (for
    /// `j >= q`), own term included.
    best: Vec<f64>,
}

impl SupremalCostTable {
    pub fn new(lambda: f64, n: usize, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return invalid(format!("resolution must be positive, got {resolution}"));
        }
        if !(lambda > 0.0 && lambda <= 0.5) {
            return invalid(format!("lambda must lie in (0, 1/2], got {lambda}"));
        }
        if n < 2 {
            return invalid(format!("dimension must be at least 2, got {n}"));
        }
        let q = ((1.0 / resolution) - 1e-9).ceil().max(1.0) as u64;
        Ok(SupremalCostTable { lambda, n, q, a: exponent(n), best: Vec::new() })
    }

    pub fn units_per_one(&self) -> u64 {
        self.q
    }

    fn extend_to(&mut self, m: u64) {
        let q = self.q;
        while (self.best.len() as u64) <= m {
            let j = self.best.len() as u64;
            let own = (j as f64 / q as f64).powf(self.a);
            let lo = q.max(ceil_mul(self.lambda, j));
            let mut split = 0.0f64;
            let mut i = lo;
            while 2 * i <= j {
                split = split.max(self.best[i as usize] + self.best[(j - i) as usize]);
                i += 1;
            }
            self.best.push(if j < q { 0.0 } else { own + split });
        }
    }

    /// Largest sum `S(X0) + S(X1)` over admissible grid splits of `m` units.
    fn best_split(&mut self, m: u64) -> f64 {
        self.extend_to(m);
        let lo = self.q.max(ceil_mul(self.lambda, m));
        let mut split = 0.0f64;
        let mut i = lo;
        while 2 * i <= m {
            split = split.max(self.best[i as usize] + self.best[(m - i) as usize]);
            i += 1;
        }
        split
    }

    /// Lower approximation of the supremal cost at `x >= 1`. The splits of
    /// `floor(x q)/q` scale up to admissible splits of `x` with no smaller
    /// cost, so the value stays a lower bound off the grid too.
    pub fn value(&mut self, x: f64) -> Result<f64> {
        if !(x >= 1.0) || !x.is_finite() {
            return invalid(format!("value must be at least 1, got {x}"));
        }
        let q = self.q as f64;
        let mut m = (x * q).floor() as u64;
        // undo a rounding-down of x q just below an integer
        if (m + 1) as f64 / q <= x {
            m += 1;
        }
        Ok(x.powf(self.a) + self.best_split(m))
    }

    /// `N(X) + lambda_tilde X^a <= (1 + lambda_tilde) X`.
    pub fn linear_growth(&mut self, x: f64) -> Result<Certificate> {
        let lt = lambda_tilde(self.lambda, self.n)?;
        let cost = self.value(x)?;
        let lhs = cost + lt * x.powf(self.a);
        let rhs = (1.0 + lt) * x;
        Ok(Certificate::le(format!("linear growth at X={x}"), lhs, rhs)
            .with("X", x)
            .with("cost", cost)
            .with("lambda", self.lambda)
            .with("lambda_tilde", lt)
            .with("n", self.n as f64)
            .with("resolution", 1.0 / self.q as f64))
    }
}

pub const DEFAULT_RESOLUTION: f64 = 0.01;

pub fn supremal_cost(x: f64, lambda: f64, n: usize, resolution: f64) -> Result<f64> {
    SupremalCostTable::new(lambda, n, resolution)?.value(x)
}

pub fn check_linear_growth(x: f64, lambda: f64, n: usize) -> Result<Certificate> {
    SupremalCostTable::new(lambda, n, DEFAULT_RESOLUTION)?.linear_growth(x)
}

/// Linear-growth certificates on the grid `1, 1 + step, ..., <= xmax`.
pub fn linear_growth_sweep(lambda: f64, n: usize, xmax: f64, step: f64, resolution: f64) -> Result<Vec<Certificate>> {
    if !(step > 0.0) || !(xmax >= 1.0) {
        return invalid("sweep needs xmax >= 1 and a positive step");
    }
    let mut table = SupremalCostTable::new(lambda, n, resolution)?;
    let count = ((xmax - 1.0) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| table.linear_growth(1.0 + i as f64 * step)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_ceiling() {
        assert_eq!(ceil_mul(0.5, 200), 100);
        assert_eq!(ceil_mul(0.5, 201), 101);
        assert_eq!(ceil_mul(0.25, 4), 1);
        // 0.1 is slightly above 1/10 in binary
        assert_eq!(ceil_mul(0.1, 10), 2);
        assert_eq!(ceil_mul(1.0 / 2500.0, 2500), 2);
        assert_eq!(ceil_mul(1e-320, 5), 1);
    }

    #[test]
    fn interior_and_boundary() {
        let values: BTreeMap<String, f64> =
            [("0", 1.5), ("1", 2.5), ("10", 1.0), ("11", 1.5)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let tree = AdmissibleTree { root_value: 4.0, values };
        assert_eq!(tree.interior(), vec!["1"]);
        assert_eq!(tree.boundary(), vec!["0", "10", "11"]);
    }
}
