//! Capacitated b-matchings on the complete graph with a global budget.
//!
//! An allocation assigns a multiplicity `x_ij >= 0` to every unordered pair
//! `i < j` such that each node's incident multiplicities stay within its
//! capacity and the total stays within the budget. The maximum cardinality
//! has the closed form `min{B, floor(sum/2), sum - max}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, ModelError, Result};

/// Largest capacity sum accepted by the exhaustive solvers.
pub const MAX_EXHAUSTIVE_CAPACITY: u64 = 24;
/// Largest node count accepted by the exhaustive solvers.
pub const MAX_EXHAUSTIVE_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CapacityVector {
    caps: Vec<u32>,
    budget: u32,
}

impl CapacityVector {
    pub fn new(caps: Vec<u32>, budget: u32) -> Result<Self> {
        if caps.len() < 2 {
            return Err(ModelError::Usage(format!(
                "capacity vector needs at least two nodes, got {}",
                caps.len()
            )));
        }
        Ok(CapacityVector { caps, budget })
    }

    pub fn caps(&self) -> &[u32] {
        &self.caps
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn n_nodes(&self) -> usize {
        self.caps.len()
    }

    pub fn total(&self) -> u64 {
        self.caps.iter().map(|&c| u64::from(c)).sum()
    }

    fn check_exhaustive(&self) -> Result<()> {
        if self.n_nodes() > MAX_EXHAUSTIVE_NODES || self.total() > MAX_EXHAUSTIVE_CAPACITY {
            return Err(ModelError::TooLarge(format!(
                "{} nodes with capacity sum {} (limits: {} nodes, sum {})",
                self.n_nodes(),
                self.total(),
                MAX_EXHAUSTIVE_NODES,
                MAX_EXHAUSTIVE_CAPACITY
            )));
        }
        Ok(())
    }
}

/// Integer multiplicities on unordered node pairs `(i, j)` with `i < j`.
/// Zero entries are not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationVector {
    alloc: BTreeMap<(usize, usize), u32>,
}

impl AllocationVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.alloc.get(&ordered(i, j)).copied().unwrap_or(0)
    }

    pub fn add(&mut self, i: usize, j: usize, count: u32) {
        assert_ne!(i, j, "self-pairs are not edges");
        if count > 0 {
            *self.alloc.entry(ordered(i, j)).or_insert(0) += count;
        }
    }

    pub fn total(&self) -> u64 {
        self.alloc.values().map(|&x| u64::from(x)).sum()
    }

    /// Nonzero entries in lexicographic pair order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), u32)> + '_ {
        self.alloc.iter().map(|(&k, &v)| (k, v))
    }

    /// Number of allocated units incident to `node`.
    pub fn degree(&self, node: usize) -> u64 {
        self.alloc
            .iter()
            .filter(|((i, j), _)| *i == node || *j == node)
            .map(|(_, &x)| u64::from(x))
            .sum()
    }

    pub fn is_feasible(&self, cv: &CapacityVector) -> bool {
        let n = cv.n_nodes();
        if self.alloc.keys().any(|&(i, j)| i >= j || j >= n) {
            return false;
        }
        if self.total() > u64::from(cv.budget) {
            return false;
        }
        (0..n).all(|v| self.degree(v) <= u64::from(cv.caps[v]))
    }
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// `min{B, floor(sum/2), sum - max}`.
pub fn emax_closed_form(cv: &CapacityVector) -> u64 {
    emax_of(&cv.caps, cv.budget)
}

/// [`emax_closed_form`] on a borrowed capacity slice.
pub fn emax_of(caps: &[u32], budget: u32) -> u64 {
    let (sum, max) = caps.iter().fold((0u64, 0u64), |(s, m), &c| {
        (s + u64::from(c), m.max(u64::from(c)))
    });
    emax_from_sum_max(sum, max, budget)
}

/// The closed form expressed through the capacity sum and maximum only.
pub fn emax_from_sum_max(sum: u64, max: u64, budget: u32) -> u64 {
    u64::from(budget).min(sum / 2).min(sum - max)
}

/// Constructs a maximum-cardinality allocation.
///
/// If the largest node dominates (`sum - max <= floor(sum/2)`) every unit on
/// the other nodes is paired with it. Otherwise units are paired one at a
/// time between the two nodes of largest residual capacity, ties to the
/// lowest index. Both constructions stop after `B` pairs.
pub fn greedy_max_allocation(cv: &CapacityVector) -> AllocationVector {
    let sum = cv.total();
    let mut alloc = AllocationVector::new();
    let budget = u64::from(cv.budget);
    if budget == 0 || sum == 0 {
        return alloc;
    }
    let (star, max) =
        cv.caps.iter().enumerate().fold(
            (0, 0),
            |(bi, bv), (i, &c)| if c > bv { (i, c) } else { (bi, bv) },
        );

    if sum - u64::from(max) <= sum / 2 {
        let mut left = budget;
        for (v, &c) in cv.caps.iter().enumerate() {
            if v == star || c == 0 {
                continue;
            }
            let take = u64::from(c).min(left);
            alloc.add(star, v, take as u32);
            left -= take;
            if left == 0 {
                break;
            }
        }
        return alloc;
    }

    let mut residual = cv.caps.clone();
    let mut placed = 0u64;
    while placed < budget {
        let Some((u, v)) = two_largest(&residual) else {
            break;
        };
        alloc.add(u, v, 1);
        residual[u] -= 1;
        residual[v] -= 1;
        placed += 1;
    }
    alloc
}

/// Two distinct nodes with the largest positive residuals, lowest index
/// first among ties.
fn two_largest(residual: &[u32]) -> Option<(usize, usize)> {
    let mut first: Option<usize> = None;
    let mut second: Option<usize> = None;
    for (i, &r) in residual.iter().enumerate() {
        if r == 0 {
            continue;
        }
        match first {
            None => first = Some(i),
            Some(f) if r > residual[f] => {
                second = first;
                first = Some(i);
            }
            Some(_) => match second {
                None => second = Some(i),
                Some(s) if r > residual[s] => second = Some(i),
                Some(_) => {}
            },
        }
    }
    Some((first?, second?))
}

fn edges(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

/// Exhaustive maximum-cardinality search.
///
/// Enumerates multiplicities edge by edge in lexicographic order, largest
/// multiplicity first, pruning with `used + min(B - used, floor(residual/2))`.
/// The witness is the first optimum met in that order.
pub fn brute_force_max(cv: &CapacityVector) -> Result<(u64, AllocationVector)> {
    cv.check_exhaustive()?;
    let edges = edges(cv.n_nodes());
    let mut search = CardinalitySearch {
        edges: &edges,
        residual: cv.caps.clone(),
        budget_left: cv.budget,
        current: vec![0; edges.len()],
        best: 0,
        best_alloc: vec![0; edges.len()],
    };
    search.run(0, 0);
    let alloc = to_allocation(&edges, &search.best_alloc);
    Ok((search.best, alloc))
}

struct CardinalitySearch<'a> {
    edges: &'a [(usize, usize)],
    residual: Vec<u32>,
    budget_left: u32,
    current: Vec<u32>,
    best: u64,
    best_alloc: Vec<u32>,
}

impl CardinalitySearch<'_> {
    fn run(&mut self, edge: usize, used: u64) {
        if used > self.best {
            self.best = used;
            self.best_alloc.copy_from_slice(&self.current);
        }
        if edge == self.edges.len() || self.budget_left == 0 {
            return;
        }
        let res_sum: u64 = self.residual.iter().map(|&r| u64::from(r)).sum();
        if used + u64::from(self.budget_left).min(res_sum / 2) <= self.best {
            return;
        }
        let (i, j) = self.edges[edge];
        let cap = self.residual[i].min(self.residual[j]).min(self.budget_left);
        for x in (0..=cap).rev() {
            self.residual[i] -= x;
            self.residual[j] -= x;
            self.budget_left -= x;
            self.current[edge] = x;
            self.run(edge + 1, used + u64::from(x));
            self.current[edge] = 0;
            self.residual[i] += x;
            self.residual[j] += x;
            self.budget_left += x;
        }
    }
}

fn to_allocation(edges: &[(usize, usize)], counts: &[u32]) -> AllocationVector {
    let mut alloc = AllocationVector::new();
    for (&(i, j), &x) in edges.iter().zip(counts) {
        alloc.add(i, j, x);
    }
    alloc
}

/// Exact maximum of `sum w_ij x_ij` over feasible integer allocations by
/// branch and bound. Missing weights count as zero.
///
/// The LP relaxation is not used: the feasible polytope is not integral
/// (three unit-capacity nodes admit `x = 1/2` on every edge).
pub fn max_weight_allocation(
    cv: &CapacityVector,
    weights: &BTreeMap<(usize, usize), f64>,
) -> Result<(f64, AllocationVector)> {
    cv.check_exhaustive()?;
    let n = cv.n_nodes();
    let mut weighted: Vec<((usize, usize), f64)> = Vec::new();
    for (&(a, b), &w) in weights {
        let (i, j) = ordered(a, b);
        if i == j || j >= n {
            return Err(ModelError::Usage(format!(
                "weight on invalid pair ({a}, {b})"
            )));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(domain(
                "weight",
                w,
                "weights must be finite and nonnegative",
            ));
        }
        if w > 0.0 {
            weighted.push(((i, j), w));
        }
    }
    // Heaviest edges first tightens the bound early; ties keep pair order.
    weighted.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    // Sorted descending, so weights[e] bounds every weight from edge e on.
    let edges: Vec<(usize, usize)> = weighted.iter().map(|e| e.0).collect();
    let ws: Vec<f64> = weighted.iter().map(|e| e.1).collect();

    let mut search = WeightSearch {
        edges: &edges,
        weights: &ws,
        residual: cv.caps.clone(),
        budget_left: cv.budget,
        current: vec![0; edges.len()],
        best: 0.0,
        best_alloc: vec![0; edges.len()],
    };
    search.run(0, 0.0);
    Ok((search.best, to_allocation(&edges, &search.best_alloc)))
}

struct WeightSearch<'a> {
    edges: &'a [(usize, usize)],
    weights: &'a [f64],
    residual: Vec<u32>,
    budget_left: u32,
    current: Vec<u32>,
    best: f64,
    best_alloc: Vec<u32>,
}

impl WeightSearch<'_> {
    fn run(&mut self, edge: usize, value: f64) {
        if value > self.best {
            self.best = value;
            self.best_alloc.copy_from_slice(&self.current);
        }
        if edge == self.edges.len() || self.budget_left == 0 {
            return;
        }
        let res_sum: u64 = self.residual.iter().map(|&r| u64::from(r)).sum();
        let units = u64::from(self.budget_left).min(res_sum / 2);
        if value + units as f64 * self.weights[edge] <= self.best {
            return;
        }
        let (i, j) = self.edges[edge];
        let w = self.weights[edge];
        let cap = self.residual[i].min(self.residual[j]).min(self.budget_left);
        for x in (0..=cap).rev() {
            self.residual[i] -= x;
            self.residual[j] -= x;
            self.budget_left -= x;
            self.current[edge] = x;
            self.run(edge + 1, value + f64::from(x) * w);
            self.current[edge] = 0;
            self.residual[i] += x;
            self.residual[j] += x;
            self.budget_left += x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cv(caps: &[u32], b: u32) -> CapacityVector {
        CapacityVector::new(caps.to_vec(), b).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(emax_closed_form(&cv(&[3; 6], 8)), 8);
        assert_eq!(emax_closed_form(&cv(&[1, 1, 1], 3)), 1);
        assert_eq!(emax_closed_form(&cv(&[0, 0], 5)), 0);
        assert_eq!(emax_closed_form(&cv(&[10, 1], 8)), 1);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(CapacityVector::new(vec![3], 1).is_err());
    }

    #[test]
    fn greedy_examples() {
        let c = cv(&[5, 1], 10);
        let a = greedy_max_allocation(&c);
        assert_eq!(a.get(0, 1), 1);
        assert_eq!(a.total(), 1);

        let c = cv(&[2, 2, 2], 10);
        let a = greedy_max_allocation(&c);
        assert_eq!(a.total(), 3);
        assert!(a.is_feasible(&c));
        assert_eq!((a.get(0, 1), a.get(0, 2), a.get(1, 2)), (1, 1, 1));

        let c = cv(&[3; 6], 8);
        let a = greedy_max_allocation(&c);
        assert_eq!(a.total(), 8);
        assert!(a.is_feasible(&c));
    }

    #[test]
    fn brute_force_examples() {
        let (v, a) = brute_force_max(&cv(&[1, 1, 1], 3)).unwrap();
        assert_eq!(v, 1);
        assert_eq!(a.total(), 1);

        let (v, a) = brute_force_max(&cv(&[1, 1], 0)).unwrap();
        assert_eq!(v, 0);
        assert_eq!(a, AllocationVector::new());

        let (v, a) = brute_force_max(&cv(&[2, 1, 1], 8)).unwrap();
        assert_eq!(v, 2);
        assert_eq!((a.get(0, 1), a.get(0, 2), a.get(1, 2)), (1, 1, 0));
    }

    #[test]
    fn exhaustive_bounds_enforced() {
        assert!(matches!(
            brute_force_max(&cv(&[5; 5], 8)),
            Err(ModelError::TooLarge(_))
        ));
        assert!(matches!(
            brute_force_max(&cv(&[1; 9], 8)),
            Err(ModelError::TooLarge(_))
        ));
        assert!(max_weight_allocation(&cv(&[13, 12], 8), &BTreeMap::new()).is_err());
    }

    #[test]
    fn max_weight_examples() {
        let w = BTreeMap::from([((0, 1), 5.0), ((0, 2), 1.0), ((1, 2), 1.0)]);
        let (v, a) = max_weight_allocation(&cv(&[1, 1, 1], 3), &w).unwrap();
        assert_eq!(v, 5.0);
        assert_eq!(a.get(0, 1), 1);
        assert_eq!(a.total(), 1);

        let (v, a) = max_weight_allocation(&cv(&[2, 2, 2], 3), &BTreeMap::new()).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(a.total(), 0);

        let unit: BTreeMap<_, _> = edges(6).into_iter().map(|e| (e, 1.0)).collect();
        let (v, a) = max_weight_allocation(&cv(&[3; 6], 8), &unit).unwrap();
        assert_eq!(v, 8.0);
        assert!(a.is_feasible(&cv(&[3; 6], 8)));
    }

    #[test]
    fn max_weight_rejects_bad_weights() {
        let c = cv(&[1, 1, 1], 3);
        assert!(max_weight_allocation(&c, &BTreeMap::from([((0, 1), -1.0)])).is_err());
        assert!(max_weight_allocation(&c, &BTreeMap::from([((0, 5), 1.0)])).is_err());
        assert!(max_weight_allocation(&c, &BTreeMap::from([((1, 1), 1.0)])).is_err());
    }

    /// x = 1/2 on each triangle edge satisfies both constraints with total
    /// 1.5, but the integer optimum is 1.
    #[test]
    fn fractional_triangle_is_not_reported() {
        let c = cv(&[1, 1, 1], 3);
        // edges (0,1), (0,2), (1,2); each node touches two of them
        let half = [0.5f64; 3];
        let degrees = [half[0] + half[1], half[0] + half[2], half[1] + half[2]];
        assert!(degrees.iter().all(|&d| d <= 1.0));
        assert!(half.iter().sum::<f64>() <= 3.0);
        assert_eq!(half.iter().sum::<f64>(), 1.5);

        let unit: BTreeMap<_, _> = edges(3).into_iter().map(|e| (e, 1.0)).collect();
        let (v, _) = max_weight_allocation(&c, &unit).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(brute_force_max(&c).unwrap().0, 1);
        assert_eq!(emax_closed_form(&c), 1);
    }

    #[test]
    fn closed_form_matches_enumeration_on_small_instances() {
        for n in 2..=4usize {
            let mut caps = vec![0u32; n];
            loop {
                for b in 0..=8 {
                    let c = cv(&caps, b);
                    let (v, w) = brute_force_max(&c).unwrap();
                    assert_eq!(v, emax_closed_form(&c), "{caps:?} B={b}");
                    assert!(w.is_feasible(&c));
                    assert_eq!(w.total(), v);
                }
                let mut i = 0;
                while i < n && caps[i] == 3 {
                    caps[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                caps[i] += 1;
            }
        }
    }

    proptest! {
        #[test]
        fn greedy_is_feasible_and_optimal(caps in prop::collection::vec(0u32..40, 2..12), b in 0u32..200) {
            let c = cv(&caps, b);
            let a = greedy_max_allocation(&c);
            prop_assert!(a.is_feasible(&c));
            prop_assert_eq!(a.total(), emax_closed_form(&c));
        }

        #[test]
        fn closed_form_monotone(caps in prop::collection::vec(0u32..10, 2..8), b in 0u32..30, at in 0usize..8) {
            let c = cv(&caps, b);
            let base = emax_closed_form(&c);
            let mut bumped = caps.clone();
            let idx = at % bumped.len();
            bumped[idx] += 1;
            prop_assert!(emax_closed_form(&cv(&bumped, b)) >= base);
            prop_assert!(emax_closed_form(&cv(&caps, b + 1)) >= base);
        }
    }
}
