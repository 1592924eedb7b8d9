//! Exact discrete optimal transport.
//!
//! Two engines back the solvers:
//!
//! * [`assignment`]: shortest augmenting path for (rectangular) linear
//!   assignment. Used whenever the optimum is a scaled (partial)
//!   permutation: balanced transport with equal, uniform marginals and
//!   partial transport at the default mass `min(N,M)/max(N,M)`.
//! * [`simplex`]: transportation simplex on the bipartite spanning tree for
//!   arbitrary marginals, and for partial transport at any other mass via a
//!   dummy row/column.
//!
//! Plus the greedy baseline ([`naive_match`]) and the projection of soft
//! plans onto matchings ([`binarize`]).

pub mod assignment;
pub mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::DistanceSpec;

/// Tolerance for marginal (in)equalities.
pub const MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("marginals carry different mass ({left} vs {right})")]
    InfeasibleMarginals { left: f64, right: f64 },
    #[error("partial mass {mass} outside (0, {max}]")]
    InfeasibleMass { mass: f64, max: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cost matrix entry ({row}, {col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },
    #[error("cost matrix must have at least one row and one column")]
    Empty,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

/// Dense row-major `N × M` cost matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    provenance: Option<DistanceSpec>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, TransportError> {
        if rows == 0 || cols == 0 {
            return Err(TransportError::Empty);
        }
        if values.len() != rows * cols {
            return Err(TransportError::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(TransportError::NonFiniteCost {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self {
            rows,
            cols,
            values,
            provenance: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TransportError> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(TransportError::ShapeMismatch("ragged rows".into()));
        }
        Self::new(n, m, rows.concat())
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, TransportError> {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self::new(rows, cols, values)
    }

    pub fn with_provenance(mut self, spec: DistanceSpec) -> Self {
        self.provenance = Some(spec);
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Option<&DistanceSpec> {
        self.provenance.as_ref()
    }

    pub fn transpose(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                values.push(self.get(i, j));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            values,
            provenance: self.provenance,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Point masses of the two empirical measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalWeights {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl MarginalWeights {
    pub fn new(left: Vec<f64>, right: Vec<f64>) -> Result<Self, TransportError> {
        for (name, w) in [("left", &left), ("right", &right)] {
            if w.is_empty() {
                return Err(TransportError::InvalidWeights(format!("{name} is empty")));
            }
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(TransportError::InvalidWeights(format!(
                    "{name} weights must be finite and positive"
                )));
            }
        }
        Ok(Self { left, right })
    }

    /// `1/N` on the left and `1/M` on the right.
    pub fn uniform(n: usize, m: usize) -> Self {
        Self {
            left: vec![1.0 / n as f64; n],
            right: vec![1.0 / m as f64; m],
        }
    }

    fn is_uniform_square(&self) -> bool {
        self.left.len() == self.right.len()
            && self.left.iter().all(|&w| w == self.left[0])
            && self.right.iter().all(|&w| w == self.left[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub row: usize,
    pub col: usize,
    pub mass: f64,
}

/// Sparse coupling. Entries are sorted by `(row, col)` and carry positive
/// mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    entries: Vec<PlanEntry>,
    total_mass: f64,
    objective: f64,
}

impl TransportPlan {
    /// Builds a plan from raw entries; zero-mass entries are dropped and
    /// duplicates rejected. `objective` is recomputed from `cost` when given.
    pub fn from_entries(
        rows: usize,
        cols: usize,
        mut entries: Vec<PlanEntry>,
        cost: Option<&CostMatrix>,
    ) -> Result<Self, TransportError> {
        if let Some(c) = cost {
            if c.rows() != rows || c.cols() != cols {
                return Err(TransportError::ShapeMismatch(format!(
                    "plan is {rows}x{cols}, cost is {}x{}",
                    c.rows(),
                    c.cols()
                )));
            }
        }
        entries.retain(|e| e.mass > 0.0);
        entries.sort_by_key(|e| (e.row, e.col));
        for e in &entries {
            if e.row >= rows || e.col >= cols || !e.mass.is_finite() {
                return Err(TransportError::ShapeMismatch(format!(
                    "entry ({}, {}) outside {rows}x{cols} or non-finite",
                    e.row, e.col
                )));
            }
        }
        if entries
            .windows(2)
            .any(|w| (w[0].row, w[0].col) == (w[1].row, w[1].col))
        {
            return Err(TransportError::ShapeMismatch("duplicate entry".into()));
        }
        let total_mass = entries.iter().map(|e| e.mass).sum();
        let objective = cost.map_or(0.0, |c| entries.iter().map(|e| e.mass * c.get(e.row, e.col)).sum());
        Ok(Self {
            rows,
            cols,
            entries,
            total_mass,
            objective,
        })
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
            total_mass: 0.0,
            objective: 0.0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `⟨C, Π⟩` against the matrix the plan was solved for.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(i, j), |e| (e.row, e.col))
            .map_or(0.0, |k| self.entries[k].mass)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for e in &self.entries {
            s[e.row] += e.mass;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for e in &self.entries {
            s[e.col] += e.mass;
        }
        s
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.rows * self.cols];
        for e in &self.entries {
            d[e.row * self.cols + e.col] = e.mass;
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchSource {
    Naive,
    Ot,
    Pot,
    Hot,
    HotPot,
}

/// Partial injection between row and column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
    source: MatchSource,
}

impl Matching {
    /// Sorts the pairs; rejects pairs that reuse a row or a column.
    pub fn new(mut pairs: Vec<(usize, usize)>, source: MatchSource) -> Result<Self, TransportError> {
        pairs.sort_unstable();
        let mut cols: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        cols.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) || cols.windows(2).any(|w| w[0] == w[1]) {
            return Err(TransportError::ShapeMismatch(
                "matching is not injective".into(),
            ));
        }
        Ok(Self { pairs, source })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn source(&self) -> MatchSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Column matched to `row`, if any.
    pub fn partner(&self, row: usize) -> Option<usize> {
        self.pairs
            .binary_search_by_key(&row, |p| p.0)
            .ok()
            .map(|k| self.pairs[k].1)
    }
}

/// Balanced transport `min ⟨C,Π⟩` subject to `Π1 = a`, `Πᵀ1 = b`, `Π ≥ 0`.
///
/// Equal-size uniform marginals are solved as an assignment problem; all
/// other marginals go through the transportation simplex.
pub fn solve_ot(c: &CostMatrix, weights: &MarginalWeights) -> Result<TransportPlan, TransportError> {
    check_weights(c, weights)?;
    if weights.is_uniform_square() {
        let cols = assignment::solve(c);
        let mass = weights.left[0];
        return assignment_plan(c, &cols, mass, false);
    }
    simplex::solve(c, &weights.left, &weights.right)
}

/// [`solve_ot`] forced through the transportation simplex.
pub fn solve_ot_simplex(
    c: &CostMatrix,
    weights: &MarginalWeights,
) -> Result<TransportPlan, TransportError> {
    check_weights(c, weights)?;
    simplex::solve(c, &weights.left, &weights.right)
}

fn check_weights(c: &CostMatrix, w: &MarginalWeights) -> Result<(), TransportError> {
    if w.left.len() != c.rows() || w.right.len() != c.cols() {
        return Err(TransportError::ShapeMismatch(format!(
            "weights {}x{} for a {}x{} cost matrix",
            w.left.len(),
            w.right.len(),
            c.rows(),
            c.cols()
        )));
    }
    let (l, r): (f64, f64) = (w.left.iter().sum(), w.right.iter().sum());
    if (l - r).abs() > MARGINAL_TOL {
        return Err(TransportError::InfeasibleMarginals { left: l, right: r });
    }
    Ok(())
}

/// Default partial mass `min(N,M) / max(N,M)`.
pub fn default_mass(n: usize, m: usize) -> f64 {
    n.min(m) as f64 / n.max(m) as f64
}

/// Partial transport of total `mass` with `Π1 ≤ 1/N`, `Πᵀ1 ≤ 1/M`.
///
/// At the default mass the optimum is a partial injection covering the
/// smaller side with `1/max(N,M)` per pair, found by rectangular
/// assignment. Any other mass in `(0, 1]` is solved exactly by extending the
/// problem with a dummy row and column.
pub fn solve_pot(c: &CostMatrix, mass: f64) -> Result<TransportPlan, TransportError> {
    let (n, m) = (c.rows(), c.cols());
    if !(mass.is_finite() && mass > 0.0 && mass <= 1.0 + 1e-12) {
        return Err(TransportError::InfeasibleMass { mass, max: 1.0 });
    }
    if (mass - default_mass(n, m)).abs() <= 1e-12 {
        return solve_pot_default(c);
    }
    solve_pot_dummy(c, mass.min(1.0))
}

/// [`solve_pot`] at the default mass.
pub fn solve_pot_default(c: &CostMatrix) -> Result<TransportPlan, TransportError> {
    let (n, m) = (c.rows(), c.cols());
    let mass = 1.0 / n.max(m) as f64;
    if n <= m {
        let cols = assignment::solve(c);
        assignment_plan(c, &cols, mass, false)
    } else {
        let rows = assignment::solve(&c.transpose());
        assignment_plan(c, &rows, mass, true)
    }
}

/// Partial transport through the dummy-node reduction, for any mass in
/// `(0, 1]`.
pub fn solve_pot_dummy(c: &CostMatrix, mass: f64) -> Result<TransportPlan, TransportError> {
    let (n, m) = (c.rows(), c.cols());
    if !(mass.is_finite() && mass > 0.0 && mass <= 1.0 + 1e-12) {
        return Err(TransportError::InfeasibleMass { mass, max: 1.0 });
    }
    let mass = mass.min(1.0);
    let slack = 1.0 - mass;
    if slack <= 0.0 {
        return simplex::solve(c, &vec![1.0 / n as f64; n], &vec![1.0 / m as f64; m]);
    }
    // The corner must be expensive enough that routing mass dummy-to-dummy
    // never beats shrinking a real transfer.
    let corner = 2.0 * c.max_abs() + 1.0;
    let ext = CostMatrix::from_fn(n + 1, m + 1, |i, j| match (i < n, j < m) {
        (true, true) => c.get(i, j),
        (false, false) => corner,
        _ => 0.0,
    })?;
    let mut left = vec![1.0 / n as f64; n];
    left.push(slack);
    let mut right = vec![1.0 / m as f64; m];
    right.push(slack);
    let full = simplex::solve(&ext, &left, &right)?;
    let entries = full
        .entries()
        .iter()
        .filter(|e| e.row < n && e.col < m)
        .copied()
        .collect();
    TransportPlan::from_entries(n, m, entries, Some(c))
}

/// `assigned[k]` is the partner of index `k` on the smaller side.
fn assignment_plan(
    c: &CostMatrix,
    assigned: &[usize],
    mass: f64,
    transposed: bool,
) -> Result<TransportPlan, TransportError> {
    let entries = assigned
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let (row, col) = if transposed { (p, k) } else { (k, p) };
            PlanEntry { row, col, mass }
        })
        .collect();
    TransportPlan::from_entries(c.rows(), c.cols(), entries, Some(c))
}

/// Greedy baseline: repeatedly take the smallest remaining entry (first in
/// row-major order on ties) and delete its row and column.
pub fn naive_match(c: &CostMatrix) -> Matching {
    Matching::new(naive_trace(c), MatchSource::Naive).expect("greedy pairs are injective")
}

/// Greedy pairs in the order they were picked.
pub fn naive_trace(c: &CostMatrix) -> Vec<(usize, usize)> {
    let (n, m) = (c.rows(), c.cols());
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; m];
    let mut out = Vec::new();
    for _ in 0..n.min(m) {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in (0..n).filter(|&i| !row_used[i]) {
            for j in (0..m).filter(|&j| !col_used[j]) {
                let v = c.get(i, j);
                if best.map_or(true, |(b, _, _)| v < b) {
                    best = Some((v, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("a free row and column remain");
        row_used[i] = true;
        col_used[j] = true;
        out.push((i, j));
    }
    out
}

/// Projects a plan onto a matching: each row keeps its heaviest column if
/// that column holds at least half of the row's mass; column conflicts are
/// resolved in favour of the heavier entry.
pub fn binarize(plan: &TransportPlan, source: MatchSource) -> Matching {
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    let entries = plan.entries();
    let mut k = 0;
    while k < entries.len() {
        let row = entries[k].row;
        let mut row_mass = 0.0;
        let mut best = entries[k];
        while k < entries.len() && entries[k].row == row {
            let e = entries[k];
            row_mass += e.mass;
            // entries are sorted by column, so strict `>` keeps the smallest
            if e.mass > best.mass {
                best = e;
            }
            k += 1;
        }
        if row_mass > 0.0 && best.mass >= 0.5 * row_mass {
            candidates.push((best.row, best.col, best.mass));
        }
    }
    // per column keep the heaviest, then the smallest row
    candidates.sort_by(|a, b| a.1.cmp(&b.1).then(b.2.total_cmp(&a.2)).then(a.0.cmp(&b.0)));
    candidates.dedup_by_key(|c| c.1);
    let pairs = candidates.into_iter().map(|(i, j, _)| (i, j)).collect();
    Matching::new(pairs, source).expect("one pair per row and per column")
}

/// `Σ mass · C[i][j]`.
pub fn plan_objective(c: &CostMatrix, plan: &TransportPlan) -> Result<f64, TransportError> {
    if c.rows() != plan.rows() || c.cols() != plan.cols() {
        return Err(TransportError::ShapeMismatch(format!(
            "plan is {}x{}, cost is {}x{}",
            plan.rows(),
            plan.cols(),
            c.rows(),
            c.cols()
        )));
    }
    Ok(plan
        .entries()
        .iter()
        .map(|e| e.mass * c.get(e.row, e.col))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn zero_diag(n: usize) -> CostMatrix {
        CostMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }).unwrap()
    }

    #[test]
    fn cost_matrix_rejects_nan_and_empty() {
        assert_eq!(
            CostMatrix::new(1, 2, vec![0.0, f64::NAN]),
            Err(TransportError::NonFiniteCost { row: 0, col: 1 })
        );
        assert_eq!(CostMatrix::new(0, 2, vec![]), Err(TransportError::Empty));
        assert!(CostMatrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn ot_identity() {
        let c = zero_diag(3);
        let plan = solve_ot(&c, &MarginalWeights::uniform(3, 3)).unwrap();
        assert_eq!(plan.objective(), 0.0);
        let m = binarize(&plan, MatchSource::Ot);
        assert_eq!(m.pairs(), &[(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn ot_rejects_unbalanced_marginals() {
        let c = zero_diag(2);
        let w = MarginalWeights::new(vec![0.5, 0.5], vec![0.5, 0.6]).unwrap();
        assert!(matches!(
            solve_ot(&c, &w),
            Err(TransportError::InfeasibleMarginals { .. })
        ));
    }

    #[test]
    fn pot_full_mass_matches_ot() {
        let c = CostMatrix::from_rows(&[
            vec![3.0, 1.0, 4.0],
            vec![1.0, 5.0, 9.0],
            vec![2.0, 6.0, 5.0],
        ])
        .unwrap();
        let ot = solve_ot(&c, &MarginalWeights::uniform(3, 3)).unwrap();
        let pot = solve_pot(&c, 1.0).unwrap();
        assert_abs_diff_eq!(ot.objective(), pot.objective(), epsilon = 1e-12);
    }

    #[test]
    fn pot_single_row() {
        let c = CostMatrix::from_rows(&[vec![3.0, 0.5, 4.0, 0.7]]).unwrap();
        let plan = solve_pot(&c, default_mass(1, 4)).unwrap();
        assert_eq!(
            plan.entries(),
            &[PlanEntry {
                row: 0,
                col: 1,
                mass: 0.25
            }]
        );
    }

    #[test]
    fn pot_mass_bounds() {
        let c = zero_diag(3);
        assert!(matches!(
            solve_pot(&c, 0.0),
            Err(TransportError::InfeasibleMass { .. })
        ));
        assert!(matches!(
            solve_pot(&c, 1.5),
            Err(TransportError::InfeasibleMass { .. })
        ));
    }

    #[test]
    fn pot_default_and_dummy_agree() {
        let c = CostMatrix::from_rows(&[
            vec![0.3, 0.9, 0.1, 0.4],
            vec![0.8, 0.2, 0.6, 0.5],
        ])
        .unwrap();
        let a = solve_pot_default(&c).unwrap();
        let b = solve_pot_dummy(&c, 0.5).unwrap();
        assert_abs_diff_eq!(a.objective(), b.objective(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.total_mass(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pot_intermediate_mass() {
        // 2x2 with mass 0.5: take the two cheapest compatible quarter-masses
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 10.0]]).unwrap();
        let plan = solve_pot(&c, 0.5).unwrap();
        assert_abs_diff_eq!(plan.total_mass(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(plan.objective(), 0.0, epsilon = 1e-12);
        // (0,0) can keep at most 1/4 once 3/4 must move under 1/2 caps:
        // a + (3/4 - a)/2 <= 1/2 gives a <= 1/4, the rest on the unit entries
        let plan = solve_pot(&c, 0.75).unwrap();
        assert_abs_diff_eq!(plan.objective(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn naive_identity_and_ties() {
        assert_eq!(naive_match(&zero_diag(3)).pairs(), &[(0, 0), (1, 1), (2, 2)]);
        let c = CostMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(naive_trace(&c), vec![(0, 0), (1, 1)]);
        let c = CostMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(naive_trace(&c), vec![(1, 0), (0, 1)]);
    }

    #[test]
    fn naive_rectangular() {
        let c = CostMatrix::from_rows(&[vec![5.0, 1.0, 3.0], vec![2.0, 4.0, 0.5]]).unwrap();
        let m = naive_match(&c);
        assert_eq!(m.pairs(), &[(0, 1), (1, 2)]);
        assert_eq!(m.source(), MatchSource::Naive);
    }

    fn plan(rows: usize, cols: usize, e: &[(usize, usize, f64)]) -> TransportPlan {
        let entries = e
            .iter()
            .map(|&(row, col, mass)| PlanEntry { row, col, mass })
            .collect();
        TransportPlan::from_entries(rows, cols, entries, None).unwrap()
    }

    #[test]
    fn binarize_majority_and_half() {
        let p = plan(1, 2, &[(0, 0, 0.4), (0, 1, 0.6)]);
        assert_eq!(binarize(&p, MatchSource::Ot).pairs(), &[(0, 1)]);
        let p = plan(1, 2, &[(0, 0, 0.5), (0, 1, 0.5)]);
        assert_eq!(binarize(&p, MatchSource::Ot).pairs(), &[(0, 0)]);
        let p = plan(1, 3, &[(0, 0, 0.3), (0, 1, 0.3), (0, 2, 0.4)]);
        assert!(binarize(&p, MatchSource::Ot).is_empty());
    }

    #[test]
    fn binarize_column_conflict() {
        let p = plan(2, 2, &[(0, 0, 0.3), (1, 0, 0.5)]);
        assert_eq!(binarize(&p, MatchSource::Ot).pairs(), &[(1, 0)]);
        let p = plan(2, 2, &[(0, 1, 0.5), (1, 1, 0.5)]);
        assert_eq!(binarize(&p, MatchSource::Ot).pairs(), &[(0, 1)]);
    }

    #[test]
    fn binarize_permutation_support() {
        let p = plan(3, 4, &[(0, 2, 0.25), (1, 0, 0.25), (2, 3, 0.25)]);
        assert_eq!(
            binarize(&p, MatchSource::Pot).pairs(),
            &[(0, 2), (1, 0), (2, 3)]
        );
    }

    #[test]
    fn objective_checks() {
        let c = zero_diag(3);
        assert_eq!(plan_objective(&c, &TransportPlan::empty(3, 3)).unwrap(), 0.0);
        let p = plan(3, 3, &[(0, 0, 1.0 / 3.0), (1, 1, 1.0 / 3.0), (2, 2, 1.0 / 3.0)]);
        assert_eq!(plan_objective(&c, &p).unwrap(), 0.0);
        assert!(plan_objective(&zero_diag(2), &p).is_err());
    }

    #[test]
    fn plan_rejects_duplicates() {
        let entries = vec![
            PlanEntry { row: 0, col: 0, mass: 0.1 },
            PlanEntry { row: 0, col: 0, mass: 0.2 },
        ];
        assert!(TransportPlan::from_entries(1, 1, entries, None).is_err());
    }

    #[test]
    fn matching_rejects_non_injective() {
        assert!(Matching::new(vec![(0, 1), (1, 1)], MatchSource::Ot).is_err());
        assert!(Matching::new(vec![(0, 1), (0, 2)], MatchSource::Ot).is_err());
    }
}
