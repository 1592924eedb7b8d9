//! Transportation simplex (network simplex on the complete bipartite graph).
//!
//! The basis is a spanning tree of `N + M - 1` arcs, possibly carrying zero
//! flow. Each pivot recomputes the node potentials from the tree, prices all
//! non-basic arcs, and pushes flow around the cycle closed by the entering
//! arc. Pricing is Dantzig's most-negative rule; after a run of degenerate
//! pivots it falls back to Bland's smallest-index rule, which cannot cycle,
//! until the objective moves again. Leaving-arc ties always go to the
//! smallest `(row, col)`.

use std::collections::VecDeque;

use super::{CostMatrix, PlanEntry, TransportError, TransportPlan, MARGINAL_TOL};

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 32;

/// Flows within this distance of the blocking amount leave together.
const FLOW_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy)]
struct Arc {
    row: usize,
    col: usize,
    flow: f64,
}

/// Exact balanced transport for arbitrary positive marginals.
pub fn solve(c: &CostMatrix, supply: &[f64], demand: &[f64]) -> Result<TransportPlan, TransportError> {
    let (n, m) = (c.rows(), c.cols());
    if supply.len() != n || demand.len() != m {
        return Err(TransportError::ShapeMismatch(format!(
            "marginals {}x{} for a {n}x{m} cost matrix",
            supply.len(),
            demand.len()
        )));
    }
    let (s, d): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (s - d).abs() > MARGINAL_TOL {
        return Err(TransportError::InfeasibleMarginals { left: s, right: d });
    }

    let mut basis = northwest_corner(supply, demand);
    let mut in_basis = vec![false; n * m];
    for a in &basis {
        in_basis[a.row * m + a.col] = true;
    }

    let rc_eps = 1e-12 * c.max_abs().max(1.0);
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    let mut degenerate_run = 0usize;
    let max_pivots = 100_000 + 50 * n * m;

    for _ in 0..max_pivots {
        for list in adjacency.iter_mut() {
            list.clear();
        }
        for (k, a) in basis.iter().enumerate() {
            adjacency[a.row].push(k);
            adjacency[n + a.col].push(k);
        }
        potentials(c, &basis, &adjacency, &mut u, &mut v);

        let bland = degenerate_run >= DEGENERATE_RUN;
        let Some((ei, ej)) = price(c, &in_basis, &u, &v, rc_eps, bland) else {
            break;
        };

        let path = tree_path(&basis, &adjacency, n, ei, n + ej);
        // Arcs at odd positions along the path from the entering column back
        // to the entering row lose flow.
        let mut theta = f64::INFINITY;
        for &k in path.iter().step_by(2) {
            theta = theta.min(basis[k].flow);
        }
        let mut leaving = usize::MAX;
        for &k in path.iter().step_by(2) {
            if basis[k].flow <= theta + FLOW_EPS {
                let better = leaving == usize::MAX
                    || (basis[k].row, basis[k].col) < (basis[leaving].row, basis[leaving].col);
                if better {
                    leaving = k;
                }
            }
        }

        for (pos, &k) in path.iter().enumerate() {
            let a = &mut basis[k];
            if pos % 2 == 0 {
                a.flow = if a.flow <= theta + FLOW_EPS { 0.0 } else { a.flow - theta };
            } else {
                a.flow += theta;
            }
        }

        let old = basis[leaving];
        in_basis[old.row * m + old.col] = false;
        in_basis[ei * m + ej] = true;
        basis[leaving] = Arc {
            row: ei,
            col: ej,
            flow: theta,
        };

        if theta > 0.0 {
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }
    }

    let entries = basis
        .iter()
        .filter(|a| a.flow > 0.0)
        .map(|a| PlanEntry {
            row: a.row,
            col: a.col,
            mass: a.flow,
        })
        .collect();
    TransportPlan::from_entries(n, m, entries, Some(c))
}

/// Staircase initial tree: always exactly `N + M - 1` arcs.
fn northwest_corner(supply: &[f64], demand: &[f64]) -> Vec<Arc> {
    let (n, m) = (supply.len(), demand.len());
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    let mut arcs = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        let flow = s[i].min(d[j]).max(0.0);
        arcs.push(Arc { row: i, col: j, flow });
        s[i] -= flow;
        d[j] -= flow;
        if i == n - 1 {
            j += 1;
        } else if j == m - 1 || s[i] <= d[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(arcs.len(), n + m - 1);
    arcs
}

/// Solves `u[i] + v[j] = c[i][j]` over tree arcs with `u[0] = 0`.
fn potentials(c: &CostMatrix, basis: &[Arc], adjacency: &[Vec<usize>], u: &mut [f64], v: &mut [f64]) {
    let n = u.len();
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = queue.pop_front() {
        for &k in &adjacency[node] {
            let a = basis[k];
            let cost = c.get(a.row, a.col);
            let other = if node < n {
                v[a.col] = cost - u[a.row];
                n + a.col
            } else {
                u[a.row] = cost - v[a.col];
                a.row
            };
            if !seen[other] {
                seen[other] = true;
                queue.push_back(other);
            }
        }
    }
}

fn price(
    c: &CostMatrix,
    in_basis: &[bool],
    u: &[f64],
    v: &[f64],
    eps: f64,
    bland: bool,
) -> Option<(usize, usize)> {
    let m = v.len();
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, &ui) in u.iter().enumerate() {
        let row = c.row(i);
        for j in 0..m {
            if in_basis[i * m + j] {
                continue;
            }
            let rc = row[j] - ui - v[j];
            if rc < -eps {
                if bland {
                    return Some((i, j));
                }
                if best.map_or(true, |(b, _, _)| rc < b) {
                    best = Some((rc, i, j));
                }
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

/// Tree arcs on the path from `to` back to `from`, ordered starting at `to`.
fn tree_path(
    basis: &[Arc],
    adjacency: &[Vec<usize>],
    n: usize,
    from: usize,
    to: usize,
) -> Vec<usize> {
    let mut parent_arc = vec![usize::MAX; adjacency.len()];
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &k in &adjacency[node] {
            let a = basis[k];
            let other = if node < n { n + a.col } else { a.row };
            if !seen[other] {
                seen[other] = true;
                parent_arc[other] = k;
                queue.push_back(other);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = to;
    while node != from {
        let k = parent_arc[node];
        path.push(k);
        let a = basis[k];
        node = if node < n { n + a.col } else { a.row };
    }
    path
}
