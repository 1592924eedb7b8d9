//! Rectangular linear assignment by shortest augmenting paths.
//!
//! Rows are inserted one at a time; each insertion runs a Dijkstra search
//! over reduced costs `c[i][j] - u[i] - v[j]` (kept nonnegative by the dual
//! updates) until it reaches an unassigned column, then flips the
//! alternating path. Works directly on `N ≤ M` matrices.

use super::CostMatrix;

const NONE: usize = usize::MAX;

/// Minimum-cost assignment of every row to a distinct column.
///
/// Returns `col_of_row`. Panics if the matrix has more rows than columns;
/// transpose first in that case.
pub fn solve(c: &CostMatrix) -> Vec<usize> {
    let (n, m) = (c.rows(), c.cols());
    assert!(n <= m, "assignment needs rows <= cols, got {n}x{m}");

    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; m];
    let mut col_of_row = vec![NONE; n];
    let mut row_of_col = vec![NONE; m];

    let mut shortest = vec![f64::INFINITY; m];
    let mut path = vec![NONE; m];
    let mut scanned_row = vec![false; n];
    let mut scanned_col = vec![false; m];

    for start in 0..n {
        shortest.fill(f64::INFINITY);
        path.fill(NONE);
        scanned_row.fill(false);
        scanned_col.fill(false);

        let mut min_val = 0.0;
        let mut i = start;
        let sink = loop {
            scanned_row[i] = true;
            let row = c.row(i);
            let mut lowest = f64::INFINITY;
            let mut pick = NONE;
            for j in 0..m {
                if scanned_col[j] {
                    continue;
                }
                let r = min_val + row[j] - u[i] - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                // prefer a free column on ties: it ends the search sooner
                if shortest[j] < lowest
                    || (shortest[j] == lowest
                        && pick != NONE
                        && row_of_col[j] == NONE
                        && row_of_col[pick] != NONE)
                {
                    lowest = shortest[j];
                    pick = j;
                }
            }
            debug_assert!(pick != NONE, "finite costs always leave a reachable column");
            min_val = lowest;
            scanned_col[pick] = true;
            if row_of_col[pick] == NONE {
                break pick;
            }
            i = row_of_col[pick];
        };

        // dual update
        u[start] += min_val;
        for r in 0..n {
            if r != start && scanned_row[r] {
                u[r] += min_val - shortest[col_of_row[r]];
            }
        }
        for j in 0..m {
            if scanned_col[j] {
                v[j] -= min_val - shortest[j];
            }
        }

        // flip the alternating path back to `start`
        let mut j = sink;
        loop {
            let r = path[j];
            row_of_col[j] = r;
            let prev = std::mem::replace(&mut col_of_row[r], j);
            if r == start {
                break;
            }
            j = prev;
        }
    }
    col_of_row
}

/// Total cost of an assignment.
pub fn cost_of(c: &CostMatrix, col_of_row: &[usize]) -> f64 {
    col_of_row
        .iter()
        .enumerate()
        .map(|(i, &j)| c.get(i, j))
        .sum()
}
