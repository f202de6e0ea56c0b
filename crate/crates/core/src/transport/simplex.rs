//! Transportation simplex on a dense cost matrix.
//!
//! The basis is kept as a spanning tree over the `m + n` row/column nodes.
//! Potentials come from a traversal of that tree, the entering cell is the
//! most negative reduced cost, and the leaving cell is found on the unique
//! cycle the entering cell closes.

const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;
/// After this many consecutive degenerate pivots, switch to Bland's rule.
const DEGENERATE_SWITCH: usize = 50;

pub(crate) struct Solution {
    pub flow: Vec<Vec<f64>>,
    pub cost: f64,
}

pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> Solution {
    let m = supply.len();
    let n = demand.len();
    debug_assert!(m > 0 && n > 0);

    // Northwest-corner start; exactly m + n - 1 basic cells.
    let mut flow = vec![vec![0.0; n]; m];
    let mut basic = vec![vec![false; n]; m];
    {
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = s[i].min(d[j]);
            flow[i][j] = x;
            basic[i][j] = true;
            s[i] -= x;
            d[j] -= x;
            if i == m - 1 && j == n - 1 {
                // absorb rounding residue in the final cell
                flow[i][j] += s[i].max(d[j]).max(0.0);
                break;
            }
            if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut degenerate_run = 0usize;
    for _ in 0..MAX_PIVOTS {
        potentials(&basic, cost, &mut u, &mut v);

        let bland = degenerate_run >= DEGENERATE_SWITCH;
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -PIVOT_TOL;
        'scan: for i in 0..m {
            for j in 0..n {
                if basic[i][j] {
                    continue;
                }
                let rc = cost[i][j] - u[i] - v[j];
                if rc < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = rc;
                }
            }
        }
        let Some((ei, ej)) = entering else { break };

        // Path in the basis tree from column node ej to row node ei; the
        // entering cell closes it into a cycle.
        let path = tree_path(&basic, ej, ei);
        // path alternates cells; even positions (starting at the cell
        // adjacent to column ej) lose flow, odd positions gain.
        let mut theta = f64::INFINITY;
        let mut leave = 0usize;
        for (idx, &(ci, cj)) in path.iter().enumerate() {
            if idx % 2 == 0 && flow[ci][cj] < theta - PIVOT_TOL {
                theta = flow[ci][cj];
                leave = idx;
            }
        }
        if !(theta.is_finite()) {
            break;
        }
        if theta <= PIVOT_TOL {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        flow[ei][ej] += theta;
        for (idx, &(ci, cj)) in path.iter().enumerate() {
            if idx % 2 == 0 {
                flow[ci][cj] = (flow[ci][cj] - theta).max(0.0);
            } else {
                flow[ci][cj] += theta;
            }
        }
        let (li, lj) = path[leave];
        flow[li][lj] = 0.0;
        basic[li][lj] = false;
        basic[ei][ej] = true;
    }

    let cost_total = flow
        .iter()
        .zip(cost)
        .flat_map(|(fr, cr)| fr.iter().zip(cr).map(|(f, c)| f * c))
        .sum();
    Solution { flow, cost: cost_total }
}

/// Solve `u_i + v_j = c_ij` on basic cells with `u_0 = 0`.
fn potentials(basic: &[Vec<bool>], cost: &[Vec<f64>], u: &mut [f64], v: &mut [f64]) {
    let m = u.len();
    let n = v.len();
    let mut seen_r = vec![false; m];
    let mut seen_c = vec![false; n];
    // node ids: rows 0..m, columns m..m+n
    let mut stack = vec![0usize];
    u[0] = 0.0;
    seen_r[0] = true;
    while let Some(node) = stack.pop() {
        if node < m {
            let i = node;
            for j in 0..n {
                if basic[i][j] && !seen_c[j] {
                    v[j] = cost[i][j] - u[i];
                    seen_c[j] = true;
                    stack.push(m + j);
                }
            }
        } else {
            let j = node - m;
            for i in 0..m {
                if basic[i][j] && !seen_r[i] {
                    u[i] = cost[i][j] - v[j];
                    seen_r[i] = true;
                    stack.push(i);
                }
            }
        }
    }
}

/// Cells along the tree path from column `start_col` to row `end_row`.
fn tree_path(basic: &[Vec<bool>], start_col: usize, end_row: usize) -> Vec<(usize, usize)> {
    let m = basic.len();
    let n = basic[0].len();
    let total = m + n;
    let mut parent = vec![usize::MAX; total];
    let start = m + start_col;
    parent[start] = start;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == end_row {
            break;
        }
        if node < m {
            for j in 0..n {
                if basic[node][j] && parent[m + j] == usize::MAX {
                    parent[m + j] = node;
                    queue.push_back(m + j);
                }
            }
        } else {
            let j = node - m;
            for i in 0..m {
                if basic[i][j] && parent[i] == usize::MAX {
                    parent[i] = node;
                    queue.push_back(i);
                }
            }
        }
    }
    // walk back from end_row to start, collecting cells
    let mut cells = Vec::new();
    let mut node = end_row;
    while node != start {
        let p = parent[node];
        let cell = if node < m { (node, p - m) } else { (p, node - m) };
        cells.push(cell);
        node = p;
    }
    cells.reverse();
    cells
}
