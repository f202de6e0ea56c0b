//! Vertex enumeration over the transportation polytope.
//!
//! Every basic feasible solution is supported on a spanning tree of the
//! bipartite row/column graph; enumerating all `(m + n - 1)`-cell subsets
//! that form a spanning tree, solving the (unique) flow on each and keeping
//! the cheapest nonnegative one gives the exact optimum. Only practical for
//! tiny instances.

use crate::error::{Error, Result};
use crate::measure::MixingMeasure;

use super::{check_order, ground_cost};

pub const ORACLE_MAX_K: usize = 4;

pub fn wasserstein_oracle(p1: &MixingMeasure, p2: &MixingMeasure, r: f64) -> Result<f64> {
    Error::check_len(p1.dim(), p2.dim())?;
    check_order(r)?;
    let (m, n) = (p1.k(), p2.k());
    if m > ORACLE_MAX_K || n > ORACLE_MAX_K {
        return Err(Error::SizeLimit(format!(
            "oracle supports at most {ORACLE_MAX_K} atoms per side, got {m}x{n}"
        )));
    }
    let cost: Vec<Vec<f64>> = p1
        .atoms()
        .iter()
        .map(|a| p2.atoms().iter().map(|b| ground_cost(a, b, r)).collect())
        .collect();
    let supply = p1.weights().as_slice();
    let demand = p2.weights().as_slice();
    let cells = m * n;
    let need = m + n - 1;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1u32 << cells) {
        if mask.count_ones() as usize != need {
            continue;
        }
        let support: Vec<(usize, usize)> = (0..cells)
            .filter(|c| mask & (1 << c) != 0)
            .map(|c| (c / n, c % n))
            .collect();
        if let Some(flow) = tree_flow(&support, supply, demand) {
            if flow.iter().all(|&(_, _, x)| x >= -1e-12) {
                let c: f64 = flow.iter().map(|&(i, j, x)| x.max(0.0) * cost[i][j]).sum();
                best = best.min(c);
            }
        }
    }
    Ok(best.max(0.0).powf(1.0 / r))
}

/// Flows on a spanning-tree support by leaf peeling; `None` if the support
/// is not a spanning tree.
fn tree_flow(support: &[(usize, usize)], supply: &[f64], demand: &[f64]) -> Option<Vec<(usize, usize, f64)>> {
    let m = supply.len();
    let n = demand.len();
    // union-find acyclicity check (m + n - 1 acyclic edges => spanning tree)
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for &(i, j) in support {
        let (a, b) = (find(&mut parent, i), find(&mut parent, m + j));
        if a == b {
            return None;
        }
        parent[a] = b;
    }

    let mut residual: Vec<f64> = supply.iter().chain(demand).copied().collect();
    let mut alive = vec![true; support.len()];
    let mut degree = vec![0usize; m + n];
    for &(i, j) in support {
        degree[i] += 1;
        degree[m + j] += 1;
    }
    let mut out = Vec::with_capacity(support.len());
    for _ in 0..support.len() {
        // pick any alive edge touching a leaf node
        let (e, leaf) = support.iter().enumerate().find_map(|(e, &(i, j))| {
            if !alive[e] {
                None
            } else if degree[i] == 1 {
                Some((e, i))
            } else if degree[m + j] == 1 {
                Some((e, m + j))
            } else {
                None
            }
        })?;
        let (i, j) = support[e];
        let other = if leaf == i { m + j } else { i };
        let x = residual[leaf];
        residual[leaf] = 0.0;
        residual[other] -= x;
        alive[e] = false;
        degree[i] -= 1;
        degree[m + j] -= 1;
        out.push((i, j, x));
    }
    Some(out)
}
