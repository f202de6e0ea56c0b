use crate::error::{Error, Result};
use crate::measure::MixingMeasure;

/// Result of matching estimated components to the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMatch {
    /// `permutation[k]` is the truth component matched to estimated component `k`.
    pub permutation: Vec<usize>,
    pub max_atom_error: f64,
    pub weight_l1_error: f64,
}

/// Hungarian algorithm (shortest augmenting paths with potentials) on a
/// square cost matrix. Returns the row-to-column assignment and its cost.
fn hungarian(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    (assign, total)
}

/// Minimum-cost perfect assignment, choosing the lexicographically smallest
/// permutation among optimal ones.
pub fn assignment(cost: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let n = cost.len();
    for row in cost {
        Error::check_len(n, row.len())?;
        if row.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("assignment costs must be finite"));
        }
    }
    let (_, opt) = hungarian(cost);
    let tol = 1e-9 * (1.0 + opt.abs());
    let mut fixed: Vec<usize> = Vec::with_capacity(n);
    let mut fixed_cost = 0.0;
    for row in 0..n {
        let mut chosen = None;
        for col in 0..n {
            if fixed.contains(&col) {
                continue;
            }
            let mut cols_left: Vec<usize> = (0..n).filter(|c| *c != col && !fixed.contains(c)).collect();
            cols_left.sort_unstable();
            let sub: Vec<Vec<f64>> = ((row + 1)..n)
                .map(|r| cols_left.iter().map(|&c| cost[r][c]).collect())
                .collect();
            let (_, rest) = hungarian(&sub);
            if fixed_cost + cost[row][col] + rest <= opt + tol {
                chosen = Some(col);
                break;
            }
        }
        let col = chosen.expect("an optimal completion always exists");
        fixed_cost += cost[row][col];
        fixed.push(col);
    }
    Ok((fixed, fixed_cost))
}

/// Match estimated components to the truth by minimizing the summed atom
/// distances, then report the matched errors.
pub fn match_components(p_hat: &MixingMeasure, p_star: &MixingMeasure) -> Result<ComponentMatch> {
    Error::check_len(p_star.k(), p_hat.k())?;
    Error::check_len(p_star.dim(), p_hat.dim())?;
    let dist = |a: &[f64], b: &[f64]| crate::stats::sq_dist(a, b).sqrt();
    let cost: Vec<Vec<f64>> = p_hat
        .atoms()
        .iter()
        .map(|a| p_star.atoms().iter().map(|b| dist(a, b)).collect())
        .collect();
    let (permutation, _) = assignment(&cost)?;
    let max_atom_error = permutation
        .iter()
        .enumerate()
        .map(|(k, &s)| cost[k][s])
        .fold(0.0, f64::max);
    let weight_l1_error = permutation
        .iter()
        .enumerate()
        .map(|(k, &s)| (p_hat.weights()[k] - p_star.weights()[s]).abs())
        .sum();
    Ok(ComponentMatch { permutation, max_atom_error, weight_l1_error })
}
