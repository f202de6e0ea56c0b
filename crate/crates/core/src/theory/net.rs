use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Net sizes may exceed the covering bound by at most this factor.
pub const NET_SIZE_SLACK: f64 = 4.0;
const MAX_GRID_POINTS: usize = 400_000;

/// `(5/r)^(K-1)`, an upper bound on the l1 covering number of the
/// `(K-1)`-simplex.
pub fn simplex_covering_bound(radius: f64, k: usize) -> Result<f64> {
    if !(radius > 0.0 && radius <= 5.0) || k == 0 {
        return Err(Error::invalid(format!("simplex covering radius must lie in (0, 5], got {radius}")));
    }
    Ok((5.0 / radius).powi(k as i32 - 1))
}

/// `(diameter/r)^d`, floored at one ball.
pub fn box_covering_bound(radius: f64, d: usize, diameter: f64) -> Result<f64> {
    if !(radius > 0.0) || !(diameter >= 0.0) {
        return Err(Error::invalid("radius must be positive and diameter nonnegative"));
    }
    Ok((diameter / radius).powi(d as i32).max(1.0))
}

/// Space being covered. The simplex uses the l1 metric, boxes Euclidean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetSpace {
    Simplex { k: usize },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl NetSpace {
    pub fn validate(&self) -> Result<()> {
        match self {
            NetSpace::Simplex { k } if *k == 0 => Err(Error::invalid("simplex needs K >= 1")),
            NetSpace::Box { lower, upper } => {
                Error::check_len(lower.len(), upper.len())?;
                if lower.is_empty() || lower.iter().zip(upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
                    return Err(Error::invalid("box bounds must be finite with lower <= upper"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            NetSpace::Simplex { .. } => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            NetSpace::Box { .. } => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            NetSpace::Simplex { k } => {
                p.len() == *k && p.iter().all(|&x| x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9
            }
            NetSpace::Box { lower, upper } => {
                p.len() == lower.len() && p.iter().zip(lower.iter().zip(upper)).all(|(x, (l, u))| l <= x && x <= u)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            NetSpace::Simplex { k } => if *k > 1 { 2.0 } else { 0.0 },
            NetSpace::Box { lower, upper } => self.distance(lower, upper),
        }
    }

    pub fn covering_bound(&self, radius: f64) -> Result<f64> {
        match self {
            NetSpace::Simplex { k } => simplex_covering_bound(radius.min(5.0), *k),
            NetSpace::Box { lower, .. } => box_covering_bound(radius, lower.len(), self.diameter()),
        }
    }

    /// Reference grid with worst-case distance from any point of the space
    /// to the grid at most a quarter of `radius`; also returns that distance.
    pub fn reference_grid(&self, radius: f64) -> Result<(Vec<Vec<f64>>, f64)> {
        match self {
            NetSpace::Simplex { k } => {
                let k = *k;
                if k == 1 {
                    return Ok((vec![vec![1.0]], 0.0));
                }
                let g = (8.0 * (k - 1) as f64 / radius).ceil() as usize;
                if binomial(g + k - 1, k - 1) > MAX_GRID_POINTS as f64 {
                    return Err(Error::SizeLimit(format!("radius {radius} too small for the simplex grid at K = {k}")));
                }
                let mut out = Vec::new();
                let mut cur = vec![0usize; k];
                compositions(g, 0, &mut cur, &mut out);
                let pts = out.into_iter().map(|c| c.iter().map(|&x| x as f64 / g as f64).collect()).collect();
                Ok((pts, 2.0 * (k - 1) as f64 / g as f64))
            }
            NetSpace::Box { lower, upper } => {
                let d = lower.len();
                let h = radius / (2.0 * (d as f64).sqrt());
                let counts: Vec<usize> =
                    lower.iter().zip(upper).map(|(l, u)| ((u - l) / h).ceil() as usize + 1).collect();
                if counts.iter().map(|&c| c as f64).product::<f64>() > MAX_GRID_POINTS as f64 {
                    return Err(Error::SizeLimit(format!("radius {radius} too small for the grid of a {d}-dimensional box")));
                }
                let axes: Vec<Vec<f64>> = lower
                    .iter()
                    .zip(upper)
                    .zip(&counts)
                    .map(|((l, u), &c)| {
                        if c == 1 {
                            vec![*l]
                        } else {
                            (0..c).map(|i| l + (u - l) * i as f64 / (c - 1) as f64).collect()
                        }
                    })
                    .collect();
                let resolution = axes
                    .iter()
                    .map(|a| if a.len() > 1 { 0.5 * (a[1] - a[0]) } else { 0.0 })
                    .map(|s| s * s)
                    .sum::<f64>()
                    .sqrt();
                let mut pts = vec![Vec::with_capacity(d)];
                for axis in &axes {
                    pts = pts
                        .into_iter()
                        .flat_map(|p: Vec<f64>| {
                            axis.iter().map(move |&x| {
                                let mut q = p.clone();
                                q.push(x);
                                q
                            })
                        })
                        .collect();
                }
                Ok((pts, resolution))
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn compositions(remaining: usize, pos: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos == cur.len() - 1 {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for x in 0..=remaining {
        cur[pos] = x;
        compositions(remaining - x, pos + 1, cur, out);
    }
}

/// A finite set of points covering a space at a given radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonNet {
    pub points: Vec<Vec<f64>>,
    pub radius: f64,
    pub space: NetSpace,
    /// Largest distance from a reference-grid point to the net.
    pub grid_coverage: f64,
    /// Worst-case distance from the space to the reference grid.
    pub grid_resolution: f64,
    pub grid_size: usize,
    pub covering_bound: f64,
}

impl EpsilonNet {
    /// Net size within `NET_SIZE_SLACK` times the covering bound.
    pub fn within_bound(&self) -> bool {
        self.points.len() as f64 <= NET_SIZE_SLACK * self.covering_bound
    }

    /// Re-derive the reference grid and return the largest distance from a
    /// grid point to its nearest net point.
    pub fn verify_coverage(&self) -> Result<f64> {
        let (grid, _) = self.space.reference_grid(self.radius)?;
        Ok(grid
            .iter()
            .map(|g| self.points.iter().map(|p| self.space.distance(g, p)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max))
    }
}

/// Greedy farthest-point net over the reference grid: start at the first
/// grid point and keep adding the grid point farthest from the net until
/// every grid point is within `radius`.
pub fn build_epsilon_net(space: NetSpace, radius: f64) -> Result<EpsilonNet> {
    space.validate()?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid("net radius must be positive"));
    }
    let (grid, resolution) = space.reference_grid(radius)?;
    let mut points = vec![grid[0].clone()];
    let mut dist: Vec<f64> = grid.iter().map(|g| space.distance(g, &grid[0])).collect();
    loop {
        let (idx, &far) = dist
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if far <= radius {
            let covering_bound = space.covering_bound(radius)?;
            return Ok(EpsilonNet {
                points,
                radius,
                grid_coverage: far,
                grid_resolution: resolution,
                grid_size: grid.len(),
                covering_bound,
                space,
            });
        }
        let p = grid[idx].clone();
        for (d, g) in dist.iter_mut().zip(&grid) {
            *d = d.min(space.distance(g, &p));
        }
        points.push(p);
    }
}
