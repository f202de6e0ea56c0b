//! Exact Wasserstein distances between finitely supported mixing measures,
//! a brute-force verification oracle, and component label matching.

mod assignment;
mod lemma;
pub mod oracle;
mod simplex;

pub use assignment::{assignment, match_components, ComponentMatch};
pub use lemma::{lemma1_bounds, Lemma1Bounds};
pub use oracle::wasserstein_oracle;

pub use crate::measure::MixingMeasure;

use crate::error::{Error, Result};

/// Marginal tolerance for [`TransportPlan`].
pub const PLAN_TOL: f64 = 1e-10;

/// A coupling between two mixing measures.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub mass: Vec<Vec<f64>>,
    pub source: MixingMeasure,
    pub target: MixingMeasure,
}

impl TransportPlan {
    /// Check nonnegativity and both marginals.
    pub fn validate(&self) -> Result<()> {
        let (k1, k2) = (self.source.k(), self.target.k());
        Error::check_len(k1, self.mass.len())?;
        for (i, row) in self.mass.iter().enumerate() {
            Error::check_len(k2, row.len())?;
            if row.iter().any(|x| *x < 0.0) {
                return Err(Error::invalid(format!("negative mass in row {i}")));
            }
            let s: f64 = row.iter().sum();
            if (s - self.source.weights()[i]).abs() > PLAN_TOL {
                return Err(Error::invalid(format!("row {i} sums to {s}")));
            }
        }
        for j in 0..k2 {
            let s: f64 = self.mass.iter().map(|r| r[j]).sum();
            if (s - self.target.weights()[j]).abs() > PLAN_TOL {
                return Err(Error::invalid(format!("column {j} sums to {s}")));
            }
        }
        Ok(())
    }
}

/// Ground cost `||a - b||^r`.
pub(crate) fn ground_cost(a: &[f64], b: &[f64], r: f64) -> f64 {
    let d = crate::stats::sq_dist(a, b).sqrt();
    if r == 1.0 {
        d
    } else if r == 2.0 {
        d * d
    } else {
        d.powf(r)
    }
}

pub(crate) fn check_order(r: f64) -> Result<()> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::invalid(format!("wasserstein order must be >= 1, got {r}")));
    }
    Ok(())
}

/// `W_r(P1, P2)` and an optimal coupling, solved exactly as a transportation
/// linear program.
pub fn wasserstein(p1: &MixingMeasure, p2: &MixingMeasure, r: f64) -> Result<(f64, TransportPlan)> {
    Error::check_len(p1.dim(), p2.dim())?;
    check_order(r)?;
    // zero-weight rows/columns are dropped before solving
    let rows: Vec<usize> = (0..p1.k()).filter(|&i| p1.weights()[i] > 0.0).collect();
    let cols: Vec<usize> = (0..p2.k()).filter(|&j| p2.weights()[j] > 0.0).collect();
    let supply: Vec<f64> = rows.iter().map(|&i| p1.weights()[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| p2.weights()[j]).collect();
    let cost: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| ground_cost(&p1.atoms()[i], &p2.atoms()[j], r)).collect())
        .collect();
    let sol = simplex::solve(&supply, &demand, &cost);

    let mut mass = vec![vec![0.0; p2.k()]; p1.k()];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            mass[i][j] = sol.flow[a][b];
        }
    }
    let distance = sol.cost.max(0.0).powf(1.0 / r);
    Ok((distance, TransportPlan { mass, source: p1.clone(), target: p2.clone() }))
}

/// `W_r(P1, P2)` without the plan.
pub fn wasserstein_distance(p1: &MixingMeasure, p2: &MixingMeasure, r: f64) -> Result<f64> {
    wasserstein(p1, p2, r).map(|(d, _)| d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn mm(w: &[f64], atoms: &[f64]) -> MixingMeasure {
        MixingMeasure::from_parts(w, atoms.iter().map(|a| vec![*a]).collect()).unwrap()
    }

    #[test]
    fn examples() {
        let p = mm(&[0.5, 0.5], &[0.0, 2.0]);
        let (d, plan) = wasserstein(&p, &p, 1.0).unwrap();
        assert_eq!(d, 0.0);
        plan.validate().unwrap();
        assert!(plan.mass[0][1] == 0.0 && plan.mass[1][0] == 0.0);

        let q = mm(&[0.5, 0.5], &[0.0, 3.0]);
        let (d, plan) = wasserstein(&p, &q, 1.0).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        plan.validate().unwrap();

        let a = mm(&[0.7, 0.3], &[0.0, 1.0]);
        let b = mm(&[0.5, 0.5], &[0.0, 1.0]);
        assert!((wasserstein_distance(&a, &b, 1.0).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_reinserted() {
        let a = mm(&[1.0, 0.0], &[0.0, 5.0]);
        let b = mm(&[0.0, 0.5, 0.5], &[9.0, 1.0, 2.0]);
        let (d, plan) = wasserstein(&a, &b, 1.0).unwrap();
        assert!((d - 1.5).abs() < 1e-12);
        assert_eq!(plan.mass.len(), 2);
        assert_eq!(plan.mass[1], vec![0.0; 3]);
        plan.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        let a = mm(&[1.0], &[0.0]);
        let b = MixingMeasure::point(vec![0.0, 1.0]).unwrap();
        assert!(wasserstein(&a, &b, 1.0).is_err());
        assert!(wasserstein(&a, &a, 0.5).is_err());
    }

    fn random_measure(rng: &mut impl Rng, k: usize, d: usize) -> MixingMeasure {
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let atoms = (0..k).map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        MixingMeasure::new(crate::stats::SimplexVector::from_weights(&w).unwrap(), atoms).unwrap()
    }

    #[test]
    fn symmetric_triangle_and_identity() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..200 {
            let d = rng.gen_range(1..=3);
            let ka = rng.gen_range(1..=5);
            let a = random_measure(&mut rng, ka, d);
            let kb = rng.gen_range(1..=5);
            let b = random_measure(&mut rng, kb, d);
            let kc = rng.gen_range(1..=5);
            let c = random_measure(&mut rng, kc, d);
            let ab = wasserstein_distance(&a, &b, 1.0).unwrap();
            let ba = wasserstein_distance(&b, &a, 1.0).unwrap();
            let bc = wasserstein_distance(&b, &c, 1.0).unwrap();
            let ac = wasserstein_distance(&a, &c, 1.0).unwrap();
            assert!((ab - ba).abs() < 1e-10);
            assert!(ac <= ab + bc + 1e-9);
            assert!(wasserstein_distance(&a, &a, 2.0).unwrap() < 1e-10);
        }
    }

    #[test]
    fn larger_instances_match_plan_cost() {
        let mut rng = stream_rng(12, 0);
        for _ in 0..20 {
            let a = random_measure(&mut rng, 30, 2);
            let b = random_measure(&mut rng, 25, 2);
            let (d, plan) = wasserstein(&a, &b, 2.0).unwrap();
            plan.validate().unwrap();
            assert!(d.is_finite());
        }
    }
}
