use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::{simulate_gmm, GmmData, GmmModel};
use crate::measure::MixingMeasure;
use crate::rng::derive_seed;

use super::net::{EpsilonNet, NetSpace};
use super::Proportion;

/// Rejects iff `l_n(theta_alt) - l_n(theta*) > threshold`.
pub fn glrt_point_test(theta_star: &MixingMeasure, theta_alt: &MixingMeasure, data: &GmmData, threshold: f64) -> Result<bool> {
    Ok(log_ratio(theta_star, theta_alt, data)? > threshold)
}

fn log_ratio(theta_star: &MixingMeasure, theta_alt: &MixingMeasure, data: &GmmData) -> Result<f64> {
    Error::check_len(theta_star.dim(), data.d())?;
    Error::check_len(theta_alt.dim(), data.d())?;
    let r = theta_alt.log_likelihood(&data.observations) - theta_star.log_likelihood(&data.observations);
    if r.is_nan() || r.is_infinite() {
        return Err(Error::NonFinite { iteration: 0, what: "log likelihood ratio".into() });
    }
    Ok(r)
}

/// Maximum of the point tests: rejects iff any of them does.
pub fn aggregate_test(
    alternatives: &[MixingMeasure],
    theta_star: &MixingMeasure,
    data: &GmmData,
    thresholds: &[f64],
) -> Result<bool> {
    Error::check_len(alternatives.len(), thresholds.len())?;
    for (alt, &t) in alternatives.iter().zip(thresholds) {
        if glrt_point_test(theta_star, alt, data, t)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Net-based test against a null point, with Monte Carlo calibrated cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub net: EpsilonNet,
    pub null_point: MixingMeasure,
    /// Net points farther than `min_separation` from the null, as measures.
    pub alternatives: Vec<MixingMeasure>,
    pub min_separation: f64,
    pub thresholds: Vec<f64>,
    pub calibration_n: usize,
    pub calibration_level: f64,
    pub calibration_reps: usize,
    pub calibration_seed: u64,
}

/// Turn net points into mixing measures. Box nets of dimension `d` move the
/// single atom of a one-component null; box nets of dimension `K*d` move all
/// atoms; simplex nets move the weights.
fn net_alternatives(net: &EpsilonNet, null: &MixingMeasure, min_separation: f64) -> Result<Vec<MixingMeasure>> {
    let (k, d) = (null.k(), null.dim());
    let null_coords: Vec<f64> = match &net.space {
        NetSpace::Simplex { k: nk } => {
            Error::check_len(k, *nk)?;
            null.weights().as_slice().to_vec()
        }
        NetSpace::Box { lower, .. } => {
            Error::check_len(k * d, lower.len())?;
            null.atoms().concat()
        }
    };
    let mut out = Vec::new();
    for p in &net.points {
        if net.space.distance(p, &null_coords) <= min_separation {
            continue;
        }
        out.push(match &net.space {
            NetSpace::Simplex { .. } => MixingMeasure::from_parts(p, null.atoms().to_vec())?,
            NetSpace::Box { .. } => MixingMeasure::new(null.weights().clone(), p.chunks(d).map(<[f64]>::to_vec).collect())?,
        });
    }
    Ok(out)
}

fn simulate(generator: &MixingMeasure, n: usize, seed: u64) -> Result<GmmData> {
    simulate_gmm(&GmmModel::new(generator.clone()), n, seed)
}

/// Calibrate per-point thresholds so that each point test has Monte Carlo
/// type-I frequency at most `level / N` at sample size `n`.
pub fn calibrate_test(
    net: EpsilonNet,
    null_point: MixingMeasure,
    min_separation: f64,
    n: usize,
    level: f64,
    reps: usize,
    seed: u64,
) -> Result<TestFunction> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level must lie in (0, 1)"));
    }
    if reps < 100 {
        return Err(Error::invalid("calibration needs at least 100 replicates"));
    }
    let alternatives = net_alternatives(&net, &null_point, min_separation)?;
    let ratios: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let data = simulate(&null_point, n, derive_seed(seed, &[r as u64]))?;
            alternatives.iter().map(|a| log_ratio(&null_point, a, &data)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let per_point = level / alternatives.len().max(1) as f64;
    // reject iff value > threshold; choose the order statistic leaving at
    // most floor(per_point * reps) replicates above it
    let above = (per_point * reps as f64).floor() as usize;
    let thresholds = (0..alternatives.len())
        .map(|j| {
            let mut col: Vec<f64> = ratios.iter().map(|row| row[j]).collect();
            col.sort_by(f64::total_cmp);
            col[reps - 1 - above.min(reps - 1)]
        })
        .collect();
    Ok(TestFunction {
        net,
        null_point,
        alternatives,
        min_separation,
        thresholds,
        calibration_n: n,
        calibration_level: level,
        calibration_reps: reps,
        calibration_seed: seed,
    })
}

/// Rejection frequencies of the aggregated test and of each point test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestErrorEstimate {
    pub aggregate: Proportion,
    pub per_point: Vec<Proportion>,
}

/// Simulate `reps` datasets of size `n` under `generator` and count rejections.
pub fn estimate_test_errors(
    test: &TestFunction,
    generator: &MixingMeasure,
    reps: usize,
    n: usize,
    seed: u64,
) -> Result<TestErrorEstimate> {
    if reps < 100 {
        return Err(Error::invalid("error-rate estimates need at least 100 replicates"));
    }
    let m = test.alternatives.len();
    let flags: Vec<Vec<bool>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let data = simulate(generator, n, derive_seed(seed, &[r as u64]))?;
            test.alternatives
                .iter()
                .zip(&test.thresholds)
                .map(|(a, &t)| glrt_point_test(&test.null_point, a, &data, t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let aggregate = flags.iter().filter(|f| f.iter().any(|&x| x)).count();
    let per_point = (0..m).map(|j| Proportion::new(flags.iter().filter(|f| f[j]).count(), reps)).collect();
    Ok(TestErrorEstimate { aggregate: Proportion::new(aggregate, reps), per_point })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::build_epsilon_net;

    fn point(x: f64) -> MixingMeasure {
        MixingMeasure::point(vec![x]).unwrap()
    }

    #[test]
    fn point_test_examples() {
        let data = GmmData::new(vec![vec![0.5]]).unwrap();
        assert!(!glrt_point_test(&point(0.0), &point(1.0), &data, 0.0).unwrap());
        assert!(glrt_point_test(&point(0.0), &point(1.0), &data, -1e-12).unwrap());
        let sim = simulate(&point(0.0), 50, 3).unwrap();
        assert!(!glrt_point_test(&point(0.0), &point(0.0), &sim, 0.0).unwrap());
        assert!(glrt_point_test(&point(0.0), &point(0.0), &sim, -1e-9).unwrap());
        assert!(!glrt_point_test(&point(0.0), &point(3.0), &sim, 1e9).unwrap());
    }

    #[test]
    fn aggregate_reductions() {
        let data = simulate(&point(0.0), 20, 4).unwrap();
        assert!(!aggregate_test(&[], &point(0.0), &data, &[]).unwrap());
        for t in [-5.0, 0.0, 5.0] {
            assert_eq!(
                aggregate_test(&[point(0.7)], &point(0.0), &data, &[t]).unwrap(),
                glrt_point_test(&point(0.0), &point(0.7), &data, t).unwrap()
            );
        }
        assert!(aggregate_test(&[point(0.7)], &point(0.0), &data, &[]).is_err());
    }

    #[test]
    fn calibrated_type_one_and_union_bound() {
        let net = build_epsilon_net(NetSpace::Box { lower: vec![-2.0], upper: vec![2.0] }, 0.25).unwrap();
        let test = calibrate_test(net, point(0.0), 0.25, 100, 0.05, 1000, 7).unwrap();
        assert_eq!(test.alternatives.len(), 8);
        let est = estimate_test_errors(&test, &point(0.0), 1000, 100, 8).unwrap();
        let max_point = est.per_point.iter().map(|p| p.estimate).fold(0.0, f64::max);
        let bound = test.alternatives.len() as f64 * max_point;
        let se = (bound.min(1.0) * (1.0 - bound.min(1.0)) / 1000.0).sqrt();
        assert!(est.aggregate.estimate <= bound + 3.0 * se + 1e-12);
        assert!(est.aggregate.lower <= 0.05, "{:?}", est.aggregate);
    }

    #[test]
    fn never_rejecting_test() {
        let net = build_epsilon_net(NetSpace::Box { lower: vec![-1.0], upper: vec![1.0] }, 0.5).unwrap();
        let mut test = calibrate_test(net, point(0.0), 0.25, 30, 0.05, 100, 1).unwrap();
        test.thresholds.iter_mut().for_each(|t| *t = f64::INFINITY);
        let est = estimate_test_errors(&test, &point(0.0), 100, 30, 2).unwrap();
        assert_eq!(est.aggregate.hits, 0);
        let json = serde_json::to_string(&TestFunction { thresholds: vec![1.0; test.alternatives.len()], ..test }).unwrap();
        let back: TestFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(back.calibration_seed, 1);
    }
}
