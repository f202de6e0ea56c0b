use crate::error::{Error, Result};
use crate::measure::MixingMeasure;
use crate::rng::{categorical_draw, dirichlet_draw, standard_normal, stream_rng};
use crate::stats::SimplexVector;

use super::{GmmData, GmmModel, GmmPrior};

const DATA_STREAM: u64 = 0x5349_4d47;
const TRUTH_STREAM: u64 = 0x5452_5554;

/// Draw `S_i ~ Cat(pi*)`, `Y_i ~ N(mu*_{S_i}, I_d)` independently.
pub fn simulate_gmm(model: &GmmModel, n: usize, seed: u64) -> Result<GmmData> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let mut rng = stream_rng(seed, DATA_STREAM);
    let truth = &model.truth;
    let mut observations = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let s = categorical_draw(&mut rng, truth.weights().as_slice());
        let y: Vec<f64> = truth.atoms()[s].iter().map(|m| m + standard_normal(&mut rng)).collect();
        observations.push(y);
        labels.push(s);
    }
    Ok(GmmData { observations, latent_truth: Some(labels), seed })
}

/// Draw a truth from the prior, with atoms restricted to the support box by
/// rejection when one is set.
pub fn random_truth(prior: &GmmPrior, seed: u64) -> Result<MixingMeasure> {
    prior.validate()?;
    let mut rng = stream_rng(seed, TRUTH_STREAM);
    let weights = SimplexVector::from_weights(&dirichlet_draw(&mut rng, &prior.dirichlet.concentration))?;
    let sd = prior.mean_prior.variance_scale.sqrt();
    let mut atoms = Vec::with_capacity(prior.k());
    for _ in 0..prior.k() {
        let mut tries = 0;
        loop {
            let a: Vec<f64> = prior.mean_prior.mean.iter().map(|m| m + sd * standard_normal(&mut rng)).collect();
            if prior.support_box.as_ref().is_none_or(|b| b.contains(&a)) {
                atoms.push(a);
                break;
            }
            tries += 1;
            if tries > 100_000 {
                return Err(Error::invalid("support box has negligible prior mass"));
            }
        }
    }
    MixingMeasure::new(weights, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::SupportBox;

    fn model(w: &[f64], atoms: Vec<Vec<f64>>) -> GmmModel {
        GmmModel::new(MixingMeasure::from_parts(w, atoms).unwrap())
    }

    #[test]
    fn single_component_labels() {
        let data = simulate_gmm(&model(&[1.0], vec![vec![2.0, 2.0]]), 50, 1).unwrap();
        assert!(data.latent_truth.unwrap().iter().all(|&z| z == 0));
    }

    #[test]
    fn zero_weight_never_drawn() {
        let data = simulate_gmm(&model(&[1.0, 0.0], vec![vec![0.0], vec![5.0]]), 2000, 2).unwrap();
        assert!(data.latent_truth.unwrap().iter().all(|&z| z == 0));
    }

    #[test]
    fn label_frequency_concentrates() {
        let n = 10_000;
        let data = simulate_gmm(&model(&[0.5, 0.5], vec![vec![0.0], vec![5.0]]), n, 3).unwrap();
        let ones = data.latent_truth.unwrap().iter().filter(|&&z| z == 0).count() as f64 / n as f64;
        assert!((ones - 0.5).abs() <= 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn deterministic_under_seed() {
        let m = model(&[0.3, 0.7], vec![vec![0.0, 1.0], vec![3.0, -1.0]]);
        let a = simulate_gmm(&m, 100, 9).unwrap();
        let b = simulate_gmm(&m, 100, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, simulate_gmm(&m, 100, 10).unwrap());
        assert!(simulate_gmm(&m, 0, 1).is_err());
    }

    #[test]
    fn random_truth_respects_box() {
        let prior = GmmPrior::new(
            crate::stats::DirichletSpec::symmetric(3, 1.0).unwrap(),
            crate::stats::GaussianSpec::new(vec![0.0, 0.0], 25.0).unwrap(),
            Some(SupportBox { lower: vec![-2.0, -2.0], upper: vec![2.0, 2.0] }),
        )
        .unwrap();
        for s in 0..20 {
            let t = random_truth(&prior, s).unwrap();
            assert!(t.atoms().iter().all(|a| prior.support_box.as_ref().unwrap().contains(a)));
        }
    }
}
