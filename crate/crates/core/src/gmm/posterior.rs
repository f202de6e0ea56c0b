use crate::error::{Error, Result};
use crate::measure::MixingMeasure;
use crate::rng::{dirichlet_draw, standard_normal, stream_rng};
use crate::stats::SimplexVector;

use super::GmmVariationalState;

/// `theta_VB`: Dirichlet mean weights and component posterior means.
pub fn point_estimate(state: &GmmVariationalState) -> Result<MixingMeasure> {
    MixingMeasure::new(
        state.weight_posterior.mean(),
        state.component_posteriors.iter().map(|g| g.mean.clone()).collect(),
    )
}

/// `m` independent draws `(pi, mu) ~ q(pi) q(mu)`.
pub fn sample_variational(state: &GmmVariationalState, m: usize, seed: u64) -> Result<Vec<MixingMeasure>> {
    if m == 0 {
        return Err(Error::invalid("m must be positive"));
    }
    let mut rng = stream_rng(seed, 0x5150_5354);
    (0..m)
        .map(|_| {
            let w = dirichlet_draw(&mut rng, &state.weight_posterior.concentration);
            let atoms = state
                .component_posteriors
                .iter()
                .map(|g| {
                    let sd = g.variance_scale.sqrt();
                    g.mean.iter().map(|m| m + sd * standard_normal(&mut rng)).collect()
                })
                .collect();
            MixingMeasure::new(SimplexVector::from_weights(&w)?, atoms)
        })
        .collect()
}
