use rand::Rng;

use crate::error::{Error, Result};
use crate::measure::MixingMeasure;
use crate::rng::{categorical_draw, standard_normal, stream_rng};

use super::types::GaussianSpec;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        Self { estimate: mean, std_error: (var / m).sqrt() }
    }
}

/// Closed-form squared Hellinger distance between isotropic Gaussians
/// (no 1/2 factor, range `[0, 2]`).
pub fn hellinger_sq_gaussian(a: &GaussianSpec, b: &GaussianSpec) -> Result<f64> {
    Error::check_len(a.dim(), b.dim())?;
    let d = a.dim() as f64;
    let (sa, sb) = (a.variance_scale, b.variance_scale);
    let sum = sa + sb;
    let sq = super::sq_dist(&a.mean, &b.mean);
    let log_bc = 0.5 * d * (2.0 * (sa * sb).sqrt() / sum).ln() - sq / (4.0 * sum);
    Ok((-2.0 * log_bc.exp_m1()).clamp(0.0, 2.0))
}

/// Importance-sampling estimate of `h^2(f_P, f_Q)` for unit-variance
/// Gaussian location mixtures.
///
/// Uses `h^2 = 2 - 2 E_g[sqrt(f_P f_Q) / g]` with the balanced proposal
/// `g = (f_P + f_Q) / 2`; the weight lies in `[0, 1]`.
pub fn hellinger_sq_mixture_mc(
    p: &MixingMeasure,
    q: &MixingMeasure,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    Error::check_len(p.dim(), q.dim())?;
    if samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    let mut rng = stream_rng(seed, 0x4845_4c4c);
    let d = p.dim();
    let mut y = vec![0.0; d];
    let mut weights = Vec::with_capacity(samples);
    for _ in 0..samples {
        let src = if rng.gen::<bool>() { p } else { q };
        let k = categorical_draw(&mut rng, src.weights().as_slice());
        for (yi, mu) in y.iter_mut().zip(&src.atoms()[k]) {
            *yi = mu + standard_normal(&mut rng);
        }
        let lp = p.mixture_log_density(&y);
        let lq = q.mixture_log_density(&y);
        let hi = lp.max(lq);
        let lg = hi + (0.5 * ((lp - hi).exp() + (lq - hi).exp())).ln();
        weights.push((0.5 * (lp + lq) - lg).exp());
    }
    let w = McEstimate::from_samples(&weights);
    Ok(McEstimate { estimate: 2.0 - 2.0 * w.estimate, std_error: 2.0 * w.std_error })
}
