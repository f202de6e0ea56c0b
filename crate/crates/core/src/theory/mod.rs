//! Executable versions of the analysis devices behind the contraction
//! results: KL neighborhoods and their prior mass, covering numbers and
//! epsilon-nets, and likelihood-ratio tests with empirical error rates.

mod glrt;
mod net;

pub use glrt::{aggregate_test, calibrate_test, estimate_test_errors, glrt_point_test, TestErrorEstimate, TestFunction};
pub use net::{box_covering_bound, build_epsilon_net, simplex_covering_bound, EpsilonNet, NetSpace, NET_SIZE_SLACK};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::GmmPrior;
use crate::rng::{derive_seed, dirichlet_draw, standard_normal, stream_rng};
use crate::stats::{kl_categorical, v_categorical, SimplexVector};

const Z_95: f64 = 1.959_963_984_540_054;

/// Two KL neighborhoods around `(pi*, mu*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlNeighborhoodSpec {
    pub center_weights: SimplexVector,
    pub center_atoms: Vec<Vec<f64>>,
    pub eps_pi: f64,
    pub eps_mu: f64,
}

impl KlNeighborhoodSpec {
    pub fn new(center_weights: SimplexVector, center_atoms: Vec<Vec<f64>>, eps_pi: f64, eps_mu: f64) -> Result<Self> {
        let s = Self { center_weights, center_atoms, eps_pi, eps_mu };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("eps_pi", self.eps_pi), ("eps_mu", self.eps_mu)] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {e}")));
            }
        }
        Error::check_len(self.center_weights.len(), self.center_atoms.len())?;
        if let Some(first) = self.center_atoms.first() {
            for a in &self.center_atoms {
                Error::check_len(first.len(), a.len())?;
            }
        }
        Ok(())
    }
}

/// `D(pi* || pi) <= eps_pi^2` and `V(pi* || pi) <= eps_pi^2`.
pub fn in_pi_neighborhood(pi: &SimplexVector, spec: &KlNeighborhoodSpec) -> Result<bool> {
    let e2 = spec.eps_pi * spec.eps_pi;
    match kl_categorical(&spec.center_weights, pi) {
        Ok(d) => Ok(d <= e2 && v_categorical(&spec.center_weights, pi)? <= e2),
        Err(Error::InfiniteDivergence { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// KL and second-moment divergence between unit-variance Gaussians whose
/// means differ by a vector of squared length `shift_sq`.
pub fn gaussian_shift_divergences(shift_sq: f64) -> (f64, f64) {
    (0.5 * shift_sq, shift_sq + 0.25 * shift_sq * shift_sq)
}

/// Component-wise: `max_s KL <= eps_mu^2` and `max_s V <= eps_mu^2`.
pub fn in_mu_neighborhood(mu: &[Vec<f64>], spec: &KlNeighborhoodSpec) -> Result<bool> {
    Error::check_len(spec.center_atoms.len(), mu.len())?;
    let e2 = spec.eps_mu * spec.eps_mu;
    let mut inside = true;
    for (a, b) in spec.center_atoms.iter().zip(mu) {
        Error::check_len(a.len(), b.len())?;
        let shift_sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let (kl, v) = gaussian_shift_divergences(shift_sq);
        inside &= kl <= e2 && v <= e2;
    }
    Ok(inside)
}

/// A Monte Carlo frequency with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub hits: usize,
    pub trials: usize,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Set when there were no hits: `[0, upper]` is then a one-sided 95% bound.
    pub one_sided: bool,
}

impl Proportion {
    pub fn new(hits: usize, trials: usize) -> Self {
        if hits == 0 && trials > 0 {
            return Self { hits, trials, estimate: 0.0, lower: 0.0, upper: 1.0 - 0.05f64.powf(1.0 / trials as f64), one_sided: true };
        }
        let (lower, upper) = wilson_interval(hits, trials);
        Self { hits, trials, estimate: hits as f64 / trials.max(1) as f64, lower, upper, one_sided: false }
    }

    /// `log estimate`, or `None` for zero hits.
    pub fn log_estimate(&self) -> Option<f64> {
        (self.hits > 0).then(|| self.estimate.ln())
    }

    /// Frequency of the complementary event (e.g. type-II error from a rejection rate).
    pub fn complement(&self) -> Self {
        Self::new(self.trials - self.hits, self.trials)
    }

    pub fn overlaps(&self, other: &Proportion) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }
}

/// 95% Wilson score interval.
pub fn wilson_interval(hits: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Prior probability of each neighborhood and of both jointly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorMass {
    pub pi: Proportion,
    pub mu: Proportion,
    pub joint: Proportion,
}

/// Fraction of `m` prior draws landing in the neighborhoods.
pub fn prior_mass_estimate(prior: &GmmPrior, spec: &KlNeighborhoodSpec, m: usize, seed: u64) -> Result<PriorMass> {
    if m < 100 {
        return Err(Error::invalid("prior mass estimates need m >= 100 draws"));
    }
    prior.validate()?;
    spec.validate()?;
    Error::check_len(prior.k(), spec.center_weights.len())?;
    Error::check_len(prior.d(), spec.center_atoms[0].len())?;
    let sd = prior.mean_prior.variance_scale.sqrt();
    let hits = (0..m)
        .into_par_iter()
        .map(|i| -> Result<(usize, usize, usize)> {
            let mut rng = stream_rng(derive_seed(seed, &[i as u64]), 0x5052_494f);
            let pi = SimplexVector::from_weights(&dirichlet_draw(&mut rng, &prior.dirichlet.concentration))?;
            let mu: Vec<Vec<f64>> = (0..prior.k())
                .map(|_| prior.mean_prior.mean.iter().map(|c| c + sd * standard_normal(&mut rng)).collect())
                .collect();
            let a = in_pi_neighborhood(&pi, spec)?;
            let b = in_mu_neighborhood(&mu, spec)?;
            Ok((a as usize, b as usize, (a && b) as usize))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0, 0, 0), |acc, h| (acc.0 + h.0, acc.1 + h.1, acc.2 + h.2));
    Ok(PriorMass { pi: Proportion::new(hits.0, m), mu: Proportion::new(hits.1, m), joint: Proportion::new(hits.2, m) })
}

/// `eps_n^kappa + eps_pi^2 + eps_mu^2 - (log P_pi + log P_mu) / n`, without
/// the unspecified multiplicative constants.
pub fn theorem2_rhs(
    eps_n: f64,
    kappa: f64,
    eps_pi: f64,
    eps_mu: f64,
    log_prior_mass_pi: f64,
    log_prior_mass_mu: f64,
    n: usize,
) -> Result<f64> {
    let inputs = [eps_n, kappa, eps_pi, eps_mu, log_prior_mass_pi, log_prior_mass_mu];
    if inputs.iter().any(|x| !x.is_finite()) || n == 0 {
        return Err(Error::invalid("inputs must be finite and n >= 1"));
    }
    let n = n as f64;
    Ok(eps_n.powf(kappa) + eps_pi * eps_pi + eps_mu * eps_mu - log_prior_mass_pi / n - log_prior_mass_mu / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(pi_star: &[f64], eps_pi: f64, eps_mu: f64) -> KlNeighborhoodSpec {
        let k = pi_star.len();
        KlNeighborhoodSpec::new(SimplexVector::new(pi_star.to_vec()).unwrap(), vec![vec![0.0]; k], eps_pi, eps_mu)
            .unwrap()
    }

    #[test]
    fn pi_membership_examples() {
        let s = spec(&[0.5, 0.5], 0.3, 0.5);
        assert!(in_pi_neighborhood(&s.center_weights, &s).unwrap());
        let pi = SimplexVector::new(vec![0.7, 0.3]).unwrap();
        // D = 0.0871766, V = 0.1870778 with pi* = (0.5, 0.5)
        assert!(!in_pi_neighborhood(&pi, &s).unwrap());
        assert!(!in_pi_neighborhood(&pi, &spec(&[0.5, 0.5], 0.41, 0.5)).unwrap());
        assert!(in_pi_neighborhood(&pi, &spec(&[0.5, 0.5], 0.44, 0.5)).unwrap());
        // reversed roles: D = 0.0822829, V = 0.1575323
        let half = SimplexVector::uniform(2);
        assert!(!in_pi_neighborhood(&half, &spec(&[0.7, 0.3], 0.3, 0.5)).unwrap());
        assert!(in_pi_neighborhood(&half, &spec(&[0.7, 0.3], 0.41, 0.5)).unwrap());
        assert!(!in_pi_neighborhood(&SimplexVector::new(vec![1.0, 0.0]).unwrap(), &s).unwrap());
    }

    #[test]
    fn mu_membership_examples() {
        let s = spec(&[1.0], 0.5, 0.15);
        assert!(in_mu_neighborhood(&[vec![0.0]], &s).unwrap());
        assert!(!in_mu_neighborhood(&[vec![0.2]], &s).unwrap());
        assert!(in_mu_neighborhood(&[vec![0.1]], &s).unwrap());
        let (kl, v) = gaussian_shift_divergences(0.01);
        assert!((kl - 0.005).abs() < 1e-15 && (v - 0.010025).abs() < 1e-15);
        assert!(in_mu_neighborhood(&[vec![0.0], vec![1.0]], &s).is_err());
    }

    #[test]
    fn shift_v_matches_quadrature() {
        // log ratio under N(0,1) for shift t is t z + t^2/2
        let t: f64 = 0.7;
        let (a, b, m) = (-12.0, 12.0, 200_000);
        let h = (b - a) / m as f64;
        let mut v = 0.0;
        for i in 0..=m {
            let z = a + i as f64 * h;
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            let l = t * z + 0.5 * t * t;
            v += w * h * l * l * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        }
        assert!((v - gaussian_shift_divergences(t * t).1).abs() < 1e-10);
    }

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.403_831_9).abs() < 1e-6 && (hi - 0.596_168_1).abs() < 1e-6);
        let p = Proportion::new(0, 100);
        assert!(p.one_sided && p.estimate == 0.0 && p.log_estimate().is_none());
        assert!((p.upper - 0.029_513_3).abs() < 1e-6);
    }

    #[test]
    fn rhs_examples() {
        assert_eq!(theorem2_rhs(0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 10).unwrap(), 0.0);
        let v = theorem2_rhs(0.1, 2.0, 0.1, 0.1, -1.0, -1.0, 100).unwrap();
        assert!((v - 0.05).abs() < 1e-15);
        let a = theorem2_rhs(0.1, 2.0, 0.1, 0.1, -3.0, -2.0, 50).unwrap();
        let b = theorem2_rhs(0.1, 2.0, 0.1, 0.1, -3.0, -2.0, 51).unwrap();
        assert!(b <= a);
        assert!(theorem2_rhs(f64::NAN, 2.0, 0.1, 0.1, 0.0, 0.0, 1).is_err());
    }

    #[test]
    fn prior_mass_degenerate_and_zero() {
        let center = SimplexVector::uniform(2);
        let s = KlNeighborhoodSpec::new(center.clone(), vec![vec![0.0], vec![0.0]], 0.9, 0.1).unwrap();
        let tight = GmmPrior::symmetric(2, 1e6, vec![0.0], 1e-12).unwrap();
        let m = prior_mass_estimate(&tight, &s, 200, 1).unwrap();
        assert_eq!(m.joint.hits, 200);
        let far = GmmPrior::symmetric(2, 1.0, vec![50.0], 1e-12).unwrap();
        let z = prior_mass_estimate(&far, &s, 100, 1).unwrap();
        assert!(z.mu.one_sided && z.mu.estimate == 0.0 && z.mu.upper > 0.0);
        assert!(prior_mass_estimate(&far, &s, 99, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn pi_membership_monotone(a in 0.01f64..0.99, b in 0.01f64..0.99, e in 0.01f64..0.98, grow in 0.0f64..0.5) {
            let e2 = (e + grow).min(0.999);
            let pi = SimplexVector::new(vec![b, 1.0 - b]).unwrap();
            let small = in_pi_neighborhood(&pi, &spec(&[a, 1.0 - a], e, 0.5)).unwrap();
            let large = in_pi_neighborhood(&pi, &spec(&[a, 1.0 - a], e2, 0.5)).unwrap();
            prop_assert!(!small || large);
        }

        #[test]
        fn mu_membership_monotone(x in -1.0f64..1.0, y in -1.0f64..1.0, e in 0.01f64..0.98, grow in 0.0f64..0.5) {
            let e2 = (e + grow).min(0.999);
            let s1 = KlNeighborhoodSpec::new(SimplexVector::uniform(1), vec![vec![0.0, 0.0]], 0.5, e).unwrap();
            let s2 = KlNeighborhoodSpec::new(SimplexVector::uniform(1), vec![vec![0.0, 0.0]], 0.5, e2).unwrap();
            let mu = [vec![x * 0.3, y * 0.3]];
            prop_assert!(!in_mu_neighborhood(&mu, &s1).unwrap() || in_mu_neighborhood(&mu, &s2).unwrap());
        }
    }
}
