use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gmm::{cavi_fit, omega_decomposition, simulate_gmm, FitOptions, GmmInit, GmmModel, GmmPrior};
use crate::measure::MixingMeasure;
use crate::rng::{derive_seed, dirichlet_draw, standard_normal, stream_rng, StreamRng};
use crate::stats::{hellinger_sq_gaussian, hellinger_sq_mixture_mc, kl_dual_check, GaussianSpec, SimplexVector};
use crate::transport::{lemma1_bounds, match_components, wasserstein_distance, wasserstein_oracle};

use super::config::{ExperimentConfig, FitSettings, GmmModelConfig, GmmPriorConfig, LdaModelConfig, ModelConfig};
use super::sweep::{run_sweep, FitDiagnostics, SweepOptions};
use super::Metric;

pub const VERIFY_REPORT_SCHEMA: &str = "mfvb.verify_report.v1";

/// Signature of a `W_r` solver under test.
pub type W1Solver = fn(&MixingMeasure, &MixingMeasure, f64) -> Result<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed violation measure (suite specific; 0 when none).
    pub max_violation: f64,
    pub detail: String,
}

impl SuiteResult {
    fn new(name: &str, cases: usize, failures: usize, max_violation: f64, detail: String) -> Self {
        Self { name: name.to_string(), passed: failures == 0 && cases > 0, cases, failures, max_violation, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn failing(&self) -> Vec<&str> {
        self.suites.iter().filter(|s| !s.passed).map(|s| s.name.as_str()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub w1_solver: W1Solver,
    pub w1_cases: usize,
    pub hellinger_pairs: usize,
    pub dual_cases: usize,
    pub lemma_pairs: usize,
    pub fit_replicates: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            w1_solver: wasserstein_distance,
            w1_cases: 500,
            hellinger_pairs: 100,
            dual_cases: 1000,
            lemma_pairs: 200,
            fit_replicates: 4,
        }
    }
}

fn random_measure(rng: &mut StreamRng, k: usize, d: usize, scale: f64, zero_prob: f64) -> MixingMeasure {
    let mut w = dirichlet_draw(rng, &vec![1.0; k]);
    for x in w.iter_mut() {
        if rng.gen::<f64>() < zero_prob {
            *x = 0.0;
        }
    }
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let atoms = (0..k).map(|_| (0..d).map(|_| scale * standard_normal(rng)).collect()).collect();
    let weights = SimplexVector::from_weights(&w).expect("positive total mass");
    MixingMeasure::new(weights, atoms).expect("valid random measure")
}

/// Exact solver against vertex enumeration on small instances.
pub fn w1_oracle_battery(cases: usize, seed: u64, solver: W1Solver) -> SuiteResult {
    let tol = 1e-9;
    let mut rng = stream_rng(seed, 0x5731);
    let (mut failures, mut worst) = (0, 0.0f64);
    for _ in 0..cases {
        let d = rng.gen_range(1..=3);
        let (k1, k2) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let r = if rng.gen::<bool>() { 1.0 } else { 2.0 };
        let p = random_measure(&mut rng, k1, d, 2.0, 0.1);
        let q = random_measure(&mut rng, k2, d, 2.0, 0.1);
        let err = match (solver(&p, &q, r), wasserstein_oracle(&p, &q, r)) {
            (Ok(a), Ok(b)) => (a - b).abs(),
            _ => f64::INFINITY,
        };
        worst = worst.max(err);
        failures += usize::from(!(err <= tol));
    }
    SuiteResult::new("w1_oracle", cases, failures, worst, format!("max |solver - oracle| = {worst:.3e} (tol {tol:e})"))
}

fn gaussian_quadrature_h2(a: (f64, f64), b: (f64, f64)) -> f64 {
    // composite Simpson for 2 - 2 int sqrt(f g)
    let sd = a.1.sqrt().max(b.1.sqrt());
    let (lo, hi) = (a.0.min(b.0) - 40.0 * sd, a.0.max(b.0) + 40.0 * sd);
    let m = 400_000;
    let h = (hi - lo) / m as f64;
    let dens = |y: f64, (mu, var): (f64, f64)| (-(y - mu) * (y - mu) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    let f = |y: f64| (dens(y, a) * dens(y, b)).sqrt();
    let mut s = f(lo) + f(hi);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    2.0 - 2.0 * s * h / 3.0
}

/// Hand-picked one-dimensional pairs `(mean, variance)` for the quadrature check.
pub const QUADRATURE_CASES: [((f64, f64), (f64, f64)); 10] = [
    ((0.0, 1.0), (0.0, 1.0)),
    ((0.0, 1.0), (1.0, 1.0)),
    ((0.0, 1.0), (0.5, 1.0)),
    ((0.0, 1.0), (3.0, 1.0)),
    ((0.0, 1.0), (0.0, 2.0)),
    ((0.0, 1.0), (1.0, 0.5)),
    ((-2.0, 1.5), (2.0, 0.7)),
    ((0.0, 1.0), (10.0, 1.0)),
    ((0.3, 0.1), (0.35, 0.12)),
    ((1.0, 4.0), (-1.0, 9.0)),
];

/// Monte Carlo mixture Hellinger against the Gaussian closed form on
/// single-atom pairs, and the closed form against quadrature.
pub fn hellinger_battery(pairs: usize, seed: u64) -> SuiteResult {
    let mut rng = stream_rng(seed, 0x4845);
    let (mut mc_fail, mut worst_z) = (0, 0.0f64);
    for i in 0..pairs {
        let d = rng.gen_range(1..=3);
        let a: Vec<f64> = (0..d).map(|_| 1.5 * standard_normal(&mut rng)).collect();
        let b: Vec<f64> = (0..d).map(|_| 1.5 * standard_normal(&mut rng)).collect();
        let exact = hellinger_sq_gaussian(&GaussianSpec::unit(a.clone()), &GaussianSpec::unit(b.clone())).unwrap_or(f64::NAN);
        let p = MixingMeasure::point(a).expect("atom");
        let q = MixingMeasure::point(b).expect("atom");
        let ok = match hellinger_sq_mixture_mc(&p, &q, 4000, derive_seed(seed, &[i as u64])) {
            Ok(est) => {
                let dev = (est.estimate - exact).abs();
                if est.std_error > 0.0 {
                    worst_z = worst_z.max(dev / est.std_error);
                }
                dev <= 3.0 * est.std_error + 1e-12
            }
            Err(_) => false,
        };
        mc_fail += usize::from(!ok);
    }
    let (mut quad_fail, mut worst_quad) = (0, 0.0f64);
    for &(a, b) in &QUADRATURE_CASES {
        let closed = hellinger_sq_gaussian(
            &GaussianSpec { mean: vec![a.0], variance_scale: a.1 },
            &GaussianSpec { mean: vec![b.0], variance_scale: b.1 },
        )
        .unwrap_or(f64::NAN);
        let err = (closed - gaussian_quadrature_h2(a, b)).abs();
        worst_quad = worst_quad.max(err);
        quad_fail += usize::from(!(err <= 1e-10));
    }
    SuiteResult::new(
        "hellinger_cross_check",
        pairs + QUADRATURE_CASES.len(),
        mc_fail + quad_fail,
        worst_z.max(worst_quad),
        format!(
            "{mc_fail}/{pairs} Monte Carlo pairs outside 3 std errors (max {worst_z:.2} se); \
             {quad_fail}/{} closed forms off quadrature by > 1e-10 (max {worst_quad:.2e})",
            QUADRATURE_CASES.len()
        ),
    )
}

/// Both sides of the Gibbs variational identity on random discrete instances.
pub fn kl_dual_battery(cases: usize, seed: u64) -> SuiteResult {
    let mut rng = stream_rng(seed, 0x4b4c);
    let (mut failures, mut worst) = (0, 0.0f64);
    for _ in 0..cases {
        let k = rng.gen_range(2..=10);
        let mu = SimplexVector::from_weights(&dirichlet_draw(&mut rng, &vec![1.0; k])).expect("dirichlet draw");
        let h: Vec<f64> = (0..k).map(|_| 3.0 * standard_normal(&mut rng)).collect();
        let err = kl_dual_check(&mu, &h).map_or(f64::INFINITY, |c| (c.lhs - c.rhs).abs());
        worst = worst.max(err);
        failures += usize::from(!(err <= 1e-10));
    }
    SuiteResult::new("kl_dual", cases, failures, worst, format!("max |lhs - rhs| = {worst:.3e} (tol 1e-10)"))
}

/// ELBO drops beyond `slack` across the given fits.
pub fn elbo_battery(fits: &[FitDiagnostics], slack: f64) -> SuiteResult {
    let fitted: Vec<&FitDiagnostics> = fits.iter().filter(|f| f.error.is_none()).collect();
    let worst = fitted.iter().map(|f| f.max_elbo_drop).fold(0.0, f64::max);
    let failures = fitted.iter().filter(|f| !(f.max_elbo_drop <= slack)).count();
    SuiteResult::new(
        "elbo_monotonicity",
        fitted.len(),
        failures,
        worst,
        format!("{} fits, largest ELBO drop {worst:.3e} (slack {slack:e})", fitted.len()),
    )
}

/// `Delta >= -3 se` on every converged fit that carries a decomposition,
/// and `|Delta| <= 3 se` on one-component controls `(delta, se)`.
pub fn delta_battery(fits: &[FitDiagnostics], controls: &[(f64, f64)]) -> SuiteResult {
    let mut cases = 0;
    let mut failures = 0;
    let mut worst = 0.0f64;
    for f in fits.iter().filter(|f| f.converged) {
        if let (Some(d), Some(se)) = (f.delta_gap, f.delta_gap_se) {
            cases += 1;
            let v = -d - 3.0 * se;
            worst = worst.max(v);
            failures += usize::from(v > 0.0);
        }
    }
    let mut control_fail = 0;
    for &(d, se) in controls {
        cases += 1;
        let v = d.abs() - (3.0 * se).max(1e-9);
        worst = worst.max(v);
        control_fail += usize::from(v > 0.0);
    }
    SuiteResult::new(
        "delta_nonnegative",
        cases,
        failures + control_fail,
        worst,
        format!("{failures} fits with Delta < -3 se; {control_fail}/{} one-component controls with |Delta| > 3 se", controls.len()),
    )
}

/// Outcome of the W1 matching-bound battery: the atom bound, the weight bound as
/// stated, and diagnostics for the weight bound with a factor 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Battery {
    pub atom: SuiteResult,
    pub weight: SuiteResult,
    pub doubled_weight_violations: usize,
    /// Largest `weight_l1 / stated_weight_bound` seen.
    pub max_weight_ratio: f64,
}

/// Random `(P*, P)` pairs with `W_1(P*, P) < eps < zeta * delta`, where
/// `delta < min pi*` and `zeta` is the minimum atom separation of `P*`.
/// `P` perturbs both atoms and weights; `eps` sits just above `W_1`.
pub fn lemma1_battery(pairs: usize, seed: u64) -> Lemma1Battery {
    let mut rng = stream_rng(seed, 0x4c31);
    let (mut atom_fail, mut weight_fail, mut doubled_fail) = (0, 0, 0);
    let (mut atom_worst, mut ratio_worst) = (0.0f64, 0.0f64);
    let mut done = 0;
    while done < pairs {
        let k = rng.gen_range(2..=4);
        let d = rng.gen_range(1..=3);
        let pi_star = dirichlet_draw(&mut rng, &vec![2.0; k]);
        if pi_star.iter().any(|&p| p < 0.05) {
            continue;
        }
        let atoms: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| 3.0 * standard_normal(&mut rng)).collect()).collect();
        let star = MixingMeasure::new(SimplexVector::from_weights(&pi_star).expect("dirichlet draw"), atoms.clone())
            .expect("valid truth");
        let mut zeta = f64::INFINITY;
        for i in 0..k {
            for j in 0..i {
                zeta = zeta.min(crate::stats::sq_dist(&atoms[i], &atoms[j]).sqrt());
            }
        }
        let delta = star.weights().as_slice().iter().copied().fold(1.0, f64::min) * (1.0 - 1e-9);
        // perturbation sizes on a log scale relative to the valid regime
        let mut scale = zeta * delta * 10f64.powf(rng.gen_range(-3.0..0.0));
        let mix = rng.gen::<f64>();
        let mut attempt = 0;
        loop {
            attempt += 1;
            let moved: Vec<Vec<f64>> = atoms
                .iter()
                .map(|a| a.iter().map(|x| x + mix * scale * standard_normal(&mut rng) / (d as f64).sqrt()).collect())
                .collect();
            let noise = dirichlet_draw(&mut rng, &vec![1.0; k]);
            let t = ((1.0 - mix) * scale / zeta).min(0.5);
            let w: Vec<f64> = star.weights().as_slice().iter().zip(&noise).map(|(p, z)| (1.0 - t) * p + t * z).collect();
            let w = SimplexVector::from_weights(&w).expect("positive weights");
            let p = MixingMeasure::new(w, moved).expect("valid perturbation");
            let Ok(w1) = wasserstein_distance(&star, &p, 1.0) else { break };
            let eps = w1 * (1.0 + 1e-9) + 1e-15;
            let bounds = lemma1_bounds(eps, delta, zeta);
            if !bounds.valid {
                scale *= 0.5;
                if attempt < 60 {
                    continue;
                }
                break;
            }
            let Ok(m) = match_components(&p, &star) else { break };
            let wb = bounds.weight_bound.expect("valid regime");
            atom_worst = atom_worst.max(m.max_atom_error / bounds.atom_bound);
            ratio_worst = ratio_worst.max(m.weight_l1_error / wb);
            atom_fail += usize::from(!(m.max_atom_error < bounds.atom_bound));
            weight_fail += usize::from(!(m.weight_l1_error < wb));
            doubled_fail += usize::from(!(m.weight_l1_error < 2.0 * wb));
            done += 1;
            break;
        }
    }
    Lemma1Battery {
        atom: SuiteResult::new(
            "lemma1_atom_bound",
            pairs,
            atom_fail,
            atom_worst,
            format!("{atom_fail}/{pairs} violations; max atom_error / (eps/delta) = {atom_worst:.4}"),
        ),
        weight: SuiteResult::new(
            "lemma1_weight_bound",
            pairs,
            weight_fail,
            ratio_worst,
            format!(
                "{weight_fail}/{pairs} violations of eps/(zeta - eps/delta); max ratio {ratio_worst:.4}; \
                 {doubled_fail} violations of 2 eps/(zeta - eps/delta)"
            ),
        ),
        doubled_weight_violations: doubled_fail,
        max_weight_ratio: ratio_worst,
    }
}

/// One-component fit: `(Delta, se)` of the Omega decomposition.
pub fn delta_one_component_control(n: usize, seed: u64) -> Result<(f64, f64)> {
    let truth = MixingMeasure::point(vec![0.5, -1.0])?;
    let prior = GmmPrior::symmetric(1, 1.0, vec![0.0, 0.0], 100.0)?;
    let data = simulate_gmm(&GmmModel::new(truth.clone()), n, derive_seed(seed, &[0]))?;
    let state = cavi_fit(&data, &prior, GmmInit::Seeded { seed: derive_seed(seed, &[1]), restarts: 1 }, FitOptions::default())?;
    let om = omega_decomposition(&state, &data, &prior, &truth, 200, derive_seed(seed, &[2]))?;
    Ok((om.delta_gap, om.delta_gap_se))
}

fn small_fits(seed: u64, replicates: usize) -> Result<(Vec<FitDiagnostics>, Vec<FitDiagnostics>)> {
    let gmm = ExperimentConfig {
        schema_version: 1,
        model: ModelConfig::Gmm(GmmModelConfig {
            k: 3,
            d: 2,
            truth: Some(MixingMeasure::from_parts(&[0.4, 0.35, 0.25], vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 4.0]])?),
            truth_seed: None,
            prior: GmmPriorConfig::default(),
        }),
        n_grid: vec![200, 400],
        replicates,
        restarts: 2,
        metrics: vec![Metric::W1Sq],
        risk_samples: 5,
        master_seed: seed,
        output_path: None,
        fit: FitSettings::default(),
        omega_samples: 50,
    };
    let lda = ExperimentConfig {
        model: ModelConfig::Lda(LdaModelConfig {
            k: 3,
            v: 30,
            docs: 10,
            sparsity: 2.0,
            delta0: Some(0.02),
            truth: None,
            truth_seed: Some(seed),
        }),
        n_grid: vec![40, 80],
        metrics: vec![Metric::PerWordHellinger],
        omega_samples: 0,
        restarts: 1,
        ..gmm.clone()
    };
    let opts = SweepOptions::default();
    Ok((run_sweep(&gmm, &opts)?.fits, run_sweep(&lda, &opts)?.fits))
}

pub fn verify_suite(seed: u64) -> VerifyReport {
    verify_suite_with(seed, &VerifyOptions::default())
}

/// Run every battery; failures are report content, never errors.
pub fn verify_suite_with(seed: u64, opts: &VerifyOptions) -> VerifyReport {
    let sub = |label: u64| derive_seed(seed, &[label]);
    let mut suites = vec![
        w1_oracle_battery(opts.w1_cases, sub(1), opts.w1_solver),
        hellinger_battery(opts.hellinger_pairs, sub(2)),
        kl_dual_battery(opts.dual_cases, sub(3)),
    ];
    match small_fits(sub(4), opts.fit_replicates) {
        Ok((gmm, lda)) => {
            let all: Vec<FitDiagnostics> = gmm.iter().chain(&lda).cloned().collect();
            suites.push(elbo_battery(&all, 1e-8));
            let controls: Vec<(f64, f64)> = (0..3).filter_map(|i| delta_one_component_control(300, sub(10 + i)).ok()).collect();
            let mut delta = delta_battery(&gmm, &controls);
            if controls.len() < 3 {
                delta.passed = false;
                delta.detail.push_str("; a one-component control fit failed");
            }
            suites.push(delta);
        }
        Err(e) => {
            for name in ["elbo_monotonicity", "delta_nonnegative"] {
                suites.push(SuiteResult::new(name, 0, 1, f64::INFINITY, format!("fits failed: {e}")));
            }
        }
    }
    let lemma = lemma1_battery(opts.lemma_pairs, sub(5));
    suites.push(lemma.atom);
    suites.push(lemma.weight);
    VerifyReport {
        schema: VERIFY_REPORT_SCHEMA.to_string(),
        seed,
        passed: suites.iter().all(|s| s.passed),
        suites,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_closed_form() {
        for &(a, b) in &QUADRATURE_CASES {
            let closed = hellinger_sq_gaussian(
                &GaussianSpec { mean: vec![a.0], variance_scale: a.1 },
                &GaussianSpec { mean: vec![b.0], variance_scale: b.1 },
            )
            .unwrap();
            assert!((closed - gaussian_quadrature_h2(a, b)).abs() <= 1e-10, "{a:?} {b:?}");
        }
    }

    #[test]
    fn small_batteries_pass() {
        assert!(w1_oracle_battery(50, 1, wasserstein_distance).passed);
        assert!(kl_dual_battery(100, 2).passed);
        assert!(lemma1_battery(30, 3).atom.passed);
    }

    #[test]
    fn faulty_solver_is_caught() {
        fn off(p: &MixingMeasure, q: &MixingMeasure, r: f64) -> Result<f64> {
            Ok(wasserstein_distance(p, q, r)? * 1.01 + 1e-6)
        }
        let s = w1_oracle_battery(20, 1, off);
        assert!(!s.passed && s.failures > 0);
    }

    #[test]
    fn stated_weight_bound_counterexample() {
        // P* = (1/2, 1/2) on {0, 1}; P moves 0.1 of mass: W1 = 0.1, L1 = 0.2
        let star = MixingMeasure::from_parts(&[0.5, 0.5], vec![vec![0.0], vec![1.0]]).unwrap();
        let p = MixingMeasure::from_parts(&[0.6, 0.4], vec![vec![0.0], vec![1.0]]).unwrap();
        let w1 = wasserstein_distance(&star, &p, 1.0).unwrap();
        assert!((w1 - 0.1).abs() < 1e-12);
        let b = lemma1_bounds(w1 * (1.0 + 1e-9), 0.45, 1.0);
        let l1 = match_components(&p, &star).unwrap().weight_l1_error;
        assert!(b.valid && l1 > b.weight_bound.unwrap());
        assert!(l1 < 2.0 * b.weight_bound.unwrap());
    }
}
