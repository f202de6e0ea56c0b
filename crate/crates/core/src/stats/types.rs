use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the unit-sum constraint of a [`SimplexVector`].
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A probability vector over `K` categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("simplex vector must be nonempty"));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::invalid(format!("entry {i} = {p} is not a probability")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!("entries sum to {s}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Normalize a nonnegative vector with positive total mass.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0 && s.is_finite()) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("weights must be nonnegative with positive finite sum"));
        }
        Self::new(weights.iter().map(|w| w / s).collect())
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Apply a permutation: output index `k` takes entry `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self(perm.iter().map(|&j| self.0[j]).collect())
    }
}

impl std::ops::Index<usize> for SimplexVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(s: SimplexVector) -> Self {
        s.0
    }
}

/// Isotropic Gaussian `N(mean, variance_scale * I_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mean: Vec<f64>,
    pub variance_scale: f64,
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, variance_scale: f64) -> Result<Self> {
        let g = Self { mean, variance_scale };
        g.validate()?;
        Ok(g)
    }

    pub fn unit(mean: Vec<f64>) -> Self {
        Self { mean, variance_scale: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance_scale > 0.0 && self.variance_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "variance_scale must be positive, got {}",
                self.variance_scale
            )));
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("gaussian mean has non-finite entries"));
        }
        Ok(())
    }
}

/// Dirichlet distribution by its concentration vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSpec {
    pub concentration: Vec<f64>,
}

impl DirichletSpec {
    pub fn new(concentration: Vec<f64>) -> Result<Self> {
        let d = Self { concentration };
        d.validate()?;
        Ok(d)
    }

    pub fn symmetric(k: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![alpha; k])
    }

    pub fn len(&self) -> usize {
        self.concentration.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concentration.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.concentration.is_empty() {
            return Err(Error::invalid("dirichlet needs at least one category"));
        }
        if self.concentration.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::invalid("dirichlet concentrations must be positive"));
        }
        Ok(())
    }

    pub fn mean(&self) -> SimplexVector {
        let s: f64 = self.concentration.iter().sum();
        let mut p: Vec<f64> = self.concentration.iter().map(|a| a / s).collect();
        // renormalize so the sum is exact to rounding
        let t: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= t);
        SimplexVector(p)
    }
}
