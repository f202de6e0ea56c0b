use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{log_sum_exp, unit_gaussian_log_density, SimplexVector};

/// A finitely supported mixing measure `sum_k w_k delta_{atom_k}`.
///
/// Also serves as the parameter point `(pi, mu)` of a unit-variance
/// Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct MixingMeasure {
    weights: SimplexVector,
    atoms: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    weights: SimplexVector,
    atoms: Vec<Vec<f64>>,
}

impl TryFrom<RawMeasure> for MixingMeasure {
    type Error = Error;
    fn try_from(r: RawMeasure) -> Result<Self> {
        MixingMeasure::new(r.weights, r.atoms)
    }
}

impl From<MixingMeasure> for RawMeasure {
    fn from(m: MixingMeasure) -> Self {
        RawMeasure { weights: m.weights, atoms: m.atoms }
    }
}

impl MixingMeasure {
    pub fn new(weights: SimplexVector, atoms: Vec<Vec<f64>>) -> Result<Self> {
        Error::check_len(weights.len(), atoms.len())?;
        let d = atoms.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::invalid("atoms must have positive dimension"));
        }
        for row in &atoms {
            Error::check_len(d, row.len())?;
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("atoms must be finite"));
            }
        }
        Ok(Self { weights, atoms })
    }

    pub fn from_parts(weights: &[f64], atoms: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(SimplexVector::new(weights.to_vec())?, atoms)
    }

    /// A single atom with unit mass.
    pub fn point(atom: Vec<f64>) -> Result<Self> {
        Self::new(SimplexVector::new(vec![1.0])?, vec![atom])
    }

    pub fn k(&self) -> usize {
        self.atoms.len()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn weights(&self) -> &SimplexVector {
        &self.weights
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    /// Relabel components: output component `k` is input component `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            weights: self.weights.permuted(perm),
            atoms: perm.iter().map(|&j| self.atoms[j].clone()).collect(),
        }
    }

    /// `log f(y | P)` for the unit-variance Gaussian location mixture.
    pub fn mixture_log_density(&self, y: &[f64]) -> f64 {
        let mut terms = [0.0f64; 16];
        let k = self.k();
        let mut heap;
        let buf: &mut [f64] = if k <= terms.len() {
            &mut terms[..k]
        } else {
            heap = vec![0.0; k];
            &mut heap
        };
        for (slot, (w, atom)) in buf.iter_mut().zip(self.weights.as_slice().iter().zip(&self.atoms)) {
            *slot = if *w > 0.0 {
                w.ln() + unit_gaussian_log_density(y, atom)
            } else {
                f64::NEG_INFINITY
            };
        }
        log_sum_exp(buf).expect("nonempty")
    }

    /// Exact mixture log likelihood `sum_i log f(y_i | P)`.
    pub fn log_likelihood(&self, observations: &[Vec<f64>]) -> f64 {
        observations.iter().map(|y| self.mixture_log_density(y)).sum()
    }
}
