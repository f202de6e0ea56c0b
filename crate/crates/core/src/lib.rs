//! Mean-field variational Bayes for finite Gaussian mixtures and latent
//! Dirichlet allocation, together with the distances their convergence rates
//! are stated in and a harness that measures those rates empirically.
//!
//! * [`stats`]: simplex vectors, divergences, special functions.
//! * [`transport`]: exact Wasserstein distances between mixing measures.
//! * [`gmm`]: simulation and coordinate-ascent fitting of isotropic mixtures.
//! * [`lda`]: synthetic corpora and coordinate-ascent LDA.
//! * [`theory`]: KL neighborhoods, prior mass, covering nets, GLRT tests.
//! * [`harness`]: sweeps, rate fitting, the verification suite and file I/O.

pub mod error;
pub mod gmm;
pub mod harness;
pub mod lda;
pub mod measure;
pub mod rng;
pub mod stats;
pub mod theory;
pub mod transport;

pub use error::{Error, Result};
pub use measure::MixingMeasure;
