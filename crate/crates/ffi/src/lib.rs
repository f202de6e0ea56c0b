//! C ABI over `mfvb`.
//!
//! Every fallible call returns an [`MfvbStatus`]; on failure the message is
//! available from [`mfvb_last_error`] on the same thread. Objects are opaque
//! handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mfvb::gmm::{cavi_fit, point_estimate, FitOptions, GmmData, GmmInit, GmmPrior, GmmVariationalState};
use mfvb::stats::{digamma, hellinger_sq_categorical, hellinger_sq_mixture_mc, kl_categorical, SimplexVector};
use mfvb::transport::wasserstein_distance;
use mfvb::{Error, MixingMeasure};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfvbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InfiniteDivergence = 4,
    NonFinite = 5,
    SizeLimit = 6,
    Io = 7,
    Panic = 8,
}

/// Opaque finite mixing measure.
pub struct MfvbMeasure(MixingMeasure);

/// Opaque result of a Gaussian-mixture variational fit.
pub struct MfvbGmmFit(GmmVariationalState);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MfvbStatus {
    match e {
        Error::DimensionMismatch { .. } => MfvbStatus::DimensionMismatch,
        Error::InfiniteDivergence { .. } => MfvbStatus::InfiniteDivergence,
        Error::InvalidArgument(_) | Error::Config { .. } => MfvbStatus::InvalidArgument,
        Error::NonFinite { .. } => MfvbStatus::NonFinite,
        Error::SizeLimit(_) => MfvbStatus::SizeLimit,
        Error::Io(_) => MfvbStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MfvbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MfvbStatus::Ok
        }
        Ok(Err(Fail::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            MfvbStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_string());
            MfvbStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

unsafe fn values<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn rows(flat: &[f64], d: usize) -> Vec<Vec<f64>> {
    flat.chunks(d).map(<[f64]>::to_vec).collect()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn mfvb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Build a measure from `k` weights and `k * d` row-major atom coordinates.
///
/// # Safety
/// `weights` must hold `k` values, `atoms` `k * d` values, `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn mfvb_measure_new(
    weights: *const f64,
    atoms: *const f64,
    k: usize,
    d: usize,
    out_measure: *mut *mut MfvbMeasure,
) -> MfvbStatus {
    guard(|| {
        let slot = out(out_measure, "out_measure")?;
        if k == 0 || d == 0 {
            return Err(Error::InvalidArgument("k and d must be positive".into()).into());
        }
        let w = values(weights, k, "weights")?;
        let a = values(atoms, k * d, "atoms")?;
        let m = MixingMeasure::from_parts(w, rows(a, d))?;
        *slot = Box::into_raw(Box::new(MfvbMeasure(m)));
        Ok(())
    })
}

/// # Safety
/// `measure` must come from this library and not be freed twice; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mfvb_measure_free(measure: *mut MfvbMeasure) {
    if !measure.is_null() {
        drop(Box::from_raw(measure));
    }
}

/// Number of atoms, or 0 for NULL.
///
/// # Safety
/// `measure` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfvb_measure_k(measure: *const MfvbMeasure) -> usize {
    measure.as_ref().map_or(0, |m| m.0.k())
}

/// Atom dimension, or 0 for NULL.
///
/// # Safety
/// `measure` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfvb_measure_dim(measure: *const MfvbMeasure) -> usize {
    measure.as_ref().map_or(0, |m| m.0.dim())
}

/// Copy weights into `weights` (length `k`) and atoms into `atoms` (length `k * d`, row-major).
///
/// # Safety
/// Buffers must be writable for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn mfvb_measure_copy(
    measure: *const MfvbMeasure,
    weights: *mut f64,
    weights_len: usize,
    atoms: *mut f64,
    atoms_len: usize,
) -> MfvbStatus {
    guard(|| {
        let m = &deref(measure, "measure")?.0;
        let (k, d) = (m.k(), m.dim());
        if weights_len != k || atoms_len != k * d {
            return Err(Error::DimensionMismatch { expected: k * (d + 1), got: weights_len + atoms_len }.into());
        }
        if weights.is_null() {
            return Err(Fail::Null("weights"));
        }
        if atoms.is_null() {
            return Err(Fail::Null("atoms"));
        }
        slice::from_raw_parts_mut(weights, k).copy_from_slice(m.weights().as_slice());
        let dst = slice::from_raw_parts_mut(atoms, k * d);
        for (chunk, atom) in dst.chunks_mut(d).zip(m.atoms()) {
            chunk.copy_from_slice(atom);
        }
        Ok(())
    })
}

/// `W_r` between two measures with Euclidean ground cost, `r >= 1`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mfvb_wasserstein(
    p: *const MfvbMeasure,
    q: *const MfvbMeasure,
    r: f64,
    out_value: *mut f64,
) -> MfvbStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = wasserstein_distance(&deref(p, "p")?.0, &deref(q, "q")?.0, r)?;
        Ok(())
    })
}

/// Monte Carlo squared Hellinger distance (range `[0, 2]`) between the
/// unit-variance Gaussian location mixtures of two measures.
///
/// # Safety
/// Handles must be live; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn mfvb_hellinger_sq_mixture(
    p: *const MfvbMeasure,
    q: *const MfvbMeasure,
    samples: usize,
    seed: u64,
    out_estimate: *mut f64,
    out_std_error: *mut f64,
) -> MfvbStatus {
    guard(|| {
        let est = out(out_estimate, "out_estimate")?;
        let se = out(out_std_error, "out_std_error")?;
        let e = hellinger_sq_mixture_mc(&deref(p, "p")?.0, &deref(q, "q")?.0, samples, seed)?;
        *est = e.estimate;
        *se = e.std_error;
        Ok(())
    })
}

/// `KL(p || q)` for categorical distributions of length `len`.
///
/// # Safety
/// `p` and `q` must hold `len` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mfvb_kl_categorical(p: *const f64, q: *const f64, len: usize, out_value: *mut f64) -> MfvbStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let p = SimplexVector::new(values(p, len, "p")?.to_vec())?;
        let q = SimplexVector::new(values(q, len, "q")?.to_vec())?;
        *slot = kl_categorical(&p, &q)?;
        Ok(())
    })
}

/// Squared Hellinger distance (no 1/2 factor) for categorical distributions.
///
/// # Safety
/// `p` and `q` must hold `len` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mfvb_hellinger_sq_categorical(
    p: *const f64,
    q: *const f64,
    len: usize,
    out_value: *mut f64,
) -> MfvbStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let p = SimplexVector::new(values(p, len, "p")?.to_vec())?;
        let q = SimplexVector::new(values(q, len, "q")?.to_vec())?;
        *slot = hellinger_sq_categorical(&p, &q)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfvb_digamma(x: f64, out_value: *mut f64) -> MfvbStatus {
    guard(|| {
        *out(out_value, "out_value")? = digamma(x)?;
        Ok(())
    })
}

/// Fit a `k`-component mixture to `n` observations of dimension `d`
/// (row-major) under a `Dir(alpha)` x `N(0, prior_variance I)` prior.
///
/// # Safety
/// `observations` must hold `n * d` values; `out_fit` writable.
#[no_mangle]
pub unsafe extern "C" fn mfvb_gmm_fit(
    observations: *const f64,
    n: usize,
    d: usize,
    k: usize,
    alpha: f64,
    prior_variance: f64,
    restarts: usize,
    seed: u64,
    out_fit: *mut *mut MfvbGmmFit,
) -> MfvbStatus {
    guard(|| {
        let slot = out(out_fit, "out_fit")?;
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument("n and d must be positive".into()).into());
        }
        let data = GmmData::new(rows(values(observations, n * d, "observations")?, d))?;
        let prior = GmmPrior::symmetric(k, alpha, vec![0.0; d], prior_variance)?;
        let state = cavi_fit(&data, &prior, GmmInit::Seeded { seed, restarts }, FitOptions::default())?;
        *slot = Box::into_raw(Box::new(MfvbGmmFit(state)));
        Ok(())
    })
}

/// # Safety
/// `fit` must come from this library and not be freed twice; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mfvb_gmm_fit_free(fit: *mut MfvbGmmFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Final ELBO, iteration count and convergence flag of a fit.
///
/// # Safety
/// `fit` must be live; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn mfvb_gmm_fit_summary(
    fit: *const MfvbGmmFit,
    out_elbo: *mut f64,
    out_iterations: *mut usize,
    out_converged: *mut bool,
) -> MfvbStatus {
    guard(|| {
        let s = &deref(fit, "fit")?.0;
        *out(out_elbo, "out_elbo")? = s.elbo_trace.last().copied().unwrap_or(f64::NAN);
        *out(out_iterations, "out_iterations")? = s.iterations;
        *out(out_converged, "out_converged")? = s.converged;
        Ok(())
    })
}

/// Variational mean of the mixing measure as a new handle.
///
/// # Safety
/// `fit` must be live; `out_measure` writable.
#[no_mangle]
pub unsafe extern "C" fn mfvb_gmm_fit_point_estimate(
    fit: *const MfvbGmmFit,
    out_measure: *mut *mut MfvbMeasure,
) -> MfvbStatus {
    guard(|| {
        let slot = out(out_measure, "out_measure")?;
        let m = point_estimate(&deref(fit, "fit")?.0)?;
        *slot = Box::into_raw(Box::new(MfvbMeasure(m)));
        Ok(())
    })
}
