use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use mfvb_ffi::*;

unsafe fn measure(weights: &[f64], atoms: &[f64], d: usize) -> *mut MfvbMeasure {
    let mut m = ptr::null_mut();
    let s = mfvb_measure_new(weights.as_ptr(), atoms.as_ptr(), weights.len(), d, &mut m);
    assert_eq!(s, MfvbStatus::Ok);
    m
}

#[test]
fn wasserstein_round_trip() {
    unsafe {
        let p = measure(&[0.5, 0.5], &[0.0, 0.0, 1.0, 0.0], 2);
        let q = measure(&[1.0], &[0.0, 0.0], 2);
        assert_eq!(mfvb_measure_k(p), 2);
        assert_eq!(mfvb_measure_dim(p), 2);
        let mut w = f64::NAN;
        assert_eq!(mfvb_wasserstein(p, q, 1.0, &mut w), MfvbStatus::Ok);
        assert!((w - 0.5).abs() < 1e-12);
        assert!(mfvb_last_error().is_null());

        let mut weights = [0.0; 2];
        let mut atoms = [0.0; 4];
        assert_eq!(mfvb_measure_copy(p, weights.as_mut_ptr(), 2, atoms.as_mut_ptr(), 4), MfvbStatus::Ok);
        assert_eq!(weights, [0.5, 0.5]);
        assert_eq!(atoms, [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(
            mfvb_measure_copy(p, weights.as_mut_ptr(), 1, atoms.as_mut_ptr(), 4),
            MfvbStatus::DimensionMismatch
        );
        mfvb_measure_free(p);
        mfvb_measure_free(q);
        mfvb_measure_free(ptr::null_mut());
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut m = ptr::null_mut();
        let s = mfvb_measure_new([0.7, 0.7].as_ptr(), [0.0, 1.0].as_ptr(), 2, 1, &mut m);
        assert_eq!(s, MfvbStatus::InvalidArgument);
        assert!(m.is_null());
        let msg = CStr::from_ptr(mfvb_last_error()).to_string_lossy();
        assert!(!msg.is_empty());

        let mut v = 0.0;
        assert_eq!(mfvb_wasserstein(ptr::null(), ptr::null(), 1.0, &mut v), MfvbStatus::NullPointer);
        assert_eq!(mfvb_digamma(-1.0, &mut v), MfvbStatus::InvalidArgument);
        let p = [0.5, 0.5];
        let q = [1.0, 0.0];
        assert_eq!(mfvb_kl_categorical(p.as_ptr(), q.as_ptr(), 2, &mut v), MfvbStatus::InfiniteDivergence);
    }
}

#[test]
fn scalar_functions() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(mfvb_digamma(1.0, &mut v), MfvbStatus::Ok);
        assert!((v + 0.577_215_664_901_532_9).abs() < 1e-12);
        let p = [0.7, 0.3];
        let q = [0.5, 0.5];
        assert_eq!(mfvb_kl_categorical(p.as_ptr(), q.as_ptr(), 2, &mut v), MfvbStatus::Ok);
        assert!((v - 0.082_282_878_505_051_78).abs() < 1e-12);
        assert_eq!(mfvb_hellinger_sq_categorical(p.as_ptr(), q.as_ptr(), 2, &mut v), MfvbStatus::Ok);
        assert!((v - 0.042_187_374_138_593_41).abs() < 1e-12);

        let a = measure(&[1.0], &[0.0], 1);
        let b = measure(&[1.0], &[1.0], 1);
        let (mut est, mut se) = (0.0, 0.0);
        assert_eq!(mfvb_hellinger_sq_mixture(a, b, 20_000, 3, &mut est, &mut se), MfvbStatus::Ok);
        assert!((est - 0.235_006_194_830_809_2).abs() <= 4.0 * se);
        mfvb_measure_free(a);
        mfvb_measure_free(b);
    }
}

#[test]
fn gmm_fit_and_point_estimate() {
    let obs: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { -5.0 } else { 5.0 } + 0.1 * ((i % 7) as f64 - 3.0)).collect();
    unsafe {
        let mut fit = ptr::null_mut();
        assert_eq!(mfvb_gmm_fit(obs.as_ptr(), 200, 1, 2, 1.0, 100.0, 3, 7, &mut fit), MfvbStatus::Ok);
        let (mut elbo, mut iters, mut conv) = (0.0, 0, false);
        assert_eq!(mfvb_gmm_fit_summary(fit, &mut elbo, &mut iters, &mut conv), MfvbStatus::Ok);
        assert!(elbo.is_finite() && iters > 0 && conv);

        let mut m = ptr::null_mut();
        assert_eq!(mfvb_gmm_fit_point_estimate(fit, &mut m), MfvbStatus::Ok);
        let mut weights = [0.0; 2];
        let mut atoms = [0.0; 2];
        assert_eq!(mfvb_measure_copy(m, weights.as_mut_ptr(), 2, atoms.as_mut_ptr(), 2), MfvbStatus::Ok);
        atoms.sort_by(f64::total_cmp);
        assert!((atoms[0] + 5.0).abs() < 0.1 && (atoms[1] - 5.0).abs() < 0.1, "{atoms:?}");
        assert!(weights.iter().all(|w| (w - 0.5).abs() < 0.02));
        mfvb_measure_free(m);
        mfvb_gmm_fit_free(fit);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/mfvb.h");
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header]).status() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(status.success());
}
