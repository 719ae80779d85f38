use std::ffi::CStr;
use std::ptr;

use qsched_ffi::*;

const THETA: [f64; 3] = [0.78, 0.14, 0.08];
const ETA: [f64; 4] = [0.135, 0.232, 0.239, 0.394];
const POWER: [f64; 4] = [0.04, 0.08, 0.16, 10.14];

fn config(capacity: usize) -> *mut QschedConfig {
    let mut cfg = ptr::null_mut();
    let s = unsafe { qsched_config_new(THETA.as_ptr(), 3, ETA.as_ptr(), POWER.as_ptr(), 4, capacity, &mut cfg) };
    assert_eq!(s, QschedStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(qsched_last_error_message()) }.to_str().unwrap().to_string()
}

#[test]
fn solve_and_read_back() {
    let cfg = config(40);
    unsafe {
        let mut rate = 0.0;
        assert_eq!(qsched_config_mean_rate(cfg, &mut rate), QschedStatus::Ok);
        assert!((rate - 0.30).abs() < 1e-12);
        let mut states = 0;
        assert_eq!(qsched_config_states(cfg, &mut states), QschedStatus::Ok);
        assert_eq!(states, 4);

        let mut sol = ptr::null_mut();
        assert_eq!(qsched_solve(cfg, 0.05, &mut sol), QschedStatus::Ok);
        let mut point = QschedPoint::default();
        assert_eq!(qsched_solution_point(sol, &mut point), QschedStatus::Ok);
        assert!(point.power <= 0.05 + 1e-9);
        assert!(point.delay > 0.0);

        let mut th = [0usize; 4];
        let mut fr = [0.0f64; 4];
        assert_eq!(qsched_solution_thresholds(sol, th.as_mut_ptr(), fr.as_mut_ptr(), 4), QschedStatus::Ok);
        let mut again = QschedPoint::default();
        assert_eq!(
            qsched_evaluate_thresholds(cfg, th.as_ptr(), fr.as_ptr(), 4, &mut again),
            QschedStatus::Ok
        );
        assert!((again.delay - point.delay).abs() < 1e-6 * point.delay);
        assert!((again.power - point.power).abs() < 1e-7);

        let mut sim = QschedSimResult::default();
        assert_eq!(
            qsched_simulate_thresholds(cfg, th.as_ptr(), fr.as_ptr(), 4, 200_000, 3, &mut sim),
            QschedStatus::Ok
        );
        assert!((sim.empirical_delay - point.delay).abs() < 0.1 * point.delay);
        assert_eq!(last_error(), "");

        qsched_solution_free(sol);
        qsched_config_free(cfg);
    }
}

#[test]
fn error_codes() {
    let cfg = config(40);
    unsafe {
        let mut sol = ptr::null_mut();
        assert_eq!(qsched_solve(cfg, 0.001, &mut sol), QschedStatus::Infeasible);
        assert!(sol.is_null());
        assert!(last_error().contains("budget"), "{}", last_error());

        assert_eq!(qsched_solve(ptr::null(), 1.0, &mut sol), QschedStatus::NullPointer);
        assert_eq!(qsched_solve(cfg, 1.0, ptr::null_mut()), QschedStatus::NullPointer);
        assert_eq!(qsched_solve(cfg, f64::NAN, &mut sol), QschedStatus::InvalidArgument);

        let th = [2usize; 3];
        let fr = [1.0f64; 3];
        let mut p = QschedPoint::default();
        assert_eq!(
            qsched_evaluate_thresholds(cfg, th.as_ptr(), fr.as_ptr(), 3, &mut p),
            QschedStatus::InvalidArgument
        );
        let fr_bad = [1.5f64; 4];
        let th4 = [2usize; 4];
        assert_eq!(
            qsched_evaluate_thresholds(cfg, th4.as_ptr(), fr_bad.as_ptr(), 4, &mut p),
            QschedStatus::InvalidArgument
        );
        qsched_config_free(cfg);
    }
}

#[test]
fn invalid_config_is_reported() {
    let bad_theta = [0.2, 0.9];
    let mut cfg = ptr::null_mut();
    let s = unsafe { qsched_config_new(bad_theta.as_ptr(), 2, ETA.as_ptr(), POWER.as_ptr(), 4, 10, &mut cfg) };
    assert_eq!(s, QschedStatus::InvalidConfig);
    assert!(cfg.is_null());
    assert!(last_error().contains("theta"));

    let s = unsafe { qsched_config_new(THETA.as_ptr(), 3, ETA.as_ptr(), POWER.as_ptr(), 4, 1, &mut cfg) };
    assert_eq!(s, QschedStatus::InvalidConfig);
}

#[test]
fn free_accepts_null_and_version_is_set() {
    unsafe {
        qsched_config_free(ptr::null_mut());
        qsched_solution_free(ptr::null_mut());
        let v = CStr::from_ptr(qsched_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
