//! C ABI over `qsched`.
//!
//! Every function returns a [`QschedStatus`] and writes results through out
//! pointers. Handles are opaque and must be released with their `_free`
//! function. On failure, [`qsched_last_error_message`] describes the error
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qsched::lp::{self, LpError, LpModel, Optimum, ThresholdPolicy};
use qsched::markov::{self, MarkovError};
use qsched::model::{self, SystemConfig};
use qsched::sim::{self, SimConfig, SimError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QschedStatus {
    Ok = 0,
    NullPointer = -1,
    InvalidConfig = -2,
    Infeasible = -3,
    Numerical = -4,
    InvalidArgument = -5,
    Panic = -99,
}

/// Validated system plus its LP, reusable across budgets.
pub struct QschedConfig {
    system: SystemConfig,
    model: LpModel,
}

/// Optimal threshold policy for one budget.
pub struct QschedSolution {
    optimum: Optimum,
}

/// Long-run averages of a policy.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QschedPoint {
    /// Mean delay in slots.
    pub delay: f64,
    /// Mean power per slot.
    pub power: f64,
    /// Packets lost to overflow per slot.
    pub loss: f64,
    /// Delay plus the loss penalty, as minimized by the solver.
    pub objective: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QschedSimResult {
    pub empirical_delay: f64,
    pub empirical_power: f64,
    pub loss_rate: f64,
    pub mean_queue: f64,
    pub slots_run: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(QschedStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> QschedStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QschedStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            QschedStatus::Panic
        }
    }
}

fn lp_failure(e: LpError) -> Failure {
    let status = match e {
        LpError::Infeasible { .. } => QschedStatus::Infeasible,
        LpError::DimensionMismatch { .. } => QschedStatus::InvalidArgument,
        _ => QschedStatus::Numerical,
    };
    Failure(status, e.to_string())
}

fn markov_failure(e: MarkovError) -> Failure {
    let status = match e {
        MarkovError::DimensionMismatch { .. }
        | MarkovError::InvalidProbability { .. }
        | MarkovError::TransmitOnEmpty { .. }
        | MarkovError::IndexOutOfRange { .. } => QschedStatus::InvalidArgument,
        _ => QschedStatus::Numerical,
    };
    Failure(status, e.to_string())
}

fn null(what: &str) -> Failure {
    Failure(QschedStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: String) -> Failure {
    Failure(QschedStatus::InvalidArgument, msg)
}

/// # Safety
/// `p` must be null or valid for `len` reads.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or point to a live handle.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or valid for one write.
unsafe fn put<T>(p: *mut T, value: T, what: &str) -> FfiResult<()> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// # Safety
/// Both pointers must be null or valid for `len` reads.
unsafe fn threshold_policy(
    cfg: &QschedConfig,
    thresholds: *const usize,
    frac: *const f64,
    len: usize,
) -> FfiResult<markov::Policy> {
    let states = cfg.system.states();
    if len != states {
        return Err(invalid(format!("expected {states} channel states, got {len}")));
    }
    let tp = ThresholdPolicy {
        thresholds: slice(thresholds, len, "thresholds")?.to_vec(),
        frac: slice(frac, len, "frac")?.to_vec(),
    };
    if tp.frac.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(invalid("frac entries must lie in [0, 1]".into()));
    }
    if tp.thresholds.contains(&0) {
        return Err(invalid("thresholds must be at least 1".into()));
    }
    lp::threshold_to_policy(&tp, &cfg.system).map_err(lp_failure)
}

/// Validates a system and builds its LP.
///
/// `theta` has `n_theta` entries (batch sizes `0..n_theta`); `eta` and `power`
/// have `n_states` entries each.
///
/// # Safety
/// Array pointers must be valid for their stated lengths and `out` for one
/// write.
#[no_mangle]
pub unsafe extern "C" fn qsched_config_new(
    theta: *const f64,
    n_theta: usize,
    eta: *const f64,
    power: *const f64,
    n_states: usize,
    capacity: usize,
    out: *mut *mut QschedConfig,
) -> QschedStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let theta = slice(theta, n_theta, "theta")?;
        let eta = slice(eta, n_states, "eta")?;
        let power = slice(power, n_states, "power")?;
        let system = model::validate(theta, eta, power, capacity)
            .map_err(|e| Failure(QschedStatus::InvalidConfig, e.to_string()))?;
        let model = LpModel::new(&system).map_err(lp_failure)?;
        put(out, Box::into_raw(Box::new(QschedConfig { system, model })), "out")
    })
}

/// # Safety
/// `cfg` must be null or a handle from [`qsched_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qsched_config_free(cfg: *mut QschedConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Number of channel states.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsched_config_states(cfg: *const QschedConfig, out: *mut usize) -> QschedStatus {
    guard(|| put(out, handle(cfg, "cfg")?.system.states(), "out"))
}

/// Mean packets arriving per slot.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsched_config_mean_rate(cfg: *const QschedConfig, out: *mut f64) -> QschedStatus {
    guard(|| put(out, handle(cfg, "cfg")?.system.mean_rate(), "out"))
}

/// Smallest budget that can carry the offered load.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsched_config_min_power(cfg: *const QschedConfig, out: *mut f64) -> QschedStatus {
    guard(|| put(out, handle(cfg, "cfg")?.system.min_sustainable_power(), "out"))
}

/// Minimum-delay threshold policy under an average power budget.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsched_solve(
    cfg: *const QschedConfig,
    budget: f64,
    out: *mut *mut QschedSolution,
) -> QschedStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !budget.is_finite() {
            return Err(invalid(format!("budget {budget} is not finite")));
        }
        let optimum = cfg.model.optimize(budget).map_err(lp_failure)?;
        put(out, Box::into_raw(Box::new(QschedSolution { optimum })), "out")
    })
}

/// # Safety
/// `sol` must be null or a handle from [`qsched_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qsched_solution_free(sol: *mut QschedSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Operating point of a solution.
///
/// # Safety
/// `sol` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsched_solution_point(sol: *const QschedSolution, out: *mut QschedPoint) -> QschedStatus {
    guard(|| {
        let o = &handle(sol, "sol")?.optimum;
        put(
            out,
            QschedPoint {
                delay: o.delay,
                power: o.power,
                loss: o.loss,
                objective: o.objective,
            },
            "out",
        )
    })
}

/// Copies the per-state thresholds and randomization probabilities. Both
/// arrays need room for exactly `len` entries, the number of channel states.
///
/// # Safety
/// `sol` must be a live handle; `thresholds` and `frac` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn qsched_solution_thresholds(
    sol: *const QschedSolution,
    thresholds: *mut usize,
    frac: *mut f64,
    len: usize,
) -> QschedStatus {
    guard(|| {
        let tp = &handle(sol, "sol")?.optimum.thresholds;
        if len != tp.thresholds.len() {
            return Err(invalid(format!("expected {} channel states, got {len}", tp.thresholds.len())));
        }
        if thresholds.is_null() || frac.is_null() {
            return Err(null("output array"));
        }
        ptr::copy_nonoverlapping(tp.thresholds.as_ptr(), thresholds, len);
        ptr::copy_nonoverlapping(tp.frac.as_ptr(), frac, len);
        Ok(())
    })
}

/// Exact long-run averages of a threshold policy.
///
/// # Safety
/// `cfg` must be a live handle; `thresholds` and `frac` valid for `len`
/// reads; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qsched_evaluate_thresholds(
    cfg: *const QschedConfig,
    thresholds: *const usize,
    frac: *const f64,
    len: usize,
    out: *mut QschedPoint,
) -> QschedStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let policy = threshold_policy(cfg, thresholds, frac, len)?;
        let ev = markov::evaluate_policy(&cfg.system, &policy).map_err(markov_failure)?;
        let objective = lp::penalized_delay(&cfg.system, ev.delay, ev.loss, cfg.model.loss_penalty());
        put(
            out,
            QschedPoint {
                delay: ev.delay,
                power: ev.power,
                loss: ev.loss,
                objective,
            },
            "out",
        )
    })
}

/// Simulates a threshold policy for `n_slots` slots.
///
/// # Safety
/// As [`qsched_evaluate_thresholds`].
#[no_mangle]
pub unsafe extern "C" fn qsched_simulate_thresholds(
    cfg: *const QschedConfig,
    thresholds: *const usize,
    frac: *const f64,
    len: usize,
    n_slots: u64,
    seed: u64,
    out: *mut QschedSimResult,
) -> QschedStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let policy = threshold_policy(cfg, thresholds, frac, len)?;
        let warmup = sim::DEFAULT_WARMUP.min(n_slots / 10);
        let r = sim::simulate(&cfg.system, &policy, &SimConfig::new(n_slots, seed).with_warmup(warmup))
            .map_err(|e| match e {
                SimError::Policy(m) => markov_failure(m),
                other => invalid(other.to_string()),
            })?;
        put(
            out,
            QschedSimResult {
                empirical_delay: r.empirical_delay,
                empirical_power: r.empirical_power,
                loss_rate: r.loss_rate,
                mean_queue: r.mean_queue,
                slots_run: r.slots_run,
            },
            "out",
        )
    })
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next `qsched_` call on the same thread.
#[no_mangle]
pub extern "C" fn qsched_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qsched_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
