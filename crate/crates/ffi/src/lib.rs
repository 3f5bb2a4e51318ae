//! C ABI for the `hardy` crate.
//!
//! Conventions: functions return a [`HardyStatus`] and write results through
//! out-pointers. Objects are opaque handles released by their `_free`
//! function; strings returned by the library are released with
//! [`hardy_string_free`]. After a non-`Ok` status,
//! [`hardy_last_error_message`] describes the failure on the calling thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hardy::empirics::{self, Dataset, EmpiricsError};
use hardy::hna::{self, ByOutcome, ConstraintSet, JointDistribution, Verdict};
use hardy::quantum::{self, OptimizerConfig, QuantumError};
use hardy::sim::{self, SimConfig, SimError, SimOutput};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    InvalidConfig = 4,
    NoSales = 5,
    NoFeasiblePoint = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardyVerdict {
    LocalRealismConsistent = 0,
    NonClassical = 1,
    ConstraintsViolated = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyWitness {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub q: f64,
    pub verdict: HardyVerdict,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyOptimizerConfig {
    pub restarts: u32,
    pub max_iterations: u32,
    pub penalty_initial: f64,
    pub penalty_growth: f64,
    pub constraint_tol: f64,
    pub step_tol: f64,
    pub seed: u64,
    /// When true, the Schmidt angle is pinned to `theta`.
    pub fix_theta: bool,
    pub theta: f64,
}

/// Settings are ordered a1, a2, b1, b2.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyQuantumResult {
    pub q: f64,
    pub theta: f64,
    pub polar: [f64; 4],
    pub azimuth: [f64; 4],
    pub residuals: [f64; 3],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HardyDailyAggregate {
    pub day: u32,
    pub responded: u64,
    pub abandoned: u64,
    pub absent_sales: u64,
    pub present_sales: u64,
}

/// A parsed daily sales table.
pub struct HardyDataset(Dataset);

/// Simulation parameters.
pub struct HardySimConfig(SimConfig);

/// The output of one simulation run.
pub struct HardySimRun(SimOutput);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: HardyStatus, message: impl ToString) -> HardyStatus {
    set_error(&message.to_string());
    status
}

/// Runs `f`, turning a panic into `Panic` instead of unwinding into C.
fn guard(f: impl FnOnce() -> HardyStatus) -> HardyStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(HardyStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, HardyStatus> {
    if s.is_null() {
        return Err(fail(HardyStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(HardyStatus::InvalidArgument, "string argument is not UTF-8"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(HardyStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

fn empirics_status(e: &EmpiricsError) -> HardyStatus {
    match e {
        EmpiricsError::NoSales => HardyStatus::NoSales,
        EmpiricsError::InvalidBootstrap | EmpiricsError::CountWeightUnavailable => HardyStatus::InvalidArgument,
        _ => HardyStatus::ParseError,
    }
}

fn sim_status(e: &SimError) -> HardyStatus {
    match e {
        SimError::NoSales => HardyStatus::NoSales,
        SimError::InvalidConfig(_) => HardyStatus::InvalidConfig,
        _ => HardyStatus::ParseError,
    }
}

/// Message for the last failure on this thread. Valid until the next call
/// into the library on the same thread; never null.
#[no_mangle]
pub extern "C" fn hardy_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hardy_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses CSV text in the daily sales table format.
#[no_mangle]
pub unsafe extern "C" fn hardy_dataset_parse(csv: *const c_char, out: *mut *mut HardyDataset) -> HardyStatus {
    guard(|| {
        non_null!(out);
        let text = match read_str(csv) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match empirics::parse_table(text) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(HardyDataset(ds)));
                HardyStatus::Ok
            }
            Err(e) => fail(empirics_status(&e), e),
        }
    })
}

/// The published table bundled with the library.
#[no_mangle]
pub unsafe extern "C" fn hardy_dataset_bundled(out: *mut *mut HardyDataset) -> HardyStatus {
    guard(|| {
        non_null!(out);
        *out = Box::into_raw(Box::new(HardyDataset(empirics::bundled_table())));
        HardyStatus::Ok
    })
}

/// Number of daily rows, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn hardy_dataset_len(ds: *const HardyDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.rows.len())
}

/// Pooled absent share of sales value.
#[no_mangle]
pub unsafe extern "C" fn hardy_dataset_compute_q(
    ds: *const HardyDataset,
    exclude_interrupted: bool,
    out_q: *mut f64,
) -> HardyStatus {
    guard(|| {
        non_null!(ds, out_q);
        match empirics::compute_q(&(*ds).0, exclude_interrupted) {
            Ok(q) => {
                *out_q = q;
                HardyStatus::Ok
            }
            Err(e) => fail(empirics_status(&e), e),
        }
    })
}

/// Number of mismatches between the declared SUM row and the rows (1 if there is no SUM row).
#[no_mangle]
pub unsafe extern "C" fn hardy_dataset_finding_count(ds: *const HardyDataset, out_count: *mut usize) -> HardyStatus {
    guard(|| {
        non_null!(ds, out_count);
        *out_count = empirics::validate_dataset(&(*ds).0).findings.len();
        HardyStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn hardy_dataset_free(ds: *mut HardyDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Local hidden-variable maximum of q as an exact fraction. Bit k-1 of
/// `constraint_mask` keeps constraint k; 7 keeps all three.
#[no_mangle]
pub unsafe extern "C" fn hardy_lhv_max_q(constraint_mask: u8, out_num: *mut i64, out_den: *mut i64) -> HardyStatus {
    guard(|| {
        non_null!(out_num, out_den);
        let Some(set) = ConstraintSet::from_mask(constraint_mask) else {
            return fail(HardyStatus::InvalidArgument, format!("constraint mask {constraint_mask} is above 7"));
        };
        let bound = hna::lhv_max_q(set);
        *out_num = *bound.max_q.numer();
        *out_den = *bound.max_q.denom();
        HardyStatus::Ok
    })
}

/// Evaluates the Hardy witness of a joint distribution given as 16
/// probabilities: four rows for settings (1,1), (1,2), (2,1), (2,2), each
/// over outcomes (+,+), (+,-), (-,+), (-,-).
#[no_mangle]
pub unsafe extern "C" fn hardy_q_from_table(probs: *const f64, tol: f64, out: *mut HardyWitness) -> HardyStatus {
    guard(|| {
        non_null!(probs, out);
        let flat = std::slice::from_raw_parts(probs, 16);
        let table: [ByOutcome<f64>; 4] =
            std::array::from_fn(|row| ByOutcome(std::array::from_fn(|col| flat[4 * row + col])));
        let result = JointDistribution::from_table(table).and_then(|d| hna::hardy_q(&d, tol));
        match result {
            Ok(w) => {
                *out = HardyWitness {
                    p1: w.p1,
                    p2: w.p2,
                    p3: w.p3,
                    q: w.q,
                    verdict: match w.verdict {
                        Verdict::LocalRealismConsistent => HardyVerdict::LocalRealismConsistent,
                        Verdict::NonClassical => HardyVerdict::NonClassical,
                        Verdict::ConstraintsViolated => HardyVerdict::ConstraintsViolated,
                    },
                };
                HardyStatus::Ok
            }
            Err(e) => fail(HardyStatus::InvalidArgument, e),
        }
    })
}

#[no_mangle]
pub extern "C" fn hardy_optimizer_config_default() -> HardyOptimizerConfig {
    let d = OptimizerConfig::default();
    HardyOptimizerConfig {
        restarts: d.restarts as u32,
        max_iterations: d.max_iterations as u32,
        penalty_initial: d.penalty_initial,
        penalty_growth: d.penalty_growth,
        constraint_tol: d.constraint_tol,
        step_tol: d.step_tol,
        seed: d.seed,
        fix_theta: d.fixed_theta.is_some(),
        theta: d.fixed_theta.unwrap_or(0.0),
    }
}

/// Maximizes q over two-qubit states and measurement settings.
#[no_mangle]
pub unsafe extern "C" fn hardy_quantum_maximize(
    config: *const HardyOptimizerConfig,
    out: *mut HardyQuantumResult,
) -> HardyStatus {
    guard(|| {
        non_null!(config, out);
        let c = &*config;
        let opt = OptimizerConfig {
            restarts: c.restarts as usize,
            max_iterations: c.max_iterations as usize,
            penalty_initial: c.penalty_initial,
            penalty_growth: c.penalty_growth,
            constraint_tol: c.constraint_tol,
            step_tol: c.step_tol,
            seed: c.seed,
            fixed_theta: c.fix_theta.then_some(c.theta),
        };
        match quantum::maximize_q(&opt) {
            Ok(best) => {
                let cfg = &best.configuration;
                let settings = [cfg.alice[0], cfg.alice[1], cfg.bob[0], cfg.bob[1]];
                *out = HardyQuantumResult {
                    q: best.q,
                    theta: best.theta,
                    polar: settings.map(|s| s.polar()),
                    azimuth: settings.map(|s| s.azimuth()),
                    residuals: best.residuals,
                };
                HardyStatus::Ok
            }
            Err(e @ QuantumError::NoFeasiblePoint { .. }) => fail(HardyStatus::NoFeasiblePoint, e),
            Err(e) => fail(HardyStatus::InvalidArgument, e),
        }
    })
}

#[no_mangle]
pub extern "C" fn hardy_sim_config_default() -> *mut HardySimConfig {
    Box::into_raw(Box::new(HardySimConfig(SimConfig::default())))
}

/// Parses `key = value` configuration text; omitted keys keep their defaults.
#[no_mangle]
pub unsafe extern "C" fn hardy_sim_config_from_toml(text: *const c_char, out: *mut *mut HardySimConfig) -> HardyStatus {
    guard(|| {
        non_null!(out);
        let text = match read_str(text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match SimConfig::from_toml_str(text) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(HardySimConfig(c)));
                HardyStatus::Ok
            }
            Err(e) => fail(sim_status(&e), e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn hardy_sim_config_set_seed(config: *mut HardySimConfig, seed: u64) -> HardyStatus {
    guard(|| {
        non_null!(config);
        (*config).0.seed = seed;
        HardyStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn hardy_sim_config_set_days(config: *mut HardySimConfig, days: u32) -> HardyStatus {
    guard(|| {
        non_null!(config);
        if days == 0 {
            return fail(HardyStatus::InvalidArgument, "days must be positive");
        }
        (*config).0.days = days;
        HardyStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn hardy_sim_config_free(config: *mut HardySimConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

#[no_mangle]
pub unsafe extern "C" fn hardy_sim_run(config: *const HardySimConfig, out: *mut *mut HardySimRun) -> HardyStatus {
    guard(|| {
        non_null!(config, out);
        match sim::run_simulation(&(*config).0) {
            Ok(output) => {
                *out = Box::into_raw(Box::new(HardySimRun(output)));
                HardyStatus::Ok
            }
            Err(e) => fail(sim_status(&e), e),
        }
    })
}

/// Number of daily aggregate rows, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn hardy_sim_run_day_count(run: *const HardySimRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.aggregates.len())
}

#[no_mangle]
pub unsafe extern "C" fn hardy_sim_run_day(
    run: *const HardySimRun,
    index: usize,
    out: *mut HardyDailyAggregate,
) -> HardyStatus {
    guard(|| {
        non_null!(run, out);
        let output = &(*run).0;
        let Some(d) = output.aggregates.get(index) else {
            return fail(HardyStatus::InvalidArgument, format!("day {index} is out of range"));
        };
        *out = HardyDailyAggregate {
            day: d.date_index,
            responded: d.responded,
            abandoned: d.abandoned,
            absent_sales: d.absent_sales,
            present_sales: d.present_sales,
        };
        HardyStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn hardy_sim_run_q(run: *const HardySimRun, out_q: *mut f64) -> HardyStatus {
    guard(|| {
        non_null!(run, out_q);
        match sim::simulated_q(&(*run).0.aggregates) {
            Ok(q) => {
                *out_q = q;
                HardyStatus::Ok
            }
            Err(e) => fail(sim_status(&e), e),
        }
    })
}

/// Daily aggregates as CSV. Release with `hardy_string_free`; null for a null handle.
#[no_mangle]
pub unsafe extern "C" fn hardy_sim_run_aggregates_csv(run: *const HardySimRun) -> *mut c_char {
    run.as_ref().map_or(ptr::null_mut(), |r| into_c_string(sim::aggregates_to_csv(&r.0.aggregates)))
}

/// The event log as CSV. Release with `hardy_string_free`; null for a null handle.
#[no_mangle]
pub unsafe extern "C" fn hardy_sim_run_events_csv(run: *const HardySimRun) -> *mut c_char {
    run.as_ref().map_or(ptr::null_mut(), |r| into_c_string(sim::events_to_csv(&r.0.events)))
}

#[no_mangle]
pub unsafe extern "C" fn hardy_sim_run_free(run: *mut HardySimRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
