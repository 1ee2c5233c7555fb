//! C ABI over the optimization library: opaque handles, status codes and a
//! last-error message, so other languages can define problems and drive runs.
//!
//! Ownership rules: every `*_create`/`modebi_run` output is owned by the
//! caller and released with the matching `*_free`; strings returned from a
//! run handle stay valid until that handle is freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use modebi::bench::{self, BenchProblem};
use modebi::harness::{run_algorithm, runlog_csv, Algorithm};
use modebi::problem::ProblemSpec;
use modebi::{AlgoConfig, Error};

/// Status codes for every fallible call. `MODEBI_STATUS_OK` is zero; anything
/// else leaves a message retrievable via [`modebi_last_error_message`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModebiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownAlgorithm = 3,
    UnknownProblem = 4,
    InvalidInput = 5,
    BudgetTooSmall = 6,
    RuntimeError = 7,
}

/// Opaque problem handle.
pub struct ModebiProblem {
    inner: BenchProblem,
}

/// Opaque finished-run handle owning its serialized artifacts.
pub struct ModebiRun {
    summary_json: CString,
    runlog_csv: CString,
    population_json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: ModebiStatus, message: &str) -> ModebiStatus {
    let cleaned: String = message.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).expect("nul-free message");
    });
    status
}

fn fail_error(err: &Error) -> ModebiStatus {
    let status = match err {
        Error::UnknownAlgorithm(_) => ModebiStatus::UnknownAlgorithm,
        Error::UnknownProblem(_) => ModebiStatus::UnknownProblem,
        Error::InvalidConfig(_) | Error::InvalidProblem(_) | Error::Json(_) => {
            ModebiStatus::InvalidInput
        }
        Error::BudgetTooSmall { .. } => ModebiStatus::BudgetTooSmall,
        _ => ModebiStatus::RuntimeError,
    };
    fail(status, &err.to_string())
}

/// Message describing the most recent failure on this thread; empty string
/// when no failure occurred. The pointer is valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn modebi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, ModebiStatus> {
    if ptr.is_null() {
        return Err(fail(ModebiStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(ModebiStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

/// Creates a builtin benchmark problem ("bnh", "toy-regulator").
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn modebi_problem_create_builtin(
    name: *const c_char,
    out: *mut *mut ModebiProblem,
) -> ModebiStatus {
    if out.is_null() {
        return fail(ModebiStatus::NullPointer, "null output pointer");
    }
    let name = match read_str(name) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match bench::by_name(name) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(ModebiProblem { inner }));
            ModebiStatus::Ok
        }
        Err(err) => fail_error(&err),
    }
}

/// Creates a problem from a JSON document; the document's name selects the
/// builtin evaluator while bounds, constraints and corners come from the
/// document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn modebi_problem_from_json(
    json: *const c_char,
    out: *mut *mut ModebiProblem,
) -> ModebiStatus {
    if out.is_null() {
        return fail(ModebiStatus::NullPointer, "null output pointer");
    }
    let json = match read_str(json) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let spec: ProblemSpec = match serde_json::from_str(json) {
        Ok(s) => s,
        Err(err) => return fail(ModebiStatus::InvalidInput, &err.to_string()),
    };
    match bench::from_spec(spec) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(ModebiProblem { inner }));
            ModebiStatus::Ok
        }
        Err(err) => fail_error(&err),
    }
}

/// Releases a problem handle. A null handle is a no-op.
///
/// # Safety
/// `problem` must be null or a pointer from a `modebi_problem_*` constructor,
/// not freed before.
#[no_mangle]
pub unsafe extern "C" fn modebi_problem_free(problem: *mut ModebiProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Runs an algorithm ("gde3", "modebi-s1", "modebi-s2", "modebi-s3") on the
/// problem. `config_json` overrides algorithm-configuration defaults and may
/// be null for the defaults; the budget must be set either way.
///
/// # Safety
/// `problem` must be a live problem handle, `algo` a NUL-terminated string,
/// `config_json` null or NUL-terminated, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn modebi_run(
    problem: *const ModebiProblem,
    algo: *const c_char,
    config_json: *const c_char,
    out: *mut *mut ModebiRun,
) -> ModebiStatus {
    if problem.is_null() || out.is_null() {
        return fail(ModebiStatus::NullPointer, "null problem or output pointer");
    }
    let algo = match read_str(algo) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let config: AlgoConfig = if config_json.is_null() {
        AlgoConfig::default()
    } else {
        let text = match read_str(config_json) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match serde_json::from_str(text) {
            Ok(c) => c,
            Err(err) => return fail(ModebiStatus::InvalidInput, &err.to_string()),
        }
    };
    let algorithm = match Algorithm::from_name(algo) {
        Ok(a) => a,
        Err(err) => return fail_error(&err),
    };
    let problem = &(*problem).inner;
    let outcome = catch_unwind(AssertUnwindSafe(|| run_algorithm(problem, algorithm, &config)));
    let result = match outcome {
        Ok(Ok(r)) => r,
        Ok(Err(err)) => return fail_error(&err),
        Err(_) => return fail(ModebiStatus::RuntimeError, "panic during run"),
    };
    let pack = || -> Result<ModebiRun, Error> {
        Ok(ModebiRun {
            summary_json: CString::new(serde_json::to_string_pretty(&result.summary)?)
                .expect("json has no NUL"),
            runlog_csv: CString::new(runlog_csv(&result.rows, &result.summary))
                .expect("csv has no NUL"),
            population_json: CString::new(serde_json::to_string_pretty(
                &result.population.members,
            )?)
            .expect("json has no NUL"),
        })
    };
    match pack() {
        Ok(run) => {
            *out = Box::into_raw(Box::new(run));
            ModebiStatus::Ok
        }
        Err(err) => fail_error(&err),
    }
}

/// Run summary as JSON; valid until the run handle is freed.
///
/// # Safety
/// `run` must be a live run handle.
#[no_mangle]
pub unsafe extern "C" fn modebi_run_summary_json(run: *const ModebiRun) -> *const c_char {
    if run.is_null() {
        return ptr::null();
    }
    (*run).summary_json.as_ptr()
}

/// Per-epoch trajectory as CSV; valid until the run handle is freed.
///
/// # Safety
/// `run` must be a live run handle.
#[no_mangle]
pub unsafe extern "C" fn modebi_run_runlog_csv(run: *const ModebiRun) -> *const c_char {
    if run.is_null() {
        return ptr::null();
    }
    (*run).runlog_csv.as_ptr()
}

/// Final population (designs, responses, CV, objectives) as JSON; valid until
/// the run handle is freed.
///
/// # Safety
/// `run` must be a live run handle.
#[no_mangle]
pub unsafe extern "C" fn modebi_run_population_json(run: *const ModebiRun) -> *const c_char {
    if run.is_null() {
        return ptr::null();
    }
    (*run).population_json.as_ptr()
}

/// Releases a run handle. A null handle is a no-op.
///
/// # Safety
/// `run` must be null or a pointer from [`modebi_run`], not freed before.
#[no_mangle]
pub unsafe extern "C" fn modebi_run_free(run: *mut ModebiRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
