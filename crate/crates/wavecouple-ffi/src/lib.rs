//! C interface to wavecouple.
//!
//! Scenarios and stage outcomes are opaque handles owned by the caller and
//! released with their `_free` function. Fallible calls return a status
//! code (`WC_OK` or a library error code) and write results through out
//! pointers; the message of the last failure on the calling thread is
//! available from `wc_last_error`. Strings returned by the library are
//! NUL-terminated and released with `wc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wavecouple::pipeline::{self, Outcome, Stage};
use wavecouple::scenario::Scenario;

pub const WC_OK: i32 = 0;
/// A required pointer argument was null.
pub const WC_ERR_NULL: i32 = -1;
/// A string argument was not valid UTF-8.
pub const WC_ERR_UTF8: i32 = -2;
/// The library panicked; the handle arguments are left untouched.
pub const WC_ERR_PANIC: i32 = -3;
/// An enum or index argument was out of range.
pub const WC_ERR_RANGE: i32 = -4;

/// Library error codes, as returned by `Error::code`.
pub const WC_ERR_NO_SOLUTION: i32 = 1;
pub const WC_ERR_SINGULAR_SYSTEM: i32 = 2;
pub const WC_ERR_EPSILON_TOO_LARGE: i32 = 3;
pub const WC_ERR_OUT_OF_DOMAIN: i32 = 4;
pub const WC_ERR_CFL_VIOLATION: i32 = 5;
pub const WC_ERR_OVERLAPPING_SUPPORTS: i32 = 6;
pub const WC_ERR_NO_ADMISSIBLE_DELTA: i32 = 7;
pub const WC_ERR_BAD_EPSILON: i32 = 8;
pub const WC_ERR_ORDER_TOO_LOW: i32 = 9;
pub const WC_ERR_TIME_TOO_SHORT: i32 = 10;
pub const WC_ERR_BLOW_UP: i32 = 11;
pub const WC_ERR_PICARD_DIVERGED: i32 = 12;
pub const WC_ERR_DATA_INCOMPATIBLE: i32 = 13;
pub const WC_ERR_FLOOR_VIOLATED: i32 = 14;
pub const WC_ERR_NEWTON_STALLED: i32 = 15;
pub const WC_ERR_CHARACTERISTIC_EXITS_DOMAIN: i32 = 16;
pub const WC_ERR_PARSE: i32 = 17;
pub const WC_ERR_IO: i32 = 18;

/// Stage selector values accepted by `wc_run`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcStage {
    Trajectory = 0,
    Covering = 1,
    Steer = 2,
    Reduce = 3,
    Global = 4,
    Verify = 5,
}

fn stage_of(code: i32) -> Option<Stage> {
    Some(match code {
        0 => Stage::Trajectory,
        1 => Stage::Covering,
        2 => Stage::Steer,
        3 => Stage::Reduce,
        4 => Stage::Global,
        5 => Stage::Verify,
        _ => return None,
    })
}

/// Opaque scenario handle.
pub struct WcScenario(Scenario);

/// Opaque outcome of one stage run.
pub struct WcOutcome {
    stage: Stage,
    outcome: Outcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(code: i32, msg: impl Into<String>) -> i32 {
    set_error(msg.into());
    code
}

fn guarded(f: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => fail(WC_ERR_PANIC, "panic inside wavecouple"),
    }
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, i32> {
    if p.is_null() {
        return Err(fail(WC_ERR_NULL, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(WC_ERR_UTF8, "string argument is not UTF-8"))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn wc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The built-in default scenario.
#[no_mangle]
pub extern "C" fn wc_scenario_default() -> *mut WcScenario {
    Box::into_raw(Box::new(WcScenario(Scenario::default())))
}

/// Parses scenario text (`key = value` lines) into `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wc_scenario_parse(text: *const c_char, out: *mut *mut WcScenario) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail(WC_ERR_NULL, "null out pointer");
        }
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(code) => return code,
        };
        match Scenario::parse(text) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(WcScenario(s)));
                WC_OK
            }
            Err(e) => fail(e.code(), e.to_string()),
        }
    })
}

/// Canonical text of a scenario; free with `wc_string_free`. Null on a
/// null handle.
///
/// # Safety
/// `s` must be a live scenario handle or null.
#[no_mangle]
pub unsafe extern "C" fn wc_scenario_to_text(s: *const WcScenario) -> *mut c_char {
    match s.as_ref() {
        Some(s) => to_c(s.0.to_text()),
        None => ptr::null_mut(),
    }
}

/// Checks the scenario's parameters and time condition.
///
/// # Safety
/// `s` must be a live scenario handle or null.
#[no_mangle]
pub unsafe extern "C" fn wc_scenario_validate(s: *const WcScenario) -> i32 {
    guarded(|| match s.as_ref() {
        None => fail(WC_ERR_NULL, "null scenario"),
        Some(s) => match s.0.validate() {
            Ok(()) => WC_OK,
            Err(e) => fail(e.code(), e.to_string()),
        },
    })
}

/// # Safety
/// `s` must come from `wc_scenario_default` or `wc_scenario_parse` and not
/// have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wc_scenario_free(s: *mut WcScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Runs one stage (a `WcStage` value) on a scenario with `grid_refine`
/// dyadic refinements. A stage whose checks fail still returns `WC_OK`;
/// inspect the outcome with `wc_outcome_passed`.
///
/// # Safety
/// `s` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wc_run(s: *const WcScenario, stage: i32, grid_refine: u32, out: *mut *mut WcOutcome) -> i32 {
    guarded(|| {
        let Some(s) = s.as_ref() else { return fail(WC_ERR_NULL, "null scenario") };
        if out.is_null() {
            return fail(WC_ERR_NULL, "null out pointer");
        }
        let Some(stage) = stage_of(stage) else { return fail(WC_ERR_RANGE, format!("unknown stage {stage}")) };
        match pipeline::run_stage(stage, &s.0, grid_refine) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(WcOutcome { stage, outcome }));
                WC_OK
            }
            Err(e) => fail(e.code(), e.to_string()),
        }
    })
}

/// 1 when every check passed, 0 otherwise or on a null handle.
///
/// # Safety
/// `o` must be a live outcome handle or null.
#[no_mangle]
pub unsafe extern "C" fn wc_outcome_passed(o: *const WcOutcome) -> i32 {
    o.as_ref().map_or(0, |o| o.outcome.passed() as i32)
}

/// Number of checks in the outcome.
///
/// # Safety
/// `o` must be a live outcome handle or null.
#[no_mangle]
pub unsafe extern "C" fn wc_outcome_check_count(o: *const WcOutcome) -> usize {
    o.as_ref().map_or(0, |o| o.outcome.checks.len())
}

/// Name and result of check `i`. `name` receives a string to free with
/// `wc_string_free`; `pass` receives 1 or 0.
///
/// # Safety
/// `o` must be a live outcome handle; `name` and `pass` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wc_outcome_check(o: *const WcOutcome, i: usize, name: *mut *mut c_char, pass: *mut i32) -> i32 {
    let Some(o) = o.as_ref() else { return fail(WC_ERR_NULL, "null outcome") };
    if name.is_null() || pass.is_null() {
        return fail(WC_ERR_NULL, "null out pointer");
    }
    let Some(c) = o.outcome.checks.get(i) else { return fail(WC_ERR_RANGE, format!("check index {i} out of range")) };
    *name = to_c(c.name.clone());
    *pass = c.pass as i32;
    WC_OK
}

/// Report value for `key` parsed as a number into `*value`.
///
/// # Safety
/// `o` must be a live outcome handle, `key` a NUL-terminated string and
/// `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wc_outcome_metric(o: *const WcOutcome, key: *const c_char, value: *mut f64) -> i32 {
    let Some(o) = o.as_ref() else { return fail(WC_ERR_NULL, "null outcome") };
    if value.is_null() {
        return fail(WC_ERR_NULL, "null out pointer");
    }
    let key = match str_arg(key) {
        Ok(k) => k,
        Err(code) => return code,
    };
    match o.outcome.report.get(key).and_then(|v| v.parse::<f64>().ok()) {
        Some(v) => {
            *value = v;
            WC_OK
        }
        None => fail(WC_ERR_RANGE, format!("no numeric report entry '{key}'")),
    }
}

/// The `key = value` summary the command line writes; free with
/// `wc_string_free`.
///
/// # Safety
/// `o` must be a live outcome handle or null.
#[no_mangle]
pub unsafe extern "C" fn wc_outcome_summary(o: *const WcOutcome) -> *mut c_char {
    o.as_ref().map_or(ptr::null_mut(), |o| to_c(pipeline::summary(o.stage.name(), &o.outcome)))
}

/// Contents of the artifact named `name` (for example `covering.csv`), or
/// null when the stage produced none by that name. Free with
/// `wc_string_free`.
///
/// # Safety
/// `o` must be a live outcome handle or null; `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wc_outcome_artifact(o: *const WcOutcome, name: *const c_char) -> *mut c_char {
    let (Some(o), Ok(name)) = (o.as_ref(), str_arg(name)) else { return ptr::null_mut() };
    o.outcome.artifacts.iter().find(|(n, _)| n == name).map_or(ptr::null_mut(), |(_, text)| to_c(text.clone()))
}

/// # Safety
/// `o` must come from `wc_run` and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wc_outcome_free(o: *mut WcOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use wavecouple::error::Error;

    #[test]
    fn error_constants_match_library_codes() {
        let s = String::new;
        let pairs = [
            (Error::NoSolution(s()), WC_ERR_NO_SOLUTION),
            (Error::SingularSystem(s()), WC_ERR_SINGULAR_SYSTEM),
            (Error::EpsilonTooLarge(s()), WC_ERR_EPSILON_TOO_LARGE),
            (Error::OutOfDomain(s()), WC_ERR_OUT_OF_DOMAIN),
            (Error::CflViolation(s()), WC_ERR_CFL_VIOLATION),
            (Error::OverlappingSupports(s()), WC_ERR_OVERLAPPING_SUPPORTS),
            (Error::NoAdmissibleDelta(s()), WC_ERR_NO_ADMISSIBLE_DELTA),
            (Error::BadEpsilon(s()), WC_ERR_BAD_EPSILON),
            (Error::OrderTooLow(s()), WC_ERR_ORDER_TOO_LOW),
            (Error::TimeTooShort(s()), WC_ERR_TIME_TOO_SHORT),
            (Error::BlowUp(s()), WC_ERR_BLOW_UP),
            (Error::PicardDiverged(s()), WC_ERR_PICARD_DIVERGED),
            (Error::DataIncompatible(s()), WC_ERR_DATA_INCOMPATIBLE),
            (Error::FloorViolated(s()), WC_ERR_FLOOR_VIOLATED),
            (Error::NewtonStalled(s()), WC_ERR_NEWTON_STALLED),
            (Error::CharacteristicExitsDomain(s()), WC_ERR_CHARACTERISTIC_EXITS_DOMAIN),
            (Error::Parse(s()), WC_ERR_PARSE),
            (Error::Io(s()), WC_ERR_IO),
        ];
        for (e, c) in pairs {
            assert_eq!(e.code(), c, "{e:?}");
        }
    }
}
