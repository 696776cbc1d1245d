//! Handle lifetimes, error codes and a C program built against the
//! generated header and the static library.

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use wavecouple_ffi::*;

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { wc_string_free(s) };
    out
}

fn last_error() -> String {
    let p = wc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn parse_round_trips_and_reports_parse_errors() {
    let text = CString::new("nu1 = 3\nnu2 = 3\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { wc_scenario_parse(text.as_ptr(), &mut s) }, WC_OK);
    let canon = take(unsafe { wc_scenario_to_text(s) });
    assert!(canon.contains("nu1 = 3"));
    let again = CString::new(canon.clone()).unwrap();
    let mut s2 = ptr::null_mut();
    assert_eq!(unsafe { wc_scenario_parse(again.as_ptr(), &mut s2) }, WC_OK);
    assert_eq!(take(unsafe { wc_scenario_to_text(s2) }), canon);
    unsafe {
        wc_scenario_free(s);
        wc_scenario_free(s2);
    }

    let bad = CString::new("nu3 = 1\n").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { wc_scenario_parse(bad.as_ptr(), &mut out) }, WC_ERR_PARSE);
    assert!(out.is_null());
    assert!(last_error().contains("nu3"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { wc_scenario_parse(ptr::null(), &mut s) }, WC_ERR_NULL);
    assert_eq!(unsafe { wc_scenario_validate(ptr::null()) }, WC_ERR_NULL);
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { wc_run(ptr::null(), WcStage::Covering as i32, 0, &mut o) }, WC_ERR_NULL);
    assert!(unsafe { wc_scenario_to_text(ptr::null()) }.is_null());
    assert_eq!(unsafe { wc_outcome_passed(ptr::null()) }, 0);
    unsafe {
        wc_scenario_free(ptr::null_mut());
        wc_outcome_free(ptr::null_mut());
        wc_string_free(ptr::null_mut());
    }
}

#[test]
fn covering_stage_through_the_interface() {
    let s = wc_scenario_default();
    assert_eq!(unsafe { wc_scenario_validate(s) }, WC_OK);
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { wc_run(s, 99, 0, &mut o) }, WC_ERR_RANGE);
    assert_eq!(unsafe { wc_run(s, WcStage::Covering as i32, 0, &mut o) }, WC_OK);
    assert_eq!(unsafe { wc_outcome_passed(o) }, 1);
    let n = unsafe { wc_outcome_check_count(o) };
    assert!(n >= 2);
    let (mut name, mut pass) = (ptr::null_mut(), 0);
    assert_eq!(unsafe { wc_outcome_check(o, 0, &mut name, &mut pass) }, WC_OK);
    assert_eq!(take(name), "covering.valid");
    assert_eq!(pass, 1);
    assert_eq!(unsafe { wc_outcome_check(o, n, &mut name, &mut pass) }, WC_ERR_RANGE);
    let key = CString::new("rects").unwrap();
    let mut rects = 0.0;
    assert_eq!(unsafe { wc_outcome_metric(o, key.as_ptr(), &mut rects) }, WC_OK);
    assert!(rects >= 1.0);
    let csv = CString::new("covering.csv").unwrap();
    assert!(take(unsafe { wc_outcome_artifact(o, csv.as_ptr()) }).lines().count() > 1);
    let none = CString::new("missing.csv").unwrap();
    assert!(unsafe { wc_outcome_artifact(o, none.as_ptr()) }.is_null());
    assert!(take(unsafe { wc_outcome_summary(o) }).ends_with("status = pass\n"));
    unsafe {
        wc_outcome_free(o);
        wc_scenario_free(s);
    }
}

#[test]
fn precondition_failures_carry_library_codes() {
    let text = CString::new("T = 0.004\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { wc_scenario_parse(text.as_ptr(), &mut s) }, WC_OK);
    assert_eq!(unsafe { wc_scenario_validate(s) }, WC_ERR_TIME_TOO_SHORT);
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { wc_run(s, WcStage::Covering as i32, 0, &mut o) }, WC_ERR_TIME_TOO_SHORT);
    assert!(o.is_null());
    unsafe { wc_scenario_free(s) };
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "wavecouple.h"

int main(void) {
    WcScenario *s = wc_scenario_default();
    WcOutcome *o = NULL;
    if (wc_run(s, WC_STAGE_COVERING, 0, &o) != WC_OK) {
        fprintf(stderr, "%s\n", wc_last_error());
        return 1;
    }
    char *summary = wc_outcome_summary(o);
    int ok = wc_outcome_passed(o) && strstr(summary, "status = pass") != NULL;
    wc_string_free(summary);
    wc_outcome_free(o);
    WcScenario *bad = NULL;
    ok = ok && wc_scenario_parse("nu3 = 1", &bad) == WC_ERR_PARSE && bad == NULL;
    wc_scenario_free(s);
    printf("%s\n", ok ? "ok" : "fail");
    return ok ? 0 : 1;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    // cargo test builds only the rlib; build the static library into its own
    // target dir so the outer cargo lock is not contended
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = manifest.join("../../target/ffi-c");
    let status = Command::new(env!("CARGO"))
        .args(["build", "--release", "--lib", "-p", "wavecouple-ffi", "--manifest-path"])
        .arg(manifest.join("Cargo.toml"))
        .arg("--target-dir")
        .arg(&target)
        .status()
        .unwrap();
    assert!(status.success(), "static library build failed");
    let lib = target.join("release").join("libwavecouple_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = manifest.join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("main");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
