use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use trl_ffi::*;

const REALIZABLE: &str = r#"{
    "domain_size": 10,
    "class": {"family": "thresholds"},
    "perturbation": {"family": "interval_ball", "radius": 1},
    "distribution": [[0, -1, 0.5], [9, 1, 0.5]],
    "n": 4, "m": 4, "delta": 0.05, "trials": 20, "seed": 3
}"#;

struct Handle(*mut TrlScenario);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { trl_scenario_free(self.0) }
    }
}

fn load(json: &str) -> Handle {
    let text = CString::new(json).unwrap();
    let mut h = ptr::null_mut();
    let status = unsafe { trl_scenario_from_json(text.as_ptr(), &mut h) };
    assert_eq!(status, TrlStatus::Ok, "{}", last_error());
    assert!(!h.is_null());
    Handle(h)
}

fn last_error() -> String {
    let p = trl_last_error_message();
    if p.is_null() {
        return String::new();
    }
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_static_and_nonempty() {
    let v = unsafe { CStr::from_ptr(trl_version()) }.to_str().unwrap();
    assert!(v.starts_with(env!("CARGO_PKG_VERSION")));
    assert_eq!(trl_version(), trl_version());
}

#[test]
fn sizes_and_dims() {
    let h = load(REALIZABLE);
    let (mut d, mut c, mut vc, mut rdim) = (0, 0, 99, 99);
    unsafe {
        assert_eq!(trl_scenario_sizes(h.0, &mut d, &mut c), TrlStatus::Ok);
        assert_eq!(trl_dims(h.0, &mut vc, &mut rdim), TrlStatus::Ok);
    }
    assert_eq!((d, c, vc, rdim), (10, 11, 1, 1));
    assert!(trl_last_error_message().is_null());
}

#[test]
fn select_matches_core() {
    let h = load(REALIZABLE);
    let (xs, ys, test) = ([1usize, 8], [-1i8, 1], [5usize]);
    let mut labels = [0i8; 1];
    let mut chosen = usize::MAX;
    let status = unsafe {
        trl_select(
            h.0,
            TRL_RULE_REALIZABLE,
            xs.as_ptr(),
            ys.as_ptr(),
            2,
            test.as_ptr(),
            1,
            labels.as_mut_ptr(),
            &mut chosen,
        )
    };
    assert_eq!(status, TrlStatus::Ok);
    assert_eq!(chosen, 3);
    assert_eq!(labels, [1]);
}

#[test]
fn infeasible_selection_reports_status() {
    let h = load(REALIZABLE);
    let (xs, ys, test) = ([4usize, 5], [1i8, -1], [2usize]);
    let (mut labels, mut chosen) = ([0i8], 0);
    let status = unsafe {
        trl_select(
            h.0,
            TRL_RULE_REALIZABLE,
            xs.as_ptr(),
            ys.as_ptr(),
            2,
            test.as_ptr(),
            1,
            labels.as_mut_ptr(),
            &mut chosen,
        )
    };
    assert_eq!(status, TrlStatus::Infeasible);
    assert!(!last_error().is_empty());
}

#[test]
fn validation_failures() {
    let mut h = ptr::null_mut();
    let bad = CString::new(REALIZABLE.replace("0.05", "1.5")).unwrap();
    assert_eq!(unsafe { trl_scenario_from_json(bad.as_ptr(), &mut h) }, TrlStatus::InvalidInput);
    assert!(h.is_null());
    assert!(last_error().contains("delta"));
    assert_eq!(unsafe { trl_scenario_from_json(ptr::null(), &mut h) }, TrlStatus::NullPointer);
    let not_utf8 = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { trl_scenario_from_json(not_utf8.as_ptr().cast(), &mut h) },
        TrlStatus::InvalidUtf8
    );
    let missing = CString::new("/nonexistent/scenario.json").unwrap();
    assert_eq!(unsafe { trl_scenario_load(missing.as_ptr(), &mut h) }, TrlStatus::Io);

    let s = load(REALIZABLE);
    let (xs, ys) = ([1usize], [0i8]);
    let mut chosen = 0;
    let status = unsafe {
        trl_select(s.0, TRL_RULE_AGNOSTIC, xs.as_ptr(), ys.as_ptr(), 1, ptr::null(), 0, ptr::null_mut(), &mut chosen)
    };
    assert_eq!(status, TrlStatus::InvalidInput);
    let status = unsafe {
        trl_select(s.0, 7, ptr::null(), ptr::null(), 0, ptr::null(), 0, ptr::null_mut(), &mut chosen)
    };
    assert_eq!(status, TrlStatus::InvalidInput);
    let status = unsafe {
        trl_select(s.0, TRL_RULE_AGNOSTIC, ptr::null(), ptr::null(), 3, ptr::null(), 0, ptr::null_mut(), &mut chosen)
    };
    assert_eq!(status, TrlStatus::NullPointer);
    unsafe { trl_scenario_free(ptr::null_mut()) };
    unsafe { trl_string_free(ptr::null_mut()) };
}

#[test]
fn exact_attack_on_realizable_sample() {
    let h = load(REALIZABLE);
    let (train_x, train_y) = ([0usize, 9], [-1i8, 1]);
    let (test_x, test_y) = ([0usize, 9], [-1i8, 1]);
    let mut perturbed = [usize::MAX; 2];
    let mut outcome = TrlAttackOutcome::default();
    let status = unsafe {
        trl_attack(
            h.0,
            TRL_RULE_REALIZABLE,
            TRL_ATTACK_EXACT,
            0,
            0,
            true,
            train_x.as_ptr(),
            train_y.as_ptr(),
            2,
            test_x.as_ptr(),
            test_y.as_ptr(),
            2,
            perturbed.as_mut_ptr(),
            &mut outcome,
        )
    };
    assert_eq!(status, TrlStatus::Ok, "{}", last_error());
    assert_eq!((outcome.errors, outcome.total), (0, 2));
    assert!(outcome.exact);
    assert_eq!(outcome.evaluations, 16);
    assert!(perturbed.iter().all(|&z| z < 10));
}

#[test]
fn bounds_roundtrip() {
    let mut b = TrlBounds::default();
    assert_eq!(unsafe { trl_bounds(1, 1, 0.0, 100, 0.1, 4.0, &mut b) }, TrlStatus::Ok);
    assert!((b.agnostic_eps_rdim - 0.642_859_366_982_169_4).abs() < 1e-12);
    assert_eq!(b.agnostic_eps, b.agnostic_eps_vc.min(b.agnostic_eps_rdim));
    assert_eq!(unsafe { trl_bounds(1, 1, 0.0, 100, 0.0, 4.0, &mut b) }, TrlStatus::InvalidInput);
    assert_eq!(unsafe { trl_bounds(1, 1, 2.0, 100, 0.1, 4.0, &mut b) }, TrlStatus::PreconditionViolated);
}

#[test]
fn experiment_summary_is_reproducible() {
    let h = load(REALIZABLE);
    let config = CString::new(r#"{"scenario": "ignored.json", "selector": "realizable"}"#).unwrap();
    let run = |threads| {
        let mut out = ptr::null_mut();
        let status = unsafe { trl_experiment(h.0, config.as_ptr(), threads, &mut out) };
        assert_eq!(status, TrlStatus::Ok, "{}", last_error());
        let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
        unsafe { trl_string_free(out) };
        text
    };
    let one = run(1);
    assert_eq!(one, run(3));
    let v: serde_json::Value = serde_json::from_str(&one).unwrap();
    assert_eq!(v["trials"], 20);
    assert_eq!(v["violation_count"], 0);
}

#[test]
fn generated_header_compiles() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include").join("trl.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "trl_version",
        "trl_last_error_message",
        "trl_string_free",
        "trl_scenario_from_json",
        "trl_scenario_load",
        "trl_scenario_free",
        "trl_scenario_sizes",
        "trl_dims",
        "trl_select",
        "trl_attack",
        "trl_bounds",
        "trl_experiment",
        "typedef struct TrlScenario TrlScenario;",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let Ok(status) = Command::new(&cc)
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler ({cc}); skipped the syntax check");
        return;
    };
    assert!(status.success());
}
