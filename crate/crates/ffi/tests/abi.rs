use std::ffi::{CStr, CString};
use std::ptr;

use mimic_core::model::checkpoint::RngState;
use mimic_core::model::{Checkpoint, InteractionModel, ModelConfig};
use mimic_core::raster::Dims;
use mimic_core::sim::{make_benchmark_suite, SuiteKind};
use mimic_ffi::*;

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { mimic_string_free(s) };
    out
}

fn last_error() -> String {
    let p = mimic_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn spec_json() -> CString {
    let spec = make_benchmark_suite(SuiteKind::Gated, 1, 4).unwrap().remove(0);
    CString::new(spec.to_json()).unwrap()
}

#[test]
fn state_handle_exposes_fingerprint_and_actions() {
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { mimic_sim_load(spec_json().as_ptr(), 1, &mut sim) }, MimicStatus::Ok);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { mimic_sim_current_json(sim, &mut json) }, MimicStatus::Ok);
    let text = CString::new(take(json)).unwrap();

    let mut state = ptr::null_mut();
    assert_eq!(unsafe { mimic_state_from_json(text.as_ptr(), &mut state) }, MimicStatus::Ok);
    let mut fp = 0u64;
    assert_eq!(unsafe { mimic_state_fingerprint(state, &mut fp) }, MimicStatus::Ok);
    let parsed = mimic_core::ui::UiState::from_json(text.to_str().unwrap()).unwrap();
    assert_eq!(fp, parsed.fingerprint().0);

    let mut actions = ptr::null_mut();
    assert_eq!(unsafe { mimic_state_actions_json(state, &mut actions) }, MimicStatus::Ok);
    let list: Vec<mimic_core::ui::Action> = serde_json::from_str(&take(actions)).unwrap();
    assert_eq!(list, mimic_core::ui::enumerate_actions(&parsed));
    unsafe {
        mimic_state_free(state);
        mimic_sim_free(sim);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut state = ptr::null_mut();
    let bad = CString::new("{\"nope\": 1}").unwrap();
    assert_eq!(unsafe { mimic_state_from_json(bad.as_ptr(), &mut state) }, MimicStatus::InvalidInput);
    assert!(state.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { mimic_state_from_json(ptr::null(), &mut state) }, MimicStatus::NullPointer);
    assert!(last_error().contains("json"));

    let invalid = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { mimic_state_from_json(invalid.as_ptr().cast(), &mut state) },
        MimicStatus::InvalidUtf8
    );

    let missing = CString::new("/definitely/not/here.ckpt").unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { mimic_model_load(missing.as_ptr(), &mut model) }, MimicStatus::Io);

    let mut kind = 0u32;
    assert_eq!(unsafe { mimic_classify_session(0, 0, 0, 0, 100, &mut kind) }, MimicStatus::Ok);
    assert!(mimic_last_error_message().is_null());
    unsafe {
        mimic_state_free(ptr::null_mut());
        mimic_string_free(ptr::null_mut());
    }
}

#[test]
fn classify_matches_thresholds() {
    let cases = [
        ((10, 10, 10, 10, 100), 0),
        ((10, 10, 12, 11, 600), 1),
        ((100, 300, 100, 100, 300), 2),
        ((100, 100, 100, 300, 300), 3),
        ((300, 100, 100, 100, 300), 4),
        ((100, 100, 300, 100, 300), 5),
    ];
    for ((x0, y0, x1, y1, d), want) in cases {
        let mut kind = 99;
        assert_eq!(unsafe { mimic_classify_session(x0, y0, x1, y1, d, &mut kind) }, MimicStatus::Ok);
        assert_eq!(kind, want, "{x0},{y0} -> {x1},{y1} over {d} ms");
    }
    let mut kind = 0;
    assert_eq!(unsafe { mimic_classify_session(0, 0, 0, 0, -1, &mut kind) }, MimicStatus::OutOfRange);
}

#[test]
fn sim_steps_and_resets() {
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { mimic_sim_load(spec_json().as_ptr(), 7, &mut sim) }, MimicStatus::Ok);
    let mut start = ptr::null_mut();
    unsafe { mimic_sim_current_json(sim, &mut start) };
    let start = take(start);

    let mut fp = 0u64;
    let mut target = true;
    assert_eq!(unsafe { mimic_sim_step(sim, 0, &mut fp, &mut target) }, MimicStatus::Ok);
    assert_ne!(fp, 0);
    assert_eq!(unsafe { mimic_sim_step(sim, 100_000, &mut fp, ptr::null_mut()) }, MimicStatus::OutOfRange);
    assert!(last_error().contains("out of range"));

    assert_eq!(unsafe { mimic_sim_reset(sim) }, MimicStatus::Ok);
    let mut now = ptr::null_mut();
    unsafe { mimic_sim_current_json(sim, &mut now) };
    assert_eq!(take(now), start);
    unsafe { mimic_sim_free(sim) };
    assert_eq!(unsafe { mimic_sim_reset(ptr::null_mut()) }, MimicStatus::NullPointer);
}

#[test]
fn model_scores_every_action() {
    let cfg = ModelConfig {
        dims: Dims::new(12, 20),
        ..ModelConfig::default()
    };
    let model = InteractionModel::<f32>::new(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    Checkpoint::from_model(&model, 0, RngState::default()).save(&path).unwrap();

    let mut handle = ptr::null_mut();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { mimic_model_load(cpath.as_ptr(), &mut handle) }, MimicStatus::Ok);

    let mut sim = ptr::null_mut();
    unsafe { mimic_sim_load(spec_json().as_ptr(), 0, &mut sim) };
    let mut json = ptr::null_mut();
    unsafe { mimic_sim_current_json(sim, &mut json) };
    let text = CString::new(take(json)).unwrap();
    let mut state = ptr::null_mut();
    unsafe { mimic_state_from_json(text.as_ptr(), &mut state) };

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { mimic_model_score(handle, state, &mut out) }, MimicStatus::Ok);
    let scores: Vec<f64> = serde_json::from_str(&take(out)).unwrap();
    let mut actions = ptr::null_mut();
    unsafe { mimic_state_actions_json(state, &mut actions) };
    let actions: Vec<serde_json::Value> = serde_json::from_str(&take(actions)).unwrap();
    assert_eq!(scores.len(), actions.len());
    assert!(scores.iter().all(|s| s.is_finite() && *s >= 0.0));
    unsafe {
        mimic_state_free(state);
        mimic_sim_free(sim);
        mimic_model_free(handle);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mimic.h")).unwrap();
    for name in [
        "mimic_last_error_message",
        "mimic_string_free",
        "mimic_state_from_json",
        "mimic_state_fingerprint",
        "mimic_state_actions_json",
        "mimic_state_free",
        "mimic_classify_session",
        "mimic_model_load",
        "mimic_model_score",
        "mimic_model_free",
        "mimic_sim_load",
        "mimic_sim_step",
        "mimic_sim_reset",
        "mimic_sim_current_json",
        "mimic_sim_free",
        "MIMIC_STATUS_OK",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
