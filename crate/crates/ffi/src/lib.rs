//! C ABI over `mimic-core`.
//!
//! Every function returns a [`MimicStatus`]; results go through out
//! pointers. On failure the message is kept per thread and can be read
//! with [`mimic_last_error_message`]. Handles are opaque and must be
//! released with the matching `*_free` function. Strings returned by the
//! library are released with [`mimic_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use mimic_core::model::{score_actions, Checkpoint, InteractionModel};
use mimic_core::raster::UiContext;
use mimic_core::sim::{SimApp, SimAppSpec, SimSession};
use mimic_core::trace::{classify_session, InteractionSession, TraceConfig};
use mimic_core::ui::{enumerate_actions, Point, UiState};
use mimic_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MimicStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Io = 4,
    OutOfRange = 5,
    Internal = 6,
}

/// A parsed UI state.
pub struct MimicState(UiState);

/// A loaded interaction model.
pub struct MimicModel(InteractionModel<f32>);

/// A running simulator session.
pub struct MimicSim(SimSession);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(MimicStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => MimicStatus::Io,
            Error::Shape { .. } | Error::NonFinite(_) => MimicStatus::Internal,
            _ => MimicStatus::InvalidInput,
        };
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MimicStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MimicStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside mimic");
            MimicStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(MimicStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(MimicStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(MimicStatus::Internal, "string contains a NUL byte".into()))
}

fn json(r: serde_json::Result<String>) -> Result<*mut c_char, Fail> {
    to_c_string(r.map_err(Error::Json)?)
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    let slot = as_mut(out, what)?;
    *slot = v;
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn mimic_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn mimic_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimic_state_from_json(json: *const c_char, out: *mut *mut MimicState) -> MimicStatus {
    guard(|| {
        let state = UiState::from_json(as_str(json, "json")?)?;
        put(out, Box::into_raw(Box::new(MimicState(state))), "out")
    })
}

/// # Safety
/// `state` must come from [`mimic_state_from_json`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimic_state_fingerprint(state: *const MimicState, out: *mut u64) -> MimicStatus {
    guard(|| {
        let s = as_ref(state, "state")?;
        put(out, s.0.fingerprint().0, "out")
    })
}

/// JSON array of the state's enumerable actions, in canonical order.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimic_state_actions_json(state: *const MimicState, out: *mut *mut c_char) -> MimicStatus {
    guard(|| {
        let s = as_ref(state, "state")?;
        put(out, json(serde_json::to_string(&enumerate_actions(&s.0)))?, "out")
    })
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mimic_state_free(state: *mut MimicState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Gesture kind of a single pointer session under the default thresholds,
/// as an index into touch, long touch, swipe up, down, left, right.
///
/// # Safety
/// `out_kind` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimic_classify_session(
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
    duration_ms: i64,
    out_kind: *mut u32,
) -> MimicStatus {
    guard(|| {
        if duration_ms < 0 {
            return Err(Fail(MimicStatus::OutOfRange, "negative duration".into()));
        }
        let session = InteractionSession {
            time_start: 0,
            time_end: duration_ms,
            loc_start: Point { x: x0, y: y0 },
            loc_end: Point { x: x1, y: y1 },
            keyboard_shown: false,
            focused_editable: None,
            state_before: String::new(),
        };
        let (kind, _) = classify_session(&session, &TraceConfig::default());
        put(out_kind, kind.index() as u32, "out_kind")
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimic_model_load(path: *const c_char, out: *mut *mut MimicModel) -> MimicStatus {
    guard(|| {
        let ckpt = Checkpoint::load(Path::new(as_str(path, "path")?))?;
        let model = ckpt.to_model::<f32>()?;
        put(out, Box::into_raw(Box::new(MimicModel(model))), "out")
    })
}

/// JSON array of scores, one per action of [`mimic_state_actions_json`],
/// for the state seen without history.
///
/// # Safety
/// `model` and `state` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimic_model_score(
    model: *const MimicModel,
    state: *const MimicState,
    out: *mut *mut c_char,
) -> MimicStatus {
    guard(|| {
        let m = as_ref(model, "model")?;
        let s = &as_ref(state, "state")?.0;
        let pred = m.0.predict(&UiContext::new(s, Vec::new())?)?;
        let scores = score_actions(&pred, s, &enumerate_actions(s))?;
        put(out, json(serde_json::to_string(&scores))?, "out")
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mimic_model_free(model: *mut MimicModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Starts a session on a simulated app given as its JSON spec.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimic_sim_load(spec_json: *const c_char, seed: u64, out: *mut *mut MimicSim) -> MimicStatus {
    guard(|| {
        let app = SimApp::new(SimAppSpec::from_json(as_str(spec_json, "spec_json")?)?)?;
        let session = SimSession::new(Arc::new(app), seed);
        put(out, Box::into_raw(Box::new(MimicSim(session))), "out")
    })
}

/// Performs the `action_index`-th enumerable action of the current state.
/// Writes the new state's fingerprint and whether it is a target; either
/// out pointer may be null.
///
/// # Safety
/// `sim` must be a live handle; non-null out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimic_sim_step(
    sim: *mut MimicSim,
    action_index: usize,
    out_fingerprint: *mut u64,
    out_is_target: *mut bool,
) -> MimicStatus {
    guard(|| {
        let session = &mut as_mut(sim, "sim")?.0;
        let actions = enumerate_actions(session.current_state());
        let action = actions.get(action_index).ok_or_else(|| {
            Fail(
                MimicStatus::OutOfRange,
                format!("action {action_index} out of range ({} actions)", actions.len()),
            )
        })?;
        let fp = session.step(action)?.fingerprint().0;
        if !out_fingerprint.is_null() {
            *out_fingerprint = fp;
        }
        if !out_is_target.is_null() {
            *out_is_target = session.app().is_target(session.current());
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mimic_sim_reset(sim: *mut MimicSim) -> MimicStatus {
    guard(|| {
        as_mut(sim, "sim")?.0.reset();
        Ok(())
    })
}

/// The current state as JSON, loadable with [`mimic_state_from_json`].
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mimic_sim_current_json(sim: *const MimicSim, out: *mut *mut c_char) -> MimicStatus {
    guard(|| {
        let session = &as_ref(sim, "sim")?.0;
        put(out, to_c_string(session.current_state().to_json())?, "out")
    })
}

/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mimic_sim_free(sim: *mut MimicSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
