//! C ABI over the peacelens engine.
//!
//! Every fallible function returns a [`PeacelensStatus`]. On failure a
//! message is kept per thread and can be read with
//! [`peacelens_last_error`]. Strings handed out by the library must be
//! released with [`peacelens_string_free`], models with
//! [`peacelens_model_free`].

use peacelens::embedding::stub_embed;
use peacelens::emotion::{map_valence, EmotionProfile, ValenceWeights};
use peacelens::eval::{pearson_r, Correlation};
use peacelens::nn::{load_checkpoint, Model, NnError, EMBEDDING_DIM};
use peacelens::scorer::{parse_response, PeaceDimension};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeacelensStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    CorruptCheckpoint = 4,
    ShapeMismatch = 5,
    /// A model reply could not be turned into five scores.
    ParseFailed = 6,
    /// The quantity is mathematically undefined, e.g. r of a constant series.
    Undefined = 7,
    Panic = 8,
}

/// Opaque trained classifier.
pub struct PeacelensModel {
    model: Model,
}

/// Number of values in one embedding.
pub const PEACELENS_EMBEDDING_DIM: usize = 1536;
const _: () = assert!(PEACELENS_EMBEDDING_DIM == EMBEDDING_DIM);
/// Number of emotion categories in a profile.
pub const PEACELENS_EMOTION_CATEGORIES: usize = 28;
const _: () = assert!(PEACELENS_EMOTION_CATEGORIES == peacelens::emotion::EMOTION_CATEGORIES.len());
/// Number of peace dimensions.
pub const PEACELENS_DIMENSIONS: usize = 5;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: PeacelensStatus, msg: impl Into<String>) -> PeacelensStatus {
    set_error(msg);
    status
}

/// Clear the error slot, run `f`, and map panics to a status.
fn guard(f: impl FnOnce() -> PeacelensStatus) -> PeacelensStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PeacelensStatus::Panic, msg)
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, PeacelensStatus> {
    if p.is_null() {
        return Err(fail(PeacelensStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PeacelensStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn nn_status(e: &NnError) -> PeacelensStatus {
    match e {
        NnError::Io(_) => PeacelensStatus::Io,
        NnError::CorruptCheckpoint(_) | NnError::UnsupportedVersion(_) => PeacelensStatus::CorruptCheckpoint,
        NnError::ShapeMismatch(_) => PeacelensStatus::ShapeMismatch,
        _ => PeacelensStatus::InvalidArgument,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn peacelens_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn peacelens_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn peacelens_model_load(path: *const c_char, out: *mut *mut PeacelensModel) -> PeacelensStatus {
    guard(|| {
        if out.is_null() {
            return fail(PeacelensStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let path = match c_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_checkpoint(path) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(PeacelensModel { model }));
                PeacelensStatus::Ok
            }
            Err(e) => fail(nn_status(&e), format!("{path}: {e}")),
        }
    })
}

/// Free a model. NULL is ignored.
///
/// # Safety
/// `model` must come from [`peacelens_model_load`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn peacelens_model_free(model: *mut PeacelensModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of input values the model expects.
///
/// # Safety
/// `model` must be a live model handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn peacelens_model_input_len(model: *const PeacelensModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.spec().input_len())
}

/// Architecture name (`feed_forward`, `cnn`, `revised_cnn` or `custom`).
/// Free the result with [`peacelens_string_free`].
///
/// # Safety
/// `model` must be a live model handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn peacelens_model_architecture(
    model: *const PeacelensModel,
    out: *mut *mut c_char,
) -> PeacelensStatus {
    guard(|| {
        let (Some(m), false) = (model.as_ref(), out.is_null()) else {
            return fail(PeacelensStatus::NullArgument, "model or out is null");
        };
        let name = m.model.spec().architecture().map_or("custom".to_string(), |a| a.to_string());
        *out = CString::new(name).expect("no NUL in names").into_raw();
        PeacelensStatus::Ok
    })
}

/// High-peace probability of one input vector.
///
/// # Safety
/// `input` must point to `len` doubles; `out_probability` must be valid.
#[no_mangle]
pub unsafe extern "C" fn peacelens_model_predict(
    model: *const PeacelensModel,
    input: *const f64,
    len: usize,
    out_probability: *mut f64,
) -> PeacelensStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(PeacelensStatus::NullArgument, "model is null");
        };
        if input.is_null() || out_probability.is_null() {
            return fail(PeacelensStatus::NullArgument, "input or out_probability is null");
        }
        let x = std::slice::from_raw_parts(input, len);
        match m.model.predict(x) {
            Ok(p) => {
                *out_probability = p;
                PeacelensStatus::Ok
            }
            Err(e) => fail(nn_status(&e), e.to_string()),
        }
    })
}

/// Deterministic offline embedding of `text`: unit norm, seeded by its
/// SHA-256. `out_len` must equal [`PEACELENS_EMBEDDING_DIM`].
///
/// # Safety
/// `text` must be NUL-terminated; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn peacelens_stub_embed(text: *const c_char, out: *mut f64, out_len: usize) -> PeacelensStatus {
    guard(|| {
        let text = match c_str(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(PeacelensStatus::NullArgument, "out is null");
        }
        if out_len != EMBEDDING_DIM {
            return fail(
                PeacelensStatus::ShapeMismatch,
                format!("out_len {out_len}, embeddings have {EMBEDDING_DIM} values"),
            );
        }
        std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(stub_embed(text).as_slice());
        PeacelensStatus::Ok
    })
}

/// Sample Pearson correlation. Returns `Undefined` (and leaves `out_r`
/// untouched) when either series is constant.
///
/// # Safety
/// `x` and `y` must each point to `n` doubles; `out_r` must be valid.
#[no_mangle]
pub unsafe extern "C" fn peacelens_pearson_r(x: *const f64, y: *const f64, n: usize, out_r: *mut f64) -> PeacelensStatus {
    guard(|| {
        if x.is_null() || y.is_null() || out_r.is_null() {
            return fail(PeacelensStatus::NullArgument, "x, y or out_r is null");
        }
        let (x, y) = (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n));
        match pearson_r(x, y) {
            Ok(Correlation::Defined(r)) => {
                *out_r = r;
                PeacelensStatus::Ok
            }
            Ok(Correlation::Undefined) => fail(PeacelensStatus::Undefined, "zero variance"),
            Err(e) => fail(PeacelensStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Valence in [-1, 1] of a 28-category emotion profile under the built-in
/// weight table. Categories are in the order of the emotion taxonomy,
/// `neutral` last.
///
/// # Safety
/// `scores` must point to 28 doubles; `out_valence` must be valid.
#[no_mangle]
pub unsafe extern "C" fn peacelens_map_valence(scores: *const f64, out_valence: *mut f64) -> PeacelensStatus {
    guard(|| {
        if scores.is_null() || out_valence.is_null() {
            return fail(PeacelensStatus::NullArgument, "scores or out_valence is null");
        }
        let mut s = [0.0; 28];
        s.copy_from_slice(std::slice::from_raw_parts(scores, 28));
        match EmotionProfile::new(0, s) {
            Ok(p) => {
                *out_valence = map_valence(&p, &ValenceWeights::default());
                PeacelensStatus::Ok
            }
            Err(e) => fail(PeacelensStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Parse a model reply into five scores ordered compassion_contempt,
/// news_opinion, prevention_promotion, order_creativity, nuance_simplistic.
/// On `ParseFailed` the last error starts with the error kind, e.g.
/// `out_of_range: ...`.
///
/// # Safety
/// `response` must be NUL-terminated; `out_scores` must hold 5 bytes.
#[no_mangle]
pub unsafe extern "C" fn peacelens_parse_scores(response: *const c_char, out_scores: *mut u8) -> PeacelensStatus {
    guard(|| {
        let raw = match c_str(response, "response") {
            Ok(r) => r,
            Err(s) => return s,
        };
        if out_scores.is_null() {
            return fail(PeacelensStatus::NullArgument, "out_scores is null");
        }
        match parse_response(raw) {
            Ok(parsed) => {
                let out = std::slice::from_raw_parts_mut(out_scores, 5);
                for (o, d) in out.iter_mut().zip(PeaceDimension::ALL) {
                    *o = parsed[&d].0;
                }
                PeacelensStatus::Ok
            }
            Err(e) => fail(PeacelensStatus::ParseFailed, format!("{}: {e}", e.kind())),
        }
    })
}
