//! C ABI over the skilleval engine.
//!
//! Every function returns an [`SkStatus`]; on failure a message is available
//! from [`sk_last_error_message`] on the same thread until the next call.
//! Models live behind the opaque [`SkModel`] handle, created by
//! [`sk_model_load`] and released with [`sk_model_free`]. Sample buffers are
//! row-major `rows × 76` doubles (time-major, as in the kinematics files).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use skilleval::cam::compute_cam;
use skilleval::evaluation::spearman_rho;
use skilleval::kinematics::N_CHANNELS;
use skilleval::training::{load_model, predict_samples};
use skilleval::{Error, FcnModel, HeadKind, Matrix, StandardizationStats};

/// Result codes. `SK_OK` is zero; everything else is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkStatus {
    SkOk = 0,
    SkNullPointer = 1,
    SkInvalidArgument = 2,
    SkIo = 3,
    SkCorruptModel = 4,
    SkShapeMismatch = 5,
    SkIndexOutOfRange = 6,
    SkBufferTooSmall = 7,
    SkPanic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkHeadKind {
    SkClassification = 0,
    SkRegression = 1,
}

/// A trained model with its standardization statistics.
pub struct SkModel {
    model: FcnModel,
    stats: StandardizationStats,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SkStatus {
    match e {
        Error::Io { .. } => SkStatus::SkIo,
        Error::Json { .. } | Error::VersionMismatch { .. } | Error::CorruptModel(_) => {
            SkStatus::SkCorruptModel
        }
        Error::ChannelMismatch { .. }
        | Error::LengthTooShort(_)
        | Error::ShapeMismatch(_)
        | Error::LengthMismatch { .. } => SkStatus::SkShapeMismatch,
        Error::IndexOutOfRange { .. } => SkStatus::SkIndexOutOfRange,
        _ => SkStatus::SkInvalidArgument,
    }
}

struct Fail(SkStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SkStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkStatus::SkOk,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SkStatus::SkPanic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(SkStatus::SkNullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Copies a caller buffer into a matrix after checking its shape.
unsafe fn samples_from(samples: *const f64, rows: usize, cols: usize) -> Result<Matrix, Fail> {
    non_null(samples, "samples")?;
    if cols != N_CHANNELS {
        return Err(Fail(
            SkStatus::SkShapeMismatch,
            format!("expected {N_CHANNELS} columns, got {cols}"),
        ));
    }
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Fail(SkStatus::SkInvalidArgument, "rows * cols overflows".into()))?;
    let data = std::slice::from_raw_parts(samples, n).to_vec();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Fail(
            SkStatus::SkInvalidArgument,
            "samples contain non-finite values".into(),
        ));
    }
    Ok(Matrix::from_vec(rows, cols, data))
}

unsafe fn model_ref<'a>(model: *const SkModel) -> Result<&'a SkModel, Fail> {
    non_null(model, "model")?;
    Ok(&*model)
}

unsafe fn write_out(dst: *mut f64, capacity: usize, src: &[f64], what: &str) -> Result<(), Fail> {
    non_null(dst, what)?;
    if capacity < src.len() {
        return Err(Fail(
            SkStatus::SkBufferTooSmall,
            format!("{what} holds {capacity} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a model file written by `skilleval train`.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_model_load(path: *const c_char, out: *mut *mut SkModel) -> SkStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(SkStatus::SkInvalidArgument, "path is not UTF-8".into()))?;
        let (model, stats) = load_model(Path::new(path))?;
        *out = Box::into_raw(Box::new(SkModel { model, stats }));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from [`sk_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sk_model_free(model: *mut SkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sk_model_head_kind(
    model: *const SkModel,
    out: *mut SkHeadKind,
) -> SkStatus {
    guard(|| {
        let m = model_ref(model)?;
        non_null(out, "out")?;
        *out = match m.model.head_kind {
            HeadKind::Classification => SkHeadKind::SkClassification,
            HeadKind::Regression => SkHeadKind::SkRegression,
        };
        Ok(())
    })
}

/// 3 for classification, 6 for regression.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sk_model_n_outputs(model: *const SkModel, out: *mut usize) -> SkStatus {
    guard(|| {
        let m = model_ref(model)?;
        non_null(out, "out")?;
        *out = m.model.n_outputs();
        Ok(())
    })
}

/// Runs a raw (unstandardized) trial through the model and writes the head
/// output: class probabilities (N, I, E) or the six OSATS scores.
///
/// # Safety
/// `samples` must hold `rows * cols` doubles and `out` at least `out_len`.
#[no_mangle]
pub unsafe extern "C" fn sk_predict(
    model: *const SkModel,
    samples: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
    out_len: usize,
) -> SkStatus {
    guard(|| {
        let m = model_ref(model)?;
        let x = samples_from(samples, rows, cols)?;
        let trace = predict_samples(&m.model, &m.stats, &x)?;
        write_out(out, out_len, trace.output(), "out")
    })
}

/// Class activation map of output `output_index` (0-based) for a raw trial.
/// Writes `rows` raw values to `out_raw` and, when `out_normalized` is not
/// null, the min–max normalized map; `z_check` (nullable) receives
/// `mean(raw) + bias`, the pre-activation output.
///
/// # Safety
/// Buffers must hold at least `out_len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn sk_cam(
    model: *const SkModel,
    samples: *const f64,
    rows: usize,
    cols: usize,
    output_index: usize,
    out_raw: *mut f64,
    out_normalized: *mut f64,
    out_len: usize,
    z_check: *mut f64,
) -> SkStatus {
    guard(|| {
        let m = model_ref(model)?;
        let x = samples_from(samples, rows, cols)?;
        let trace = predict_samples(&m.model, &m.stats, &x)?;
        let cam = compute_cam(&m.model, &trace, output_index)?;
        write_out(out_raw, out_len, &cam.values, "out_raw")?;
        if !out_normalized.is_null() {
            write_out(out_normalized, out_len, &cam.normalized, "out_normalized")?;
        }
        if !z_check.is_null() {
            *z_check = cam.z_check;
        }
        Ok(())
    })
}

/// Spearman's ρ with average ranks for ties; 0 when either input is constant.
///
/// # Safety
/// `x` and `y` must each hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_spearman_rho(
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> SkStatus {
    guard(|| {
        non_null(x, "x")?;
        non_null(y, "y")?;
        non_null(out, "out")?;
        let (x, y) = (
            std::slice::from_raw_parts(x, n),
            std::slice::from_raw_parts(y, n),
        );
        *out = spearman_rho(x, y)?;
        Ok(())
    })
}
