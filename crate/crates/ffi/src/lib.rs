//! C interface to the scoring engine.
//!
//! Objects are opaque handles created by `*_new`/`*_load` functions and
//! released with the matching `*_free`. Every fallible call returns an
//! [`IcuStatus`]; on failure [`icu_last_error`] describes the problem for
//! the calling thread. Hourly grids are hour-major with
//! [`ICU_N_VARIABLES`] columns in the engine's variable order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use icu_acuity::eval::roc_auc;
use icu_acuity::ingest::EncounterSeries;
use icu_acuity::model::{load_model, Model, StreamingPredictor};
use icu_acuity::sofa::{sofa_trajectory, BedsideTable};
use icu_acuity::variables::N_VARIABLES;
use icu_acuity::Error;

pub const ICU_N_VARIABLES: usize = 14;
const _: () = assert!(ICU_N_VARIABLES == N_VARIABLES);

/// Return codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcuStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Shape = 5,
    UndefinedAuc = 6,
    Panic = 7,
}

pub struct IcuModel(Model);

pub struct IcuBedsideTable(BedsideTable);

/// Incremental predictor. Keeps its own copy of the model, so the model
/// handle may be freed first.
pub struct IcuStream(StreamingPredictor<'static>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> IcuStatus {
    match e {
        Error::Io { .. } => IcuStatus::Io,
        Error::Csv(_) | Error::Config(_) | Error::Schema(_) | Error::BedsideTable(_) | Error::Container(_) => {
            IcuStatus::Parse
        }
        Error::Shape(_) | Error::Mismatch(_) | Error::HourOutOfRange { .. } => IcuStatus::Shape,
        Error::UndefinedAuc => IcuStatus::UndefinedAuc,
        _ => IcuStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (IcuStatus, String)>) -> IcuStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IcuStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            IcuStatus::Panic
        }
    }
}

fn fail<T>(status: IcuStatus, msg: &str) -> Result<T, (IcuStatus, String)> {
    Err((status, msg.to_string()))
}

fn lift<T>(r: icu_acuity::Result<T>) -> Result<T, (IcuStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, (IcuStatus, String)> {
    if p.is_null() {
        return fail(IcuStatus::NullPointer, "path is null");
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => fail(IcuStatus::InvalidArgument, "path is not UTF-8"),
    }
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (IcuStatus, String)> {
    if p.is_null() {
        return Err((IcuStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], (IcuStatus, String)> {
    if p.is_null() {
        return Err((IcuStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn series_from(
    grid: *const f64,
    observed: *const u8,
    n_hours: usize,
) -> Result<EncounterSeries, (IcuStatus, String)> {
    if n_hours == 0 {
        return fail(IcuStatus::Shape, "n_hours must be positive");
    }
    let cells = n_hours * N_VARIABLES;
    let grid = slice_arg(grid, cells, "grid")?.to_vec();
    let observed = if observed.is_null() {
        vec![true; cells]
    } else {
        std::slice::from_raw_parts(observed, cells).iter().map(|&b| b != 0).collect()
    };
    lift(EncounterSeries::from_grid("ffi", "ffi", grid, observed, false))
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn icu_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn icu_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn icu_model_load(path: *const c_char, out: *mut *mut IcuModel) -> IcuStatus {
    guard(|| {
        if out.is_null() {
            return fail(IcuStatus::NullPointer, "out is null");
        }
        let model = lift(load_model(path_arg(path)?))?;
        *out = Box::into_raw(Box::new(IcuModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`icu_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn icu_model_free(model: *mut IcuModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Hidden state size, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn icu_model_hidden_dim(model: *const IcuModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.params.hidden_dim())
}

/// Predicts a whole stay. `grid` holds `n_hours` raw rows. `probs_out`
/// receives `n_hours` probabilities; `attention_out`, if not null, receives
/// the `n_hours * n_hours` attention matrix row-major.
///
/// # Safety
/// Buffers must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn icu_model_predict(
    model: *const IcuModel,
    grid: *const f64,
    n_hours: usize,
    probs_out: *mut f64,
    attention_out: *mut f64,
) -> IcuStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(IcuStatus::NullPointer, "model is null");
        };
        let series = series_from(grid, ptr::null(), n_hours)?;
        let traj = lift(m.0.predict(&series))?;
        slice_out(probs_out, n_hours, "probs_out")?.copy_from_slice(&traj.probs);
        if !attention_out.is_null() {
            let att = std::slice::from_raw_parts_mut(attention_out, n_hours * n_hours);
            for t in 0..n_hours {
                att[t * n_hours..(t + 1) * n_hours].copy_from_slice(traj.attention.row(t));
            }
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn icu_stream_new(model: *const IcuModel, out: *mut *mut IcuStream) -> IcuStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(IcuStatus::NullPointer, "model is null");
        };
        if out.is_null() {
            return fail(IcuStatus::NullPointer, "out is null");
        }
        *out = Box::into_raw(Box::new(IcuStream(m.0.clone().into_stream())));
        Ok(())
    })
}

/// Feeds one raw hour and writes that hour's probability. Earlier outputs
/// are never revised.
///
/// # Safety
/// `row` must hold [`ICU_N_VARIABLES`] values and `prob_out` be valid.
#[no_mangle]
pub unsafe extern "C" fn icu_stream_push(stream: *mut IcuStream, row: *const f64, prob_out: *mut f64) -> IcuStatus {
    guard(|| {
        let Some(s) = stream.as_mut() else {
            return fail(IcuStatus::NullPointer, "stream is null");
        };
        if prob_out.is_null() {
            return fail(IcuStatus::NullPointer, "prob_out is null");
        }
        let row = slice_arg(row, N_VARIABLES, "row")?;
        if row.iter().any(|v| !v.is_finite()) {
            return fail(IcuStatus::InvalidArgument, "row contains a non-finite value");
        }
        *prob_out = lift(s.0.push(row))?.prob;
        Ok(())
    })
}

/// Hours fed so far, or 0 for a null handle.
///
/// # Safety
/// `stream` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn icu_stream_hours(stream: *const IcuStream) -> usize {
    stream.as_ref().map_or(0, |s| s.0.hours())
}

/// # Safety
/// `stream` must come from [`icu_stream_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn icu_stream_free(stream: *mut IcuStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// The bundled bedside table.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn icu_bedside_default(out: *mut *mut IcuBedsideTable) -> IcuStatus {
    guard(|| {
        if out.is_null() {
            return fail(IcuStatus::NullPointer, "out is null");
        }
        *out = Box::into_raw(Box::new(IcuBedsideTable(BedsideTable::default())));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn icu_bedside_load(path: *const c_char, out: *mut *mut IcuBedsideTable) -> IcuStatus {
    guard(|| {
        if out.is_null() {
            return fail(IcuStatus::NullPointer, "out is null");
        }
        let table = lift(BedsideTable::load(path_arg(path)?))?;
        *out = Box::into_raw(Box::new(IcuBedsideTable(table)));
        Ok(())
    })
}

/// # Safety
/// `table` must be a live handle and `prob_out` valid.
#[no_mangle]
pub unsafe extern "C" fn icu_bedside_probability(
    table: *const IcuBedsideTable,
    total: i32,
    prob_out: *mut f64,
) -> IcuStatus {
    guard(|| {
        let Some(t) = table.as_ref() else {
            return fail(IcuStatus::NullPointer, "table is null");
        };
        if prob_out.is_null() {
            return fail(IcuStatus::NullPointer, "prob_out is null");
        }
        *prob_out = lift(t.0.probability(i64::from(total)))?;
        Ok(())
    })
}

/// # Safety
/// `table` must come from a bedside constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn icu_bedside_free(table: *mut IcuBedsideTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Hourly SOFA over a resampled grid. `observed` may be null, meaning every
/// cell was measured. `components_out` receives `n_hours * 6` scores
/// (cardiovascular, respiratory, CNS, coagulation, liver, renal) and
/// `totals_out`, if not null, `n_hours` totals.
///
/// # Safety
/// Buffers must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn icu_sofa_scores(
    grid: *const f64,
    observed: *const u8,
    n_hours: usize,
    components_out: *mut u8,
    totals_out: *mut u8,
) -> IcuStatus {
    guard(|| {
        let series = series_from(grid, observed, n_hours)?;
        let comps = slice_out(components_out, n_hours * 6, "components_out")?;
        for (t, a) in sofa_trajectory(&series).iter().enumerate() {
            comps[t * 6..t * 6 + 6].copy_from_slice(&a.components());
            if !totals_out.is_null() {
                *totals_out.add(t) = a.total;
            }
        }
        Ok(())
    })
}

/// ROC AUC with midrank ties. `labels` are 0 or non-zero.
///
/// # Safety
/// `scores` and `labels` must hold `n` elements and `auc_out` be valid.
#[no_mangle]
pub unsafe extern "C" fn icu_roc_auc(scores: *const f64, labels: *const u8, n: usize, auc_out: *mut f64) -> IcuStatus {
    guard(|| {
        let s = slice_arg(scores, n, "scores")?;
        let y: Vec<bool> = slice_arg(labels, n, "labels")?.iter().map(|&b| b != 0).collect();
        if auc_out.is_null() {
            return fail(IcuStatus::NullPointer, "auc_out is null");
        }
        *auc_out = lift(roc_auc(s, &y))?;
        Ok(())
    })
}
