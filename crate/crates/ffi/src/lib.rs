//! C ABI over the edgecrf model and inference routines.
//!
//! Every fallible function returns an [`EdgecrfStatus`]; on failure the
//! message is available from [`edgecrf_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use edgecrf::crf::{self, EnergyLattice};
use edgecrf::data::RawSentence;
use edgecrf::train::Model;
use edgecrf::Error;
use libc::c_char;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgecrfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Internal = 5,
}

/// A trained model loaded from a model file.
pub struct EdgecrfModel {
    model: Model,
    labels: Vec<CString>,
}

/// An energy lattice for direct use of the inference routines.
pub struct EdgecrfLattice {
    lat: EnergyLattice,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: EdgecrfStatus, msg: &str) -> EdgecrfStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> EdgecrfStatus {
    let status = match e {
        Error::Io(_) => EdgecrfStatus::Io,
        Error::Format(_) | Error::Parse { .. } | Error::Load(_) => EdgecrfStatus::Format,
        Error::Usage(_) | Error::Config(_) => EdgecrfStatus::InvalidArgument,
        Error::Numeric(_) => EdgecrfStatus::Internal,
    };
    fail(status, &e.to_string())
}

/// Run `f`, turning panics into `Internal`.
fn guard<F: FnOnce() -> EdgecrfStatus>(f: F) -> EdgecrfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(EdgecrfStatus::Internal, "internal panic"),
    }
}

/// Message of the last failed call on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn edgecrf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn edgecrf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Load a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_model_load(path: *const c_char, out: *mut *mut EdgecrfModel) -> EdgecrfStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(EdgecrfStatus::NullPointer, "path and out must not be null");
        }
        let Ok(p) = CStr::from_ptr(path).to_str() else {
            return fail(EdgecrfStatus::InvalidArgument, "path is not valid UTF-8");
        };
        match edgecrf::cli::load_model(Path::new(p)) {
            Ok((model, _)) => {
                let labels = (0..model.num_labels())
                    .map(|i| CString::new(model.label_name(i)).unwrap_or_default())
                    .collect();
                *out = Box::into_raw(Box::new(EdgecrfModel { model, labels }));
                EdgecrfStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// # Safety
/// `model` must come from [`edgecrf_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_model_free(model: *mut EdgecrfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of labels; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_model_num_labels(model: *const EdgecrfModel) -> usize {
    model.as_ref().map_or(0, |m| m.labels.len())
}

/// Name of label `id`; the string lives as long as the model.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_model_label_name(
    model: *const EdgecrfModel,
    id: usize,
    out: *mut *const c_char,
) -> EdgecrfStatus {
    guard(|| {
        let (Some(m), false) = (model.as_ref(), out.is_null()) else {
            return fail(EdgecrfStatus::NullPointer, "model and out must not be null");
        };
        match m.labels.get(id) {
            Some(s) => {
                *out = s.as_ptr();
                EdgecrfStatus::Ok
            }
            None => fail(EdgecrfStatus::InvalidArgument, &format!("label id {id} out of range")),
        }
    })
}

unsafe fn strings(p: *const *const c_char, n: usize, what: &str) -> Result<Vec<String>, EdgecrfStatus> {
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let s = *p.add(i);
        if s.is_null() {
            return Err(fail(EdgecrfStatus::NullPointer, &format!("{what}[{i}] is null")));
        }
        match CStr::from_ptr(s).to_str() {
            Ok(s) if !s.is_empty() => v.push(s.to_string()),
            _ => {
                return Err(fail(
                    EdgecrfStatus::InvalidArgument,
                    &format!("{what}[{i}] is empty or not UTF-8"),
                ))
            }
        }
    }
    Ok(v)
}

/// Viterbi-decode one sentence. `pos` may be null when the model does not
/// use POS features. Writes `n` label ids to `labels_out`.
///
/// # Safety
/// `tokens` (and `pos` if non-null) must point to `n` NUL-terminated
/// strings; `labels_out` must have room for `n` entries.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_model_tag(
    model: *const EdgecrfModel,
    tokens: *const *const c_char,
    pos: *const *const c_char,
    n: usize,
    labels_out: *mut usize,
) -> EdgecrfStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(EdgecrfStatus::NullPointer, "model must not be null");
        };
        if tokens.is_null() || labels_out.is_null() {
            return fail(EdgecrfStatus::NullPointer, "tokens and labels_out must not be null");
        }
        if n == 0 {
            return fail(EdgecrfStatus::InvalidArgument, "sentence must have at least one token");
        }
        let toks = match strings(tokens, n, "tokens") {
            Ok(v) => v,
            Err(s) => return s,
        };
        let tags = if pos.is_null() {
            if m.model.spec().features.pos {
                return fail(EdgecrfStatus::InvalidArgument, "this model needs POS tags");
            }
            None
        } else {
            match strings(pos, n, "pos") {
                Ok(v) => Some(v),
                Err(s) => return s,
            }
        };
        let raw = match RawSentence::new(toks, tags, None) {
            Ok(r) => r,
            Err(e) => return from_error(&e),
        };
        match m.model.predict(&m.model.features(&raw)) {
            Ok(ys) => {
                std::slice::from_raw_parts_mut(labels_out, n).copy_from_slice(&ys);
                EdgecrfStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Zero lattice with `len` positions and `labels` labels.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_lattice_new(
    len: usize,
    labels: usize,
    out: *mut *mut EdgecrfLattice,
) -> EdgecrfStatus {
    guard(|| {
        if out.is_null() {
            return fail(EdgecrfStatus::NullPointer, "out must not be null");
        }
        match EnergyLattice::zeros(len, labels) {
            Ok(lat) => {
                *out = Box::into_raw(Box::new(EdgecrfLattice { lat }));
                EdgecrfStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// # Safety
/// `lat` must come from [`edgecrf_lattice_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_lattice_free(lat: *mut EdgecrfLattice) {
    if !lat.is_null() {
        drop(Box::from_raw(lat));
    }
}

unsafe fn lattice_mut<'a>(lat: *mut EdgecrfLattice) -> Result<&'a mut EnergyLattice, EdgecrfStatus> {
    lat.as_mut()
        .map(|l| &mut l.lat)
        .ok_or_else(|| fail(EdgecrfStatus::NullPointer, "lattice must not be null"))
}

unsafe fn lattice_ref<'a>(lat: *const EdgecrfLattice) -> Result<&'a EnergyLattice, EdgecrfStatus> {
    lat.as_ref()
        .map(|l| &l.lat)
        .ok_or_else(|| fail(EdgecrfStatus::NullPointer, "lattice must not be null"))
}

fn check_finite(v: f64) -> Result<(), EdgecrfStatus> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(fail(EdgecrfStatus::InvalidArgument, "energies must be finite"))
    }
}

fn bounds(ok: bool, what: &str) -> Result<(), EdgecrfStatus> {
    if ok {
        Ok(())
    } else {
        Err(fail(EdgecrfStatus::InvalidArgument, &format!("{what} out of range")))
    }
}

fn status(r: Result<(), EdgecrfStatus>) -> EdgecrfStatus {
    r.err().unwrap_or(EdgecrfStatus::Ok)
}

/// Set the local energy of label `y` at position `i`.
///
/// # Safety
/// `lat` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_lattice_set_local(
    lat: *mut EdgecrfLattice,
    i: usize,
    y: usize,
    value: f64,
) -> EdgecrfStatus {
    guard(|| {
        status((|| {
            let l = lattice_mut(lat)?;
            bounds(i < l.len() && y < l.num_labels(), "position or label")?;
            check_finite(value)?;
            l.local_mut(i)[y] = value;
            Ok(())
        })())
    })
}

/// Set the transition energy from `prev` at position `i` to `cur` at
/// position `i + 1`.
///
/// # Safety
/// `lat` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_lattice_set_transition(
    lat: *mut EdgecrfLattice,
    i: usize,
    prev: usize,
    cur: usize,
    value: f64,
) -> EdgecrfStatus {
    guard(|| {
        status((|| {
            let l = lattice_mut(lat)?;
            let n = l.num_labels();
            bounds(i + 1 < l.len() && prev < n && cur < n, "transition index")?;
            check_finite(value)?;
            l.trans_table_mut(i)[prev * n + cur] = value;
            Ok(())
        })())
    })
}

/// Set the start energy of label `y`.
///
/// # Safety
/// `lat` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_lattice_set_start(lat: *mut EdgecrfLattice, y: usize, value: f64) -> EdgecrfStatus {
    guard(|| {
        status((|| {
            let l = lattice_mut(lat)?;
            bounds(y < l.num_labels(), "label")?;
            check_finite(value)?;
            l.start[y] = value;
            Ok(())
        })())
    })
}

/// Set the end energy of label `y`.
///
/// # Safety
/// `lat` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_lattice_set_end(lat: *mut EdgecrfLattice, y: usize, value: f64) -> EdgecrfStatus {
    guard(|| {
        status((|| {
            let l = lattice_mut(lat)?;
            bounds(y < l.num_labels(), "label")?;
            check_finite(value)?;
            l.end[y] = value;
            Ok(())
        })())
    })
}

/// Log partition function.
///
/// # Safety
/// `lat` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_lattice_log_partition(lat: *const EdgecrfLattice, out: *mut f64) -> EdgecrfStatus {
    guard(|| {
        status((|| {
            let l = lattice_ref(lat)?;
            if out.is_null() {
                return Err(fail(EdgecrfStatus::NullPointer, "out must not be null"));
            }
            *out = crf::log_partition(l);
            Ok(())
        })())
    })
}

/// Best path: writes `len` label ids to `labels_out` and its score to
/// `score_out` (which may be null).
///
/// # Safety
/// `labels_out` must have room for the lattice length.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_lattice_viterbi(
    lat: *const EdgecrfLattice,
    labels_out: *mut usize,
    score_out: *mut f64,
) -> EdgecrfStatus {
    guard(|| {
        status((|| {
            let l = lattice_ref(lat)?;
            if labels_out.is_null() {
                return Err(fail(EdgecrfStatus::NullPointer, "labels_out must not be null"));
            }
            let best = crf::viterbi(l);
            std::slice::from_raw_parts_mut(labels_out, l.len()).copy_from_slice(&best.labels);
            if !score_out.is_null() {
                *score_out = best.score;
            }
            Ok(())
        })())
    })
}

/// Node marginals, `len x labels` row-major, into `node_out`.
///
/// # Safety
/// `node_out` must have room for `len * labels` doubles.
#[no_mangle]
pub unsafe extern "C" fn edgecrf_lattice_marginals(lat: *const EdgecrfLattice, node_out: *mut f64) -> EdgecrfStatus {
    guard(|| {
        status((|| {
            let l = lattice_ref(lat)?;
            if node_out.is_null() {
                return Err(fail(EdgecrfStatus::NullPointer, "node_out must not be null"));
            }
            let m = crf::marginals(l);
            std::slice::from_raw_parts_mut(node_out, m.node.len()).copy_from_slice(&m.node);
            Ok(())
        })())
    })
}
