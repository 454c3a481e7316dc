//! C ABI surface for the graphpse pipeline.
//!
//! Handles are opaque; every fallible call returns a [`GpseStatus`] and the
//! most recent failure message is retrievable per thread via
//! [`gpse_last_error`]. Strings crossing the boundary are NUL-terminated
//! UTF-8 owned by this library and must be released with
//! [`gpse_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr, CString};
use std::ptr;

use graphpse::graph::Graph;
use graphpse::io::{graph_to_json_line, parse_graph_line};
use graphpse::pse::{assemble_targets, PseConfig, PseTargets, TargetMode};
use graphpse::structuralize::{structuralize, TransformMode};
use graphpse::validate;

/// Result code for every fallible FFI call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum GpseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGraph = 3,
    ComputeError = 4,
}

/// Opaque graph handle.
pub struct GpseGraph {
    inner: Graph,
}

/// Opaque handle over per-node encoding targets.
pub struct GpseTargets {
    inner: PseTargets,
    width: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: GpseStatus, msg: impl Into<String>) -> GpseStatus {
    set_error(msg.into());
    status
}

/// Message describing the most recent failure on this thread, or NULL.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gpse_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parse one JSONL graph record. On success writes a new handle to `out`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpse_graph_from_json(
    json: *const c_char,
    out: *mut *mut GpseGraph,
) -> GpseStatus {
    if json.is_null() || out.is_null() {
        return fail(GpseStatus::NullPointer, "null pointer argument");
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => return fail(GpseStatus::InvalidArgument, "json is not valid UTF-8"),
    };
    match parse_graph_line(text, 1) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(GpseGraph { inner: g }));
            GpseStatus::Ok
        }
        Err(e) => fail(GpseStatus::InvalidGraph, e.to_string()),
    }
}

/// Serialize a graph back to a JSONL record. Free with `gpse_string_free`.
///
/// # Safety
/// `graph` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gpse_graph_to_json(graph: *const GpseGraph) -> *mut c_char {
    let Some(g) = graph.as_ref() else {
        set_error("null graph handle".into());
        return ptr::null_mut();
    };
    match graph_to_json_line(&g.inner) {
        Ok(s) => match CString::new(s) {
            Ok(c) => c.into_raw(),
            Err(_) => {
                set_error("NUL byte in serialized graph".into());
                ptr::null_mut()
            }
        },
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `graph` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn gpse_graph_num_nodes(graph: *const GpseGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.num_nodes)
}

/// Number of undirected edges, or 0 for a null handle.
///
/// # Safety
/// `graph` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn gpse_graph_num_edges(graph: *const GpseGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.edges.len())
}

/// Check structural invariants; `Ok` when the graph is valid.
///
/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gpse_graph_validate(graph: *const GpseGraph) -> GpseStatus {
    let Some(g) = graph.as_ref() else {
        return fail(GpseStatus::NullPointer, "null graph handle");
    };
    let report = validate(&g.inner);
    if report.is_valid() {
        GpseStatus::Ok
    } else {
        fail(GpseStatus::InvalidGraph, report.violations.join("; "))
    }
}

/// Feature-structuralization mode selector for [`gpse_structuralize`].
#[repr(C)]
#[derive(Clone, Copy)]
pub enum GpseTransformMode {
    Categorical = 0,
    Edge = 1,
    Continuous = 2,
    Auto = 3,
}

/// Apply feature-structuralization, writing a new graph handle to `out`.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpse_structuralize(
    graph: *const GpseGraph,
    mode: GpseTransformMode,
    out: *mut *mut GpseGraph,
) -> GpseStatus {
    let Some(g) = graph.as_ref() else {
        return fail(GpseStatus::NullPointer, "null graph handle");
    };
    if out.is_null() {
        return fail(GpseStatus::NullPointer, "null output pointer");
    }
    let mode = match mode {
        GpseTransformMode::Categorical => TransformMode::Categorical,
        GpseTransformMode::Edge => TransformMode::Edge,
        GpseTransformMode::Continuous => TransformMode::Continuous,
        GpseTransformMode::Auto => TransformMode::Auto,
    };
    match structuralize(&g.inner, mode) {
        Ok(res) => {
            *out = Box::into_raw(Box::new(GpseGraph { inner: res.graph }));
            GpseStatus::Ok
        }
        Err(e) => fail(GpseStatus::InvalidGraph, e.to_string()),
    }
}

/// Target-battery mode selector for [`gpse_encode`].
#[repr(C)]
#[derive(Clone, Copy)]
pub enum GpseTargetMode {
    Plain = 0,
    Structuralized = 1,
}

/// Compute the P/SE target battery for a graph with default settings.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpse_encode(
    graph: *const GpseGraph,
    mode: GpseTargetMode,
    out: *mut *mut GpseTargets,
) -> GpseStatus {
    let Some(g) = graph.as_ref() else {
        return fail(GpseStatus::NullPointer, "null graph handle");
    };
    if out.is_null() {
        return fail(GpseStatus::NullPointer, "null output pointer");
    }
    let mode = match mode {
        GpseTargetMode::Plain => TargetMode::Plain,
        GpseTargetMode::Structuralized => TargetMode::Structuralized,
    };
    match assemble_targets(&g.inner, &PseConfig::default(), mode) {
        Ok(t) => {
            let width = t.total_width();
            *out = Box::into_raw(Box::new(GpseTargets { inner: t, width }));
            GpseStatus::Ok
        }
        Err(e) => fail(GpseStatus::ComputeError, e.to_string()),
    }
}

/// Number of target rows (original nodes), or 0 for a null handle.
///
/// # Safety
/// `targets` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn gpse_targets_num_rows(targets: *const GpseTargets) -> usize {
    targets.as_ref().map_or(0, |t| t.inner.node_ids.len())
}

/// Width of each target row, or 0 for a null handle.
///
/// # Safety
/// `targets` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn gpse_targets_width(targets: *const GpseTargets) -> usize {
    targets.as_ref().map_or(0, |t| t.width)
}

/// Copy row `row` into `buf`, which must hold at least `len` doubles and
/// `len` must equal the row width.
///
/// # Safety
/// `targets` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gpse_targets_row(
    targets: *const GpseTargets,
    row: usize,
    buf: *mut c_double,
    len: usize,
) -> GpseStatus {
    let Some(t) = targets.as_ref() else {
        return fail(GpseStatus::NullPointer, "null targets handle");
    };
    if buf.is_null() {
        return fail(GpseStatus::NullPointer, "null buffer");
    }
    if row >= t.inner.node_ids.len() {
        return fail(GpseStatus::InvalidArgument, format!("row {row} out of range"));
    }
    if len != t.width {
        return fail(
            GpseStatus::InvalidArgument,
            format!("buffer length {len} != row width {}", t.width),
        );
    }
    let values = t.inner.row(row);
    ptr::copy_nonoverlapping(values.as_ptr(), buf, len);
    GpseStatus::Ok
}

/// Release a graph handle. NULL is a no-op.
///
/// # Safety
/// `graph` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gpse_graph_free(graph: *mut GpseGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Release a targets handle. NULL is a no-op.
///
/// # Safety
/// `targets` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gpse_targets_free(targets: *mut GpseTargets) {
    if !targets.is_null() {
        drop(Box::from_raw(targets));
    }
}

/// Release a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gpse_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
