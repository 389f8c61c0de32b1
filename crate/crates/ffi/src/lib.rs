//! C ABI over `whatif-core`.
//!
//! A `WhatifSession` handle owns one cube and its scenario store. Every
//! fallible call returns a `WhatifStatus`; on failure the message is
//! available from `whatif_last_error` until the next call on that handle.
//! Strings handed out by the library are freed with `whatif_string_free`.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use whatif_core::{export_rows, load_cube, AggregationSpec, CubeManifest, Error, Session};

/// Result of every fallible call. Values are stable.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhatifStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Panic = 3,
    InvalidSchema = 10,
    SchemaMismatch = 11,
    UnknownDimension = 12,
    UnknownMeasure = 13,
    UnknownValue = 14,
    WrongDimension = 15,
    UnknownScenario = 16,
    NameCollision = 17,
    SelfReference = 18,
    EmptyResolution = 19,
    EmptySelection = 20,
    ScenarioInRealQuery = 21,
    NonFiniteFactor = 22,
    MissingKey = 23,
    IndexOutOfRange = 24,
    MissingColumn = 25,
    MeasureParse = 26,
    DuplicateValue = 27,
    Csv = 28,
    MalformedDocument = 29,
    QueryParse = 30,
    NoCube = 31,
}

impl From<&Error> for WhatifStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidSchema(_) => WhatifStatus::InvalidSchema,
            Error::SchemaMismatch(_) => WhatifStatus::SchemaMismatch,
            Error::UnknownDimension(_) => WhatifStatus::UnknownDimension,
            Error::UnknownMeasure(_) => WhatifStatus::UnknownMeasure,
            Error::UnknownValue(_) => WhatifStatus::UnknownValue,
            Error::WrongDimension { .. } => WhatifStatus::WrongDimension,
            Error::UnknownScenario(_) => WhatifStatus::UnknownScenario,
            Error::NameCollision(_) => WhatifStatus::NameCollision,
            Error::SelfReference(_) => WhatifStatus::SelfReference,
            Error::EmptyResolution(_) => WhatifStatus::EmptyResolution,
            Error::EmptySelection(_) => WhatifStatus::EmptySelection,
            Error::ScenarioInRealQuery(_) => WhatifStatus::ScenarioInRealQuery,
            Error::NonFiniteFactor(_) => WhatifStatus::NonFiniteFactor,
            Error::MissingKey(_) => WhatifStatus::MissingKey,
            Error::IndexOutOfRange { .. } => WhatifStatus::IndexOutOfRange,
            Error::MissingColumn(_) => WhatifStatus::MissingColumn,
            Error::MeasureParse { .. } => WhatifStatus::MeasureParse,
            Error::DuplicateValue { .. } => WhatifStatus::DuplicateValue,
            Error::Csv(_) => WhatifStatus::Csv,
            Error::MalformedDocument(_) => WhatifStatus::MalformedDocument,
            Error::QueryParse { .. } => WhatifStatus::QueryParse,
            Error::NoCube => WhatifStatus::NoCube,
        }
    }
}

/// Opaque session handle.
pub struct WhatifSession {
    inner: Session,
    last_error: Option<CString>,
}

enum Fail {
    Status(WhatifStatus, String),
    Domain(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Domain(e)
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Status(WhatifStatus::NullArgument, format!("`{what}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Status(WhatifStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

fn out_string(s: String) -> *mut c_char {
    // CSV cells may contain NUL
    CString::new(s.replace('\0', "")).expect("NULs removed").into_raw()
}

/// Runs `f` with the session, recording the error message on failure.
unsafe fn call<F>(session: *mut WhatifSession, f: F) -> WhatifStatus
where
    F: FnOnce(&mut Session) -> Result<(), Fail>,
{
    let Some(handle) = session.as_mut() else {
        return WhatifStatus::NullArgument;
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| f(&mut handle.inner)));
    let (status, message) = match outcome {
        Ok(Ok(())) => (WhatifStatus::Ok, None),
        Ok(Err(Fail::Status(s, m))) => (s, Some(m)),
        Ok(Err(Fail::Domain(e))) => (WhatifStatus::from(&e), Some(format!("{}: {e}", e.code()))),
        Err(_) => (WhatifStatus::Panic, Some("internal panic".to_string())),
    };
    handle.last_error = message.map(|m| CString::new(m.replace('\0', "")).expect("NULs removed"));
    status
}

/// Creates an empty session. Free it with `whatif_session_free`.
#[no_mangle]
pub extern "C" fn whatif_session_new() -> *mut WhatifSession {
    Box::into_raw(Box::new(WhatifSession {
        inner: Session::new(),
        last_error: None,
    }))
}

/// # Safety
/// `session` must come from `whatif_session_new` and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn whatif_session_free(session: *mut WhatifSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Message of the last failed call on `session`, or null after a success.
/// Owned by the session; valid until the next call on it.
///
/// # Safety
/// `session` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn whatif_last_error(session: *const WhatifSession) -> *const c_char {
    session
        .as_ref()
        .and_then(|s| s.last_error.as_ref())
        .map_or(ptr::null(), |m| m.as_ptr())
}

/// Counter bumped by every successful change; 0 for a null handle.
///
/// # Safety
/// `session` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn whatif_revision(session: *const WhatifSession) -> u64 {
    session.as_ref().map_or(0, |s| s.inner.revision())
}

/// Loads a cube from CSV text. `manifest_json` is
/// `{"dimensions": [...], "measures": [...]}`. Clears all scenarios.
///
/// # Safety
/// `session` must be a live handle; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn whatif_load_cube(
    session: *mut WhatifSession,
    manifest_json: *const c_char,
    csv: *const c_char,
) -> WhatifStatus {
    call(session, |s| {
        let manifest: CubeManifest = serde_json::from_str(text(manifest_json, "manifest_json")?)
            .map_err(|e| Error::MalformedDocument(e.to_string()))?;
        s.load_cube(load_cube(text(csv, "csv")?, &manifest)?);
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn whatif_create_scenario(
    session: *mut WhatifSession,
    value: *const c_char,
    dimension: *const c_char,
) -> WhatifStatus {
    call(session, |s| {
        s.create_scenario(text(value, "value")?, text(dimension, "dimension")?)?;
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle; `value` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn whatif_delete_scenario(session: *mut WhatifSession, value: *const c_char) -> WhatifStatus {
    call(session, |s| {
        s.delete_scenario(text(value, "value")?)?;
        Ok(())
    })
}

/// Associates `query` (text form, e.g. `Year=2011;Supplier=SU1`) with
/// scenario `target`. `measures[i]` gets factor `factors[i]`; unlisted
/// measures keep factor 1. `count` may be 0 with null arrays.
///
/// # Safety
/// `session` must be a live handle; strings must be NUL-terminated; the two
/// arrays must hold `count` elements each.
#[no_mangle]
pub unsafe extern "C" fn whatif_associate(
    session: *mut WhatifSession,
    target: *const c_char,
    query: *const c_char,
    measures: *const *const c_char,
    factors: *const f64,
    count: usize,
) -> WhatifStatus {
    call(session, |s| {
        let target = text(target, "target")?;
        let q = s.parse_query(text(query, "query")?)?;
        let mut pairs = Vec::with_capacity(count);
        if count > 0 {
            if measures.is_null() || factors.is_null() {
                return Err(Fail::Status(
                    WhatifStatus::NullArgument,
                    "factor arrays are null".into(),
                ));
            }
            let names = std::slice::from_raw_parts(measures, count);
            let values = std::slice::from_raw_parts(factors, count);
            for (&n, &f) in names.iter().zip(values) {
                pairs.push((text(n, "measures[i]")?, f));
            }
        }
        s.associate(target, &q, &pairs)?;
        Ok(())
    })
}

/// Removes the entry at `index` (insertion order) from scenario `target`.
///
/// # Safety
/// `session` must be a live handle; `target` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn whatif_remove_entry(
    session: *mut WhatifSession,
    target: *const c_char,
    index: usize,
) -> WhatifStatus {
    call(session, |s| {
        s.remove_entry(text(target, "target")?, index)?;
        Ok(())
    })
}

/// Evaluates one aggregate (`sum:Volume*Cost`, `avg:Cost`, ...). On success
/// `*present` tells whether the aggregate has a value (avg, min and max over
/// no rows have none) and `*out` holds it.
///
/// # Safety
/// `session` must be a live handle; strings must be NUL-terminated; `out`
/// and `present` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn whatif_evaluate(
    session: *mut WhatifSession,
    query: *const c_char,
    spec: *const c_char,
    out: *mut f64,
    present: *mut bool,
) -> WhatifStatus {
    call(session, |s| {
        if out.is_null() || present.is_null() {
            return Err(Fail::Status(
                WhatifStatus::NullArgument,
                "output pointer is null".into(),
            ));
        }
        let q = s.parse_query(text(query, "query")?)?;
        let spec = AggregationSpec::parse(text(spec, "spec")?, s.cube()?.schema())?;
        let value = s.evaluate(&q, std::slice::from_ref(&spec))?.values[0];
        *present = value.is_some();
        *out = value.unwrap_or(0.0);
        Ok(())
    })
}

/// Selected rows as CSV. Free `*out` with `whatif_string_free`.
///
/// # Safety
/// `session` must be a live handle; `query` must be NUL-terminated; `out`
/// must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn whatif_materialize_csv(
    session: *mut WhatifSession,
    query: *const c_char,
    out: *mut *mut c_char,
) -> WhatifStatus {
    call(session, |s| {
        if out.is_null() {
            return Err(Fail::Status(WhatifStatus::NullArgument, "`out` is null".into()));
        }
        let q = s.parse_query(text(query, "query")?)?;
        let rows = s.materialize(&q)?;
        *out = out_string(export_rows(s.store()?, &rows));
        Ok(())
    })
}

/// Scenario store as JSON. Free `*out` with `whatif_string_free`.
///
/// # Safety
/// `session` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn whatif_store_save(session: *mut WhatifSession, out: *mut *mut c_char) -> WhatifStatus {
    call(session, |s| {
        if out.is_null() {
            return Err(Fail::Status(WhatifStatus::NullArgument, "`out` is null".into()));
        }
        *out = out_string(s.save_store()?);
        Ok(())
    })
}

/// Replaces the scenario store from JSON; on failure the old one stays.
///
/// # Safety
/// `session` must be a live handle; `json` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn whatif_store_load(session: *mut WhatifSession, json: *const c_char) -> WhatifStatus {
    call(session, |s| {
        s.load_store(text(json, "json")?)?;
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn whatif_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
