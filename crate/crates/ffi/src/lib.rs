// Copyright 2026 The uiq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! C interface to the uiq scoring core.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`UiqStatus`]; on failure [`uiq_last_error`] describes what went wrong on
//! the calling thread. Strings returned by the library are released with
//! [`uiq_string_free`]. Fixed-point quantities are passed as hundredths,
//! so an IQ of 26.5 arrives as 2650.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chrono::{TimeZone, Utc};
use uiq::scale::{Category, Scale, SubTestScoreVector};
use uiq::scoring::{rank_subjects, score_matrix, MatrixFile, Ranking};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UiqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Mismatch = 5,
    OutOfRange = 6,
    Panic = 99,
}

/// Output formats for [`uiq_ranking_render`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UiqFormat {
    Table = 0,
    Csv = 1,
    Json = 2,
}

/// A validated scale definition.
pub struct UiqScale {
    inner: Scale,
}

/// A ranked set of IQ reports.
pub struct UiqRanking {
    inner: Ranking,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: UiqStatus, msg: impl Into<String>) -> UiqStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> UiqStatus) -> UiqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(UiqStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, UiqStatus> {
    if p.is_null() {
        return Err(fail(UiqStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(UiqStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn give_string(s: String, out: *mut *mut c_char) -> UiqStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            UiqStatus::Ok
        }
        Err(_) => fail(UiqStatus::Validation, "output contains a NUL byte"),
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn uiq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn uiq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn uiq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a scale from JSON. A null `json` loads the bundled
/// 2014 scale.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uiq_scale_load(json: *const c_char, out: *mut *mut UiqScale) -> UiqStatus {
    guard(|| {
        if out.is_null() {
            return fail(UiqStatus::NullPointer, "out is null");
        }
        let scale = if json.is_null() {
            uiq::bundled::scale()
        } else {
            let text = match str_arg(json, "json") {
                Ok(t) => t,
                Err(s) => return s,
            };
            match Scale::from_json(text) {
                Ok(s) => s,
                Err(e) => return fail(UiqStatus::Parse, e.to_string()),
            }
        };
        let problems = scale.validate();
        if !problems.is_empty() {
            let text: Vec<String> = problems.iter().map(ToString::to_string).collect();
            return fail(UiqStatus::Validation, text.join("; "));
        }
        *out = Box::into_raw(Box::new(UiqScale { inner: scale }));
        UiqStatus::Ok
    })
}

/// # Safety
/// `scale` must be null or a handle from [`uiq_scale_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uiq_scale_free(scale: *mut UiqScale) {
    if !scale.is_null() {
        drop(Box::from_raw(scale));
    }
}

/// Number of subtests in the scale, or 0 for a null handle.
///
/// # Safety
/// `scale` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uiq_scale_subtest_count(scale: *const UiqScale) -> usize {
    scale.as_ref().map_or(0, |s| s.inner.subtests.len())
}

unsafe fn vector_arg<'a>(
    scale: *const UiqScale,
    values: *const u32,
    len: usize,
) -> Result<(&'a Scale, SubTestScoreVector), UiqStatus> {
    let Some(scale) = scale.as_ref() else {
        return Err(fail(UiqStatus::NullPointer, "scale is null"));
    };
    if values.is_null() && len > 0 {
        return Err(fail(UiqStatus::NullPointer, "values is null"));
    }
    let values = if len == 0 {
        Vec::new()
    } else {
        std::slice::from_raw_parts(values, len).to_vec()
    };
    Ok((&scale.inner, SubTestScoreVector::new(scale.inner.id.clone(), values)))
}

fn score_status(e: &uiq::scale::ScoreError) -> UiqStatus {
    use uiq::scale::ScoreError::*;
    match e {
        Length { .. } | ScaleMismatch { .. } => UiqStatus::Mismatch,
        _ => UiqStatus::OutOfRange,
    }
}

/// General IQ of one subtest score vector, in hundredths.
///
/// # Safety
/// `values` must point at `len` readable integers; `out_hundredths` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uiq_compute_iq(
    scale: *const UiqScale,
    values: *const u32,
    len: usize,
    out_hundredths: *mut i64,
) -> UiqStatus {
    guard(|| {
        if out_hundredths.is_null() {
            return fail(UiqStatus::NullPointer, "out_hundredths is null");
        }
        let (scale, vector) = match vector_arg(scale, values, len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match scale.compute_iq(&vector) {
            Ok(iq) => {
                *out_hundredths = iq.raw();
                UiqStatus::Ok
            }
            Err(e) => fail(score_status(&e), e.to_string()),
        }
    })
}

/// Per-category contributions in hundredths, written in the order
/// acquisition, mastery, innovation, feedback.
///
/// # Safety
/// `values` must point at `len` readable integers; `out4` must have room for four.
#[no_mangle]
pub unsafe extern "C" fn uiq_category_breakdown(
    scale: *const UiqScale,
    values: *const u32,
    len: usize,
    out4: *mut i64,
) -> UiqStatus {
    guard(|| {
        if out4.is_null() {
            return fail(UiqStatus::NullPointer, "out4 is null");
        }
        let (scale, vector) = match vector_arg(scale, values, len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match scale.category_breakdown(&vector) {
            Ok(map) => {
                let out = std::slice::from_raw_parts_mut(out4, 4);
                for (slot, c) in out.iter_mut().zip(Category::ALL) {
                    *slot = map.get(&c).map_or(0, |h| h.raw());
                }
                UiqStatus::Ok
            }
            Err(e) => fail(score_status(&e), e.to_string()),
        }
    })
}

/// Scores and ranks one or more raw score tables (JSON documents with
/// `scale_id` and `rows`). `tables` holds `count` strings.
///
/// # Safety
/// `tables` must point at `count` NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uiq_rank_matrix(
    scale: *const UiqScale,
    tables: *const *const c_char,
    count: usize,
    run_id: *const c_char,
    out: *mut *mut UiqRanking,
) -> UiqStatus {
    guard(|| {
        if out.is_null() {
            return fail(UiqStatus::NullPointer, "out is null");
        }
        let Some(scale) = scale.as_ref() else {
            return fail(UiqStatus::NullPointer, "scale is null");
        };
        if tables.is_null() && count > 0 {
            return fail(UiqStatus::NullPointer, "tables is null");
        }
        let run_id = if run_id.is_null() {
            "ffi"
        } else {
            match str_arg(run_id, "run_id") {
                Ok(r) => r,
                Err(s) => return s,
            }
        };
        let mut rows = Vec::new();
        for i in 0..count {
            let text = match str_arg(*tables.add(i), "table") {
                Ok(t) => t,
                Err(s) => return s,
            };
            let m = match MatrixFile::from_json(text) {
                Ok(m) => m,
                Err(e) => return fail(UiqStatus::Parse, format!("table {i}: {e}")),
            };
            if m.scale_id != scale.inner.id {
                return fail(
                    UiqStatus::Mismatch,
                    format!("table {i} is for scale `{}`, not `{}`", m.scale_id, scale.inner.id),
                );
            }
            rows.extend(m.into_rows());
        }
        let at = Utc.timestamp_opt(0, 0).unwrap();
        let reports = match score_matrix(rows, &scale.inner, run_id, at) {
            Ok(r) => r,
            Err(e) => return fail(UiqStatus::OutOfRange, e.to_string()),
        };
        match rank_subjects(run_id, reports) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(UiqRanking { inner: r }));
                UiqStatus::Ok
            }
            Err(e) => fail(UiqStatus::Mismatch, e.to_string()),
        }
    })
}

/// # Safety
/// `ranking` must be null or a handle from [`uiq_rank_matrix`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uiq_ranking_free(ranking: *mut UiqRanking) {
    if !ranking.is_null() {
        drop(Box::from_raw(ranking));
    }
}

/// Number of ranked subjects, or 0 for a null handle.
///
/// # Safety
/// `ranking` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uiq_ranking_len(ranking: *const UiqRanking) -> usize {
    ranking.as_ref().map_or(0, |r| r.inner.entries.len())
}

/// IQ (hundredths) and subject id of the entry at `index` (0 is first place).
/// The id string must be freed with [`uiq_string_free`]; pass null to skip it.
///
/// # Safety
/// `ranking` must be a live handle; non-null out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn uiq_ranking_entry(
    ranking: *const UiqRanking,
    index: usize,
    out_iq_hundredths: *mut i64,
    out_subject_id: *mut *mut c_char,
) -> UiqStatus {
    guard(|| {
        let Some(r) = ranking.as_ref() else {
            return fail(UiqStatus::NullPointer, "ranking is null");
        };
        let Some(entry) = r.inner.entries.get(index) else {
            return fail(
                UiqStatus::OutOfRange,
                format!("index {index} is past the last of {} entries", r.inner.entries.len()),
            );
        };
        if !out_iq_hundredths.is_null() {
            *out_iq_hundredths = entry.report.iq.raw();
        }
        if !out_subject_id.is_null() {
            return give_string(entry.report.subject.id.clone(), out_subject_id);
        }
        UiqStatus::Ok
    })
}

/// Renders the ranking as text. Free the result with [`uiq_string_free`].
///
/// # Safety
/// `ranking` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uiq_ranking_render(
    ranking: *const UiqRanking,
    format: UiqFormat,
    out: *mut *mut c_char,
) -> UiqStatus {
    guard(|| {
        let Some(r) = ranking.as_ref() else {
            return fail(UiqStatus::NullPointer, "ranking is null");
        };
        if out.is_null() {
            return fail(UiqStatus::NullPointer, "out is null");
        }
        let text = match format {
            UiqFormat::Table => r.inner.to_table(),
            UiqFormat::Csv => r.inner.to_csv(),
            UiqFormat::Json => serde_json::to_string(&r.inner).expect("ranking serializes"),
        };
        give_string(text, out)
    })
}
