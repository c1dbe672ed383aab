//! C ABI for the moment-inequality test bench.
//!
//! Reports are returned as opaque handles with scalar accessors and a
//! JSON serializer. All strings handed out are heap-allocated copies that
//! the caller releases with `qm_string_free`; handles are released with
//! `qm_report_free`. Functions return `QM_OK` on success, `QM_ERR_RUN`
//! when the computation fails, and `QM_ERR_ARG` for null pointers or
//! unknown names.

use std::ffi::{c_char, CStr, CString};

use qmoments::catalog::{
    ghz_quadripartite_cfrd, ghz_test, ghz_tripartite_cfrd, mermin_peres_square,
    mp_inequality, pentagon_test, quadripartite_cfrd_fock, tsirelson_check,
    InequalityReport,
};
use qmoments::hilbert::{HilbertSpace, State};
use qmoments::search::min_eigenpair;

/// Success.
pub const QM_OK: i32 = 0;
/// The computation ran and failed; no result is produced.
pub const QM_ERR_RUN: i32 = 1;
/// Invalid argument: null pointer, bad UTF-8, or unknown check name.
pub const QM_ERR_ARG: i32 = 2;

/// Opaque handle to one inequality report.
pub struct QmReport(InequalityReport);

fn run_named(name: &str) -> Option<qmoments::error::Result<InequalityReport>> {
    Some(match name {
        "ghz" => ghz_test(),
        "mermin-peres" => (|| {
            let square = mermin_peres_square()?;
            let state = State::maximally_mixed(HilbertSpace::qubits(2)?);
            mp_inequality(&state, &square)
        })(),
        "pentagon" | "appendix-d" => pentagon_test(),
        "tsirelson" => (|| {
            let (state, [a1, a2, b1, b2]) = qmoments::catalog::chsh_bell_scenario()?;
            tsirelson_check(&state, &a1, &a2, &b1, &b2)
        })(),
        "cfrd-tri" => ghz_tripartite_cfrd(),
        "cfrd-quad" => ghz_quadripartite_cfrd(),
        _ => return None,
    })
}

/// Run the named check ("ghz", "mermin-peres", "pentagon", "appendix-d",
/// "tsirelson", "cfrd-tri", "cfrd-quad") and store a new report handle in
/// `out`.
///
/// # Safety
/// `name` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qm_verify(name: *const c_char, out: *mut *mut QmReport) -> i32 {
    if name.is_null() || out.is_null() {
        return QM_ERR_ARG;
    }
    let Ok(name) = CStr::from_ptr(name).to_str() else {
        return QM_ERR_ARG;
    };
    match run_named(name) {
        None => QM_ERR_ARG,
        Some(Err(_)) => QM_ERR_RUN,
        Some(Ok(report)) => {
            *out = Box::into_raw(Box::new(QmReport(report)));
            QM_OK
        }
    }
}

/// Run the four-mode oscillator check on `len` amplitudes and store a new
/// report handle in `out`.
///
/// # Safety
/// `z` must point to `len` readable doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qm_cfrd_fock(
    z: *const f64,
    len: usize,
    out: *mut *mut QmReport,
) -> i32 {
    if z.is_null() || out.is_null() || len == 0 {
        return QM_ERR_ARG;
    }
    let amplitudes = std::slice::from_raw_parts(z, len);
    match quadripartite_cfrd_fock(amplitudes) {
        Err(_) => QM_ERR_RUN,
        Ok(report) => {
            *out = Box::into_raw(Box::new(QmReport(report)));
            QM_OK
        }
    }
}

/// Left-hand side of the inequality.
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn qm_report_lhs(report: *const QmReport) -> f64 {
    (*report).0.lhs
}

/// Right-hand side (the classical bound).
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn qm_report_rhs(report: *const QmReport) -> f64 {
    (*report).0.rhs
}

/// rhs - lhs; negative means violated.
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn qm_report_margin(report: *const QmReport) -> f64 {
    (*report).0.margin
}

/// 1 if the classical bound is broken, else 0.
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn qm_report_violated(report: *const QmReport) -> i32 {
    i32::from((*report).0.violated)
}

/// Copy of the report name; release with `qm_string_free`.
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn qm_report_name(report: *const QmReport) -> *mut c_char {
    if report.is_null() {
        return std::ptr::null_mut();
    }
    CString::new((*report).0.name.clone())
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// JSON rendering of the report; release with `qm_string_free`.
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn qm_report_to_json(report: *const QmReport) -> *mut c_char {
    if report.is_null() {
        return std::ptr::null_mut();
    }
    let Ok(json) = serde_json::to_string(&(*report).0) else {
        return std::ptr::null_mut();
    };
    CString::new(json)
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// Release a report handle. Null is ignored.
///
/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qm_report_free(report: *mut QmReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Smallest eigenvalue of the oscillator moment matrix at `cutoff`, with
/// the unit eigenvector written to `vector` (length `cutoff + 1`).
/// `vector` may be null if only the eigenvalue is wanted.
///
/// # Safety
/// `lambda_min` must be valid; `vector` must be null or hold `cutoff + 1`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qm_min_eigenpair(
    cutoff: usize,
    lambda_min: *mut f64,
    vector: *mut f64,
) -> i32 {
    if lambda_min.is_null() {
        return QM_ERR_ARG;
    }
    match min_eigenpair(cutoff) {
        Err(_) => QM_ERR_RUN,
        Ok(result) => {
            *lambda_min = result.lambda_min;
            if !vector.is_null() {
                let out = std::slice::from_raw_parts_mut(vector, cutoff + 1);
                out.copy_from_slice(&result.vector);
            }
            QM_OK
        }
    }
}

/// Exact integer determinant of 4M at `cutoff`, as a decimal string;
/// release with `qm_string_free`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qm_det4m(cutoff: usize, out: *mut *mut c_char) -> i32 {
    if out.is_null() {
        return QM_ERR_ARG;
    }
    let det = qmoments::catalog::det4m(cutoff).to_string();
    match CString::new(det) {
        Ok(s) => {
            *out = s.into_raw();
            QM_OK
        }
        Err(_) => QM_ERR_RUN,
    }
}
