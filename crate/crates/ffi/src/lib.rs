//! C ABI over sb-kit.
//!
//! Structures cross the boundary either as opaque handles (operators,
//! orthogonal maps, jobs) or as JSON text in the same schemas the CLI reads.
//! Every function returns an [`SbStatus`]; on failure a description is kept
//! per thread and can be fetched with [`sb_last_error_message`]. Strings
//! handed out by this library must be released with [`sb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sb_kit::cli::{self, CliError, Job};
use sb_kit::symspec::{self, OrthogonalMap, SelfAdjointOperator};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationError = 4,
    ModuleError = 5,
    InternalError = 6,
    Panic = 7,
}

/// A real symmetric matrix.
pub struct SbOperator(SelfAdjointOperator);

/// A real orthogonal matrix.
pub struct SbOrthogonalMap(OrthogonalMap);

/// A validated job, as read by `sb-kit run`.
pub struct SbJob(Job);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: SbStatus, message: impl Into<String>) -> SbStatus {
    set_error(message);
    status
}

fn cli_status(e: &CliError) -> SbStatus {
    match e {
        CliError::Parse { .. } => SbStatus::ParseError,
        CliError::Validation { .. } => SbStatus::ValidationError,
        CliError::Io(_) | CliError::Module(_) => SbStatus::ModuleError,
        CliError::Internal(_) => SbStatus::InternalError,
    }
}

fn guarded(f: impl FnOnce() -> SbStatus) -> SbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SbStatus::Panic, "panic inside sb-kit"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, SbStatus> {
    if p.is_null() {
        return Err(fail(SbStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SbStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn give_string(s: String, out: *mut *mut c_char) -> SbStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            SbStatus::Ok
        }
        Err(_) => fail(SbStatus::InternalError, "output contains a NUL byte"),
    }
}

macro_rules! nonnull {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(SbStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Message for the last failing call on this thread, or null. The caller
/// owns the returned string.
#[no_mangle]
pub extern "C" fn sb_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null_mut(), |m| m.clone().into_raw()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds an operator from `dim * dim` row-major entries.
///
/// # Safety
/// `entries` must point to `dim * dim` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_operator_new(entries: *const f64, dim: usize, out: *mut *mut SbOperator) -> SbStatus {
    guarded(|| {
        nonnull!(entries, out);
        let Some(len) = dim.checked_mul(dim) else {
            return fail(SbStatus::ValidationError, "dimension overflows");
        };
        let flat = std::slice::from_raw_parts(entries, len);
        let rows: Vec<Vec<f64>> = flat.chunks(dim.max(1)).map(<[f64]>::to_vec).collect();
        match SelfAdjointOperator::from_rows(&rows) {
            Ok(op) => {
                *out = Box::into_raw(Box::new(SbOperator(op)));
                SbStatus::Ok
            }
            Err(e) => fail(SbStatus::ValidationError, e.to_string()),
        }
    })
}

/// Builds an operator from `{"dim": n, "rows": [...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_operator_from_json(json: *const c_char, out: *mut *mut SbOperator) -> SbStatus {
    guarded(|| {
        nonnull!(out);
        let json = match text(json, "json") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match serde_json::from_str::<SelfAdjointOperator>(json) {
            Ok(op) => {
                *out = Box::into_raw(Box::new(SbOperator(op)));
                SbStatus::Ok
            }
            Err(e) => fail(SbStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `op` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sb_operator_free(op: *mut SbOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// # Safety
/// `op` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_operator_dim(op: *const SbOperator) -> usize {
    op.as_ref().map_or(0, |o| o.0.dim())
}

/// Orthogonal `U` with `‖U·a·Uᵀ − b‖ < epsilon`, when `a` and `b` have the
/// same spectral description.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_approximate_unitary(
    a: *const SbOperator,
    b: *const SbOperator,
    epsilon: f64,
    out: *mut *mut SbOrthogonalMap,
) -> SbStatus {
    guarded(|| {
        nonnull!(a, b, out);
        match symspec::approximate_unitary(&(*a).0, &(*b).0, epsilon) {
            Ok(u) => {
                *out = Box::into_raw(Box::new(SbOrthogonalMap(u)));
                SbStatus::Ok
            }
            Err(e) => fail(SbStatus::ModuleError, e.to_string()),
        }
    })
}

/// Operator norm of `U·a·Uᵀ − b`.
///
/// # Safety
/// All handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_conjugation_residual(
    a: *const SbOperator,
    b: *const SbOperator,
    u: *const SbOrthogonalMap,
    out: *mut f64,
) -> SbStatus {
    guarded(|| {
        nonnull!(a, b, u, out);
        match symspec::conjugation_residual(&(*a).0, &(*b).0, &(*u).0) {
            Ok(r) => {
                *out = r;
                SbStatus::Ok
            }
            Err(e) => fail(SbStatus::ModuleError, e.to_string()),
        }
    })
}

/// # Safety
/// `u` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_orthogonal_map_free(u: *mut SbOrthogonalMap) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// # Safety
/// `u` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_orthogonal_map_dim(u: *const SbOrthogonalMap) -> usize {
    u.as_ref().map_or(0, |m| m.0.dim())
}

/// Copies the `dim * dim` row-major entries into `out`, which holds `len`
/// doubles.
///
/// # Safety
/// `u` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_orthogonal_map_entries(u: *const SbOrthogonalMap, out: *mut f64, len: usize) -> SbStatus {
    guarded(|| {
        nonnull!(u, out);
        let rows = (*u).0.rows();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        if len < flat.len() {
            return fail(SbStatus::ValidationError, format!("buffer holds {len} entries, {} needed", flat.len()));
        }
        std::ptr::copy_nonoverlapping(flat.as_ptr(), out, flat.len());
        SbStatus::Ok
    })
}

/// Parses and validates a job file's contents.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_job_parse(json: *const c_char, out: *mut *mut SbJob) -> SbStatus {
    guarded(|| {
        nonnull!(out);
        let json = match text(json, "json") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match cli::parse_job(json) {
            Ok(job) => {
                *out = Box::into_raw(Box::new(SbJob(job)));
                SbStatus::Ok
            }
            Err(e) => fail(cli_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `job` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_job_free(job: *mut SbJob) {
    if !job.is_null() {
        drop(Box::from_raw(job));
    }
}

/// Runs the job. On success `cert_out` receives the certificate as JSON and
/// `positive_out` is set to true for equivalence verdicts.
///
/// # Safety
/// `job` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_job_run(job: *const SbJob, cert_out: *mut *mut c_char, positive_out: *mut bool) -> SbStatus {
    guarded(|| {
        nonnull!(job, cert_out, positive_out);
        match cli::run(&(*job).0) {
            Ok(cert) => {
                *positive_out = cert.is_positive();
                match serde_json::to_string(&cert) {
                    Ok(s) => give_string(s, cert_out),
                    Err(e) => fail(SbStatus::InternalError, e.to_string()),
                }
            }
            Err(e) => fail(cli_status(&e), e.to_string()),
        }
    })
}

/// Checks a certificate against a job. A certificate that cannot be read
/// is a parse error; one that reads but does not hold sets `valid_out` to
/// false and leaves the reason as the last error message.
///
/// # Safety
/// `job` must be a live handle, `cert` a NUL-terminated string and
/// `valid_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_certificate_verify(job: *const SbJob, cert: *const c_char, valid_out: *mut bool) -> SbStatus {
    guarded(|| {
        nonnull!(job, valid_out);
        let cert = match text(cert, "cert") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let cert: cli::Certificate = match serde_json::from_str(cert) {
            Ok(c) => c,
            Err(e) => return fail(SbStatus::ParseError, e.to_string()),
        };
        match cli::verify(&cert, &(*job).0) {
            Ok(()) => *valid_out = true,
            Err(reason) => {
                *valid_out = false;
                set_error(reason);
            }
        }
        SbStatus::Ok
    })
}
