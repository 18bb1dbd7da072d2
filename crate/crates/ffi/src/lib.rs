//! C ABI over the workbench. Handles are opaque; every fallible call returns a
//! [`SciStatus`] and leaves a message retrievable with [`sci_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sci_workbench::catalog::{default_catalog, load_catalog, Catalog};
use sci_workbench::certificates::{classify_heights, Tri};
use sci_workbench::cli::{dispatch, RunReport};
use sci_workbench::SciError;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SciStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Usage = 3,
    Catalog = 4,
    InvalidArgument = 5,
    Domain = 6,
    Panic = 7,
}

/// A finished run report.
pub struct SciReport(RunReport);

/// A loaded problem catalog.
pub struct SciCatalog(Catalog);

/// Sharpness flags: 1 true, 0 false, -1 unknown.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SciVerdict {
    pub pointwise_exact: i8,
    pub witness_sharp: i8,
    pub worst_case_exact: i8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &SciError) -> SciStatus {
    match e {
        SciError::Usage(_) => SciStatus::Usage,
        SciError::Catalog { .. } => SciStatus::Catalog,
        SciError::InvalidArgument(_) => SciStatus::InvalidArgument,
        _ => SciStatus::Domain,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SciStatus, String)>) -> SciStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SciStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SciStatus::Panic
        }
    }
}

fn sci(e: SciError) -> (SciStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SciStatus, String)> {
    if p.is_null() {
        return Err((SciStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SciStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn null_out<T>(out: *mut *mut T) -> Result<(), (SciStatus, String)> {
    if out.is_null() {
        Err((SciStatus::NullPointer, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

fn run_argv(args: Vec<String>, out: *mut *mut SciReport) -> Result<(), (SciStatus, String)> {
    let argv = std::iter::once("sci-workbench".to_string()).chain(args);
    let report = dispatch(argv).map_err(sci)?;
    unsafe { *out = Box::into_raw(Box::new(SciReport(report))) };
    Ok(())
}

/// Runs one command given as `argc` C strings (without the program name).
///
/// # Safety
/// `argv` must point to `argc` valid NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sci_dispatch(argc: usize, argv: *const *const c_char, out: *mut *mut SciReport) -> SciStatus {
    guard(|| {
        null_out(out)?;
        if argc > 0 && argv.is_null() {
            return Err((SciStatus::NullPointer, "argv is null".into()));
        }
        let args = (0..argc)
            .map(|i| str_arg(*argv.add(i), "argument").map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        run_argv(args, out)
    })
}

/// Runs one command given as a JSON array of argument strings.
///
/// # Safety
/// `args_json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sci_dispatch_json(args_json: *const c_char, out: *mut *mut SciReport) -> SciStatus {
    guard(|| {
        null_out(out)?;
        let text = str_arg(args_json, "args_json")?;
        let args: Vec<String> = serde_json::from_str(text)
            .map_err(|e| (SciStatus::InvalidArgument, format!("args_json must be an array of strings: {e}")))?;
        run_argv(args, out)
    })
}

/// Serializes a report as JSON. Free the string with [`sci_string_free`].
///
/// # Safety
/// `report` must come from a dispatch call; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sci_report_json(report: *const SciReport, out: *mut *mut c_char) -> SciStatus {
    guard(|| {
        null_out(out)?;
        let r = report.as_ref().ok_or((SciStatus::NullPointer, "report is null".into()))?;
        let s = CString::new(r.0.to_json()).map_err(|_| (SciStatus::Domain, "report contains NUL".into()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// 1 if every check passed, 0 if some failed, -1 for a null handle.
///
/// # Safety
/// `report` must be null or come from a dispatch call.
#[no_mangle]
pub unsafe extern "C" fn sci_report_passed(report: *const SciReport) -> i32 {
    match report.as_ref() {
        Some(r) => i32::from(r.0.passed()),
        None => -1,
    }
}

/// Number of checks in the report, 0 for a null handle.
///
/// # Safety
/// `report` must be null or come from a dispatch call.
#[no_mangle]
pub unsafe extern "C" fn sci_report_check_count(report: *const SciReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.checks.len())
}

/// # Safety
/// `report` must be null or come from a dispatch call, and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sci_report_free(report: *mut SciReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Loads a catalog file; a null path gives the shipped catalog.
///
/// # Safety
/// `path` must be null or a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sci_catalog_load(path: *const c_char, out: *mut *mut SciCatalog) -> SciStatus {
    guard(|| {
        null_out(out)?;
        let catalog = if path.is_null() {
            default_catalog()
        } else {
            load_catalog(str_arg(path, "path")?).map_err(sci)?
        };
        *out = Box::into_raw(Box::new(SciCatalog(catalog)));
        Ok(())
    })
}

/// Number of catalog entries, 0 for a null handle.
///
/// # Safety
/// `catalog` must be null or come from [`sci_catalog_load`].
#[no_mangle]
pub unsafe extern "C" fn sci_catalog_entry_count(catalog: *const SciCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.0.entries.len())
}

/// Number of (diagonal, window) pairs across spectral entries.
///
/// # Safety
/// `catalog` must be null or come from [`sci_catalog_load`].
#[no_mangle]
pub unsafe extern "C" fn sci_catalog_spectral_pairs(catalog: *const SciCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.0.spectral_pair_count())
}

/// # Safety
/// `catalog` must be null or come from [`sci_catalog_load`], and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sci_catalog_free(catalog: *mut SciCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

fn tri(t: Tri) -> i8 {
    match t {
        Tri::True => 1,
        Tri::False => 0,
        Tri::Unknown => -1,
    }
}

/// Sharpness flags of `len` exact heights at level `k`.
///
/// # Safety
/// `heights` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sci_classify_heights(heights: *const u32, len: usize, k: u32, out: *mut SciVerdict) -> SciStatus {
    guard(|| {
        if out.is_null() || (len > 0 && heights.is_null()) {
            return Err((SciStatus::NullPointer, "null pointer argument".into()));
        }
        let hs = if len == 0 { &[][..] } else { std::slice::from_raw_parts(heights, len) };
        let v = classify_heights(hs, k).map_err(sci)?;
        *out = SciVerdict {
            pointwise_exact: tri(v.pointwise_exact),
            witness_sharp: tri(v.witness_sharp),
            worst_case_exact: tri(v.worst_case_exact),
        };
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn sci_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sci_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn sci_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
