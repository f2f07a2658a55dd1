//! C interface to the narrow-band solver.
//!
//! Every entry point returns an [`NbfemStatus`]. On failure a message is kept
//! per thread and can be read with [`nbfem_last_error`]. Handles are opaque
//! and must be released with the matching `*_free` function. Panics never
//! cross the boundary; they are reported as [`NbfemStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nbfem::cli::{run_convergence, run_single, RunConfig};
use nbfem::postprocess::{ConvergenceReport, LevelRow};
use nbfem::Error;

/// Result of every call. The numeric values 2, 3 and 4 match the exit
/// codes of the command-line driver.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbfemStatus {
    Ok = 0,
    Failed = 1,
    Config = 2,
    Resource = 3,
    Solver = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// Run configuration. Create with [`nbfem_config_new`] or [`nbfem_config_from_json`].
pub struct NbfemConfig {
    inner: RunConfig,
}

/// Table produced by a run.
pub struct NbfemReport {
    inner: ConvergenceReport,
}

/// One row of a report. EOC fields are NaN where undefined (first level).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbfemRow {
    pub level: u32,
    pub h: f64,
    pub d: f64,
    pub dofs: u64,
    pub active_cells: u64,
    pub l2_gamma: f64,
    pub eoc_l2: f64,
    pub h1_gamma: f64,
    pub eoc_h1: f64,
    pub h1_band: f64,
    pub eoc_band: f64,
    pub cg_iters: u64,
    pub relative_residual: f64,
    pub gamma_measure: f64,
    pub seconds: f64,
}

impl From<&LevelRow> for NbfemRow {
    fn from(r: &LevelRow) -> Self {
        let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
        Self {
            level: r.level,
            h: r.h,
            d: r.d,
            dofs: r.dofs as u64,
            active_cells: r.active_cells as u64,
            l2_gamma: r.norms.l2_gamma,
            eoc_l2: nan(r.eoc_l2),
            h1_gamma: r.norms.h1_gamma,
            eoc_h1: nan(r.eoc_h1),
            h1_band: r.norms.h1_band,
            eoc_band: nan(r.eoc_band),
            cg_iters: r.cg_iters as u64,
            relative_residual: r.relative_residual,
            gamma_measure: r.gamma_measure,
            seconds: r.seconds,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(NbfemStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            2 => NbfemStatus::Config,
            3 => NbfemStatus::Resource,
            4 => NbfemStatus::Solver,
            _ => NbfemStatus::Failed,
        };
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NbfemStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NbfemStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            NbfemStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(NbfemStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(NbfemStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn nbfem_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nbfem_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New configuration with default values (circle preset and its experiment levels).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn nbfem_config_new(out: *mut *mut NbfemConfig) -> NbfemStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(NbfemConfig { inner: RunConfig::default() }));
        Ok(())
    })
}

/// Parse a configuration from JSON text with the same keys as `--config`.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nbfem_config_from_json(json: *const c_char, out: *mut *mut NbfemConfig) -> NbfemStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        let inner: RunConfig = serde_json::from_str(text).map_err(|e| Fail(NbfemStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(NbfemConfig { inner }));
        Ok(())
    })
}

/// Set one configuration key. `value` is parsed as JSON when possible and
/// taken as a string otherwise, so both `"3"` and `"circle-p2"` work.
/// An empty value or `null` resets the key to its default.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nbfem_config_set(
    config: *mut NbfemConfig,
    key: *const c_char,
    value: *const c_char,
) -> NbfemStatus {
    guard(|| {
        let config = out_arg(config, "config")?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        let cfg_err = |e: serde_json::Error| Fail(NbfemStatus::Config, format!("{key}: {e}"));
        let mut doc = serde_json::to_value(&config.inner).map_err(cfg_err)?;
        let map = doc.as_object_mut().ok_or_else(|| Fail(NbfemStatus::Failed, "config is not an object".into()))?;
        if !map.contains_key(key) {
            return Err(Fail(NbfemStatus::Config, format!("unknown key {key:?}")));
        }
        let parsed = if value.trim().is_empty() {
            serde_json::Value::Null
        } else {
            serde_json::from_str(value).unwrap_or_else(|_| serde_json::Value::String(value.to_string()))
        };
        if parsed.is_null() {
            map.remove(key);
        } else {
            map.insert(key.to_string(), parsed);
        }
        config.inner = serde_json::from_value(doc).map_err(cfg_err)?;
        Ok(())
    })
}

/// Configuration as JSON. Free the result with [`nbfem_string_free`].
///
/// # Safety
/// `config` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nbfem_config_to_json(config: *const NbfemConfig, out: *mut *mut c_char) -> NbfemStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        let text = serde_json::to_string(&config.inner).map_err(|e| Fail(NbfemStatus::Failed, e.to_string()))?;
        *out = to_c_string(text);
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nbfem_config_free(config: *mut NbfemConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Run a refinement study over the configured levels. Output paths in the
/// configuration are honoured.
///
/// # Safety
/// `config` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nbfem_run_convergence(config: *const NbfemConfig, out: *mut *mut NbfemReport) -> NbfemStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        let inner = run_convergence(&config.inner)?;
        *out = Box::into_raw(Box::new(NbfemReport { inner }));
        Ok(())
    })
}

/// Solve on one level; the report has a single row. Writes VTK if the
/// configuration sets `vtk`.
///
/// # Safety
/// `config` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nbfem_run_single(
    config: *const NbfemConfig,
    level: u32,
    out: *mut *mut NbfemReport,
) -> NbfemStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        let single = run_single(&config.inner, level)?;
        let inner = ConvergenceReport::new(single.config, vec![single.row])?;
        *out = Box::into_raw(Box::new(NbfemReport { inner }));
        Ok(())
    })
}

/// Number of rows in a report (0 for NULL).
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nbfem_report_len(report: *const NbfemReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.rows.len())
}

/// Copy row `index` into `row`.
///
/// # Safety
/// `report` must be a live handle; `row` writable.
#[no_mangle]
pub unsafe extern "C" fn nbfem_report_row(report: *const NbfemReport, index: usize, row: *mut NbfemRow) -> NbfemStatus {
    guard(|| {
        let row = out_arg(row, "row")?;
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let r = report.inner.rows.get(index).ok_or_else(|| {
            Fail(NbfemStatus::OutOfRange, format!("row {index} of {}", report.inner.rows.len()))
        })?;
        *row = r.into();
        Ok(())
    })
}

/// Report as CSV text. Free the result with [`nbfem_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nbfem_report_csv(report: *const NbfemReport, out: *mut *mut c_char) -> NbfemStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        *out = to_c_string(report.inner.to_csv());
        Ok(())
    })
}

/// Report as a Markdown table with the configuration header.
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nbfem_report_markdown(report: *const NbfemReport, out: *mut *mut c_char) -> NbfemStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        *out = to_c_string(report.inner.to_markdown());
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nbfem_report_free(report: *mut NbfemReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string obtained from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nbfem_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
