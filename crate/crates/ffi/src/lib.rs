//! C ABI over the swiftagg simulator.
//!
//! Every fallible function returns a [`SwiftaggStatus`]; on failure the
//! message is available from [`swiftagg_last_error_message`] on the same
//! thread. Handles are opaque and must be released with their `_free`
//! function. Strings handed out by the library are released with
//! [`swiftagg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use swiftagg::field::FieldContext;
use swiftagg::harness::{simulate, RunConfig, RunReport};
use swiftagg::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwiftaggStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigInvalid = 3,
    TooManyDropouts = 4,
    NonConformingField = 5,
    NoPrime = 6,
    BufferTooSmall = 7,
    Internal = 8,
    Panic = 9,
}

/// A run configuration.
pub struct SwiftaggConfig {
    inner: RunConfig,
}

/// The report of one simulated round.
pub struct SwiftaggReport {
    inner: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> SwiftaggStatus {
    match e {
        Error::TooManyDropouts { .. } => SwiftaggStatus::TooManyDropouts,
        Error::NonConformingField(_) => SwiftaggStatus::NonConformingField,
        Error::NoPrimeInInterval { .. } => SwiftaggStatus::NoPrime,
        Error::Io(_) | Error::InverseOfZero | Error::DimensionMismatch(_) => {
            SwiftaggStatus::Internal
        }
        _ => SwiftaggStatus::ConfigInvalid,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SwiftaggStatus, String)>) -> SwiftaggStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SwiftaggStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside swiftagg");
            SwiftaggStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SwiftaggStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SwiftaggStatus, String) {
    (SwiftaggStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or point to a valid value of `T`.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SwiftaggStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or valid for writes of `T`.
unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), (SwiftaggStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from this thread.
#[no_mangle]
pub extern "C" fn swiftagg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a JSON run config.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_config_from_json(
    json: *const c_char,
    out: *mut *mut SwiftaggConfig,
) -> SwiftaggStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (SwiftaggStatus::InvalidUtf8, e.to_string()))?;
        let inner = RunConfig::from_json(text).map_err(lib_err)?;
        inner.params().map_err(lib_err)?;
        write(
            out,
            Box::into_raw(Box::new(SwiftaggConfig { inner })),
            "out",
        )
    })
}

/// A config with the given dimensions, a chain tree, no dropouts and seed 0.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_config_new(
    users: usize,
    max_colluders: usize,
    max_dropouts: usize,
    partitions: usize,
    model_len: usize,
    ell: u64,
    out: *mut *mut SwiftaggConfig,
) -> SwiftaggStatus {
    guard(|| {
        let inner = RunConfig::new(
            users,
            max_colluders,
            max_dropouts,
            partitions,
            model_len,
            ell,
        );
        inner.params().map_err(lib_err)?;
        write(
            out,
            Box::into_raw(Box::new(SwiftaggConfig { inner })),
            "out",
        )
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_config_set_seed(
    config: *mut SwiftaggConfig,
    seed: u64,
) -> SwiftaggStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        cfg.inner.seed = seed;
        Ok(())
    })
}

/// Marks `user` as dropped before the intra-group round.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_config_add_dropout(
    config: *mut SwiftaggConfig,
    user: usize,
) -> SwiftaggStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        cfg.inner.dropouts.insert(user);
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_config_free(config: *mut SwiftaggConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs one round.
///
/// # Safety
/// `config` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_simulate(
    config: *const SwiftaggConfig,
    out: *mut *mut SwiftaggReport,
) -> SwiftaggStatus {
    guard(|| {
        let cfg = deref(config, "config")?;
        let inner = simulate(&cfg.inner).map_err(lib_err)?;
        write(
            out,
            Box::into_raw(Box::new(SwiftaggReport { inner })),
            "out",
        )
    })
}

/// Normalized server load as an exact fraction.
///
/// # Safety
/// `report` must be a live handle; `num` and `den` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_report_r_server(
    report: *const SwiftaggReport,
    num: *mut u64,
    den: *mut u64,
) -> SwiftaggStatus {
    guard(|| {
        let r = &deref(report, "report")?.inner.loads.server;
        write(num, *r.numer(), "num")?;
        write(den, *r.denom(), "den")
    })
}

/// Largest per-user load among surviving users as an exact fraction.
///
/// # Safety
/// `report` must be a live handle; `num` and `den` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_report_r_user_max(
    report: *const SwiftaggReport,
    num: *mut u64,
    den: *mut u64,
) -> SwiftaggStatus {
    guard(|| {
        let r = &deref(report, "report")?.inner.loads.user_max;
        write(num, *r.numer(), "num")?;
        write(den, *r.denom(), "den")
    })
}

/// # Safety
/// `report` must be a live handle; `total` and `silent` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_report_edges(
    report: *const SwiftaggReport,
    total: *mut usize,
    silent: *mut usize,
) -> SwiftaggStatus {
    guard(|| {
        let r = &deref(report, "report")?.inner;
        write(total, r.total_edges, "total")?;
        write(silent, r.silent_edges, "silent")
    })
}

/// # Safety
/// `report` must be a live handle; `prime` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_report_prime(
    report: *const SwiftaggReport,
    prime: *mut u64,
) -> SwiftaggStatus {
    guard(|| write(prime, deref(report, "report")?.inner.prime, "prime"))
}

/// Copies the recovered aggregate into `buf`. `len` receives the aggregate
/// length; when `capacity` is smaller nothing is copied and
/// `BufferTooSmall` is returned.
///
/// # Safety
/// `report` must be a live handle; `buf` valid for `capacity` writes (may be
/// null when `capacity` is 0); `len` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_report_recovered(
    report: *const SwiftaggReport,
    buf: *mut u64,
    capacity: usize,
    len: *mut usize,
) -> SwiftaggStatus {
    guard(|| {
        let values = &deref(report, "report")?.inner.recovered;
        write(len, values.len(), "len")?;
        if capacity < values.len() {
            return Err((
                SwiftaggStatus::BufferTooSmall,
                format!(
                    "aggregate has {} entries, buffer holds {capacity}",
                    values.len()
                ),
            ));
        }
        if !values.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        }
        Ok(())
    })
}

/// Serializes the report as JSON. Release the string with
/// [`swiftagg_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_report_to_json(
    report: *const SwiftaggReport,
    out: *mut *mut c_char,
) -> SwiftaggStatus {
    guard(|| {
        let json = deref(report, "report")?.inner.to_json();
        let s = CString::new(json).map_err(|e| (SwiftaggStatus::Internal, e.to_string()))?;
        write(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_report_free(report: *mut SwiftaggReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Smallest prime in `(users*(ell-1), 2*users*(ell-1)]`.
///
/// # Safety
/// `prime` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swiftagg_select_prime(
    users: u64,
    ell: u64,
    prime: *mut u64,
) -> SwiftaggStatus {
    guard(|| {
        let ctx = FieldContext::select_prime(users, ell).map_err(lib_err)?;
        write(prime, ctx.modulus(), "prime")
    })
}
