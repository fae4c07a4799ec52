//! C interface to the checker.
//!
//! Policies and programs are parsed into opaque handles that the caller
//! releases with the matching `*_free` function. Every entry point returns a
//! [`TrniStatus`]; on anything other than `TRNI_STATUS_OK` a message is
//! available from [`trni_last_error`] on the same thread. Strings handed out
//! through `char **` parameters are owned by the caller and must be released
//! with [`trni_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use trni::cli::{check_report, eval_report, oracle_report, views_report};
use trni::frontend::{parse_policy, parse_program, Program};
use trni::oracle::{Domain, OracleOptions};
use trni::report::Report;
use trni::{encode, Policy, ViewPair};

/// Result of every call. The first four values match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrniStatus {
    /// The property holds, or the call simply succeeded.
    Ok = 0,
    /// The property is not established (type error or counterexample).
    NotEstablished = 1,
    /// Parse, policy or precondition error.
    InvalidInput = 2,
    /// The oracle could not decide within its limits.
    Unsupported = 3,
    /// A required pointer argument was null.
    NullArgument = 4,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 5,
    /// The library panicked; this is a bug.
    Internal = 6,
}

/// A validated policy together with its generated views.
pub struct TrniPolicy {
    policy: Policy,
    views: ViewPair,
}

/// A parsed program.
pub struct TrniProgram {
    program: Program,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("interior nuls removed"));
}

fn guard(f: impl FnOnce() -> TrniStatus) -> TrniStatus {
    set_error("");
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("internal error");
        TrniStatus::Internal
    })
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, TrniStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(TrniStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        TrniStatus::InvalidUtf8
    })
}

unsafe fn read_opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, TrniStatus> {
    if p.is_null() {
        Ok(None)
    } else {
        read_str(p, what).map(Some)
    }
}

unsafe fn write_out(out: *mut *mut c_char, s: &str) {
    if !out.is_null() {
        *out = CString::new(s.replace('\0', " "))
            .expect("interior nuls removed")
            .into_raw();
    }
}

fn status_of(report: &Report) -> TrniStatus {
    let status = match report.exit_code {
        0 => TrniStatus::Ok,
        1 => TrniStatus::NotEstablished,
        3 => TrniStatus::Unsupported,
        _ => TrniStatus::InvalidInput,
    };
    if status != TrniStatus::Ok {
        let msgs: Vec<String> = report.diagnostics.iter().map(|d| d.to_string()).collect();
        set_error(if msgs.is_empty() {
            report.verdict.clone()
        } else {
            msgs.join("\n")
        });
    }
    status
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Parses and validates a policy. `name` may be null, in which case the
/// policy's own `policy` line or `"P"` names it.
///
/// # Safety
/// `src` must be a nul-terminated string, `name` null or nul-terminated, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trni_policy_parse(
    src: *const c_char,
    name: *const c_char,
    out: *mut *mut TrniPolicy,
) -> TrniStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return TrniStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let src = try_status!(read_str(src, "src"));
        let name = try_status!(read_opt_str(name, "name")).unwrap_or("P");
        let source = match parse_policy(src, name) {
            Ok(s) => s,
            Err(e) => {
                set_error(e.to_string());
                return TrniStatus::InvalidInput;
            }
        };
        let views = match encode(&source.policy) {
            Ok(v) => v,
            Err(e) => {
                set_error(e.to_string());
                return TrniStatus::InvalidInput;
            }
        };
        *out = Box::into_raw(Box::new(TrniPolicy {
            policy: source.policy,
            views,
        }));
        TrniStatus::Ok
    })
}

/// # Safety
/// `policy` must be null or a handle from [`trni_policy_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trni_policy_free(policy: *mut TrniPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// # Safety
/// `src` must be nul-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trni_program_parse(
    src: *const c_char,
    out: *mut *mut TrniProgram,
) -> TrniStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return TrniStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let src = try_status!(read_str(src, "src"));
        match parse_program(src) {
            Ok(program) => {
                *out = Box::into_raw(Box::new(TrniProgram { program }));
                TrniStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                TrniStatus::InvalidInput
            }
        }
    })
}

/// # Safety
/// `program` must be null or a handle from [`trni_program_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trni_program_free(program: *mut TrniProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Typechecks `program` in the public view of `policy`. `at` may be null to
/// accept the inferred type. When `type_out` is not null it receives the
/// inferred type, if any.
///
/// # Safety
/// Handles must be live; `at` null or nul-terminated; `type_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn trni_check(
    policy: *const TrniPolicy,
    program: *const TrniProgram,
    at: *const c_char,
    type_out: *mut *mut c_char,
) -> TrniStatus {
    guard(|| {
        if !type_out.is_null() {
            *type_out = ptr::null_mut();
        }
        let (Some(p), Some(prog)) = (policy.as_ref(), program.as_ref()) else {
            set_error("policy or program is null");
            return TrniStatus::NullArgument;
        };
        let at = try_status!(read_opt_str(at, "at"));
        let report = check_report(&p.policy, &p.views, &prog.program, at, None);
        if let Some(t) = &report.ty {
            write_out(type_out, t);
        }
        status_of(&report)
    })
}

/// Runs the enumeration oracle on the domain `[lo, hi]`. `observer` may be
/// null; for multi-level policies every observer is then checked. The JSON
/// report, when requested, has the same shape as the CLI's.
///
/// # Safety
/// Handles must be live; `at` nul-terminated; `observer` null or
/// nul-terminated; `report_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn trni_oracle(
    policy: *const TrniPolicy,
    program: *const TrniProgram,
    at: *const c_char,
    lo: i64,
    hi: i64,
    observer: *const c_char,
    report_out: *mut *mut c_char,
) -> TrniStatus {
    guard(|| {
        if !report_out.is_null() {
            *report_out = ptr::null_mut();
        }
        let (Some(p), Some(prog)) = (policy.as_ref(), program.as_ref()) else {
            set_error("policy or program is null");
            return TrniStatus::NullArgument;
        };
        let at = try_status!(read_str(at, "at"));
        let observer = try_status!(read_opt_str(observer, "observer"));
        if lo > hi {
            set_error(format!("empty domain {lo}..{hi}"));
            return TrniStatus::InvalidInput;
        }
        let mut opts = OracleOptions::new(Domain::new(lo, hi));
        opts.observer = observer.map(str::to_string);
        let report = oracle_report(
            &p.policy,
            &p.views,
            &prog.program.term,
            at,
            &opts,
            false,
            None,
        );
        write_out(report_out, &report.to_json());
        status_of(&report)
    })
}

/// Both views of `policy` as JSON.
///
/// # Safety
/// `policy` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trni_views_json(
    policy: *const TrniPolicy,
    out: *mut *mut c_char,
) -> TrniStatus {
    guard(|| {
        let Some(p) = policy.as_ref() else {
            set_error("policy is null");
            return TrniStatus::NullArgument;
        };
        if out.is_null() {
            set_error("out is null");
            return TrniStatus::NullArgument;
        }
        write_out(out, &views_report(&p.views).to_json());
        TrniStatus::Ok
    })
}

/// Typechecks and evaluates a closed program with at most `fuel` steps
/// (0 selects the default). `value_out` receives the printed value.
///
/// # Safety
/// `program` must be live and `value_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn trni_eval(
    program: *const TrniProgram,
    fuel: u64,
    value_out: *mut *mut c_char,
) -> TrniStatus {
    guard(|| {
        if !value_out.is_null() {
            *value_out = ptr::null_mut();
        }
        let Some(prog) = program.as_ref() else {
            set_error("program is null");
            return TrniStatus::NullArgument;
        };
        let fuel = if fuel == 0 {
            trni::lang::DEFAULT_FUEL
        } else {
            fuel
        };
        let report = eval_report(&prog.program, fuel, None);
        if let Some(v) = &report.value {
            write_out(value_out, v);
        }
        status_of(&report)
    })
}

/// Message for the last failing call on this thread, or an empty string.
/// The pointer stays valid until the next call into the library on this
/// thread.
#[no_mangle]
pub extern "C" fn trni_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must be null or a string returned through a `char **` parameter of
/// this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn trni_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    unsafe fn take(s: *mut c_char) -> String {
        let out = CStr::from_ptr(s).to_str().unwrap().to_string();
        trni_string_free(s);
        out
    }

    #[test]
    fn last_error_is_set_on_failure_and_cleared_on_success() {
        unsafe {
            let mut p = ptr::null_mut();
            let status = trni_policy_parse(cstr("input x : unit").as_ptr(), ptr::null(), &mut p);
            assert_eq!(status, TrniStatus::InvalidInput);
            assert!(p.is_null());
            let msg = CStr::from_ptr(trni_last_error()).to_str().unwrap();
            assert!(msg.contains("int"), "{msg}");

            let status = trni_policy_parse(cstr("input x : int").as_ptr(), ptr::null(), &mut p);
            assert_eq!(status, TrniStatus::Ok);
            assert_eq!(CStr::from_ptr(trni_last_error()).to_bytes(), b"");
            trni_policy_free(p);
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            assert_eq!(
                trni_policy_parse(ptr::null(), ptr::null(), &mut ptr::null_mut()),
                TrniStatus::NullArgument
            );
            assert_eq!(
                trni_program_parse(cstr("1").as_ptr(), ptr::null_mut()),
                TrniStatus::NullArgument
            );
            assert_eq!(
                trni_check(ptr::null(), ptr::null(), ptr::null(), ptr::null_mut()),
                TrniStatus::NullArgument
            );
            assert_eq!(
                trni_eval(ptr::null(), 0, ptr::null_mut()),
                TrniStatus::NullArgument
            );
        }
    }

    #[test]
    fn eval_returns_the_printed_value() {
        unsafe {
            let mut prog = ptr::null_mut();
            assert_eq!(
                trni_program_parse(cstr("(fn x:int => x * x) 7").as_ptr(), &mut prog),
                TrniStatus::Ok
            );
            let mut out = ptr::null_mut();
            assert_eq!(trni_eval(prog, 0, &mut out), TrniStatus::Ok);
            assert_eq!(take(out), "49");
            trni_program_free(prog);
        }
    }
}
