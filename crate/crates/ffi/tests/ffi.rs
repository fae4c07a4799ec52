use std::ffi::{c_char, CStr, CString};
use std::ptr;

use trni_ffi::*;

const P_OE: &str = "policy P_OE\ninput x : int declass f\nfn f (x : int) -> int = x mod 2\n";
const P_LMH: &str = "policy P_LMH\nlattice { L < M; M < H }\ninput hi : int @ H declass f to M\ninput mi : int @ M\ninput li : int @ L\nfn f (x : int) -> int = x mod 2\n";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    trni_string_free(s);
    out
}

unsafe fn last_error() -> String {
    CStr::from_ptr(trni_last_error())
        .to_str()
        .unwrap()
        .to_string()
}

unsafe fn policy(src: &str) -> *mut TrniPolicy {
    let mut p = ptr::null_mut();
    assert_eq!(
        trni_policy_parse(c(src).as_ptr(), ptr::null(), &mut p),
        TrniStatus::Ok,
        "{}",
        last_error()
    );
    p
}

unsafe fn program(src: &str) -> *mut TrniProgram {
    let mut p = ptr::null_mut();
    assert_eq!(
        trni_program_parse(c(src).as_ptr(), &mut p),
        TrniStatus::Ok,
        "{}",
        last_error()
    );
    p
}

#[test]
fn check_accepts_declassified_use_and_rejects_a_leak() {
    unsafe {
        let p = policy(P_OE);
        let ok = program("x_f x");
        let mut ty = ptr::null_mut();
        assert_eq!(trni_check(p, ok, ptr::null(), &mut ty), TrniStatus::Ok);
        assert_eq!(take(ty), "int");

        let leak = program("x mod 3");
        assert_eq!(
            trni_check(p, leak, ptr::null(), ptr::null_mut()),
            TrniStatus::NotEstablished
        );
        assert!(!last_error().is_empty());

        let bare = program("x");
        assert_eq!(
            trni_check(p, bare, c("int").as_ptr(), ptr::null_mut()),
            TrniStatus::NotEstablished
        );
        assert!(last_error().contains("TypeMismatch"), "{}", last_error());

        for h in [ok, leak, bare] {
            trni_program_free(h);
        }
        trni_policy_free(p);
    }
}

#[test]
fn oracle_reports_a_counterexample_as_json() {
    unsafe {
        let p = policy(P_OE);
        let prog = program("x mod 3");
        let mut json = ptr::null_mut();
        let status = trni_oracle(p, prog, c("a_f").as_ptr(), -4, 4, ptr::null(), &mut json);
        assert_eq!(status, TrniStatus::NotEstablished);
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(v["command"], "oracle");
        let cx = &v["counterexample"];
        let (l, r) = (
            cx["left"]["x"].as_str().unwrap(),
            cx["right"]["x"].as_str().unwrap(),
        );
        let (l, r): (i64, i64) = (l.parse().unwrap(), r.parse().unwrap());
        assert_eq!(
            l.rem_euclid(2),
            r.rem_euclid(2),
            "witness must agree on the released parity"
        );
        assert_ne!(l.rem_euclid(3), r.rem_euclid(3));

        let ok = program("x_f x");
        assert_eq!(
            trni_oracle(
                p,
                ok,
                c("int").as_ptr(),
                -3,
                3,
                ptr::null(),
                ptr::null_mut()
            ),
            TrniStatus::Ok
        );
        assert_eq!(
            trni_oracle(
                p,
                ok,
                c("int").as_ptr(),
                3,
                -3,
                ptr::null(),
                ptr::null_mut()
            ),
            TrniStatus::InvalidInput
        );
        trni_program_free(ok);
        trni_program_free(prog);
        trni_policy_free(p);
    }
}

#[test]
fn oracle_checks_a_single_observer_of_a_lattice() {
    unsafe {
        let p = policy(P_LMH);
        let prog = program("fn v : a_L => v");
        for obs in ["L", "M", "H"] {
            let status = trni_oracle(
                p,
                prog,
                c("a_L -> a_L").as_ptr(),
                -1,
                1,
                c(obs).as_ptr(),
                ptr::null_mut(),
            );
            assert_eq!(status, TrniStatus::Ok, "{obs}: {}", last_error());
        }
        let status = trni_oracle(
            p,
            prog,
            c("a_L -> a_L").as_ptr(),
            -1,
            1,
            c("Q").as_ptr(),
            ptr::null_mut(),
        );
        assert_eq!(status, TrniStatus::InvalidInput);
        trni_program_free(prog);
        trni_policy_free(p);
    }
}

#[test]
fn views_json_lists_both_views() {
    unsafe {
        let p = policy(P_OE);
        let mut out = ptr::null_mut();
        assert_eq!(trni_views_json(p, &mut out), TrniStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["verdict"], "ok");
        assert!(v["views"].is_object());
        trni_policy_free(p);
    }
}

#[test]
fn eval_maps_runtime_failures_to_status_codes() {
    unsafe {
        let prog = program("7 / (3 - 3)");
        assert_eq!(
            trni_eval(prog, 0, ptr::null_mut()),
            TrniStatus::NotEstablished
        );
        assert!(last_error().contains("DivisionByZero"), "{}", last_error());
        trni_program_free(prog);

        let prog = program("(fn n : int => n + 1) 2");
        assert_eq!(trni_eval(prog, 1, ptr::null_mut()), TrniStatus::Unsupported);
        let mut v = ptr::null_mut();
        assert_eq!(trni_eval(prog, 0, &mut v), TrniStatus::Ok);
        assert_eq!(take(v), "3");
        trni_program_free(prog);
    }
}

#[test]
fn parse_failures_are_reported_with_a_location() {
    unsafe {
        let mut prog = ptr::null_mut();
        assert_eq!(
            trni_program_parse(c("fn x : int =>\n  x +").as_ptr(), &mut prog),
            TrniStatus::InvalidInput
        );
        assert!(prog.is_null());
        assert!(last_error().starts_with("2:"), "{}", last_error());

        let bad = [0xffu8, 0];
        assert_eq!(
            trni_program_parse(bad.as_ptr().cast(), &mut prog),
            TrniStatus::InvalidUtf8
        );
    }
}

#[test]
fn freeing_null_is_harmless() {
    unsafe {
        trni_policy_free(ptr::null_mut());
        trni_program_free(ptr::null_mut());
        trni_string_free(ptr::null_mut());
    }
}
