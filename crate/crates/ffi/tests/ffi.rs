use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use sb_kit_ffi::*;

fn fixture(name: &str) -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name);
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    sb_string_free(s);
    out
}

unsafe fn last_error() -> String {
    take(sb_last_error_message())
}

#[test]
fn operator_handles_round_trip() {
    unsafe {
        let a_entries = [1.0, 0.0, 0.0, 2.0];
        let b_entries = [1.5, 0.5, 0.5, 1.5];
        let (mut a, mut b, mut u) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(sb_operator_new(a_entries.as_ptr(), 2, &mut a), SbStatus::Ok);
        assert_eq!(sb_operator_new(b_entries.as_ptr(), 2, &mut b), SbStatus::Ok);
        assert_eq!(sb_operator_dim(a), 2);
        assert_eq!(sb_approximate_unitary(a, b, 1e-6, &mut u), SbStatus::Ok);
        assert_eq!(sb_orthogonal_map_dim(u), 2);
        let mut residual = f64::NAN;
        assert_eq!(sb_conjugation_residual(a, b, u, &mut residual), SbStatus::Ok);
        assert!(residual < 1e-6);
        let mut entries = [0.0; 4];
        assert_eq!(sb_orthogonal_map_entries(u, entries.as_mut_ptr(), 4), SbStatus::Ok);
        let col0 = entries[0] * entries[0] + entries[2] * entries[2];
        assert!((col0 - 1.0).abs() < 1e-12);
        assert_eq!(sb_orthogonal_map_entries(u, entries.as_mut_ptr(), 3), SbStatus::ValidationError);
        sb_orthogonal_map_free(u);
        sb_operator_free(a);
        sb_operator_free(b);
    }
}

#[test]
fn asymmetric_operator_is_rejected_with_a_message() {
    unsafe {
        let entries = [1.0, 0.3, 0.0, 2.0];
        let mut a = ptr::null_mut();
        assert_eq!(sb_operator_new(entries.as_ptr(), 2, &mut a), SbStatus::ValidationError);
        assert!(a.is_null());
        assert!(last_error().contains("symmetric"));
    }
}

#[test]
fn operator_from_json() {
    unsafe {
        let json = CString::new(r#"{"dim": 2, "rows": [[1.0, 0.0], [0.0, 3.0]]}"#).unwrap();
        let mut a = ptr::null_mut();
        assert_eq!(sb_operator_from_json(json.as_ptr(), &mut a), SbStatus::Ok);
        assert_eq!(sb_operator_dim(a), 2);
        sb_operator_free(a);
        let bad = CString::new("{").unwrap();
        assert_eq!(sb_operator_from_json(bad.as_ptr(), &mut a), SbStatus::ParseError);
    }
}

#[test]
fn nonspectral_pair_is_a_module_error() {
    unsafe {
        let (mut a, mut b, mut u) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(sb_operator_new([1.0, 0.0, 0.0, 2.0].as_ptr(), 2, &mut a), SbStatus::Ok);
        assert_eq!(sb_operator_new([1.0, 0.0, 0.0, 3.0].as_ptr(), 2, &mut b), SbStatus::Ok);
        assert_eq!(sb_approximate_unitary(a, b, 1e-6, &mut u), SbStatus::ModuleError);
        assert!(u.is_null());
        sb_operator_free(a);
        sb_operator_free(b);
    }
}

#[test]
fn jobs_run_and_verify() {
    for (name, positive) in [
        ("operators_conjugate.json", true),
        ("algebras_forward.json", false),
        ("automorphisms_schedule.json", true),
        ("randomizations_sb_failure.json", false),
    ] {
        unsafe {
            let mut job = ptr::null_mut();
            assert_eq!(sb_job_parse(fixture(name).as_ptr(), &mut job), SbStatus::Ok, "{name}");
            let mut cert = ptr::null_mut();
            let mut is_positive = !positive;
            assert_eq!(sb_job_run(job, &mut cert, &mut is_positive), SbStatus::Ok, "{name}");
            assert_eq!(is_positive, positive, "{name}");
            let cert = take(cert);
            let c = CString::new(cert.clone()).unwrap();
            let mut valid = false;
            assert_eq!(sb_certificate_verify(job, c.as_ptr(), &mut valid), SbStatus::Ok);
            assert!(valid, "{name}");

            let tampered = CString::new(cert.replacen("\"v1\"", "\"v2\"", 1)).unwrap();
            assert_eq!(sb_certificate_verify(job, tampered.as_ptr(), &mut valid), SbStatus::Ok);
            assert!(!valid);
            assert!(last_error().contains("format"));
            sb_job_free(job);
        }
    }
}

#[test]
fn job_errors_map_to_status_codes() {
    unsafe {
        let mut job = ptr::null_mut();
        assert_eq!(sb_job_parse(fixture("malformed.json").as_ptr(), &mut job), SbStatus::ParseError);
        assert_eq!(sb_job_parse(fixture("algebras_bad_mass.json").as_ptr(), &mut job), SbStatus::ValidationError);
        assert!(last_error().contains("unit mass"));
        assert_eq!(sb_job_parse(ptr::null(), &mut job), SbStatus::NullPointer);
        let bad = [0xffu8, 0];
        assert_eq!(sb_job_parse(bad.as_ptr().cast(), &mut job), SbStatus::InvalidUtf8);
        assert!(job.is_null());
        let mut valid = true;
        assert_eq!(sb_certificate_verify(ptr::null(), c"{}".as_ptr(), &mut valid), SbStatus::NullPointer);
    }
}

#[test]
fn successful_calls_clear_the_error() {
    unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(sb_operator_new(ptr::null(), 2, &mut a), SbStatus::NullPointer);
        assert!(!sb_last_error_message().is_null());
        assert_eq!(sb_operator_new([1.0].as_ptr(), 1, &mut a), SbStatus::Ok);
        assert!(sb_last_error_message().is_null());
        sb_operator_free(a);
        sb_string_free(ptr::null_mut());
        assert!(!CStr::from_ptr(sb_version()).to_bytes().is_empty());
    }
}
