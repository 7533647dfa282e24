use std::ffi::{c_char, CStr, CString};
use std::ptr;

use feasikit_ffi::*;

const FINITE: &str = r#"{"seed": 3,
    "problem": {"generator": {"kind": "random_halfspaces", "m": 20, "n": 4, "interior_radius": 0.1,
                              "q": {"kind": "box", "lo": -10, "hi": 10}}},
    "solver": {"control": {"kind": "cyclic_singleton"}, "mode": "CERTIFIED_FINITE"},
    "diagnostics": {"qf": ["FM", "QF1"]}}"#;

fn last_error() -> String {
    let p = fk_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn experiment(json: &str) -> Result<*mut FkExperiment, FkStatus> {
    let c = CString::new(json).unwrap();
    let mut exp = ptr::null_mut();
    match unsafe { fk_experiment_from_json(c.as_ptr(), &mut exp) } {
        FkStatus::Ok => Ok(exp),
        s => {
            assert!(exp.is_null());
            Err(s)
        }
    }
}

#[test]
fn full_round_trip() {
    let exp = experiment(FINITE).unwrap();
    unsafe {
        assert_eq!(fk_experiment_dim(exp), 4);
        assert_eq!(fk_experiment_num_constraints(exp), 20);
        let mut trace = ptr::null_mut();
        assert_eq!(fk_experiment_run(exp, &mut trace), FkStatus::Ok);
        let mut status = FkRunStatus::BudgetExhausted;
        let mut k = usize::MAX;
        assert_eq!(fk_trace_status(trace, &mut status, &mut k), FkStatus::Ok);
        assert_eq!(status, FkRunStatus::FiniteConvergence);
        assert_eq!(k, fk_trace_iterations(trace));
        assert_eq!(fk_trace_final_residual(trace), 0.0);

        let mut small = [0.0; 2];
        assert_eq!(fk_trace_final_point(trace, small.as_mut_ptr(), 2), FkStatus::BufferTooSmall);
        assert!(last_error().contains("need 4"));
        let mut x = [f64::NAN; 4];
        assert_eq!(fk_trace_final_point(trace, x.as_mut_ptr(), 4), FkStatus::Ok);
        assert!(x.iter().all(|v| v.is_finite() && v.abs() <= 10.0));

        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(fk_trace_summary_json(trace, &mut json), FkStatus::Ok);
        let summary: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        fk_string_free(json);
        assert_eq!(summary["status"], "FINITE_CONVERGENCE");
        assert_eq!(summary["k_star"].as_u64(), Some(k as u64));
        assert_eq!(summary["qf"][0]["verdict"]["pass"], true);

        let dir = std::env::temp_dir().join(format!("feasikit-ffi-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = CString::new(dir.join("trace.csv").to_str().unwrap()).unwrap();
        assert_eq!(fk_trace_write_csv(trace, path.as_ptr()), FkStatus::Ok);
        let csv = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
        assert_eq!(csv.lines().count(), k + 2);
        std::fs::remove_dir_all(&dir).unwrap();

        fk_trace_free(trace);
        fk_experiment_free(exp);
    }
}

#[test]
fn errors_map_to_status_codes() {
    assert_eq!(experiment("{").unwrap_err(), FkStatus::ParseError);
    assert!(last_error().starts_with("ParseError"));

    let geometric = FINITE.replace(
        r#""control""#,
        r#""schedule": {"kind": "geometric", "r0": 1, "q": 0.5}, "control""#,
    );
    assert_eq!(experiment(&geometric).unwrap_err(), FkStatus::PreconditionViolation);
    assert!(last_error().contains("STAG"));

    let batch = format!(r#"{{"experiments": [{FINITE}]}}"#);
    assert_eq!(experiment(&batch).unwrap_err(), FkStatus::ValidationError);
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        let mut exp = ptr::null_mut();
        assert_eq!(fk_experiment_from_json(ptr::null(), &mut exp), FkStatus::NullPointer);
        let json = CString::new(FINITE).unwrap();
        assert_eq!(fk_experiment_from_json(json.as_ptr(), ptr::null_mut()), FkStatus::NullPointer);
        let mut trace = ptr::null_mut();
        assert_eq!(fk_experiment_run(ptr::null(), &mut trace), FkStatus::NullPointer);
        let mut status = FkRunStatus::TolReached;
        assert_eq!(fk_trace_status(ptr::null(), &mut status, ptr::null_mut()), FkStatus::NullPointer);
        assert_eq!(fk_experiment_dim(ptr::null()), 0);
        assert!(fk_trace_final_residual(ptr::null()).is_nan());
        fk_experiment_free(ptr::null_mut());
        fk_trace_free(ptr::null_mut());
        fk_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_utf8_is_rejected() {
    let bytes = [b'{', 0xff, b'}', 0];
    let mut exp = ptr::null_mut();
    let s = unsafe { fk_experiment_from_json(bytes.as_ptr().cast(), &mut exp) };
    assert_eq!(s, FkStatus::InvalidUtf8);
}

#[test]
fn errors_are_per_thread() {
    assert_eq!(experiment("[").unwrap_err(), FkStatus::ParseError);
    std::thread::spawn(|| assert!(fk_last_error_message().is_null())).join().unwrap();
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(fk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
