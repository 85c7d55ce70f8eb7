use std::f64::consts::PI;
use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use asqg_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let len = unsafe { asqg_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(len > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn omega_and_error_codes() {
    let mut w = f64::NAN;
    assert_eq!(unsafe { asqg_omega(1.5, 2, &mut w) }, AsqgStatus::Ok);
    assert_eq!(w, asqg_core::dispersion::omega(asqg_core::Alpha::new(1.5).unwrap(), 2));
    assert_eq!(unsafe { asqg_omega(2.5, 2, &mut w) }, AsqgStatus::InvalidAlpha);
    assert!(last_error().contains("2.5"));
    assert_eq!(unsafe { asqg_omega(1.5, 2, ptr::null_mut()) }, AsqgStatus::NullPointer);
}

#[test]
fn table_handle_lifecycle() {
    let mut t: *mut AsqgTable = ptr::null_mut();
    assert_eq!(unsafe { asqg_table_new(0.9, 64, &mut t) }, AsqgStatus::Ok);
    assert!(!t.is_null());
    let (mut w1, mut w2, mut wm) = (1.0, 0.0, 0.0);
    unsafe {
        assert_eq!(asqg_table_omega(t, 1, &mut w1), AsqgStatus::Ok);
        assert_eq!(asqg_table_omega(t, 2, &mut w2), AsqgStatus::Ok);
        assert_eq!(asqg_table_omega(t, -2, &mut wm), AsqgStatus::Ok);
        assert_eq!(asqg_table_omega(t, 65, &mut wm), AsqgStatus::InvalidArgument);
    }
    assert!(w1.abs() <= 1e-10 && w2 > 0.0);
    let (mut gap, mut n, mut j, mut k) = (0.0, 0, 0, 0);
    assert_eq!(unsafe { asqg_table_min_gap(t, 32, &mut gap, &mut n, &mut j, &mut k) }, AsqgStatus::Ok);
    assert_eq!(k, j + n);
    assert!(gap >= w2 - 1e-9);
    assert_eq!(unsafe { asqg_table_min_gap(t, 33, &mut gap, &mut n, &mut j, &mut k) }, AsqgStatus::InvalidArgument);
    unsafe { asqg_table_free(t) };
    unsafe { asqg_table_free(ptr::null_mut()) };
    assert_eq!(unsafe { asqg_table_new(1.5, 1, &mut t) }, AsqgStatus::InvalidArgument);
}

#[test]
fn right_hand_sides() {
    let n = 32;
    let f: Vec<f64> = (0..n).map(|k| 0.01 * (2.0 * 2.0 * PI * k as f64 / n as f64).cos()).collect();
    let mut out = vec![0.0; n];
    assert_eq!(unsafe { asqg_rhs_f(1.5, n, 256, f.as_ptr(), out.as_mut_ptr()) }, AsqgStatus::Ok);
    assert!(out.iter().sum::<f64>().abs() < 1e-13);
    assert_eq!(unsafe { asqg_grad_e(1.5, n, 256, f.as_ptr(), out.as_mut_ptr()) }, AsqgStatus::Ok);
    assert_eq!(unsafe { asqg_grad_e(1.5, n, 64, f.as_ptr(), out.as_mut_ptr()) }, AsqgStatus::InvalidArgument);
    let bad = vec![-0.6; n];
    assert_eq!(unsafe { asqg_grad_e(1.5, n, 256, bad.as_ptr(), out.as_mut_ptr()) }, AsqgStatus::Domain);
    assert_eq!(unsafe { asqg_grad_e(1.5, n, 256, ptr::null(), out.as_mut_ptr()) }, AsqgStatus::NullPointer);
}

#[test]
fn simulation_handle() {
    let n = 32;
    let f: Vec<f64> = (0..n).map(|k| 0.01 * (2.0 * 2.0 * PI * k as f64 / n as f64).cos()).collect();
    let mut sim: *mut AsqgSimulation = ptr::null_mut();
    assert_eq!(unsafe { asqg_sim_new(1.5, n, 0, 0.0, f.as_ptr(), &mut sim) }, AsqgStatus::Ok);
    assert_eq!(unsafe { asqg_sim_step(sim, 5) }, AsqgStatus::Ok);
    let (mut t, mut dt) = (0.0, 0.0);
    assert_eq!(unsafe { asqg_sim_time(sim, &mut t, &mut dt) }, AsqgStatus::Ok);
    assert!(dt > 0.0 && (t - 5.0 * dt).abs() < 1e-15);
    let mut state = vec![0.0; n];
    assert_eq!(unsafe { asqg_sim_state(sim, n, state.as_mut_ptr()) }, AsqgStatus::Ok);
    let mean = state.iter().sum::<f64>() / n as f64;
    let mean0 = f.iter().sum::<f64>() / n as f64;
    assert!((mean - mean0).abs() < 1e-15);
    assert_eq!(unsafe { asqg_sim_state(sim, 16, state.as_mut_ptr()) }, AsqgStatus::InvalidArgument);
    unsafe { asqg_sim_free(sim) };
    assert_eq!(unsafe { asqg_sim_new(1.5, n, 0, 10.0, f.as_ptr(), &mut sim) }, AsqgStatus::InvalidArgument);
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/asqg.h");
    assert!(header.exists());
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["asqg_table_new", "asqg_sim_step", "ASQG_STATUS_BLOW_UP"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).status() else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(status.success());
}
