use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use sfgswap_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sfgswap_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn scalar_functions() {
    let mut t = 0.0;
    let s = unsafe { sfgswap_fiber_transmission(5.0, 0.2, &mut t) };
    assert_eq!(s, SfgswapStatus::Ok);
    assert!((t - 0.794).abs() < 1e-3);
    assert!((sfgswap_chsh_detection_threshold() - 0.8284).abs() < 1e-4);

    let s = unsafe { sfgswap_fiber_transmission(-1.0, 0.2, &mut t) };
    assert_eq!(s, SfgswapStatus::InvalidParameter);
    assert!(last_error().contains("distance_km"));

    let s = unsafe { sfgswap_fiber_transmission(1.0, 0.2, ptr::null_mut()) };
    assert_eq!(s, SfgswapStatus::NullPointer);

    let (mut p, mut eta) = (0.0, 0.0);
    let s = unsafe {
        sfgswap_required_sfg_efficiency(3e-12, 0.9, 0.6f64.sqrt(), 0.6f64.sqrt(), &mut p, &mut eta)
    };
    assert_eq!(s, SfgswapStatus::Ok);
    assert!((p - 1.0 / 30.0).abs() < 1e-15);
    assert!((eta - 1.4e-8).abs() / 1.4e-8 < 0.1);
}

#[test]
fn device_catalog_and_efficiency() {
    assert_eq!(sfgswap_device_catalog_len(), 3);
    let mut d = SfgswapDevice {
        eta_hat_pct_per_w_cm2: 0.0,
        delta_nu_hat_ghz_cm: 0.0,
        length_cm: 0.0,
        lambda_nm: 0.0,
        tbp: 0.0,
    };
    assert_eq!(
        unsafe { sfgswap_device_catalog(0, &mut d) },
        SfgswapStatus::Ok
    );
    assert_eq!(d.length_cm, 2.6);
    let mut e = SfgswapEfficiency::default();
    assert_eq!(
        unsafe { sfgswap_sfg_efficiency(&d, &mut e) },
        SfgswapStatus::Ok
    );
    assert!((e.eta_sfg - 2.26e-8).abs() < 0.01e-8);
    assert_eq!(
        unsafe { sfgswap_device_catalog(7, &mut d) },
        SfgswapStatus::NotFound
    );
}

#[test]
fn link_rate() {
    let link = SfgswapLink {
        distance_km: 10.0,
        atten_db_per_km: 0.2,
        rep_rate: 10e9,
        eta_c: 0.9,
        eta_d: 0.8,
        eta_sfg: 6e-7,
        p_ab: 3.7e-2,
        p_cd: 3.7e-2,
        include_alice_coupling: false,
    };
    let mut r = 0.0;
    assert_eq!(
        unsafe { sfgswap_diqkd_heralds_per_min(&link, &mut r) },
        SfgswapStatus::Ok
    );
    assert!((r - 90.67).abs() < 0.1);
}

#[test]
fn optimization_handle() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { sfgswap_optimize_sixphoton(0.6, 0.9, &mut h) },
        SfgswapStatus::Ok
    );
    let (mut p, mut c2, mut s) = (0.0, 0.0, 0.0);
    let st = unsafe { sfgswap_optimization_point(h, &mut p, &mut c2, &mut s, ptr::null_mut()) };
    assert_eq!(st, SfgswapStatus::Ok);
    assert!((1.3e-2..=1.7e-2).contains(&p));
    assert!((0.91..=0.95).contains(&c2));
    assert!((2.2e-12..=3.8e-12).contains(&s));
    assert!(!unsafe { sfgswap_optimization_boundary_active(h) });
    unsafe { sfgswap_optimization_free(h) };

    let mut h = ptr::null_mut();
    let st = unsafe { sfgswap_optimize_sixphoton(0.6, 0.99999, &mut h) };
    assert_eq!(st, SfgswapStatus::Infeasible);
    assert!(h.is_null());
}

#[test]
fn simulations() {
    let mut f = SfgswapSwapFigures::default();
    assert_eq!(
        unsafe { sfgswap_simulate_linear_swap(0.01, 0.01, 1.0, 2, &mut f) },
        SfgswapStatus::Ok
    );
    assert!((f.fidelity - 0.5).abs() < 0.03);
    assert_eq!(f.truncation_weight, 0.0);
    assert_eq!(
        unsafe { sfgswap_simulate_sfg_swap(0.01, 0.01, 0.01, 1.0, 1.0, 1, &mut f) },
        SfgswapStatus::Ok
    );
    assert!((f.probability - 0.5e-8).abs() / 0.5e-8 < 0.01);
    assert!((f.fidelity - 1.0).abs() < 1e-12);
    assert_eq!(
        unsafe { sfgswap_simulate_sfg_swap(0.5, 0.01, 0.01, 1.0, 1.0, 1, &mut f) },
        SfgswapStatus::InvalidParameter
    );
}

#[test]
fn report_handle() {
    let cfg = CString::new("scenario=sfg-efficiency\ndevice=commercial\n").unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { sfgswap_run_config(cfg.as_ptr(), &mut r) },
        SfgswapStatus::Ok
    );
    assert_eq!(unsafe { sfgswap_report_rows(r) }, 1);
    let col = CString::new("length_cm").unwrap();
    let mut v = 0.0;
    assert_eq!(
        unsafe { sfgswap_report_value(r, 0, col.as_ptr(), &mut v) },
        SfgswapStatus::Ok
    );
    assert_eq!(v, 5.0);
    let missing = CString::new("nope").unwrap();
    assert_eq!(
        unsafe { sfgswap_report_value(r, 0, missing.as_ptr(), &mut v) },
        SfgswapStatus::NotFound
    );
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { sfgswap_report_render(r, SfgswapFormat::Csv, &mut s) },
        SfgswapStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    assert!(text.starts_with("# config scenario=sfg-efficiency"));
    unsafe {
        sfgswap_string_free(s);
        sfgswap_report_free(r);
    }

    let bad = CString::new("scenario=sfg-efficiency\nbogus=1\n").unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { sfgswap_run_config(bad.as_ptr(), &mut r) },
        SfgswapStatus::ConfigError
    );
    assert!(last_error().contains("bogus"));
    assert_eq!(
        unsafe { sfgswap_run_config(ptr::null(), &mut r) },
        SfgswapStatus::NullPointer
    );
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/sfgswap.h");
    let text = std::fs::read_to_string(&header).unwrap();
    let src = include_str!("../src/lib.rs");
    for line in src.lines() {
        let Some(rest) = line.split("extern \"C\" fn ").nth(1) else {
            continue;
        };
        let name = rest.split('(').next().unwrap();
        assert!(
            text.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    // Syntax check with the system C compiler when one is available.
    if let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-std=c99", "-x", "c"])
        .arg(&header)
        .output()
    {
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
