//! C ABI over `sfgswap`.
//!
//! Every fallible function returns a [`SfgswapStatus`] and writes results
//! through out-pointers. On failure the message is available from
//! [`sfgswap_last_error`] on the same thread. Handles returned by the
//! library are owned by the caller and released with the matching `_free`
//! function. Strings returned by the library are released with
//! [`sfgswap_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sfgswap::analytic::{self, DeviceSpec};
use sfgswap::optimize::{self, LinkScenario, OptimizationResult};
use sfgswap::protocol::{self, LinearSwapSetup, SfgSwapSetup, TruncationConfig};
use sfgswap::scenario::{self, Format, Report, RunError};
use sfgswap::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfgswapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidParameter = 3,
    ConfigError = 4,
    Infeasible = 5,
    Truncation = 6,
    RuntimeError = 7,
    NotFound = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfgswapFormat {
    Csv = 0,
    Json = 1,
    Table = 2,
}

/// Waveguide parameters; units as in the field names.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SfgswapDevice {
    pub eta_hat_pct_per_w_cm2: f64,
    pub delta_nu_hat_ghz_cm: f64,
    pub length_cm: f64,
    pub lambda_nm: f64,
    pub tbp: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SfgswapEfficiency {
    pub eta_sfg: f64,
    pub delta_nu_hz: f64,
    pub pump_power_w: f64,
    pub photon_energy_j: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SfgswapLink {
    pub distance_km: f64,
    pub atten_db_per_km: f64,
    pub rep_rate: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    pub eta_sfg: f64,
    pub p_ab: f64,
    pub p_cd: f64,
    pub include_alice_coupling: bool,
}

/// Figures of a simulated swap.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SfgswapSwapFigures {
    pub probability: f64,
    pub probability_normalized: f64,
    pub fidelity: f64,
    pub truncation_weight: f64,
}

/// Opaque result of [`sfgswap_optimize_sixphoton`].
pub struct SfgswapOptimization(OptimizationResult);

/// Opaque scenario report.
pub struct SfgswapReport(Report);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SfgswapStatus {
    match e {
        Error::InvalidParameter { .. } => SfgswapStatus::InvalidParameter,
        Error::Infeasible { .. } => SfgswapStatus::Infeasible,
        Error::Truncation { .. } => SfgswapStatus::Truncation,
        _ => SfgswapStatus::RuntimeError,
    }
}

struct Failure(SfgswapStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        let status = match &e {
            RunError::Config(_) => SfgswapStatus::ConfigError,
            RunError::Runtime(inner) => status_of(inner),
            RunError::Io(_) => SfgswapStatus::RuntimeError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SfgswapStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and a message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SfgswapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfgswapStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SfgswapStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        Failure(
            SfgswapStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .unwrap_or_default()
        .into_raw()
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sfgswap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_fiber_transmission(
    distance_km: f64,
    atten_db_per_km: f64,
    out: *mut f64,
) -> SfgswapStatus {
    guard(|| {
        write(
            out,
            analytic::fiber_transmission(distance_km, atten_db_per_km)?,
            "out",
        )
    })
}

#[no_mangle]
pub extern "C" fn sfgswap_chsh_detection_threshold() -> f64 {
    analytic::chsh_detection_threshold()
}

/// Six-photon source fidelity and success probability. `clamped` is set
/// when either expression left `[0, 1]`.
///
/// # Safety
/// Out-pointers must be valid for writes; `clamped` may be null.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_sixphoton_figures(
    p: f64,
    theta: f64,
    eta: f64,
    fidelity: *mut f64,
    success: *mut f64,
    clamped: *mut bool,
) -> SfgswapStatus {
    guard(|| {
        let f = analytic::sixphoton_fidelity(p, theta, eta);
        let s = analytic::sixphoton_success(p, theta, eta);
        write(fidelity, f.value, "fidelity")?;
        write(success, s.value, "success")?;
        if !clamped.is_null() {
            clamped.write(f.clamped || s.clamped);
        }
        Ok(())
    })
}

/// # Safety
/// Out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_sfg_swap_figures(
    p: f64,
    eta_c: f64,
    eta: f64,
    eta_sfg: f64,
    fidelity: *mut f64,
    success: *mut f64,
) -> SfgswapStatus {
    guard(|| {
        let (f, s) = analytic::sfg_swap_figures(p, eta_c, eta, eta_sfg);
        write(fidelity, f, "fidelity")?;
        write(success, s, "success")
    })
}

/// # Safety
/// Out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_required_sfg_efficiency(
    p_target: f64,
    f_min: f64,
    eta_c: f64,
    eta_d: f64,
    p: *mut f64,
    eta_sfg_min: *mut f64,
) -> SfgswapStatus {
    guard(|| {
        let r = optimize::required_sfg_efficiency(p_target, f_min, eta_c, eta_d)?;
        write(p, r.p, "p")?;
        write(eta_sfg_min, r.eta_sfg_min, "eta_sfg_min")
    })
}

#[no_mangle]
pub extern "C" fn sfgswap_device_catalog_len() -> usize {
    DeviceSpec::catalog().len()
}

/// Built-in device `index` (0 measured, 1 commercial, 2 research).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_device_catalog(
    index: usize,
    out: *mut SfgswapDevice,
) -> SfgswapStatus {
    guard(|| {
        let d = DeviceSpec::catalog()
            .into_iter()
            .nth(index)
            .ok_or_else(|| {
                Failure(
                    SfgswapStatus::NotFound,
                    format!("no catalog device at index {index}"),
                )
            })?;
        write(
            out,
            SfgswapDevice {
                eta_hat_pct_per_w_cm2: d.eta_hat_pct_per_w_cm2,
                delta_nu_hat_ghz_cm: d.delta_nu_hat_ghz_cm,
                length_cm: d.length_cm,
                lambda_nm: d.lambda_nm,
                tbp: d.tbp,
            },
            "out",
        )
    })
}

/// # Safety
/// `device` must point to a valid struct and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_sfg_efficiency(
    device: *const SfgswapDevice,
    out: *mut SfgswapEfficiency,
) -> SfgswapStatus {
    guard(|| {
        let d = device.as_ref().ok_or_else(|| null("device"))?;
        let spec = DeviceSpec {
            name: "custom".into(),
            eta_hat_pct_per_w_cm2: d.eta_hat_pct_per_w_cm2,
            delta_nu_hat_ghz_cm: d.delta_nu_hat_ghz_cm,
            length_cm: d.length_cm,
            lambda_nm: d.lambda_nm,
            tbp: d.tbp,
            reference_eta_sfg: None,
        };
        let e = analytic::sfg_efficiency_theory(&spec)?;
        write(
            out,
            SfgswapEfficiency {
                eta_sfg: e.eta_sfg,
                delta_nu_hz: e.delta_nu_hz,
                pump_power_w: e.pump_power_w,
                photon_energy_j: e.photon_energy_j,
            },
            "out",
        )
    })
}

/// Heralds per minute of the SFG link.
///
/// # Safety
/// `link` must point to a valid struct and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_diqkd_heralds_per_min(
    link: *const SfgswapLink,
    out: *mut f64,
) -> SfgswapStatus {
    guard(|| {
        let l = link.as_ref().ok_or_else(|| null("link"))?;
        let s = LinkScenario {
            distance_km: l.distance_km,
            atten_db_per_km: l.atten_db_per_km,
            rep_rate: l.rep_rate,
            eta_c: l.eta_c,
            eta_d: l.eta_d,
            eta_sfg: l.eta_sfg,
            p_ab: l.p_ab,
            p_cd: l.p_cd,
            include_alice_coupling: l.include_alice_coupling,
        };
        write(out, optimize::diqkd_rate(&s, None)?.heralds_per_min, "out")
    })
}

/// # Safety
/// `out` must be valid for writes. The handle is released with
/// [`sfgswap_optimization_free`].
#[no_mangle]
pub unsafe extern "C" fn sfgswap_optimize_sixphoton(
    eta: f64,
    f_min: f64,
    out: *mut *mut SfgswapOptimization,
) -> SfgswapStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let r = optimize::optimize_sixphoton(eta, f_min)?;
        out.write(Box::into_raw(Box::new(SfgswapOptimization(r))));
        Ok(())
    })
}

/// Reads the optimum: pair probability, `cos²θ`, success probability and
/// fidelity. Any out-pointer may be null.
///
/// # Safety
/// `handle` must be a live handle; non-null out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_optimization_point(
    handle: *const SfgswapOptimization,
    p: *mut f64,
    cos2_theta: *mut f64,
    success: *mut f64,
    fidelity: *mut f64,
) -> SfgswapStatus {
    guard(|| {
        let r = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        for (ptr, v) in [
            (p, r.p),
            (cos2_theta, r.cos2_theta),
            (success, r.success),
            (fidelity, r.fidelity),
        ] {
            if !ptr.is_null() {
                ptr.write(v);
            }
        }
        Ok(())
    })
}

/// True when the optimum lies on the edge of the search domain.
///
/// # Safety
/// `handle` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_optimization_boundary_active(
    handle: *const SfgswapOptimization,
) -> bool {
    handle.as_ref().is_some_and(|h| h.0.boundary_active)
}

/// # Safety
/// `handle` must come from [`sfgswap_optimize_sixphoton`] and not have been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_optimization_free(handle: *mut SfgswapOptimization) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

fn truncation(max_pairs: u8) -> TruncationConfig {
    TruncationConfig {
        max_pairs,
        ..TruncationConfig::default()
    }
}

/// Fock simulation of swapping with a linear-optics Bell measurement and
/// threshold detectors of efficiency `eta_d`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_simulate_linear_swap(
    p_ab: f64,
    p_cd: f64,
    eta_d: f64,
    max_pairs: u8,
    out: *mut SfgswapSwapFigures,
) -> SfgswapStatus {
    guard(|| {
        let setup = LinearSwapSetup {
            detector: sfgswap::optics::DetectorModel::threshold(eta_d)?,
            truncation: truncation(max_pairs),
            ..LinearSwapSetup::new(p_ab, p_cd)
        };
        let r = protocol::simulate_linear_swap(&setup)?;
        write(
            out,
            SfgswapSwapFigures {
                probability: r.probability,
                probability_normalized: r.probability_normalized,
                fidelity: r.fidelity,
                truncation_weight: r.truncation.weight,
            },
            "out",
        )
    })
}

/// Fock simulation of swapping with an SFG Bell measurement of coupling
/// `g` (`η_SFG = g²`).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_simulate_sfg_swap(
    p_ab: f64,
    p_cd: f64,
    g: f64,
    eta_c: f64,
    eta_d: f64,
    max_pairs: u8,
    out: *mut SfgswapSwapFigures,
) -> SfgswapStatus {
    guard(|| {
        let setup = SfgSwapSetup {
            eta_c,
            eta_d,
            truncation: truncation(max_pairs),
            ..SfgSwapSetup::new(p_ab, p_cd, g)
        };
        let r = protocol::simulate_sfg_swap(&setup)?;
        write(
            out,
            SfgswapSwapFigures {
                probability: r.probability,
                probability_normalized: r.probability_normalized,
                fidelity: r.fidelity,
                truncation_weight: r.truncation.weight,
            },
            "out",
        )
    })
}

/// Parses a `key=value` config and runs its scenario.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be valid for
/// writes. The handle is released with [`sfgswap_report_free`].
#[no_mangle]
pub unsafe extern "C" fn sfgswap_run_config(
    config: *const c_char,
    out: *mut *mut SfgswapReport,
) -> SfgswapStatus {
    guard(|| {
        let text = str_arg(config, "config")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let report = scenario::run_text(text)?;
        out.write(Box::into_raw(Box::new(SfgswapReport(report))));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_report_rows(report: *const SfgswapReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.rows.len())
}

/// Numeric cell at `row` of column `column`.
///
/// # Safety
/// `report` must be a live handle, `column` a NUL-terminated string and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_report_value(
    report: *const SfgswapReport,
    row: usize,
    column: *const c_char,
    out: *mut f64,
) -> SfgswapStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let name = str_arg(column, "column")?;
        let v = r.value(row, name).ok_or_else(|| {
            Failure(
                SfgswapStatus::NotFound,
                format!("no numeric value in column {name:?} at row {row}"),
            )
        })?;
        write(out, v, "out")
    })
}

/// Renders the report; release the string with [`sfgswap_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_report_render(
    report: *const SfgswapReport,
    format: SfgswapFormat,
    out: *mut *mut c_char,
) -> SfgswapStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let f = match format {
            SfgswapFormat::Csv => Format::Csv,
            SfgswapFormat::Json => Format::Json,
            SfgswapFormat::Table => Format::Table,
        };
        write(out, owned_string(r.render(f)), "out")
    })
}

/// # Safety
/// `report` must come from [`sfgswap_run_config`] and not have been freed
/// already.
#[no_mangle]
pub unsafe extern "C" fn sfgswap_report_free(report: *mut SfgswapReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
