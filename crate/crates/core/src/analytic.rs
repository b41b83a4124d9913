//! Closed-form perturbative figures of merit.
//!
//! The six-photon expressions describe a heralded-pair source built from
//! three SPDC sources and linear optics, where a pick-off beamsplitter of
//! angle `θ` transmits with probability `cos²θ` and ancilla photons are
//! detected with overall efficiency `η`.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Pair probabilities above this value are outside the small-`p` regime of
/// the six-photon expressions.
pub const SMALL_P_LIMIT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub p: f64,
    pub p_ab: f64,
    pub p_cd: f64,
    /// Pick-off beamsplitter angle, radians.
    pub theta: f64,
    /// Ancilla detection efficiency `η_c·η_d`.
    pub eta: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    pub eta_sfg: f64,
}

impl SchemeParams {
    pub fn new(p: f64, theta: f64, eta_c: f64, eta_d: f64, eta_sfg: f64) -> Self {
        SchemeParams {
            p,
            p_ab: p,
            p_cd: p,
            theta,
            eta: eta_c * eta_d,
            eta_c,
            eta_d,
            eta_sfg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("p_ab", self.p_ab), ("p_cd", self.p_cd)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::param(name, v, "must lie in (0, 1)"));
            }
        }
        check_range("theta", self.theta, 0.0, std::f64::consts::FRAC_PI_2)?;
        for (name, v) in [
            ("eta", self.eta),
            ("eta_c", self.eta_c),
            ("eta_d", self.eta_d),
            ("eta_sfg", self.eta_sfg),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::param(name, v, "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// A formula value together with its validity flags.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// The raw expression left `[0, 1]` and was clamped.
    pub clamped: bool,
    /// `p` exceeds [`SMALL_P_LIMIT`].
    pub outside_small_p: bool,
}

impl Estimate {
    fn probability(raw: f64, p: f64) -> Self {
        let clamped = !(0.0..=1.0).contains(&raw);
        Estimate {
            value: raw.clamp(0.0, 1.0),
            clamped,
            outside_small_p: p > SMALL_P_LIMIT,
        }
    }
}

/// Unnormalized weights `(w_aa, w_dd, w_signal)` of the state heralded by a
/// linear-optics Bell measurement: `(p_ab²/16, p_cd²/16, p_ab·p_cd/8)`.
pub fn linear_swap_state_weights(p_ab: f64, p_cd: f64) -> (f64, f64, f64) {
    (p_ab * p_ab / 16.0, p_cd * p_cd / 16.0, p_ab * p_cd / 8.0)
}

/// `w_signal / (w_aa + w_dd + w_signal)`.
pub fn linear_swap_fidelity(p_ab: f64, p_cd: f64) -> f64 {
    let (aa, dd, s) = linear_swap_state_weights(p_ab, p_cd);
    let total = aa + dd + s;
    if total == 0.0 {
        0.0
    } else {
        s / total
    }
}

/// `F ≈ cos⁴θ/(1−η sin²θ)² · (1 − 13/4·p·(1−η sin²θ)²)`.
pub fn sixphoton_fidelity(p: f64, theta: f64, eta: f64) -> Estimate {
    let s = theta.sin().powi(2);
    let c = theta.cos().powi(2);
    let q = (1.0 - eta * s).powi(2);
    Estimate::probability(c * c / q * (1.0 - 3.25 * p * q), p)
}

/// `P ≈ ¼p³η⁴sin⁸θ(1−η sin²θ)²(1 + 13/4·p·(1−η sin²θ)²)`.
pub fn sixphoton_success(p: f64, theta: f64, eta: f64) -> Estimate {
    let s = theta.sin().powi(2);
    let q = (1.0 - eta * s).powi(2);
    let raw = 0.25 * p.powi(3) * eta.powi(4) * s.powi(4) * q * (1.0 + 3.25 * p * q);
    Estimate::probability(raw, p)
}

/// Fidelity and success probability of the SFG-heralded pair:
/// `F ≈ 1 − 3p` and `P ≈ ½η_c²·η·η_SFG·p²(1 + 3p)`.
pub fn sfg_swap_figures(p: f64, eta_c: f64, eta: f64, eta_sfg: f64) -> (f64, f64) {
    let f = 1.0 - 3.0 * p;
    let prob = 0.5 * eta_c * eta_c * eta * eta_sfg * p * p * (1.0 + 3.0 * p);
    (f, prob)
}

/// Waveguide parameters for the SFG efficiency model, in the units named by
/// each field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub name: String,
    /// Normalized efficiency, %/(W·cm²).
    pub eta_hat_pct_per_w_cm2: f64,
    /// Spectral acceptance, GHz·cm.
    pub delta_nu_hat_ghz_cm: f64,
    pub length_cm: f64,
    /// Wavelength fixing the photon energy `hν`, nm.
    pub lambda_nm: f64,
    pub tbp: f64,
    /// Published value of the efficiency for this device, if any.
    pub reference_eta_sfg: Option<f64>,
}

pub const TBP_RANGE: (f64, f64) = (0.3, 1.5);

impl DeviceSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_hat_pct_per_w_cm2", self.eta_hat_pct_per_w_cm2),
            ("delta_nu_hat_ghz_cm", self.delta_nu_hat_ghz_cm),
            ("length_cm", self.length_cm),
            ("lambda_nm", self.lambda_nm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, v, "must be positive"));
            }
        }
        check_range("tbp", self.tbp, TBP_RANGE.0, TBP_RANGE.1)
    }

    /// Periodically poled lithium niobate waveguide used for the
    /// measurement: 15 %/(W·cm²), 300 GHz·cm, 2.6 cm.
    pub fn measured() -> Self {
        DeviceSpec {
            name: "measured".into(),
            eta_hat_pct_per_w_cm2: 15.0,
            delta_nu_hat_ghz_cm: 300.0,
            length_cm: 2.6,
            lambda_nm: 1557.0,
            tbp: 0.66,
            reference_eta_sfg: Some(1e-8),
        }
    }

    /// Commercial waveguide: 100 %/(W·cm²), 5 cm.
    pub fn commercial() -> Self {
        DeviceSpec {
            name: "commercial".into(),
            eta_hat_pct_per_w_cm2: 100.0,
            length_cm: 5.0,
            reference_eta_sfg: Some(1.5e-7),
            ..Self::measured()
        }
    }

    /// Research-grade waveguide: 150 %/(W·cm²), 10 cm.
    pub fn research() -> Self {
        DeviceSpec {
            name: "research".into(),
            eta_hat_pct_per_w_cm2: 150.0,
            length_cm: 10.0,
            reference_eta_sfg: Some(5e-7),
            ..Self::measured()
        }
    }

    pub fn catalog() -> Vec<DeviceSpec> {
        vec![Self::measured(), Self::commercial(), Self::research()]
    }

    pub fn from_catalog(name: &str) -> Option<DeviceSpec> {
        Self::catalog().into_iter().find(|d| d.name == name)
    }
}

/// Measured conversion probability of the reference waveguide.
pub const MEASURED_ETA_SFG: f64 = 1.2e-8;
pub const MEASURED_ETA_SFG_UNCERTAINTY: f64 = 0.2e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfgEfficiency {
    /// `η̂·Δν̂·hν·L/tbp`, dimensionless.
    pub eta_sfg: f64,
    /// Phase-matched bandwidth `Δν̂/L`, Hz.
    pub delta_nu_hz: f64,
    /// One photon per mode, `hνΔν/tbp`, W.
    pub pump_power_w: f64,
    pub photon_energy_j: f64,
}

/// Single-photon SFG efficiency of a waveguide using its full acceptance
/// bandwidth.
pub fn sfg_efficiency_theory(dev: &DeviceSpec) -> Result<SfgEfficiency> {
    dev.validate()?;
    let eta_hat = dev.eta_hat_pct_per_w_cm2 / 100.0; // 1/(W·cm²)
    let delta_nu_hat = dev.delta_nu_hat_ghz_cm * 1e9; // Hz·cm
    let photon_energy_j = PLANCK * SPEED_OF_LIGHT / (dev.lambda_nm * 1e-9);
    let delta_nu_hz = delta_nu_hat / dev.length_cm;
    let pump_power_w = photon_energy_j * delta_nu_hz / dev.tbp;
    // η̂·P_pump·L² with P_pump = hν·Δν̂/(L·tbp).
    let eta_sfg = eta_hat * pump_power_w * dev.length_cm * dev.length_cm;
    Ok(SfgEfficiency {
        eta_sfg,
        delta_nu_hz,
        pump_power_w,
        photon_energy_j,
    })
}

/// `10^(−attenuation·distance/10)`.
pub fn fiber_transmission(distance_km: f64, atten_db_per_km: f64) -> Result<f64> {
    if !(distance_km.is_finite() && distance_km >= 0.0) {
        return Err(Error::param(
            "distance_km",
            distance_km,
            "must be non-negative",
        ));
    }
    if !(atten_db_per_km.is_finite() && atten_db_per_km >= 0.0) {
        return Err(Error::param(
            "atten_db_per_km",
            atten_db_per_km,
            "must be non-negative",
        ));
    }
    Ok(10f64.powf(-atten_db_per_km * distance_km / 10.0))
}

/// Detection efficiency above which a CHSH test closes the detection
/// loophole: `2/(1+√2)`.
pub fn chsh_detection_threshold() -> f64 {
    2.0 / (1.0 + std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta_of_cos2(c2: f64) -> f64 {
        c2.sqrt().acos()
    }

    #[test]
    fn linear_swap_weights_and_fidelity() {
        let p = 0.03;
        let (aa, dd, s) = linear_swap_state_weights(p, p);
        assert_eq!((aa, dd, s), (p * p / 16.0, p * p / 16.0, p * p / 8.0));
        assert!((linear_swap_fidelity(p, p) - 0.5).abs() < 1e-15);
        // 4e-4/8 over (1e-4/16 + 1.6e-3/16 + 4e-4/8).
        assert!((linear_swap_fidelity(0.01, 0.04) - 0.32).abs() < 1e-12);
    }

    #[test]
    fn sixphoton_reference_point() {
        let th = theta_of_cos2(0.93);
        let f = sixphoton_fidelity(0.015, th, 0.6);
        let p = sixphoton_success(0.015, th, 0.6);
        // s = 0.07, q = (1 − 0.042)² = 0.917764.
        let q: f64 = 0.917_764;
        let f_hand = 0.93f64.powi(2) / q * (1.0 - 3.25 * 0.015 * q);
        let p_hand = 0.25
            * 0.015f64.powi(3)
            * 0.6f64.powi(4)
            * 0.07f64.powi(4)
            * q
            * (1.0 + 3.25 * 0.015 * q);
        assert!((f.value - f_hand).abs() < 1e-12);
        assert!((p.value - p_hand).abs() < 1e-24);
        assert!((f.value - 0.900).abs() < 1e-3);
        assert!((p.value - 2.5e-12).abs() / 2.5e-12 < 0.02);
        assert!(!f.clamped && !f.outside_small_p);
    }

    #[test]
    fn sixphoton_limits() {
        assert!((sixphoton_fidelity(0.0, 0.0, 0.5).value - 1.0).abs() < 1e-15);
        assert_eq!(sixphoton_success(0.01, 0.0, 0.5).value, 0.0);
        let a = sixphoton_success(0.01, 0.7, 0.5).value;
        let b = sixphoton_success(0.01, 0.7, 0.25).value;
        let q = |e: f64| (1.0 - e * 0.7f64.sin().powi(2)).powi(2);
        let shape = |e: f64| q(e) * (1.0 + 3.25 * 0.01 * q(e));
        assert!((a / b - 16.0 * shape(0.5) / shape(0.25)).abs() < 1e-9);
        assert!(sixphoton_fidelity(0.2, 0.1, 0.5).outside_small_p);
        assert!(sixphoton_fidelity(0.5, 1.2, 0.0).clamped);
    }

    #[test]
    fn sfg_figures_reference_point() {
        let (f, p) = sfg_swap_figures(1.0 / 30.0, 0.6f64.sqrt(), 0.6, 1.4e-8);
        assert!((f - 0.9).abs() < 1e-12);
        // ½·0.6·0.6·1.4e-8·(1/900)·1.1
        assert!((p - 0.5 * 0.36 * 1.4e-8 / 900.0 * 1.1).abs() < 1e-25);
        assert!((p - 3.0e-12).abs() / 3.0e-12 < 0.05);
    }

    #[test]
    fn efficiency_of_measured_device() {
        let e = sfg_efficiency_theory(&DeviceSpec::measured()).unwrap();
        let hv = 6.626_070_15e-34 * 299_792_458.0 / 1557e-9;
        assert!((e.photon_energy_j - hv).abs() < 1e-30);
        assert!((e.delta_nu_hz - 300e9 / 2.6).abs() < 1e-3);
        let hand = 0.15 * 300e9 * hv * 2.6 / 0.66;
        assert!((e.eta_sfg - hand).abs() / hand < 1e-12);
        assert!((e.eta_sfg - 2.26e-8).abs() < 0.01e-8);
    }

    #[test]
    fn efficiency_scales_linearly() {
        let base = sfg_efficiency_theory(&DeviceSpec::measured())
            .unwrap()
            .eta_sfg;
        let com = sfg_efficiency_theory(&DeviceSpec::commercial())
            .unwrap()
            .eta_sfg;
        assert!((com / base - (100.0 / 15.0) * (5.0 / 2.6)).abs() < 1e-12);
        let mut d = DeviceSpec::measured();
        d.tbp = 1.32;
        let half = sfg_efficiency_theory(&d).unwrap().eta_sfg;
        assert!((half * 2.0 - base).abs() / base < 1e-14);
        d.tbp = 2.0;
        assert!(sfg_efficiency_theory(&d).is_err());
    }

    #[test]
    fn fiber_and_chsh() {
        assert!((fiber_transmission(5.0, 0.2).unwrap() - 0.794).abs() < 1e-3);
        assert!((fiber_transmission(10.0, 0.2).unwrap() - 10f64.powf(-0.2)).abs() < 1e-15);
        assert_eq!(fiber_transmission(0.0, 0.7).unwrap(), 1.0);
        assert!(fiber_transmission(-1.0, 0.2).is_err());
        assert!((chsh_detection_threshold() - 0.8284).abs() < 1e-4);
    }
}
