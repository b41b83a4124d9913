//! Operating-point optimization and link-rate budgets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    fiber_transmission, sfg_swap_figures, sixphoton_fidelity, sixphoton_success,
};
use crate::error::{check_range, Error, Result};

pub const P_RANGE: (f64, f64) = (1e-4, 0.1);
/// Search range of `sin²θ`; the open interval `(0, 1)` with a small margin.
pub const SIN2_RANGE: (f64, f64) = (1e-6, 1.0 - 1e-6);

const COARSE_P: usize = 241;
const COARSE_S: usize = 241;
const FINE_POINTS: usize = 41;
const MAX_REFINEMENTS: u32 = 80;
const OBJECTIVE_RTOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub eta: f64,
    pub f_min: f64,
    pub p: f64,
    pub sin2_theta: f64,
    pub cos2_theta: f64,
    pub theta: f64,
    /// Success probability at the optimum.
    pub success: f64,
    /// Fidelity at the optimum.
    pub fidelity: f64,
    pub p_range: (f64, f64),
    pub sin2_range: (f64, f64),
    pub grid_points: usize,
    pub refinement_steps: u32,
    /// The optimum sits on the edge of the search domain.
    pub boundary_active: bool,
    /// The fidelity constraint binds at the optimum.
    pub constraint_active: bool,
}

#[derive(Clone, Copy, Debug)]
struct Point {
    p: f64,
    s: f64,
    success: f64,
    fidelity: f64,
}

fn evaluate(p: f64, s: f64, eta: f64) -> Point {
    let theta = s.sqrt().asin();
    Point {
        p,
        s,
        success: sixphoton_success(p, theta, eta).value,
        fidelity: sixphoton_fidelity(p, theta, eta).value,
    }
}

/// Evaluates the grid in parallel and picks the best feasible point in grid
/// order, so ties go to the smallest `p`, then the smallest `sin²θ`.
fn best_on_grid(ps: &[f64], ss: &[f64], eta: f64, f_min: f64) -> (Option<Point>, f64) {
    let points: Vec<Point> = ps
        .par_iter()
        .flat_map_iter(|&p| ss.iter().map(move |&s| evaluate(p, s, eta)))
        .collect();
    let mut best: Option<Point> = None;
    let mut best_fidelity = f64::NEG_INFINITY;
    for pt in points {
        best_fidelity = best_fidelity.max(pt.fidelity);
        if pt.fidelity < f_min {
            continue;
        }
        if best.is_none_or(|b| pt.success > b.success) {
            best = Some(pt);
        }
    }
    (best, best_fidelity)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Maximizes the six-photon success probability subject to
/// `fidelity ≥ f_min`.
pub fn optimize_sixphoton(eta: f64, f_min: f64) -> Result<OptimizationResult> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::param("eta", eta, "must lie in (0, 1]"));
    }
    if !(0.0..1.0).contains(&f_min) {
        return Err(Error::param("f_min", f_min, "must lie in [0, 1)"));
    }
    let ps = log_grid(P_RANGE.0, P_RANGE.1, COARSE_P);
    let ss = lin_grid(SIN2_RANGE.0, SIN2_RANGE.1, COARSE_S);
    let (best, best_fidelity) = best_on_grid(&ps, &ss, eta, f_min);
    let mut best = best.ok_or(Error::Infeasible {
        f_min,
        best_fidelity,
    })?;
    let mut grid_points = ps.len() * ss.len();

    // Zoom on the neighbourhood of the incumbent, one coarse cell wide.
    let mut log_half = (P_RANGE.1.ln() - P_RANGE.0.ln()) / (COARSE_P - 1) as f64;
    let mut s_half = (SIN2_RANGE.1 - SIN2_RANGE.0) / (COARSE_S - 1) as f64;
    let mut steps = 0;
    while steps < MAX_REFINEMENTS {
        steps += 1;
        let lp = best.p.ln();
        let p_lo = (lp - log_half).exp().max(P_RANGE.0);
        let p_hi = (lp + log_half).exp().min(P_RANGE.1);
        let s_lo = (best.s - s_half).max(SIN2_RANGE.0);
        let s_hi = (best.s + s_half).min(SIN2_RANGE.1);
        let (cand, _) = best_on_grid(
            &log_grid(p_lo, p_hi, FINE_POINTS),
            &lin_grid(s_lo, s_hi, FINE_POINTS),
            eta,
            f_min,
        );
        grid_points += FINE_POINTS * FINE_POINTS;
        let previous = best.success;
        if let Some(c) = cand {
            if c.success > best.success {
                best = c;
            }
        }
        log_half *= 4.0 / (FINE_POINTS - 1) as f64;
        s_half *= 4.0 / (FINE_POINTS - 1) as f64;
        let gain = (best.success - previous) / best.success.max(f64::MIN_POSITIVE);
        if steps >= 3 && gain < OBJECTIVE_RTOL * 1e-3 {
            break;
        }
    }

    let edge =
        |v: f64, lo: f64, hi: f64| (v - lo).abs() <= 1e-9 * hi || (hi - v).abs() <= 1e-9 * hi;
    let boundary_active =
        edge(best.p, P_RANGE.0, P_RANGE.1) || edge(best.s, SIN2_RANGE.0, SIN2_RANGE.1);
    Ok(OptimizationResult {
        eta,
        f_min,
        p: best.p,
        sin2_theta: best.s,
        cos2_theta: 1.0 - best.s,
        theta: best.s.sqrt().asin(),
        success: best.success,
        fidelity: best.fidelity,
        p_range: P_RANGE,
        sin2_range: SIN2_RANGE,
        grid_points,
        refinement_steps: steps,
        boundary_active,
        constraint_active: best.fidelity - f_min < OBJECTIVE_RTOL * f_min.max(1e-12),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequiredEfficiency {
    /// Largest `p` with `1 − 3p ≥ F_min`.
    pub p: f64,
    pub eta_sfg_min: f64,
}

/// Smallest SFG efficiency reaching `p_target` at fidelity `f_min` with the
/// SFG-based source.
pub fn required_sfg_efficiency(
    p_target: f64,
    f_min: f64,
    eta_c: f64,
    eta_d: f64,
) -> Result<RequiredEfficiency> {
    check_range("p_target", p_target, 0.0, 1.0)?;
    if !(f_min > 0.0 && f_min < 1.0) {
        return Err(Error::param("f_min", f_min, "must lie in (0, 1)"));
    }
    for (name, v) in [("eta_c", eta_c), ("eta_d", eta_d)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::param(name, v, "must lie in (0, 1]"));
        }
    }
    let p = (1.0 - f_min) / 3.0;
    let (_, per_unit) = sfg_swap_figures(p, eta_c, eta_c * eta_d, 1.0);
    Ok(RequiredEfficiency {
        p,
        eta_sfg_min: p_target / per_unit,
    })
}

/// Maps the fidelity of the heralded pair to secret bits per herald.
pub trait KeyFractionModel: Send + Sync {
    fn name(&self) -> &str;
    fn key_fraction(&self, fidelity: f64) -> f64;
}

/// A fixed number of bits per herald.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantKeyFraction(pub f64);

impl KeyFractionModel for ConstantKeyFraction {
    fn name(&self) -> &str {
        "constant"
    }

    fn key_fraction(&self, _fidelity: f64) -> f64 {
        self.0.max(0.0)
    }
}

/// Collective-attack CHSH bound for a Werner state of the given fidelity:
/// `r = 1 − h(Q) − h((1 + √((S/2)² − 1))/2)` with visibility
/// `V = (4F − 1)/3`, `S = 2√2·V` and `Q = (1 − V)/2`.
///
/// Illustrative only; it ignores detection efficiency and finite-size
/// effects.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChshKeyFraction;

fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

impl KeyFractionModel for ChshKeyFraction {
    fn name(&self) -> &str {
        "chsh"
    }

    fn key_fraction(&self, fidelity: f64) -> f64 {
        let v = ((4.0 * fidelity - 1.0) / 3.0).clamp(0.0, 1.0);
        let s = 2.0 * std::f64::consts::SQRT_2 * v;
        if s <= 2.0 {
            return 0.0;
        }
        let q = (1.0 - v) / 2.0;
        let r = 1.0
            - binary_entropy(q)
            - binary_entropy((1.0 + ((s / 2.0).powi(2) - 1.0).sqrt()) / 2.0);
        r.max(0.0)
    }
}

pub fn key_fraction_model(name: &str, constant: Option<f64>) -> Option<Box<dyn KeyFractionModel>> {
    match name {
        "chsh" => Some(Box::new(ChshKeyFraction)),
        "constant" => {
            constant.map(|c| Box::new(ConstantKeyFraction(c)) as Box<dyn KeyFractionModel>)
        }
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkScenario {
    pub distance_km: f64,
    pub atten_db_per_km: f64,
    /// Pulses per second.
    pub rep_rate: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    pub eta_sfg: f64,
    pub p_ab: f64,
    pub p_cd: f64,
    /// Also charge the coupling of Alice's photon `A`.
    pub include_alice_coupling: bool,
}

impl LinkScenario {
    /// 10 km of 0.2 dB/km fiber at 10 GHz, `η_c = 0.9`, `η_d = 0.8`,
    /// `p = 3.7·10⁻²`, `η_SFG = 6·10⁻⁷`.
    pub fn reference() -> Self {
        LinkScenario {
            distance_km: 10.0,
            atten_db_per_km: 0.2,
            rep_rate: 10e9,
            eta_c: 0.9,
            eta_d: 0.8,
            eta_sfg: 6e-7,
            p_ab: 3.7e-2,
            p_cd: 3.7e-2,
            include_alice_coupling: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("distance_km", self.distance_km),
            ("atten_db_per_km", self.atten_db_per_km),
            ("rep_rate", self.rep_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, v, "must be non-negative"));
            }
        }
        for (name, v) in [
            ("eta_c", self.eta_c),
            ("eta_d", self.eta_d),
            ("eta_sfg", self.eta_sfg),
            ("p_ab", self.p_ab),
            ("p_cd", self.p_cd),
        ] {
            check_range(name, v, 0.0, 1.0)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkRate {
    pub herald_probability: f64,
    pub heralds_per_min: f64,
    /// `1 − 3p` at `p = √(p_ab·p_cd)`.
    pub fidelity: f64,
    pub key_fraction: Option<f64>,
    /// Depends on the key-fraction model named in `model`.
    pub bits_per_min: Option<f64>,
    pub model: Option<String>,
}

/// Heralding rate of the SFG-based link: per pulse
/// `½·η_SFG·p_ab·p_cd·T·η_c²·(η_c·η_d)`, with `T` the fiber transmission of
/// photon `B` on its way to the SFG station.
pub fn diqkd_rate(s: &LinkScenario, model: Option<&dyn KeyFractionModel>) -> Result<LinkRate> {
    s.validate()?;
    let t = fiber_transmission(s.distance_km, s.atten_db_per_km)?;
    let mut herald =
        0.5 * s.eta_sfg * s.p_ab * s.p_cd * t * s.eta_c * s.eta_c * (s.eta_c * s.eta_d);
    if s.include_alice_coupling {
        herald *= s.eta_c;
    }
    let heralds_per_min = herald * 60.0 * s.rep_rate;
    let fidelity = 1.0 - 3.0 * (s.p_ab * s.p_cd).sqrt();
    let key_fraction = model.map(|m| m.key_fraction(fidelity));
    Ok(LinkRate {
        herald_probability: herald,
        heralds_per_min,
        fidelity,
        key_fraction,
        bits_per_min: key_fraction.map(|r| r * heralds_per_min),
        model: model.map(|m| m.name().to_owned()),
    })
}
