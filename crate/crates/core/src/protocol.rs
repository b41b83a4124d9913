//! End-to-end swapping protocols simulated in the truncated Fock space.
//!
//! Two sources emit into `(a, b)` and `(c, d)`. The Bell measurement acts on
//! `b` and `c`; the heralded state of `a` and `d` is compared with the ideal
//! maximally entangled pair.
//!
//! Source weights are used as printed (vacuum weight one per source), so
//! `probability` fields are absolute pattern probabilities to the
//! perturbative order kept. Joint emissions with more than
//! `total_cutoff / 2` pairs are dropped before any evolution, which keeps
//! the Fock truncation counter at zero.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::fock::{MixedEnsemble, ModeSet, PureState, Truncation};
use crate::optics::{self, condition_joint, DetectorModel, Outcome};
use crate::sfg::{bell_measure_sfg, SfgLosses, SfgParams};
use crate::spdc::{timebin_pair, SourceSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub per_mode_cutoff: u8,
    pub total_cutoff: u8,
    /// Pair-number cutoff of each source.
    pub max_pairs: u8,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            per_mode_cutoff: 6,
            total_cutoff: 6,
            max_pairs: 2,
        }
    }
}

impl TruncationConfig {
    /// Largest number of pairs kept across both sources.
    pub fn max_total_pairs(&self) -> u32 {
        self.total_cutoff as u32 / 2
    }
}

/// Joint state of two sources, keeping emissions with at most
/// `max_total_pairs` pairs in total.
///
/// Coherent sources keep their pair-number coherences across the kept
/// sectors.
pub fn joint_sources(
    ab: &SourceSpec,
    cd: &SourceSpec,
    truncation: &TruncationConfig,
) -> Result<MixedEnsemble> {
    let (pm, tc) = (truncation.per_mode_cutoff, truncation.total_cutoff);
    let rho_ab = timebin_pair(ab, &ab.mode_set(pm, tc)?)?;
    let rho_cd = timebin_pair(cd, &cd.mode_set(pm, tc)?)?;
    let modes = rho_ab.modes().union(rho_cd.modes())?;
    let cap = 2 * truncation.max_total_pairs();

    let sectors = |rho: &MixedEnsemble| -> Vec<Vec<(u32, PureState)>> {
        rho.branches()
            .iter()
            .map(|b| {
                let amp = Complex64::new(b.weight.sqrt(), 0.0);
                b.state
                    .photon_sectors()
                    .into_iter()
                    .map(|(n, s)| (n, s.scaled(amp)))
                    .collect()
            })
            .collect()
    };
    let left = sectors(&rho_ab);
    let right = sectors(&rho_cd);

    let mut out = MixedEnsemble::empty(&modes);
    for l in &left {
        for r in &right {
            let mut joint = PureState::zero(&modes);
            for (nl, sl) in l {
                for (nr, sr) in r {
                    if nl + nr <= cap {
                        joint = joint.add(&sl.tensor(sr)?)?;
                    }
                }
            }
            out.push(1.0, joint)?;
        }
    }
    Ok(out.mark_unnormalized())
}

/// `(x_e† y_e† + sign · x_l† y_l†)/√2 |0⟩`.
pub fn timebin_bell_state(
    modes: &ModeSet,
    first: (&str, &str),
    second: (&str, &str),
    sign: f64,
) -> Result<PureState> {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let one = PureState::basis(modes, &[(first.0, 1), (first.1, 1)])?;
    let two = PureState::basis(modes, &[(second.0, 1), (second.1, 1)])?;
    one.scaled(h).add(&two.scaled(h * sign))
}

fn check_pair_probability(name: &'static str, p: f64) -> Result<()> {
    check_range(name, p, 0.0, crate::spdc::MAX_PAIR_PROBABILITY)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSwapSetup {
    pub p_ab: f64,
    pub p_cd: f64,
    pub detector: DetectorModel,
    pub truncation: TruncationConfig,
    pub coherent_sources: bool,
}

impl LinearSwapSetup {
    pub fn new(p_ab: f64, p_cd: f64) -> Self {
        LinearSwapSetup {
            p_ab,
            p_cd,
            detector: DetectorModel::ideal(),
            truncation: TruncationConfig::default(),
            coherent_sources: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LinearSwapResult {
    /// Probability of the `δ_e`/`δ̄_l` coincidence.
    pub probability: f64,
    /// Same, relative to the normalized source states.
    pub probability_normalized: f64,
    /// Fidelity of the heralded `a, d` state with `(a_e†d_l† − a_l†d_e†)/√2`.
    pub fidelity: f64,
    /// Absolute weight of the heralded component with two `a` photons.
    pub w_aa: f64,
    pub w_dd: f64,
    /// Absolute weight of the target component (`probability · fidelity`).
    pub w_signal: f64,
    pub truncation: Truncation,
    pub state: MixedEnsemble,
}

pub const DELTA_E: &str = "delta_e";
pub const DELTA_L: &str = "delta_l";
pub const DELTABAR_E: &str = "deltabar_e";
pub const DELTABAR_L: &str = "deltabar_l";

/// Linear-optics Bell measurement: 50/50 beamsplitters on `(b_e, c_e)` and
/// `(b_l, c_l)`, coincidence of `δ_e` and `δ̄_l`.
pub fn simulate_linear_swap(setup: &LinearSwapSetup) -> Result<LinearSwapResult> {
    check_pair_probability("p_ab", setup.p_ab)?;
    check_pair_probability("p_cd", setup.p_cd)?;
    let ab = SourceSpec::new(setup.p_ab, "a", "b")
        .with_max_pairs(setup.truncation.max_pairs)
        .coherent(setup.coherent_sources);
    let cd = SourceSpec::new(setup.p_cd, "c", "d")
        .with_max_pairs(setup.truncation.max_pairs)
        .coherent(setup.coherent_sources);
    let joint = joint_sources(&ab, &cd, &setup.truncation)?;

    let mixed = joint.map_states(|s| {
        let s = optics::beamsplitter(s, "b_e", "c_e", 0.5, 0.0)?;
        let s = optics::beamsplitter(&s, "b_l", "c_l", 0.5, 0.0)?;
        s.relabel("b_e", DELTA_E)?
            .relabel("c_e", DELTABAR_E)?
            .relabel("b_l", DELTA_L)?
            .relabel("c_l", DELTABAR_L)
    })?;
    let truncation = mixed.truncation();

    let d = setup.detector;
    let herald = condition_joint(
        &mixed,
        &[
            (DELTA_E, d, Outcome::Click),
            (DELTABAR_L, d, Outcome::Click),
        ],
    )?;
    if herald.weight == 0.0 {
        return Err(Error::ZeroTrace);
    }
    let state = herald.state.branch_trace(&[DELTA_L, DELTABAR_E])?;
    let target = timebin_bell_state(state.modes(), ("a_e", "d_l"), ("a_l", "d_e"), -1.0)?;
    let fidelity = state.fidelity(&target)?;

    let ia = [
        state.modes().index_of("a_e")?,
        state.modes().index_of("a_l")?,
    ];
    let id = [
        state.modes().index_of("d_e")?,
        state.modes().index_of("d_l")?,
    ];
    let count = |k: &crate::fock::Occupation, idx: [usize; 2]| k.get(idx[0]) + k.get(idx[1]);
    let w_aa = herald.weight * state.weight_where(|k| count(k, ia) == 2 && count(k, id) == 0);
    let w_dd = herald.weight * state.weight_where(|k| count(k, ia) == 0 && count(k, id) == 2);

    Ok(LinearSwapResult {
        probability: herald.weight,
        probability_normalized: herald.probability,
        fidelity,
        w_aa,
        w_dd,
        w_signal: herald.weight * fidelity,
        truncation,
        state,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfgSwapSetup {
    pub p_ab: f64,
    pub p_cd: f64,
    /// SFG coupling `ατ`; `η_SFG = g²`.
    pub g: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    pub truncation: TruncationConfig,
    pub coherent_sources: bool,
}

impl SfgSwapSetup {
    pub fn new(p_ab: f64, p_cd: f64, g: f64) -> Self {
        SfgSwapSetup {
            p_ab,
            p_cd,
            g,
            eta_c: 1.0,
            eta_d: 1.0,
            truncation: TruncationConfig::default(),
            coherent_sources: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SfgSwapResult {
    /// Probability of exactly one `κ_±` click (both outcomes).
    pub probability: f64,
    pub probability_plus: f64,
    pub probability_minus: f64,
    pub probability_normalized: f64,
    /// Fidelity with `(a_e†d_e† − a_l†d_l†)/√2` after the `κ_−` correction.
    pub fidelity: f64,
    /// Fidelity of the `κ_+` herald alone.
    pub fidelity_plus: f64,
    pub truncation: Truncation,
    pub state: MixedEnsemble,
}

/// SFG Bell measurement on `b`, `c`, heralding an `a, d` pair.
pub fn simulate_sfg_swap(setup: &SfgSwapSetup) -> Result<SfgSwapResult> {
    check_pair_probability("p_ab", setup.p_ab)?;
    check_pair_probability("p_cd", setup.p_cd)?;
    check_range("eta_c", setup.eta_c, 0.0, 1.0)?;
    check_range("eta_d", setup.eta_d, 0.0, 1.0)?;
    let tc = &setup.truncation;
    let ab = SourceSpec::new(setup.p_ab, "a", "b")
        .with_max_pairs(tc.max_pairs)
        .coherent(setup.coherent_sources);
    let cd = SourceSpec::new(setup.p_cd, "c", "d")
        .with_max_pairs(tc.max_pairs)
        .coherent(setup.coherent_sources);
    let joint = joint_sources(&ab, &cd, tc)?;
    let kappa = MixedEnsemble::pure(PureState::vacuum(&ModeSet::new(
        ["k_e", "k_l"],
        tc.per_mode_cutoff,
        tc.total_cutoff,
    )?));
    let input = joint.tensor(&kappa)?;

    let params = SfgParams::with_coupling(setup.g);
    let losses = SfgLosses::from_coupling_and_detector(setup.eta_c, setup.eta_d);
    let bell = bell_measure_sfg(&input, &params, losses)?;
    let combined = &bell.combined;
    if combined.weight == 0.0 {
        return Ok(SfgSwapResult {
            probability: 0.0,
            probability_plus: 0.0,
            probability_minus: 0.0,
            probability_normalized: 0.0,
            fidelity: 0.0,
            fidelity_plus: 0.0,
            truncation: bell.truncation,
            state: combined.state.clone(),
        });
    }
    let bc = ["b_e", "b_l", "c_e", "c_l"];
    let state = combined.state.branch_trace(&bc)?;
    let target = timebin_bell_state(state.modes(), ("a_e", "d_e"), ("a_l", "d_l"), -1.0)?;
    let fidelity = state.fidelity(&target)?;
    let fidelity_plus = if bell.plus.weight > 0.0 {
        bell.plus.state.branch_trace(&bc)?.fidelity(&target)?
    } else {
        0.0
    };
    Ok(SfgSwapResult {
        probability: combined.weight,
        probability_plus: bell.plus.weight,
        probability_minus: bell.minus.weight,
        probability_normalized: combined.probability,
        fidelity,
        fidelity_plus,
        truncation: bell.truncation,
        state,
    })
}

/// Least-squares fits of `1 − F` against `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// `c` in `F = 1 − c·p` (fit through the origin).
    pub linear: f64,
    /// `(c, d)` in `F = 1 − c·p − d·p²`.
    pub quadratic: (f64, f64),
}

pub fn fit_fidelity_slope(points: &[(f64, f64)]) -> SlopeFit {
    let (mut s2, mut s3, mut s4, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(p, f) in points {
        let y = 1.0 - f;
        s2 += p * p;
        s3 += p * p * p;
        s4 += p * p * p * p;
        y1 += p * y;
        y2 += p * p * y;
    }
    let linear = y1 / s2;
    let det = s2 * s4 - s3 * s3;
    let quadratic = if det.abs() > 0.0 {
        ((y1 * s4 - y2 * s3) / det, (s2 * y2 - s3 * y1) / det)
    } else {
        (linear, 0.0)
    };
    SlopeFit { linear, quadratic }
}
