//! Linear-optical elements and measurement channels.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::fock::accumulate;
use crate::fock::{MixedEnsemble, ModeSet, Occupation, PureState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    /// Click / no-click single-photon detector.
    Threshold,
    NumberResolving,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub kind: DetectorKind,
}

impl DetectorModel {
    pub fn threshold(efficiency: f64) -> Result<Self> {
        check_range("detector efficiency", efficiency, 0.0, 1.0)?;
        Ok(DetectorModel {
            efficiency,
            kind: DetectorKind::Threshold,
        })
    }

    pub fn number_resolving(efficiency: f64) -> Result<Self> {
        check_range("detector efficiency", efficiency, 0.0, 1.0)?;
        Ok(DetectorModel {
            efficiency,
            kind: DetectorKind::NumberResolving,
        })
    }

    pub fn ideal() -> Self {
        DetectorModel {
            efficiency: 1.0,
            kind: DetectorKind::Threshold,
        }
    }

    fn validate(&self, outcome: Outcome) -> Result<()> {
        check_range("detector efficiency", self.efficiency, 0.0, 1.0)?;
        if let (DetectorKind::Threshold, Outcome::Count(n)) = (self.kind, outcome) {
            return Err(Error::param(
                "outcome",
                n as f64,
                "threshold detectors only report click or no-click",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Click,
    NoClick,
    Count(u8),
}

impl Outcome {
    /// Whether an ideal detector seeing `n` photons reports this outcome.
    pub fn accepts(self, n: u8) -> bool {
        match self {
            Outcome::Click => n >= 1,
            Outcome::NoClick => n == 0,
            Outcome::Count(k) => n == k,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Click => write!(f, "click"),
            Outcome::NoClick => write!(f, "no-click"),
            Outcome::Count(n) => write!(f, "count={n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub mode: String,
    pub efficiency: f64,
    pub outcome: Outcome,
}

/// A conditional state, the probability of the detection pattern that
/// produced it, and the pattern itself.
#[derive(Clone, Debug)]
pub struct HeraldedOutcome {
    /// Pattern probability relative to the trace of the input ensemble.
    pub probability: f64,
    /// Unnormalized weight of the accepted branches, in the input's units.
    /// Equals `probability` for a normalized input.
    pub weight: f64,
    /// Unit-trace conditional state (empty when `probability` is zero).
    pub state: MixedEnsemble,
    pub pattern: Vec<DetectionEvent>,
}

const PAIR_ORDER_LIMIT: usize = 64;

fn factorials() -> [f64; PAIR_ORDER_LIMIT] {
    let mut f = [1.0; PAIR_ORDER_LIMIT];
    for i in 1..PAIR_ORDER_LIMIT {
        f[i] = f[i - 1] * i as f64;
    }
    f
}

fn binomial(n: u32, k: u32) -> f64 {
    let f = factorials();
    f[n as usize] / (f[k as usize] * f[(n - k) as usize])
}

/// Two-mode beamsplitter acting on `m1`, `m2`.
///
/// The output modes stored in the slots of `m1` and `m2` are
///
/// ```text
/// o1 = √T·m1 + √(1−T)·e^{iφ}·m2
/// o2 = √(1−T)·m1 − √T·e^{iφ}·m2
/// ```
///
/// so `T = ½, φ = 0` gives `(b+c)/√2` and `(b−c)/√2`, and `T = 1, φ = π`
/// is the identity. Photon number is conserved exactly; components pushed
/// above the per-mode cutoff are counted as truncation.
pub fn beamsplitter(
    state: &PureState,
    m1: &str,
    m2: &str,
    transmittance: f64,
    phase: f64,
) -> Result<PureState> {
    check_range("transmittance", transmittance, 0.0, 1.0)?;
    if m1 == m2 {
        return Err(Error::DuplicateMode(m1.to_owned()));
    }
    let modes = state.modes();
    let i1 = modes.index_of(m1)?;
    let i2 = modes.index_of(m2)?;
    let t = transmittance.sqrt();
    let r = (1.0 - transmittance).sqrt();
    let e = Complex64::from_polar(1.0, phase);
    // Input creation operators in terms of output ones:
    // m1† = u11·o1† + u21·o2†,  m2† = u12·o1† + u22·o2†.
    let u11 = Complex64::new(t, 0.0);
    let u12 = e * r;
    let u21 = Complex64::new(r, 0.0);
    let u22 = -e * t;

    let f = factorials();
    let per_mode = modes.per_mode_cutoff() as u32;
    let mut truncation = state.truncation();
    let mut cache: BTreeMap<(u8, u8), Vec<Complex64>> = BTreeMap::new();
    let mut amps = BTreeMap::new();
    for (occ, amp) in state.iter() {
        let (n1, n2) = (occ.get(i1), occ.get(i2));
        let coeffs = cache.entry((n1, n2)).or_insert_with(|| {
            let (n1, n2) = (n1 as u32, n2 as u32);
            let total = n1 + n2;
            let mut out = vec![Complex64::new(0.0, 0.0); total as usize + 1];
            for k in 0..=n1 {
                for l in 0..=n2 {
                    let c = binomial(n1, k)
                        * binomial(n2, l)
                        * u11.powu(k)
                        * u21.powu(n1 - k)
                        * u12.powu(l)
                        * u22.powu(n2 - l);
                    out[(k + l) as usize] += c;
                }
            }
            let norm_in = (f[n1 as usize] * f[n2 as usize]).sqrt();
            for (m, c) in out.iter_mut().enumerate() {
                *c *= (f[m] * f[(total as usize) - m]).sqrt() / norm_in;
            }
            out
        });
        let total = occ.get(i1) as u32 + occ.get(i2) as u32;
        for (m, c) in coeffs.iter().enumerate() {
            let a = amp * c;
            if a.norm() == 0.0 {
                continue;
            }
            let m = m as u32;
            if m > per_mode || total - m > per_mode {
                truncation.record(a.norm_sqr());
                continue;
            }
            let mut key: Occupation = occ.clone();
            key.counts_mut()[i1] = m as u8;
            key.counts_mut()[i2] = (total - m) as u8;
            accumulate(&mut amps, key, a);
        }
    }
    Ok(PureState::from_parts(modes.clone(), amps, truncation))
}

/// Multiplies each component by `e^{iφ·n}` where `n` is the occupation of `mode`.
pub fn phase_shift(state: &PureState, mode: &str, phase: f64) -> Result<PureState> {
    let idx = state.modes().index_of(mode)?;
    Ok(state.map_diagonal(|k| Complex64::from_polar(1.0, phase * k.get(idx) as f64)))
}

/// Kraus branches of the pure-loss channel on one state: entry `k` is the
/// component in which `k` photons were lost.
fn loss_branches(state: &PureState, idx: usize, eta: f64) -> Vec<PureState> {
    let max_n = state.iter().map(|(k, _)| k.get(idx)).max().unwrap_or(0) as u32;
    let mut out = Vec::with_capacity(max_n as usize + 1);
    for lost in 0..=max_n {
        let mut amps = BTreeMap::new();
        for (occ, amp) in state.iter() {
            let n = occ.get(idx) as u32;
            if n < lost {
                continue;
            }
            let kraus =
                (binomial(n, lost) * eta.powi((n - lost) as i32) * (1.0 - eta).powi(lost as i32))
                    .sqrt();
            if kraus == 0.0 {
                continue;
            }
            let mut key = occ.clone();
            key.counts_mut()[idx] = (n - lost) as u8;
            accumulate(&mut amps, key, amp * kraus);
        }
        out.push(PureState::from_parts(
            state.modes().clone(),
            amps,
            state.truncation(),
        ));
    }
    out
}

/// Each photon in `mode` independently survives with probability `eta`.
pub fn loss(rho: &MixedEnsemble, mode: &str, eta: f64) -> Result<MixedEnsemble> {
    check_range("eta", eta, 0.0, 1.0)?;
    let idx = rho.modes().index_of(mode)?;
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    rho.flat_map_states(rho.modes(), |s| Ok(loss_branches(s, idx, eta)))
}

/// Detects `mode` with `model`, keeping the branches consistent with
/// `outcome`. The detected mode is removed from the returned state.
pub fn detect(
    rho: &MixedEnsemble,
    mode: &str,
    model: DetectorModel,
    outcome: Outcome,
) -> Result<HeraldedOutcome> {
    model.validate(outcome)?;
    let input_trace = rho.trace();
    let lossy = loss(rho, mode, model.efficiency)?;
    let (modes, parts) = lossy.split_by(mode)?;
    let mut kept = MixedEnsemble::empty(&modes);
    for (n, part) in parts {
        if outcome.accepts(n) {
            kept.extend(part)?;
        }
    }
    let event = DetectionEvent {
        mode: mode.to_owned(),
        efficiency: model.efficiency,
        outcome,
    };
    Ok(finish(kept, &modes, input_trace, vec![event]))
}

fn finish(
    kept: MixedEnsemble,
    modes: &ModeSet,
    input_trace: f64,
    pattern: Vec<DetectionEvent>,
) -> HeraldedOutcome {
    let weight = kept.trace();
    if weight <= 0.0 || input_trace <= 0.0 {
        return HeraldedOutcome {
            probability: 0.0,
            weight: 0.0,
            state: MixedEnsemble::empty(modes),
            pattern,
        };
    }
    HeraldedOutcome {
        probability: (weight / input_trace).min(1.0),
        weight,
        state: kept.normalized().expect("positive trace"),
        pattern,
    }
}

/// Joint detection pattern over several modes.
///
/// A mode listed twice is detected once with the intersection of the two
/// outcomes; contradictory requests give probability zero.
pub fn condition_joint(
    rho: &MixedEnsemble,
    patterns: &[(&str, DetectorModel, Outcome)],
) -> Result<HeraldedOutcome> {
    let input_trace = rho.trace();
    let mut grouped: Vec<(&str, DetectorModel, Vec<Outcome>)> = Vec::new();
    for &(mode, model, outcome) in patterns {
        model.validate(outcome)?;
        rho.modes().index_of(mode)?;
        match grouped.iter_mut().find(|(m, _, _)| *m == mode) {
            Some((_, existing, outcomes)) => {
                if *existing != model {
                    return Err(Error::param(
                        "detector efficiency",
                        model.efficiency,
                        format!("mode `{mode}` listed twice with different detectors"),
                    ));
                }
                outcomes.push(outcome);
            }
            None => grouped.push((mode, model, vec![outcome])),
        }
    }
    let pattern: Vec<DetectionEvent> = patterns
        .iter()
        .map(|&(mode, model, outcome)| DetectionEvent {
            mode: mode.to_owned(),
            efficiency: model.efficiency,
            outcome,
        })
        .collect();

    let mut current = rho.clone();
    for (mode, model, outcomes) in grouped {
        let lossy = loss(&current, mode, model.efficiency)?;
        let (modes, parts) = lossy.split_by(mode)?;
        let mut kept = MixedEnsemble::empty(&modes);
        for (n, part) in parts {
            if outcomes.iter().all(|o| o.accepts(n)) {
                kept.extend(part)?;
            }
        }
        current = kept;
    }
    let modes = current.modes().clone();
    Ok(finish(current, &modes, input_trace, pattern))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    const EPS: f64 = 1e-12;

    fn two() -> ModeSet {
        ModeSet::new(["m1", "m2"], 4, 4).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn single_photon_splits_evenly() {
        let s = PureState::basis(&two(), &[("m1", 1)]).unwrap();
        let out = beamsplitter(&s, "m1", "m2", 0.5, 0.0).unwrap();
        assert!((out.amplitude(&[1, 0]) - c(FRAC_1_SQRT_2)).norm() < EPS);
        assert!((out.amplitude(&[0, 1]) - c(FRAC_1_SQRT_2)).norm() < EPS);
    }

    #[test]
    fn second_port_picks_up_the_minus_sign() {
        let s = PureState::basis(&two(), &[("m2", 1)]).unwrap();
        let out = beamsplitter(&s, "m1", "m2", 0.5, 0.0).unwrap();
        assert!((out.amplitude(&[1, 0]) - c(FRAC_1_SQRT_2)).norm() < EPS);
        assert!((out.amplitude(&[0, 1]) + c(FRAC_1_SQRT_2)).norm() < EPS);
    }

    #[test]
    fn hong_ou_mandel() {
        let s = PureState::basis(&two(), &[("m1", 1), ("m2", 1)]).unwrap();
        let out = beamsplitter(&s, "m1", "m2", 0.5, 0.0).unwrap();
        assert_eq!(out.amplitude(&[1, 1]), c(0.0));
        assert!((out.amplitude(&[2, 0]) - c(FRAC_1_SQRT_2)).norm() < EPS);
        assert!((out.amplitude(&[0, 2]) + c(FRAC_1_SQRT_2)).norm() < EPS);
    }

    #[test]
    fn full_transmission_is_identity() {
        let m = two();
        let s = PureState::from_amplitudes(
            &m,
            [(vec![1, 2], c(0.6)), (vec![0, 1], Complex64::new(0.0, 0.8))],
        )
        .unwrap();
        let out = beamsplitter(&s, "m1", "m2", 1.0, PI).unwrap();
        assert!((out.inner(&s).unwrap() - c(1.0)).norm() < EPS);
        // Without the phase the second port only picks up (−1)^n.
        let flipped = beamsplitter(&s, "m1", "m2", 1.0, 0.0).unwrap();
        assert!((flipped.inner(&s).unwrap().norm() - 1.0).abs() > 0.1);
        let fixed = phase_shift(&flipped, "m2", PI).unwrap();
        assert!((fixed.inner(&s).unwrap() - c(1.0)).norm() < EPS);
    }

    #[test]
    fn beamsplitter_argument_errors() {
        let s = PureState::vacuum(&two());
        assert!(beamsplitter(&s, "m1", "m1", 0.5, 0.0).is_err());
        assert!(beamsplitter(&s, "m1", "zz", 0.5, 0.0).is_err());
        assert!(beamsplitter(&s, "m1", "m2", 1.5, 0.0).is_err());
    }

    #[test]
    fn loss_binomial_examples() {
        let m = ModeSet::new(["a"], 3, 3).unwrap();
        let one = MixedEnsemble::pure(PureState::basis(&m, &[("a", 1)]).unwrap());
        let out = loss(&one, "a", 0.6).unwrap();
        assert!((out.weight_where(|k| k.get(0) == 1) - 0.6).abs() < EPS);
        assert!((out.weight_where(|k| k.get(0) == 0) - 0.4).abs() < EPS);

        let eta: f64 = 0.7;
        let two = MixedEnsemble::pure(PureState::basis(&m, &[("a", 2)]).unwrap());
        let out = loss(&two, "a", eta).unwrap();
        assert!((out.weight_where(|k| k.get(0) == 2) - eta * eta).abs() < EPS);
        assert!((out.weight_where(|k| k.get(0) == 1) - 2.0 * eta * (1.0 - eta)).abs() < EPS);
        assert!((out.weight_where(|k| k.get(0) == 0) - (1.0 - eta).powi(2)).abs() < EPS);

        let same = loss(&two, "a", 1.0).unwrap();
        assert!(same.max_density_difference(&two).unwrap() < EPS);
    }

    #[test]
    fn detect_examples() {
        let m = ModeSet::new(["a", "x"], 3, 3).unwrap();
        let one = MixedEnsemble::pure(PureState::basis(&m, &[("a", 1)]).unwrap());
        let h = detect(
            &one,
            "a",
            DetectorModel::threshold(0.8).unwrap(),
            Outcome::Click,
        )
        .unwrap();
        assert!((h.probability - 0.8).abs() < EPS);
        assert_eq!(h.state.modes().labels(), &["x"]);
        assert!((h.state.trace() - 1.0).abs() < 1e-9);

        let vac = MixedEnsemble::pure(PureState::vacuum(&m));
        let h = detect(&vac, "a", DetectorModel::ideal(), Outcome::Click).unwrap();
        assert_eq!(h.probability, 0.0);
        assert!(h.state.is_empty());
    }

    #[test]
    fn threshold_detector_rejects_counts() {
        let m = ModeSet::new(["a", "x"], 3, 3).unwrap();
        let vac = MixedEnsemble::pure(PureState::vacuum(&m));
        assert!(detect(&vac, "a", DetectorModel::ideal(), Outcome::Count(1)).is_err());
    }

    #[test]
    fn hom_pair_never_gives_coincidences() {
        let m = ModeSet::new(["m1", "m2", "x"], 4, 4).unwrap();
        let s = PureState::basis(&m, &[("m1", 1), ("m2", 1)]).unwrap();
        let out = MixedEnsemble::pure(beamsplitter(&s, "m1", "m2", 0.5, 0.0).unwrap());
        let ideal = DetectorModel::ideal();
        let h = condition_joint(
            &out,
            &[("m1", ideal, Outcome::Click), ("m2", ideal, Outcome::Click)],
        )
        .unwrap();
        assert_eq!(h.probability, 0.0);
    }

    #[test]
    fn measuring_every_mode_leaves_a_scalar() {
        let m = ModeSet::new(["m1", "m2"], 4, 4).unwrap();
        let s = PureState::basis(&m, &[("m1", 1), ("m2", 1)]).unwrap();
        let out = MixedEnsemble::pure(beamsplitter(&s, "m1", "m2", 0.5, 0.0).unwrap());
        let ideal = DetectorModel::ideal();
        let h = condition_joint(
            &out,
            &[("m1", ideal, Outcome::Click), ("m2", ideal, Outcome::Click)],
        )
        .unwrap();
        assert_eq!(h.probability, 0.0);
        let h = condition_joint(
            &out,
            &[
                ("m1", ideal, Outcome::Click),
                ("m2", ideal, Outcome::NoClick),
            ],
        )
        .unwrap();
        assert!((h.probability - 0.5).abs() < EPS);
        assert!(h.state.modes().is_empty());
        assert!((h.state.trace() - 1.0).abs() < EPS);
    }

    #[test]
    fn joint_conditioning_edge_cases() {
        let m = ModeSet::new(["a", "b"], 3, 3).unwrap();
        let s =
            PureState::from_amplitudes(&m, [(vec![1, 0], c(0.6)), (vec![0, 1], c(0.8))]).unwrap();
        let rho = MixedEnsemble::pure(s);
        let h = condition_joint(&rho, &[]).unwrap();
        assert!((h.probability - 1.0).abs() < EPS);
        assert!(h.state.max_density_difference(&rho).unwrap() < EPS);

        let ideal = DetectorModel::ideal();
        let h = condition_joint(
            &rho,
            &[("a", ideal, Outcome::Click), ("a", ideal, Outcome::NoClick)],
        )
        .unwrap();
        assert_eq!(h.probability, 0.0);
    }
}
