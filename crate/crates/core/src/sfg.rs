//! Sum-frequency generation and the SFG-based Bell measurement.
//!
//! The interaction couples time-coincident `b` and `c` photons to a single
//! `κ` photon:
//!
//! ```text
//! H = iα(κ_e† b_e c_e − κ_l† b_l c_l) + h.c.,   g = ατ,   η_SFG = g²
//! ```
//!
//! `exp(−iHτ) = exp(g·(A_e − A_e†)) · exp(−g·(A_l − A_l†))` with
//! `A = κ†bc`. Each factor preserves `n_b + n_κ` and `n_c + n_κ`, so it acts
//! on short chains `|N_b−j, N_c−j, j⟩` and is exponentiated exactly there.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::fock::{accumulate, MixedEnsemble, Occupation, PureState, Truncation};
use crate::optics::{self, condition_joint, DetectorModel, HeraldedOutcome, Outcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfgParams {
    /// Dimensionless coupling `ατ`.
    pub g: f64,
    pub b: (String, String),
    pub c: (String, String),
    pub kappa: (String, String),
    /// Labels given to `(κ_e ± κ_l)/√2` after the eraser.
    pub kappa_plus: String,
    pub kappa_minus: String,
    /// Mode receiving the π phase that maps the `κ_−` herald onto the
    /// `κ_+` one.
    pub feed_forward_mode: String,
    pub detector: DetectorModel,
}

impl Default for SfgParams {
    fn default() -> Self {
        SfgParams {
            g: 0.0,
            b: ("b_e".into(), "b_l".into()),
            c: ("c_e".into(), "c_l".into()),
            kappa: ("k_e".into(), "k_l".into()),
            kappa_plus: "k_p".into(),
            kappa_minus: "k_m".into(),
            feed_forward_mode: "d_l".into(),
            detector: DetectorModel::ideal(),
        }
    }
}

impl SfgParams {
    pub fn with_coupling(g: f64) -> Self {
        SfgParams {
            g,
            ..Default::default()
        }
    }

    /// Coupling for a given conversion efficiency, `g = √η_SFG`.
    pub fn with_efficiency(eta_sfg: f64) -> Result<Self> {
        check_range("eta_sfg", eta_sfg, 0.0, 1.0)?;
        Ok(Self::with_coupling(eta_sfg.sqrt()))
    }

    pub fn efficiency(&self) -> f64 {
        self.g * self.g
    }

    fn validate(&self) -> Result<()> {
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::param(
                "g",
                self.g,
                "coupling must be finite and non-negative",
            ));
        }
        Ok(())
    }

    /// `(b, c, κ, sign)` for the early and late interaction terms.
    fn channels(&self) -> [(&str, &str, &str, f64); 2] {
        [
            (&self.b.0, &self.c.0, &self.kappa.0, 1.0),
            (&self.b.1, &self.c.1, &self.kappa.1, -1.0),
        ]
    }
}

/// `exp(A)` for a small dense real matrix (row-major) by scaling and
/// squaring of the Taylor series; terms are summed until their largest
/// entry falls below 1e-16.
fn expm_real(a: &[f64], n: usize) -> Vec<f64> {
    let matmul = |x: &[f64], y: &[f64]| {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let xik = x[i * n + k];
                if xik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += xik * y[k * n + j];
                }
            }
        }
        out
    };
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings as i32);
    let scaled: Vec<f64> = a.iter().map(|x| x * scale).collect();

    let mut result = vec![0.0; n * n];
    let mut term = vec![0.0; n * n];
    for i in 0..n {
        result[i * n + i] = 1.0;
        term[i * n + i] = 1.0;
    }
    for k in 1..64 {
        term = matmul(&term, &scaled);
        for x in term.iter_mut() {
            *x /= k as f64;
        }
        let biggest = term.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
        if biggest < 1e-16 {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Exact `exp(s·g·(κ†bc − b†c†κ))` on the truncated space.
fn evolve_channel(
    state: &PureState,
    b: &str,
    c: &str,
    kappa: &str,
    sign: f64,
    g: f64,
) -> Result<PureState> {
    let modes = state.modes();
    let (ib, ic, ik) = (
        modes.index_of(b)?,
        modes.index_of(c)?,
        modes.index_of(kappa)?,
    );
    let per_mode = modes.per_mode_cutoff() as u32;
    let total_cap = modes.total_cutoff() as u32;

    // Group components by (other modes, N_b = n_b+n_κ, N_c = n_c+n_κ).
    let mut groups: BTreeMap<Occupation, BTreeMap<u32, Complex64>> = BTreeMap::new();
    for (occ, amp) in state.iter() {
        let nk = occ.get(ik);
        let mut key = occ.clone();
        let counts = key.counts_mut();
        counts[ib] += nk;
        counts[ic] += nk;
        counts[ik] = 0;
        groups.entry(key).or_default().insert(nk as u32, *amp);
    }

    let mut truncation = state.truncation();
    let mut cache: BTreeMap<(u32, u32, u32, u32), Vec<f64>> = BTreeMap::new();
    let mut amps = BTreeMap::new();
    for (key, chain_amps) in groups {
        let nb = key.get(ib) as u32;
        let nc = key.get(ic) as u32;
        let base = key.total();
        // Chain index j: (n_b, n_c, n_κ) = (nb−j, nc−j, j), total = base − j.
        let j_max = nb.min(nc);
        let admissible = |j: u32| {
            nb - j <= per_mode && nc - j <= per_mode && j <= per_mode && base - j <= total_cap
        };
        let lo = (0..=j_max).find(|&j| admissible(j));
        let Some(lo) = lo else {
            continue;
        };
        let hi = (lo..=j_max)
            .take_while(|&j| admissible(j))
            .last()
            .unwrap_or(lo);
        if lo > 0 || hi < j_max {
            let w: f64 = chain_amps.values().map(|a| a.norm_sqr()).sum();
            truncation.record(w);
        }
        let dim = (hi - lo + 1) as usize;
        let prop = cache.entry((nb, nc, lo, hi)).or_insert_with(|| {
            let mut gen = vec![0.0; dim * dim];
            for j in lo..hi {
                // ⟨j+1|κ†bc|j⟩ = √((nb−j)(nc−j)(j+1))
                let t = (((nb - j) * (nc - j) * (j + 1)) as f64).sqrt() * sign * g;
                let r = (j - lo) as usize;
                gen[(r + 1) * dim + r] = t;
                gen[r * dim + r + 1] = -t;
            }
            expm_real(&gen, dim)
        });
        for (&j_in, amp) in &chain_amps {
            if j_in < lo || j_in > hi {
                continue;
            }
            let col = (j_in - lo) as usize;
            for row in 0..dim {
                let u = prop[row * dim + col];
                if u == 0.0 {
                    continue;
                }
                let j = lo + row as u32;
                let mut occ = key.clone();
                let counts = occ.counts_mut();
                counts[ib] = (nb - j) as u8;
                counts[ic] = (nc - j) as u8;
                counts[ik] = j as u8;
                accumulate(&mut amps, occ, amp * u);
            }
        }
    }
    Ok(
        PureState::from_parts(modes.clone(), amps, Truncation::default())
            .with_truncation(truncation),
    )
}

/// Applies `exp(−iHτ)` exactly.
pub fn sfg_evolve(state: &PureState, params: &SfgParams) -> Result<PureState> {
    params.validate()?;
    let mut out = state.clone();
    for (b, c, k, sign) in params.channels() {
        out = evolve_channel(&out, b, c, k, sign, params.g)?;
    }
    Ok(out)
}

/// First-order expansion `(1 − iHτ)|ψ⟩`, built from ladder operators.
/// Used to cross-check the exact propagator.
pub fn sfg_first_order(state: &PureState, params: &SfgParams) -> Result<PureState> {
    params.validate()?;
    let mut out = state.clone();
    for (b, c, k, sign) in params.channels() {
        let up = state.annihilate(c)?.annihilate(b)?.create(k)?;
        let down = state.annihilate(k)?.create(c)?.create(b)?;
        let gen = up.add(&down.scaled(Complex64::new(-1.0, 0.0)))?;
        out = out.add(&gen.scaled(Complex64::new(sign * params.g, 0.0)))?;
    }
    Ok(out)
}

/// Which-time eraser: 50/50 mixing of `κ_e`, `κ_l` into
/// `κ_± = (κ_e ± κ_l)/√2`, relabeled `kappa_plus` / `kappa_minus`.
pub fn eraser(state: &PureState, params: &SfgParams) -> Result<PureState> {
    let (ke, kl) = (&params.kappa.0, &params.kappa.1);
    optics::beamsplitter(state, ke, kl, 0.5, 0.0)?
        .relabel(ke, &params.kappa_plus)?
        .relabel(kl, &params.kappa_minus)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfgLosses {
    /// Coupling efficiency of the `b` and `c` photons into the crystal.
    pub eta_c: f64,
    /// Overall detection efficiency of the `κ` photon (`η_c·η_d`).
    pub eta_kappa: f64,
}

impl SfgLosses {
    pub fn ideal() -> Self {
        SfgLosses {
            eta_c: 1.0,
            eta_kappa: 1.0,
        }
    }

    pub fn from_coupling_and_detector(eta_c: f64, eta_d: f64) -> Self {
        SfgLosses {
            eta_c,
            eta_kappa: eta_c * eta_d,
        }
    }
}

/// Outcome of the SFG Bell measurement.
#[derive(Clone, Debug)]
pub struct SfgBellResult {
    /// One click in `κ_+`, none in `κ_−`.
    pub plus: HeraldedOutcome,
    /// One click in `κ_−`, none in `κ_+` (state before the phase correction).
    pub minus: HeraldedOutcome,
    /// Mode and phase applied to the `κ_−` branch.
    pub feed_forward: (String, f64),
    /// Both heralds merged after correcting `κ_−`.
    pub combined: HeraldedOutcome,
    pub truncation: Truncation,
}

/// Coupling loss on `b`, `c` → SFG → eraser → exactly one click across
/// `κ_±`. The input must already contain the `κ` modes.
pub fn bell_measure_sfg(
    rho: &MixedEnsemble,
    params: &SfgParams,
    losses: SfgLosses,
) -> Result<SfgBellResult> {
    params.validate()?;
    check_range("eta_c", losses.eta_c, 0.0, 1.0)?;
    check_range("eta_kappa", losses.eta_kappa, 0.0, 1.0)?;

    let mut lossy = rho.clone();
    for mode in [&params.b.0, &params.b.1, &params.c.0, &params.c.1] {
        lossy = optics::loss(&lossy, mode, losses.eta_c)?;
    }
    let evolved = lossy.map_states(|s| eraser(&sfg_evolve(s, params)?, params))?;
    let truncation = evolved.truncation();

    let detector = DetectorModel {
        efficiency: params.detector.efficiency * losses.eta_kappa,
        kind: params.detector.kind,
    };
    let (kp, km) = (params.kappa_plus.as_str(), params.kappa_minus.as_str());
    let plus = condition_joint(
        &evolved,
        &[
            (kp, detector, Outcome::Click),
            (km, detector, Outcome::NoClick),
        ],
    )?;
    let minus = condition_joint(
        &evolved,
        &[
            (kp, detector, Outcome::NoClick),
            (km, detector, Outcome::Click),
        ],
    )?;

    let phase = std::f64::consts::PI;
    let ff_mode = params.feed_forward_mode.clone();
    let corrected = if minus.state.is_empty() {
        minus.state.clone()
    } else {
        minus
            .state
            .map_states(|s| optics::phase_shift(s, &ff_mode, phase))?
    };
    let mut merged = plus.state.scaled(plus.weight);
    merged.extend(corrected.scaled(minus.weight))?;
    let weight = plus.weight + minus.weight;
    let mut pattern = plus.pattern.clone();
    pattern.extend(minus.pattern.iter().cloned());
    let combined = HeraldedOutcome {
        probability: plus.probability + minus.probability,
        weight,
        state: if weight > 0.0 {
            merged.normalized()?
        } else {
            merged
        },
        pattern,
    };
    Ok(SfgBellResult {
        plus,
        minus,
        feed_forward: (ff_mode, phase),
        combined,
        truncation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ModeSet;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn six() -> ModeSet {
        ModeSet::new(["b_e", "b_l", "c_e", "c_l", "k_e", "k_l"], 4, 6).unwrap()
    }

    #[test]
    fn expm_of_rotation_generator() {
        let theta: f64 = 0.7;
        let u = expm_real(&[0.0, -theta, theta, 0.0], 2);
        assert!((u[0] - theta.cos()).abs() < 1e-15);
        assert!((u[1] + theta.sin()).abs() < 1e-15);
        assert!((u[2] - theta.sin()).abs() < 1e-15);
    }

    #[test]
    fn two_level_rabi_oscillation() {
        // In {|1,1,0⟩, |0,0,1⟩} the generator is g·[[0,−1],[1,0]], so
        // |110⟩ → cos g |110⟩ + sin g |001⟩.
        let m = six();
        let input = PureState::basis(&m, &[("b_e", 1), ("c_e", 1)]).unwrap();
        for g in [0.01, 0.3, 1.0, FRAC_PI_2] {
            let out = sfg_evolve(&input, &SfgParams::with_coupling(g)).unwrap();
            assert!((out.amplitude(&[1, 0, 1, 0, 0, 0]).re - g.cos()).abs() < 1e-13);
            assert!((out.amplitude(&[0, 0, 0, 0, 1, 0]).re - g.sin()).abs() < 1e-13);
            assert!(out.truncation().is_zero());
        }
    }

    #[test]
    fn late_channel_has_opposite_sign() {
        let m = six();
        let input = PureState::basis(&m, &[("b_l", 1), ("c_l", 1)]).unwrap();
        let g = 0.2;
        let out = sfg_evolve(&input, &SfgParams::with_coupling(g)).unwrap();
        assert!((out.amplitude(&[0, 0, 0, 0, 0, 1]).re + g.sin()).abs() < 1e-13);
    }

    #[test]
    fn small_coupling_converts_with_probability_g_squared() {
        let m = six();
        let input = PureState::basis(&m, &[("b_e", 1), ("c_e", 1)]).unwrap();
        let g: f64 = 1e-3;
        let out = sfg_evolve(&input, &SfgParams::with_coupling(g)).unwrap();
        let conv = out.amplitude(&[0, 0, 0, 0, 1, 0]).norm_sqr();
        assert!((conv - g * g).abs() < g.powi(4));
    }

    #[test]
    fn cross_time_photons_do_not_convert() {
        let m = six();
        let input = PureState::basis(&m, &[("b_e", 1), ("c_l", 1)]).unwrap();
        let out = sfg_evolve(&input, &SfgParams::with_coupling(0.8)).unwrap();
        assert!((out.inner(&input).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn same_mode_pair_does_not_convert() {
        let m = six();
        let input = PureState::basis(&m, &[("b_e", 2)]).unwrap();
        let out = sfg_evolve(&input, &SfgParams::with_coupling(0.8)).unwrap();
        assert!((out.inner(&input).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_matches_first_order_for_weak_coupling() {
        let m = six();
        let input = PureState::from_amplitudes(
            &m,
            [
                (vec![2, 0, 1, 0, 0, 0], Complex64::new(0.6, 0.0)),
                (vec![1, 1, 1, 1, 0, 0], Complex64::new(0.0, 0.8)),
            ],
        )
        .unwrap();
        let g: f64 = 1e-4;
        let p = SfgParams::with_coupling(g);
        let exact = sfg_evolve(&input, &p).unwrap();
        let first = sfg_first_order(&input, &p).unwrap();
        let diff = exact.add(&first.scaled(Complex64::new(-1.0, 0.0))).unwrap();
        assert!(diff.norm_sqr().sqrt() < 10.0 * g * g);
    }

    #[test]
    fn chain_cut_by_cutoff_is_reported() {
        let m = ModeSet::new(["b_e", "b_l", "c_e", "c_l", "k_e", "k_l"], 4, 2).unwrap();
        // Down-converting κ_e would need three photons.
        let input = PureState::basis(&m, &[("k_e", 1), ("b_l", 1)]).unwrap();
        let out = sfg_evolve(&input, &SfgParams::with_coupling(0.3)).unwrap();
        assert_eq!(out.truncation().events, 1);
    }

    #[test]
    fn eraser_examples() {
        let m = six();
        let p = SfgParams::default();
        let one = PureState::basis(&m, &[("k_e", 1)]).unwrap();
        let out = eraser(&one, &p).unwrap();
        assert_eq!(out.modes().labels()[4], "k_p");
        assert!((out.amplitude(&[0, 0, 0, 0, 1, 0]).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((out.amplitude(&[0, 0, 0, 0, 0, 1]).re - FRAC_1_SQRT_2).abs() < 1e-15);

        let sup = PureState::from_amplitudes(
            &m,
            [
                (vec![0, 0, 0, 0, 1, 0], Complex64::new(FRAC_1_SQRT_2, 0.0)),
                (vec![0, 0, 0, 0, 0, 1], Complex64::new(FRAC_1_SQRT_2, 0.0)),
            ],
        )
        .unwrap();
        let out = eraser(&sup, &p).unwrap();
        assert!((out.amplitude(&[0, 0, 0, 0, 1, 0]).re - 1.0).abs() < 1e-15);

        let vac = eraser(&PureState::vacuum(&m), &p).unwrap();
        assert!((vac.amplitude(&[0; 6]).re - 1.0).abs() < 1e-15);
    }
}
