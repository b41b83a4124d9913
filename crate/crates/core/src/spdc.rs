//! Time-bin entangled pair sources.
//!
//! A source emitting into spatial modes `a` and `b` is described by the
//! pair-creation operator `K† = a_e†b_e† − a_l†b_l†`. The `k`-pair
//! component is `K†^k|0⟩` and carries weight `(k+1)(p/2)^k`, i.e. `1`, `p`,
//! `3p²/4`, … with the vacuum weight fixed to one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{MixedEnsemble, ModeSet, PureState};

/// Largest pair probability accepted; the truncated expansion is not
/// meaningful beyond it.
pub const MAX_PAIR_PROBABILITY: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    /// Pair-emission probability per pulse.
    pub p: f64,
    /// Prefix of the first photon's modes (`<prefix>_e`, `<prefix>_l`).
    pub mode_a: String,
    pub mode_b: String,
    pub max_pairs: u8,
    /// Keep the coherent superposition of pair numbers instead of the
    /// pair-number mixture.
    pub coherent_pair_number: bool,
}

impl SourceSpec {
    pub fn new(p: f64, mode_a: &str, mode_b: &str) -> Self {
        SourceSpec {
            p,
            mode_a: mode_a.to_owned(),
            mode_b: mode_b.to_owned(),
            max_pairs: 2,
            coherent_pair_number: false,
        }
    }

    pub fn with_max_pairs(mut self, max_pairs: u8) -> Self {
        self.max_pairs = max_pairs;
        self
    }

    pub fn coherent(mut self, coherent: bool) -> Self {
        self.coherent_pair_number = coherent;
        self
    }

    /// The four mode labels `[a_e, a_l, b_e, b_l]`.
    pub fn labels(&self) -> [String; 4] {
        [
            early(&self.mode_a),
            late(&self.mode_a),
            early(&self.mode_b),
            late(&self.mode_b),
        ]
    }

    /// A mode set holding exactly this source's modes.
    pub fn mode_set(&self, per_mode_cutoff: u8, total_cutoff: u8) -> Result<ModeSet> {
        ModeSet::new(self.labels(), per_mode_cutoff, total_cutoff)
    }

    fn validate(&self, modes: &ModeSet) -> Result<()> {
        // p = 0 is accepted as the degenerate vacuum-only source.
        if !(self.p >= 0.0 && self.p <= MAX_PAIR_PROBABILITY) {
            return Err(Error::param(
                "p",
                self.p,
                format!("pair probability must lie in [0, {MAX_PAIR_PROBABILITY}]"),
            ));
        }
        if self.max_pairs < 1 {
            return Err(Error::param("max_pairs", 0.0, "must be at least 1"));
        }
        if 2 * self.max_pairs as u32 > modes.total_cutoff() as u32
            || self.max_pairs > modes.per_mode_cutoff()
        {
            return Err(Error::param(
                "max_pairs",
                self.max_pairs as f64,
                format!(
                    "needs total cutoff >= {} and per-mode cutoff >= {} (have {} and {})",
                    2 * self.max_pairs,
                    self.max_pairs,
                    modes.total_cutoff(),
                    modes.per_mode_cutoff()
                ),
            ));
        }
        for label in self.labels() {
            modes.index_of(&label)?;
        }
        Ok(())
    }
}

pub fn early(prefix: &str) -> String {
    format!("{prefix}_e")
}

pub fn late(prefix: &str) -> String {
    format!("{prefix}_l")
}

/// Applies `K† = a_e†b_e† − a_l†b_l†` once.
fn apply_pair_creation(state: &PureState, spec: &SourceSpec) -> Result<PureState> {
    let [ae, al, be, bl] = spec.labels();
    let early = state.create(&be)?.create(&ae)?;
    let late = state.create(&bl)?.create(&al)?;
    early.add(&late.scaled(Complex64::new(-1.0, 0.0)))
}

/// Unnormalized terms `(√(p/2))^k K†^k|0⟩ / k!` for `k = 0..=max_pairs`.
fn expansion_terms(spec: &SourceSpec, modes: &ModeSet) -> Result<Vec<PureState>> {
    let x = (spec.p / 2.0).sqrt();
    let mut terms = Vec::with_capacity(spec.max_pairs as usize + 1);
    let mut power = PureState::vacuum(modes);
    let mut coeff = 1.0;
    terms.push(power.clone());
    for k in 1..=spec.max_pairs as u32 {
        power = apply_pair_creation(&power, spec)?;
        coeff *= x / k as f64;
        terms.push(power.scaled(Complex64::new(coeff, 0.0)));
    }
    Ok(terms)
}

/// Pair-number mixture: branch `k` has weight `‖k-th expansion term‖²`
/// and state `K†^k|0⟩` normalized. The result is flagged unnormalized
/// (vacuum weight one).
///
/// With `coherent_pair_number` set, a single branch holding the coherent
/// superposition is returned instead, with the same total weight.
pub fn timebin_pair(spec: &SourceSpec, modes: &ModeSet) -> Result<MixedEnsemble> {
    spec.validate(modes)?;
    let terms = expansion_terms(spec, modes)?;
    for t in &terms {
        t.truncation().check()?;
    }
    let mut out = MixedEnsemble::empty(modes);
    if spec.coherent_pair_number {
        let mut sum = PureState::zero(modes);
        for t in &terms {
            sum = sum.add(t)?;
        }
        out.push(1.0, sum)?;
    } else {
        for t in terms {
            out.push(1.0, t)?;
        }
    }
    Ok(out.mark_unnormalized())
}

/// Normalized coherent expansion of `exp(√(p/2)·K†)|0⟩` up to `max_pairs`.
pub fn timebin_pair_pure(spec: &SourceSpec, modes: &ModeSet) -> Result<PureState> {
    spec.validate(modes)?;
    let mut sum = PureState::zero(modes);
    for t in expansion_terms(spec, modes)? {
        t.truncation().check()?;
        sum = sum.add(&t)?;
    }
    sum.normalized()
}

/// `(a_e†b_e† − a_l†b_l†)/√2 |0⟩` on `modes`.
pub fn single_pair_state(modes: &ModeSet, a: &str, b: &str) -> Result<PureState> {
    let spec = SourceSpec::new(0.0, a, b);
    apply_pair_creation(&PureState::vacuum(modes), &spec)?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: f64) -> SourceSpec {
        SourceSpec::new(p, "a", "b")
    }

    /// Sum over `j` of `C(k,j)² · j!² · (k−j)!²`: the squared norm of
    /// `K†^k|0⟩` computed from the binomial expansion, each term being
    /// `(a_e†b_e†)^j (a_l†b_l†)^{k−j}|0⟩` with norm `j!·(k−j)!`.
    fn pair_power_norm_sqr(k: u32) -> f64 {
        let f = |n: u32| (1..=n).map(|i| i as f64).product::<f64>();
        (0..=k)
            .map(|j| {
                let binom = f(k) / (f(j) * f(k - j));
                (binom * f(j) * f(k - j)).powi(2)
            })
            .sum()
    }

    #[test]
    fn two_pair_norm_is_two_root_three() {
        assert!((pair_power_norm_sqr(2).sqrt() - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        let s = spec(0.1);
        let m = s.mode_set(4, 4).unwrap();
        let two = apply_pair_creation(
            &apply_pair_creation(&PureState::vacuum(&m), &s).unwrap(),
            &s,
        )
        .unwrap();
        assert!((two.norm_sqr() - 12.0).abs() < 1e-12);
        // |2,0,2,0⟩, |1,1,1,1⟩, |0,2,0,2⟩ with amplitudes 2, −2, 2.
        assert!((two.amplitude(&[2, 0, 2, 0]).re - 2.0).abs() < 1e-12);
        assert!((two.amplitude(&[1, 1, 1, 1]).re + 2.0).abs() < 1e-12);
        assert!((two.amplitude(&[0, 2, 0, 2]).re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_weights_for_two_pairs() {
        let p = 0.05;
        let s = spec(p);
        let m = s.mode_set(4, 4).unwrap();
        let rho = timebin_pair(&s, &m).unwrap();
        assert!(rho.is_unnormalized());
        let w: Vec<f64> = rho.branches().iter().map(|b| b.weight).collect();
        assert_eq!(w.len(), 3);
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert!((w[1] - p).abs() < 1e-12);
        assert!((w[2] - 3.0 * p * p / 4.0).abs() < 1e-12);
        rho.validate().unwrap();
    }

    #[test]
    fn higher_pair_weights_match_the_expansion_oracle() {
        let p: f64 = 0.2;
        let s = spec(p).with_max_pairs(4);
        let m = s.mode_set(4, 8).unwrap();
        let rho = timebin_pair(&s, &m).unwrap();
        let f = |n: u32| (1..=n).map(|i| i as f64).product::<f64>();
        for (k, b) in rho.branches().iter().enumerate() {
            let k = k as u32;
            let oracle = (p / 2.0).powi(k as i32) * pair_power_norm_sqr(k) / f(k).powi(2);
            assert!((b.weight - oracle).abs() < 1e-14, "k={k}");
            assert!((b.weight - (k + 1) as f64 * (p / 2.0).powi(k as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_probability_leaves_vacuum() {
        let s = spec(0.0);
        let m = s.mode_set(4, 4).unwrap();
        let rho = timebin_pair(&s, &m).unwrap();
        assert_eq!(rho.branches().len(), 1);
        assert!((rho.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pure_variant_sectors_match_mixture() {
        let p = 0.08;
        let s = spec(p).with_max_pairs(3);
        let m = s.mode_set(6, 6).unwrap();
        let pure = timebin_pair_pure(&s, &m).unwrap();
        let mix = timebin_pair(&s, &m).unwrap();
        let sectors = pure.photon_sectors();
        let vac = sectors[&0].norm_sqr();
        assert!((sectors[&2].norm_sqr() / vac - p).abs() < 1e-12);
        for (k, b) in mix.branches().iter().enumerate() {
            let w = sectors[&(2 * k as u32)].norm_sqr() / vac;
            assert!((w - b.weight).abs() < 1e-12);
        }
        // Different pair numbers live in orthogonal sectors.
        assert!(sectors[&2].inner(&sectors[&4]).unwrap().norm() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        let m = spec(0.1).mode_set(4, 4).unwrap();
        assert!(timebin_pair(&spec(0.3), &m).is_err());
        assert!(timebin_pair(&spec(-0.1), &m).is_err());
        assert!(timebin_pair(&spec(0.1).with_max_pairs(3), &m).is_err());
        let other = ModeSet::new(["x_e", "x_l", "b_e", "b_l"], 4, 4).unwrap();
        assert!(matches!(
            timebin_pair(&spec(0.1), &other),
            Err(Error::UnknownMode(_))
        ));
    }
}
