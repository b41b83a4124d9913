use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{ModeSet, Occupation, PureState, Truncation, NORM_TOLERANCE};
use crate::error::{Error, Result};

/// One weighted pure-state component of a [`MixedEnsemble`].
#[derive(Clone, Debug)]
pub struct Branch {
    pub weight: f64,
    /// Unit-norm state.
    pub state: PureState,
}

/// Density operator stored as a weighted list of normalized pure states.
///
/// The total weight is at most one unless the ensemble is flagged
/// unnormalized (source states are written with weight one on vacuum).
#[derive(Clone, Debug)]
pub struct MixedEnsemble {
    modes: ModeSet,
    branches: Vec<Branch>,
    unnormalized: bool,
}

impl MixedEnsemble {
    /// The empty (zero) operator on `modes`.
    pub fn empty(modes: &ModeSet) -> Self {
        MixedEnsemble {
            modes: modes.clone(),
            branches: Vec::new(),
            unnormalized: false,
        }
    }

    /// `|ψ⟩⟨ψ|` with weight `‖ψ‖²`.
    pub fn pure(state: PureState) -> Self {
        let mut e = Self::empty(state.modes());
        e.push(1.0, state).expect("same mode set");
        e
    }

    /// Adds `weight · |ψ⟩⟨ψ|`; the state is normalized and its squared norm
    /// folded into the weight. Zero states and zero weights are skipped.
    pub fn push(&mut self, weight: f64, state: PureState) -> Result<()> {
        if state.modes() != &self.modes {
            return Err(Error::ModeSetMismatch {
                left: self.modes.labels().to_vec(),
                right: state.modes().labels().to_vec(),
            });
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::param(
                "weight",
                weight,
                "must be finite and non-negative",
            ));
        }
        let n = state.norm_sqr();
        if weight == 0.0 || n == 0.0 {
            return Ok(());
        }
        self.branches.push(Branch {
            weight: weight * n,
            state: state.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)),
        });
        Ok(())
    }

    pub fn from_branches<I>(modes: &ModeSet, branches: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PureState)>,
    {
        let mut e = Self::empty(modes);
        for (w, s) in branches {
            e.push(w, s)?;
        }
        Ok(e)
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn is_unnormalized(&self) -> bool {
        self.unnormalized
    }

    pub fn mark_unnormalized(mut self) -> Self {
        self.unnormalized = true;
        self
    }

    pub fn trace(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    /// Checks the weight and branch-norm invariants.
    pub fn validate(&self) -> Result<()> {
        let t = self.trace();
        if !self.unnormalized && t > 1.0 + NORM_TOLERANCE {
            return Err(Error::param(
                "trace",
                t,
                "exceeds one on a normalized ensemble",
            ));
        }
        for b in &self.branches {
            let n = b.state.norm_sqr();
            if (n - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::param(
                    "branch norm",
                    n,
                    "branch states must be normalized",
                ));
            }
        }
        Ok(())
    }

    /// Rescaled to unit trace.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::ZeroTrace);
        }
        let mut out = self.scaled(1.0 / t);
        out.unnormalized = false;
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for b in &mut out.branches {
            b.weight *= factor;
        }
        out.branches.retain(|b| b.weight > 0.0);
        out
    }

    /// Appends the branches of `other` (same modes).
    pub fn extend(&mut self, other: MixedEnsemble) -> Result<()> {
        if other.modes != self.modes {
            return Err(Error::ModeSetMismatch {
                left: self.modes.labels().to_vec(),
                right: other.modes.labels().to_vec(),
            });
        }
        self.unnormalized |= other.unnormalized;
        self.branches.extend(other.branches);
        Ok(())
    }

    /// Truncation recorded over all branches.
    pub fn truncation(&self) -> Truncation {
        self.branches.iter().fold(Truncation::default(), |acc, b| {
            acc.merge(b.state.truncation())
        })
    }

    /// `⟨target|ρ|target⟩ / tr ρ`.
    pub fn fidelity(&self, target: &PureState) -> Result<f64> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::ZeroTrace);
        }
        let tn = target.norm_sqr();
        if (tn - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::param("target norm", tn, "target must be normalized"));
        }
        let mut acc = 0.0;
        for b in &self.branches {
            acc += b.weight * target.inner(&b.state)?.norm_sqr();
        }
        Ok((acc / t).clamp(0.0, 1.0))
    }

    /// Applies `f` to every branch state; weights pick up the squared norm
    /// of the result, so non-unitary maps (projections) are allowed.
    pub fn map_states<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&PureState) -> Result<PureState>,
    {
        let mut out: Option<MixedEnsemble> = None;
        for b in &self.branches {
            let s = f(&b.state)?;
            let e = out.get_or_insert_with(|| MixedEnsemble::empty(s.modes()));
            e.push(b.weight, s)?;
        }
        let mut out = match out {
            Some(e) => e,
            None => {
                // No branches: still need the output mode set.
                let probe = f(&PureState::zero(&self.modes))?;
                MixedEnsemble::empty(probe.modes())
            }
        };
        out.unnormalized = self.unnormalized;
        Ok(out)
    }

    /// Like [`map_states`](Self::map_states) for maps that split one state
    /// into several weighted outputs (Kraus branches).
    pub(crate) fn flat_map_states<F>(&self, modes: &ModeSet, f: F) -> Result<Self>
    where
        F: Fn(&PureState) -> Result<Vec<PureState>>,
    {
        let mut out = MixedEnsemble::empty(modes);
        out.unnormalized = self.unnormalized;
        for b in &self.branches {
            for s in f(&b.state)? {
                out.push(b.weight, s)?;
            }
        }
        Ok(out)
    }

    /// Product ensemble on the union of mode sets.
    pub fn tensor(&self, other: &MixedEnsemble) -> Result<Self> {
        let modes = self.modes.union(&other.modes)?;
        let mut out = MixedEnsemble::empty(&modes);
        out.unnormalized = self.unnormalized || other.unnormalized;
        for a in &self.branches {
            for b in &other.branches {
                out.push(a.weight * b.weight, a.state.tensor(&b.state)?)?;
            }
        }
        Ok(out)
    }

    /// Partial trace over `drop`: each branch is measured in the occupation
    /// basis of the dropped modes and the outcomes are kept as separate
    /// branches on the remaining modes.
    pub fn branch_trace<S: AsRef<str>>(&self, drop: &[S]) -> Result<Self> {
        let keep: Vec<&str> = self
            .modes
            .labels()
            .iter()
            .map(String::as_str)
            .filter(|l| !drop.iter().any(|d| d.as_ref() == *l))
            .collect();
        for d in drop {
            self.modes.index_of(d.as_ref())?;
        }
        let modes = self.modes.subset(&keep)?;
        let mut out = MixedEnsemble::empty(&modes);
        out.unnormalized = self.unnormalized;
        for b in &self.branches {
            let (_, groups) = b.state.split_modes(drop)?;
            for (_, s) in groups {
                out.push(b.weight, s)?;
            }
        }
        Ok(out)
    }

    /// Splits by the occupation of `mode`, removing it. Weights stay absolute.
    pub(crate) fn split_by(&self, mode: &str) -> Result<(ModeSet, BTreeMap<u8, MixedEnsemble>)> {
        self.modes.index_of(mode)?;
        let keep: Vec<&str> = self
            .modes
            .labels()
            .iter()
            .map(String::as_str)
            .filter(|l| *l != mode)
            .collect();
        let modes = self.modes.subset(&keep)?;
        let mut parts: BTreeMap<u8, MixedEnsemble> = BTreeMap::new();
        for b in &self.branches {
            let (_, groups) = b.state.split_modes(&[mode])?;
            for (occ, s) in groups {
                let e = parts.entry(occ.get(0)).or_insert_with(|| {
                    let mut e = MixedEnsemble::empty(&modes);
                    e.unnormalized = self.unnormalized;
                    e
                });
                e.push(b.weight, s)?;
            }
        }
        Ok((modes, parts))
    }

    /// Absolute weight of the components whose occupation satisfies `pred`.
    pub fn weight_where(&self, pred: impl Fn(&Occupation) -> bool) -> f64 {
        self.branches
            .iter()
            .map(|b| {
                b.weight
                    * b.state
                        .iter()
                        .filter(|(k, _)| pred(k))
                        .map(|(_, a)| a.norm_sqr())
                        .sum::<f64>()
            })
            .sum()
    }

    /// `tr(ρ · a†a)` for `mode`.
    pub fn number_expectation(&self, mode: &str) -> Result<f64> {
        let mut acc = 0.0;
        for b in &self.branches {
            acc += b.weight * b.state.number_expectation(mode)?;
        }
        Ok(acc)
    }

    /// Dense matrix elements `⟨i|ρ|j⟩` over the occupied basis states.
    ///
    /// Meant for comparing ensembles that decompose the same operator
    /// differently.
    pub fn density_matrix(&self) -> BTreeMap<(Occupation, Occupation), Complex64> {
        let mut rho = BTreeMap::new();
        for b in &self.branches {
            for (ki, ai) in b.state.iter() {
                for (kj, aj) in b.state.iter() {
                    *rho.entry((ki.clone(), kj.clone()))
                        .or_insert(Complex64::new(0.0, 0.0)) += ai * aj.conj() * b.weight;
                }
            }
        }
        rho
    }

    /// Largest entrywise difference between the density matrices.
    pub fn max_density_difference(&self, other: &MixedEnsemble) -> Result<f64> {
        if !self.modes.same_labels(&other.modes) {
            return Err(Error::ModeSetMismatch {
                left: self.modes.labels().to_vec(),
                right: other.modes.labels().to_vec(),
            });
        }
        let other = if other.modes.labels() == self.modes.labels() {
            other.clone()
        } else {
            let modes = self.modes.clone();
            other.map_states(|s| s.reordered(&modes))?
        };
        let a = self.density_matrix();
        let b = other.density_matrix();
        let mut diff: f64 = 0.0;
        for (k, v) in &a {
            diff = diff.max((v - b.get(k).copied().unwrap_or_default()).norm());
        }
        for (k, v) in &b {
            if !a.contains_key(k) {
                diff = diff.max(v.norm());
            }
        }
        Ok(diff)
    }
}
