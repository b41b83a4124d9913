use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{ModeSet, Occupation};
use crate::error::{Error, Result};

/// Bookkeeping for components discarded because they left the truncated space.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Truncation {
    /// Number of discarded components.
    pub events: u64,
    /// Squared norm carried by the discarded components.
    pub weight: f64,
}

impl Truncation {
    pub fn is_zero(&self) -> bool {
        self.events == 0
    }

    pub fn merge(self, other: Truncation) -> Truncation {
        Truncation {
            events: self.events + other.events,
            weight: self.weight + other.weight,
        }
    }

    pub(crate) fn record(&mut self, weight: f64) {
        self.events += 1;
        self.weight += weight;
    }

    /// `Err` when anything was discarded.
    pub fn check(&self) -> Result<()> {
        if self.is_zero() {
            Ok(())
        } else {
            Err(Error::Truncation {
                events: self.events,
                weight: self.weight,
            })
        }
    }
}

/// Sparse complex-amplitude vector over the truncated occupation basis.
///
/// The squared norm may be below one: conditional branches are carried
/// unnormalized.
#[derive(Clone, Debug)]
pub struct PureState {
    modes: ModeSet,
    amps: BTreeMap<Occupation, Complex64>,
    truncation: Truncation,
}

pub(crate) fn accumulate(
    map: &mut BTreeMap<Occupation, Complex64>,
    key: Occupation,
    amp: Complex64,
) {
    *map.entry(key).or_insert(Complex64::new(0.0, 0.0)) += amp;
}

impl PureState {
    pub fn zero(modes: &ModeSet) -> Self {
        PureState {
            modes: modes.clone(),
            amps: BTreeMap::new(),
            truncation: Truncation::default(),
        }
    }

    pub fn vacuum(modes: &ModeSet) -> Self {
        let mut s = Self::zero(modes);
        s.amps
            .insert(Occupation::vacuum(modes.len()), Complex64::new(1.0, 0.0));
        s
    }

    /// Normalized number state with the listed occupations; unlisted modes are empty.
    pub fn basis(modes: &ModeSet, occupied: &[(&str, u8)]) -> Result<Self> {
        let mut counts = vec![0u8; modes.len()];
        for &(label, n) in occupied {
            counts[modes.index_of(label)?] = n;
        }
        if !modes.admits(&counts) {
            return Err(Error::OutsideCutoff(counts));
        }
        let mut s = Self::zero(modes);
        s.amps.insert(Occupation(counts), Complex64::new(1.0, 0.0));
        Ok(s)
    }

    /// Builds a state from explicit components; repeated keys add up.
    pub fn from_amplitudes<I>(modes: &ModeSet, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, Complex64)>,
    {
        let mut amps = BTreeMap::new();
        for (counts, amp) in terms {
            if !modes.admits(&counts) {
                return Err(Error::OutsideCutoff(counts));
            }
            accumulate(&mut amps, Occupation(counts), amp);
        }
        Ok(Self::from_parts(modes.clone(), amps, Truncation::default()))
    }

    pub(crate) fn from_parts(
        modes: ModeSet,
        amps: BTreeMap<Occupation, Complex64>,
        truncation: Truncation,
    ) -> Self {
        let mut s = PureState {
            modes,
            amps,
            truncation,
        };
        s.prune();
        s
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub(crate) fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    /// Number of stored (nonzero) components.
    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_zero(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amps.iter()
    }

    pub fn amplitude(&self, counts: &[u8]) -> Complex64 {
        self.amps
            .get(&Occupation(counts.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let amps = self
            .amps
            .iter()
            .map(|(k, a)| (k.clone(), a * factor))
            .collect();
        Self::from_parts(self.modes.clone(), amps, self.truncation)
    }

    /// Superposition `self + other` on the same modes.
    pub fn add(&self, other: &PureState) -> Result<Self> {
        self.require_same_modes(other)?;
        let mut amps = self.amps.clone();
        for (k, a) in &other.amps {
            accumulate(&mut amps, k.clone(), *a);
        }
        Ok(Self::from_parts(
            self.modes.clone(),
            amps,
            self.truncation.merge(other.truncation),
        ))
    }

    fn require_same_modes(&self, other: &PureState) -> Result<()> {
        if self.modes == other.modes {
            Ok(())
        } else {
            Err(Error::ModeSetMismatch {
                left: self.modes.labels().to_vec(),
                right: other.modes.labels().to_vec(),
            })
        }
    }

    fn prune(&mut self) {
        let threshold = self.modes.prune_threshold();
        self.amps.retain(|_, a| a.norm() > threshold);
    }

    /// Applies the creation operator of `mode` (factor `sqrt(n+1)`).
    ///
    /// Components pushed above a cutoff are discarded and recorded in the
    /// truncation counter.
    pub fn create(&self, mode: &str) -> Result<Self> {
        let idx = self.modes.index_of(mode)?;
        let per_mode = self.modes.per_mode_cutoff();
        let total = self.modes.total_cutoff() as u32;
        let mut truncation = self.truncation;
        let mut amps = BTreeMap::new();
        for (occ, amp) in &self.amps {
            let n = occ.get(idx);
            let factor = (n as f64 + 1.0).sqrt();
            if n >= per_mode || occ.total() + 1 > total {
                truncation.record(factor * factor * amp.norm_sqr());
                continue;
            }
            let mut key = occ.clone();
            key.counts_mut()[idx] += 1;
            accumulate(&mut amps, key, amp * factor);
        }
        Ok(Self::from_parts(self.modes.clone(), amps, truncation))
    }

    /// Applies the annihilation operator of `mode` (factor `sqrt(n)`).
    pub fn annihilate(&self, mode: &str) -> Result<Self> {
        let idx = self.modes.index_of(mode)?;
        let mut amps = BTreeMap::new();
        for (occ, amp) in &self.amps {
            let n = occ.get(idx);
            if n == 0 {
                continue;
            }
            let mut key = occ.clone();
            key.counts_mut()[idx] -= 1;
            accumulate(&mut amps, key, amp * (n as f64).sqrt());
        }
        Ok(Self::from_parts(self.modes.clone(), amps, self.truncation))
    }

    /// Product state on the disjoint union of both mode sets.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let modes = self.modes.union(&other.modes)?;
        let mut truncation = self.truncation.merge(other.truncation);
        let mut amps = BTreeMap::new();
        for (ka, a) in &self.amps {
            for (kb, b) in &other.amps {
                let mut counts = ka.counts().to_vec();
                counts.extend_from_slice(kb.counts());
                let amp = a * b;
                if !modes.admits(&counts) {
                    truncation.record(amp.norm_sqr());
                    continue;
                }
                accumulate(&mut amps, Occupation(counts), amp);
            }
        }
        Ok(Self::from_parts(modes, amps, truncation))
    }

    /// `⟨self|other⟩`. The two states must carry the same labels; the
    /// order may differ.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.modes.labels() == other.modes.labels() {
            return Ok(self
                .amps
                .iter()
                .filter_map(|(k, a)| other.amps.get(k).map(|b| a.conj() * b))
                .sum());
        }
        if !self.modes.same_labels(&other.modes) {
            return Err(Error::ModeSetMismatch {
                left: self.modes.labels().to_vec(),
                right: other.modes.labels().to_vec(),
            });
        }
        let aligned = other.reordered(&self.modes)?;
        self.inner(&aligned)
    }

    /// Same state expressed in the label order of `modes`.
    pub fn reordered(&self, modes: &ModeSet) -> Result<Self> {
        let perm: Vec<usize> = modes
            .labels()
            .iter()
            .map(|l| self.modes.index_of(l))
            .collect::<Result<_>>()?;
        if perm.len() != self.modes.len() {
            return Err(Error::ModeSetMismatch {
                left: self.modes.labels().to_vec(),
                right: modes.labels().to_vec(),
            });
        }
        let mut truncation = self.truncation;
        let mut amps = BTreeMap::new();
        for (k, a) in &self.amps {
            let key = k.select(&perm);
            if !modes.admits(key.counts()) {
                truncation.record(a.norm_sqr());
                continue;
            }
            accumulate(&mut amps, key, *a);
        }
        Ok(Self::from_parts(modes.clone(), amps, truncation))
    }

    /// Drops every mode not in `keep`. Valid only when the dropped modes
    /// hold the same definite occupation in every component.
    pub fn restrict<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        let (kept, dropped) = self.modes.partition(keep)?;
        let modes = self.modes.subset(keep)?;
        let mut seen: Option<Occupation> = None;
        let mut amps = BTreeMap::new();
        for (k, a) in &self.amps {
            let rest = k.select(&dropped);
            match &seen {
                None => seen = Some(rest),
                Some(prev) if *prev != rest => {
                    return Err(Error::EntangledModes(
                        dropped
                            .iter()
                            .map(|&i| self.modes.labels()[i].clone())
                            .collect(),
                    ))
                }
                Some(_) => {}
            }
            accumulate(&mut amps, k.select(&kept), *a);
        }
        Ok(Self::from_parts(modes, amps, self.truncation))
    }

    /// Groups components by the occupation of `drop`, returning the
    /// (unnormalized) remainder on the other modes for each group.
    pub(crate) fn split_modes<S: AsRef<str>>(
        &self,
        drop: &[S],
    ) -> Result<(ModeSet, BTreeMap<Occupation, PureState>)> {
        let keep: Vec<&str> = self
            .modes
            .labels()
            .iter()
            .map(String::as_str)
            .filter(|l| !drop.iter().any(|d| d.as_ref() == *l))
            .collect();
        let (kept, dropped) = self.modes.partition(&keep)?;
        for d in drop {
            self.modes.index_of(d.as_ref())?;
        }
        let modes = self.modes.subset(&keep)?;
        let mut groups: BTreeMap<Occupation, BTreeMap<Occupation, Complex64>> = BTreeMap::new();
        for (k, a) in &self.amps {
            accumulate(
                groups.entry(k.select(&dropped)).or_default(),
                k.select(&kept),
                *a,
            );
        }
        let out = groups
            .into_iter()
            .map(|(g, amps)| (g, Self::from_parts(modes.clone(), amps, self.truncation)))
            .collect();
        Ok((modes, out))
    }

    /// `⟨ψ|a†a|ψ⟩` for `mode`.
    pub fn number_expectation(&self, mode: &str) -> Result<f64> {
        let idx = self.modes.index_of(mode)?;
        Ok(self
            .amps
            .iter()
            .map(|(k, a)| k.get(idx) as f64 * a.norm_sqr())
            .sum())
    }

    /// Decomposition into total-photon-number sectors.
    pub fn photon_sectors(&self) -> BTreeMap<u32, PureState> {
        let mut sectors: BTreeMap<u32, BTreeMap<Occupation, Complex64>> = BTreeMap::new();
        for (k, a) in &self.amps {
            sectors.entry(k.total()).or_default().insert(k.clone(), *a);
        }
        sectors
            .into_iter()
            .map(|(n, amps)| {
                (
                    n,
                    Self::from_parts(self.modes.clone(), amps, self.truncation),
                )
            })
            .collect()
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<Self> {
        Ok(PureState {
            modes: self.modes.renamed(from, to)?,
            amps: self.amps.clone(),
            truncation: self.truncation,
        })
    }

    /// Applies `f(occupation)` as a diagonal multiplier.
    pub(crate) fn map_diagonal(&self, f: impl Fn(&Occupation) -> Complex64) -> Self {
        let amps = self
            .amps
            .iter()
            .map(|(k, a)| (k.clone(), a * f(k)))
            .collect();
        Self::from_parts(self.modes.clone(), amps, self.truncation)
    }
}
