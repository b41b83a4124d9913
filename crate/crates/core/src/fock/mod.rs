//! Truncated multimode bosonic Fock space.
//!
//! States are sparse maps from occupation vectors to complex amplitudes.
//! Modes are always addressed by label; the order fixed at [`ModeSet`]
//! construction is the order of the entries of every [`Occupation`].

mod ensemble;
mod state;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use ensemble::{Branch, MixedEnsemble};
pub(crate) use state::accumulate;
pub use state::{PureState, Truncation};

pub use num_complex::Complex64;

/// Amplitudes with magnitude at or below this value are dropped.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-15;

/// Tolerance on norms and traces of states that should be normalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug)]
struct ModeSetInner {
    labels: Vec<String>,
    per_mode_cutoff: u8,
    total_cutoff: u8,
    prune_threshold: f64,
}

/// Ordered set of distinct mode labels together with the truncation limits.
///
/// Cloning is cheap (the labels are shared).
#[derive(Clone, Debug)]
pub struct ModeSet(Arc<ModeSetInner>);

impl PartialEq for ModeSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.labels == other.0.labels
                && self.0.per_mode_cutoff == other.0.per_mode_cutoff
                && self.0.total_cutoff == other.0.total_cutoff)
    }
}

impl ModeSet {
    pub fn new<I, S>(labels: I, per_mode_cutoff: u8, total_cutoff: u8) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyModeSet);
        }
        Self::from_parts(
            labels,
            per_mode_cutoff,
            total_cutoff,
            DEFAULT_PRUNE_THRESHOLD,
        )
    }

    fn from_parts(
        labels: Vec<String>,
        per_mode_cutoff: u8,
        total_cutoff: u8,
        prune_threshold: f64,
    ) -> Result<Self> {
        if per_mode_cutoff < 1 || total_cutoff < 1 {
            return Err(Error::InvalidCutoff {
                per_mode: per_mode_cutoff,
                total: total_cutoff,
            });
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::UnknownMode(String::new()));
            }
            if labels[..i].contains(label) {
                return Err(Error::DuplicateMode(label.clone()));
            }
        }
        Ok(ModeSet(Arc::new(ModeSetInner {
            labels,
            per_mode_cutoff,
            total_cutoff,
            prune_threshold,
        })))
    }

    /// Same labels and cutoffs with a different amplitude prune threshold.
    pub fn with_prune_threshold(&self, threshold: f64) -> Self {
        ModeSet(Arc::new(ModeSetInner {
            labels: self.0.labels.clone(),
            per_mode_cutoff: self.0.per_mode_cutoff,
            total_cutoff: self.0.total_cutoff,
            prune_threshold: threshold.max(0.0),
        }))
    }

    pub fn labels(&self) -> &[String] {
        &self.0.labels
    }

    pub fn len(&self) -> usize {
        self.0.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.labels.is_empty()
    }

    pub fn per_mode_cutoff(&self) -> u8 {
        self.0.per_mode_cutoff
    }

    pub fn total_cutoff(&self) -> u8 {
        self.0.total_cutoff
    }

    pub fn prune_threshold(&self) -> f64 {
        self.0.prune_threshold
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.labels.iter().any(|l| l == label)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.0
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_owned()))
    }

    /// Whether `counts` respects both cutoffs.
    pub fn admits(&self, counts: &[u8]) -> bool {
        counts.len() == self.len()
            && counts.iter().all(|&n| n <= self.0.per_mode_cutoff)
            && counts.iter().map(|&n| n as u32).sum::<u32>() <= self.0.total_cutoff as u32
    }

    /// Whether both sets hold the same labels, possibly in a different order.
    pub fn same_labels(&self, other: &ModeSet) -> bool {
        self.len() == other.len() && self.0.labels.iter().all(|l| other.contains(l))
    }

    /// Disjoint union: `self`'s labels first, then `other`'s. Cutoffs are the
    /// larger of the two.
    pub fn union(&self, other: &ModeSet) -> Result<ModeSet> {
        if let Some(shared) = other.labels().iter().find(|l| self.contains(l)) {
            return Err(Error::OverlappingModes(shared.clone()));
        }
        let labels = self
            .labels()
            .iter()
            .chain(other.labels())
            .cloned()
            .collect();
        Self::from_parts(
            labels,
            self.per_mode_cutoff().max(other.per_mode_cutoff()),
            self.total_cutoff().max(other.total_cutoff()),
            self.prune_threshold().min(other.prune_threshold()),
        )
    }

    /// The subset of labels in `keep`, in this set's order. An empty `keep`
    /// gives the mode set of a scalar, left over once every mode has been
    /// measured.
    pub fn subset<S: AsRef<str>>(&self, keep: &[S]) -> Result<ModeSet> {
        for k in keep {
            self.index_of(k.as_ref())?;
        }
        let labels: Vec<String> = self
            .labels()
            .iter()
            .filter(|l| keep.iter().any(|k| k.as_ref() == l.as_str()))
            .cloned()
            .collect();
        Self::from_parts(
            labels,
            self.per_mode_cutoff(),
            self.total_cutoff(),
            self.prune_threshold(),
        )
    }

    /// Indices (in this set's order) of the labels in `keep`, and of the rest.
    pub(crate) fn partition<S: AsRef<str>>(&self, keep: &[S]) -> Result<(Vec<usize>, Vec<usize>)> {
        for k in keep {
            self.index_of(k.as_ref())?;
        }
        Ok((0..self.len()).partition(|&i| keep.iter().any(|k| k.as_ref() == self.labels()[i])))
    }

    pub fn renamed(&self, from: &str, to: &str) -> Result<ModeSet> {
        let idx = self.index_of(from)?;
        if from != to && self.contains(to) {
            return Err(Error::DuplicateMode(to.to_owned()));
        }
        let mut labels = self.labels().to_vec();
        labels[idx] = to.to_owned();
        Self::from_parts(
            labels,
            self.per_mode_cutoff(),
            self.total_cutoff(),
            self.prune_threshold(),
        )
    }
}

impl fmt::Display for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] (per-mode {}, total {})",
            self.labels().join(", "),
            self.per_mode_cutoff(),
            self.total_cutoff()
        )
    }
}

/// Photon counts, one entry per mode in [`ModeSet`] order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(Vec<u8>);

impl Occupation {
    pub fn new(counts: Vec<u8>) -> Self {
        Occupation(counts)
    }

    pub fn vacuum(modes: usize) -> Self {
        Occupation(vec![0; modes])
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, index: usize) -> u8 {
        self.0[index]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| n as u32).sum()
    }

    pub(crate) fn counts_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }

    pub(crate) fn select(&self, indices: &[usize]) -> Occupation {
        Occupation(indices.iter().map(|&i| self.0[i]).collect())
    }
}

impl From<Vec<u8>> for Occupation {
    fn from(counts: Vec<u8>) -> Self {
        Occupation(counts)
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}
