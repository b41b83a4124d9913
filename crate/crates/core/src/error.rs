use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the state engine, the optical channels and the models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode set must contain at least one label")]
    EmptyModeSet,

    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),

    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("cutoffs must be at least 1 (per-mode {per_mode}, total {total})")]
    InvalidCutoff { per_mode: u8, total: u8 },

    #[error("mode sets overlap on label `{0}`")]
    OverlappingModes(String),

    #[error("mode sets do not match: {left:?} vs {right:?}")]
    ModeSetMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },

    #[error("occupation {0:?} exceeds the mode-set cutoffs")]
    OutsideCutoff(Vec<u8>),

    #[error("dropped modes {0:?} are correlated with the kept modes; use branch_trace instead")]
    EntangledModes(Vec<String>),

    #[error("ensemble has zero trace")]
    ZeroTrace,

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("truncation discarded {weight:e} of squared norm over {events} components")]
    Truncation { events: u64, weight: f64 },

    #[error("no feasible point with F >= {f_min} (best fidelity found {best_fidelity})")]
    Infeasible { f_min: f64, best_fidelity: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason: reason.into(),
        }
    }
}

/// Checks that `value` lies in the closed interval `[lo, hi]`.
pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::param(
            name,
            value,
            format!("must lie in [{lo}, {hi}]"),
        ))
    }
}
