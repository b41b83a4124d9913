//! Flat `key=value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: key {key:?} given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("missing key `scenario`")]
    MissingScenario,
    #[error("unknown scenario {0:?} (see list-scenarios)")]
    UnknownScenario(String),
    #[error("unknown key {key:?} for scenario {scenario}")]
    UnknownKey { key: String, scenario: String },
    #[error("scenario {scenario} requires key {key:?}")]
    MissingKey { key: String, scenario: String },
    #[error("key {key:?}: cannot use {value:?}: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
}

impl ConfigError {
    pub fn bad(key: &str, value: &str, reason: impl Into<String>) -> Self {
        ConfigError::BadValue {
            key: key.to_owned(),
            value: value.to_owned(),
            reason: reason.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    SwapLinear,
    SwapSfg,
    HeraldedCompare,
    SfgEfficiency,
    DiqkdRate,
    OptimizeSixphoton,
    RequiredSfg,
    Fig4Theory,
}

const TRUNCATION_KEYS: &[&str] = &[
    "per_mode_cutoff",
    "total_cutoff",
    "max_pairs",
    "coherent_sources",
    "allow_truncation",
];

pub(crate) const DEVICE_KEYS: &[&str] = &[
    "eta_hat_pct_per_w_cm2",
    "delta_nu_hat_ghz_cm",
    "length_cm",
    "lambda_nm",
    "tbp",
];

const OUTPUT_KEYS: &[&str] = &["scenario", "format", "out"];

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::SwapLinear,
        Scenario::SwapSfg,
        Scenario::HeraldedCompare,
        Scenario::SfgEfficiency,
        Scenario::DiqkdRate,
        Scenario::OptimizeSixphoton,
        Scenario::RequiredSfg,
        Scenario::Fig4Theory,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SwapLinear => "swap-linear",
            Scenario::SwapSfg => "swap-sfg",
            Scenario::HeraldedCompare => "heralded-compare",
            Scenario::SfgEfficiency => "sfg-efficiency",
            Scenario::DiqkdRate => "diqkd-rate",
            Scenario::OptimizeSixphoton => "optimize-sixphoton",
            Scenario::RequiredSfg => "required-sfg",
            Scenario::Fig4Theory => "fig4-theory",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::SwapLinear => {
                "Fock simulation of swapping with a linear-optics Bell measurement"
            }
            Scenario::SwapSfg => "Fock simulation of swapping with an SFG Bell measurement",
            Scenario::HeraldedCompare => "six-photon source vs SFG source at equal fidelity",
            Scenario::SfgEfficiency => "single-photon SFG efficiency of a waveguide",
            Scenario::DiqkdRate => "heralding rate of the SFG link over fiber",
            Scenario::OptimizeSixphoton => "optimal operating point of the six-photon source",
            Scenario::RequiredSfg => "SFG efficiency needed for a target heralding probability",
            Scenario::Fig4Theory => "SFG efficiency model against photons per mode",
        }
    }

    pub fn required_keys(self) -> &'static [&'static str] {
        match self {
            Scenario::SwapLinear | Scenario::SwapSfg => &["p_ab", "p_cd"],
            Scenario::HeraldedCompare => &["eta_c", "eta_d", "f_min"],
            Scenario::SfgEfficiency => &[],
            Scenario::DiqkdRate => &[
                "distance_km",
                "atten_db_per_km",
                "rep_rate",
                "eta_c",
                "eta_d",
                "eta_sfg",
                "p_ab",
                "p_cd",
            ],
            Scenario::OptimizeSixphoton => &["eta", "f_min"],
            Scenario::RequiredSfg => &["p_target", "f_min", "eta_c", "eta_d"],
            Scenario::Fig4Theory => &["photons_per_mode"],
        }
    }

    fn optional_keys(self) -> Vec<&'static str> {
        let mut keys: Vec<&'static str> = match self {
            Scenario::SwapLinear => [TRUNCATION_KEYS, &["eta_d", "detector"]].concat(),
            Scenario::SwapSfg => [TRUNCATION_KEYS, &["eta_sfg", "g", "eta_c", "eta_d"]].concat(),
            Scenario::HeraldedCompare => vec!["eta_sfg"],
            Scenario::SfgEfficiency | Scenario::Fig4Theory => {
                [DEVICE_KEYS, &["device", "reference_eta_sfg"]].concat()
            }
            Scenario::DiqkdRate => vec![
                "key_fraction_model",
                "key_fraction",
                "include_alice_coupling",
            ],
            Scenario::OptimizeSixphoton | Scenario::RequiredSfg => vec![],
        };
        keys.extend_from_slice(OUTPUT_KEYS);
        keys
    }

    pub fn accepts(self, key: &str) -> bool {
        self.required_keys().contains(&key) || self.optional_keys().contains(&key)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| ConfigError::UnknownScenario(s.to_owned()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
    Table,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "table" => Ok(Format::Table),
            _ => Err(ConfigError::bad("format", s, "expected csv, json or table")),
        }
    }
}

/// A validated configuration: scenario plus its raw parameter values.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub format: Format,
    pub out: Option<PathBuf>,
    /// Parameters in key order, excluding `scenario`, `format` and `out`.
    pub params: BTreeMap<String, String>,
}

/// Prefix of the config lines embedded in CSV reports.
pub const CSV_CONFIG_PREFIX: &str = "# config ";

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_owned(),
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_owned(),
                });
            }
            if entries
                .insert(key.to_owned(), v.trim().to_owned())
                .is_some()
            {
                return Err(ConfigError::DuplicateKey {
                    line: i + 1,
                    key: key.to_owned(),
                });
            }
        }
        Self::from_entries(entries)
    }

    /// Recovers the configuration embedded in a CSV report.
    pub fn from_report_csv(csv: &str) -> Result<Self, ConfigError> {
        let block: Vec<&str> = csv
            .lines()
            .filter_map(|l| l.strip_prefix(CSV_CONFIG_PREFIX))
            .collect();
        Self::parse(&block.join("\n"))
    }

    pub fn from_entries(mut entries: BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let scenario: Scenario = entries
            .remove("scenario")
            .ok_or(ConfigError::MissingScenario)?
            .parse()?;
        for key in entries.keys() {
            if !scenario.accepts(key) {
                return Err(ConfigError::UnknownKey {
                    key: key.clone(),
                    scenario: scenario.name().to_owned(),
                });
            }
        }
        for key in scenario.required_keys() {
            if !entries.contains_key(*key) {
                return Err(ConfigError::MissingKey {
                    key: (*key).to_owned(),
                    scenario: scenario.name().to_owned(),
                });
            }
        }
        let format = match entries.remove("format") {
            Some(f) => f.parse()?,
            None => Format::default(),
        };
        let out = entries.remove("out").map(PathBuf::from);
        Ok(RunConfig {
            scenario,
            format,
            out,
            params: entries,
        })
    }

    /// `key=value` lines that reproduce this run (output keys omitted).
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![format!("scenario={}", self.scenario)];
        out.extend(self.params.iter().map(|(k, v)| format!("{k}={v}")));
        out
    }

    pub fn has(&self, key: &str) -> bool {
        self.params.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64(key)?.ok_or_else(|| self.missing(key))
    }

    /// Comma-separated values, sorted ascending with duplicates removed.
    /// An empty value gives an empty list.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(raw) = self.raw(key) else {
            return Ok(None);
        };
        let mut vals = raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_f64(key, s))
            .collect::<Result<Vec<_>, _>>()?;
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        Ok(Some(vals))
    }

    pub fn require_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        self.list(key)?.ok_or_else(|| self.missing(key))
    }

    pub fn list_or(&self, key: &str, default: f64) -> Result<Vec<f64>, ConfigError> {
        Ok(self.list(key)?.unwrap_or_else(|| vec![default]))
    }

    pub fn u8_or(&self, key: &str, default: u8) -> Result<u8, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError::bad(key, v, "expected an integer in 0..=255")),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(ConfigError::bad(key, v, "expected true or false")),
        }
    }

    pub fn missing(&self, key: &str) -> ConfigError {
        ConfigError::MissingKey {
            key: key.to_owned(),
            scenario: self.scenario.name().to_owned(),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .parse()
        .map_err(|_| ConfigError::bad(key, v, "expected a number"))?;
    if !x.is_finite() {
        return Err(ConfigError::bad(key, v, "must be finite"));
    }
    Ok(x)
}
