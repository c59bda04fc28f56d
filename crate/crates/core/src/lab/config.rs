use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hitting::ProfileMode;
use crate::metric::{DyadicSchedule, DEFAULT_TAIL_FRACTION};
use crate::systems::SystemDescriptor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "theorem2")]
    Theorem2,
    #[serde(rename = "theorem3")]
    Theorem3,
    #[serde(rename = "theorem4")]
    Theorem4,
    #[serde(rename = "lemma1")]
    Lemma1,
    #[serde(rename = "lemma2")]
    Lemma2,
    #[serde(rename = "birkhoff-sandwich")]
    BirkhoffSandwich,
    #[serde(rename = "prop1-identities")]
    Prop1Identities,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Theorem2,
        ExperimentKind::Theorem3,
        ExperimentKind::Theorem4,
        ExperimentKind::Lemma1,
        ExperimentKind::Lemma2,
        ExperimentKind::BirkhoffSandwich,
        ExperimentKind::Prop1Identities,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Theorem2 => "theorem2",
            ExperimentKind::Theorem3 => "theorem3",
            ExperimentKind::Theorem4 => "theorem4",
            ExperimentKind::Lemma1 => "lemma1",
            ExperimentKind::Lemma2 => "lemma2",
            ExperimentKind::BirkhoffSandwich => "birkhoff-sandwich",
            ExperimentKind::Prop1Identities => "prop1-identities",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ExperimentKind::Theorem2 => {
                "hitting (or recurrence) indicators against local dimension, R >= d and R(x,x) <= d"
            }
            ExperimentKind::Theorem3 => "R = d on systems with a computable equilibrium measure",
            ExperimentKind::Theorem4 => "lower hitting indicator 1 at interval exchange discontinuities",
            ExperimentKind::Lemma1 => "summability of survival-set measures",
            ExperimentKind::Lemma2 => "exact sweep of the recursive sequence bound",
            ExperimentKind::BirkhoffSandwich => "growth exponent of Birkhoff sums of a pole observable",
            ExperimentKind::Prop1Identities => "exact shift and power identities of hitting times",
        }
    }

    fn needs_system(&self) -> bool {
        !matches!(self, ExperimentKind::Lemma2 | ExperimentKind::Theorem4)
    }

    fn needs_schedule(&self) -> bool {
        !matches!(self, ExperimentKind::Lemma2 | ExperimentKind::BirkhoffSandwich)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(vec![format!("experiment: unknown kind `{s}`")]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub k_min: u32,
    pub k_max: u32,
}

impl ScheduleConfig {
    pub fn schedule(&self) -> Result<DyadicSchedule> {
        DyadicSchedule::new(self.k_min, self.k_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed shortfall of the median estimate.
    pub median: f64,
    /// Allowed shortfall of an individual trial.
    pub trial: f64,
    /// Fraction of trials that must meet `trial`.
    pub trial_fraction: f64,
    /// Half-width of the equality band around the reference dimension.
    pub band: f64,
    pub sandwich: f64,
    /// Largest admissible partial-sum increment past `lemma1.k_cut`.
    pub increment: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            median: 0.15,
            trial: 0.3,
            trial_fraction: 0.95,
            band: 0.25,
            sandwich: crate::birkhoff::DEFAULT_SANDWICH_TOLERANCE,
            increment: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalExpectation {
    /// Increments past the cut stay below the tolerance.
    Summable,
    /// Survival at the finest scale stays at or above the tolerance.
    NonDecaying,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lemma1Config {
    pub epsilon: f64,
    pub samples: usize,
    pub k_cut: u32,
    pub horizon_cap: u64,
    pub expect: SurvivalExpectation,
    /// Survival centre; sampled from the measure when absent.
    pub center: Option<Vec<f64>>,
}

impl Default for Lemma1Config {
    fn default() -> Self {
        Lemma1Config {
            epsilon: 0.2,
            samples: 10_000,
            k_cut: 6,
            horizon_cap: 10_000_000,
            expect: SurvivalExpectation::Summable,
            center: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lemma2Config {
    pub m: Vec<f64>,
    pub n_max: u64,
}

impl Default for Lemma2Config {
    fn default() -> Self {
        Lemma2Config {
            m: (1..=9).map(|i| i as f64 / 10.0).collect(),
            n_max: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolePlacement {
    /// Pole at a measure-sampled point.
    Random,
    /// Pole at a discontinuity of an interval exchange.
    Discontinuity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    Pole,
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BirkhoffConfig {
    pub alpha: f64,
    pub log2_n: u32,
    pub observable: ObservableKind,
    pub pole: PolePlacement,
    /// Hitting indicator used for the band; the known dimension when absent.
    pub reference_r: Option<f64>,
}

impl Default for BirkhoffConfig {
    fn default() -> Self {
        BirkhoffConfig {
            alpha: 2.0,
            log2_n: 24,
            observable: ObservableKind::Pole,
            pole: PolePlacement::Random,
            reference_r: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Theorem4Config {
    /// Number of seeded random exchanges when no explicit system is given.
    pub iets: usize,
    pub d: usize,
    /// Horizon for the Boshernitzan proxy `max n delta(n)`.
    pub gap_horizon: u64,
    /// Exchanges whose proxy falls below this are flagged degenerate.
    pub min_boshernitzan: f64,
}

impl Default for Theorem4Config {
    fn default() -> Self {
        Theorem4Config {
            iets: 20,
            d: 4,
            gap_horizon: 100_000,
            min_boshernitzan: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prop1Config {
    pub powers: Vec<usize>,
    /// Hoelder exponent of the map; enables the comparison of the upper
    /// indicators towards `y` and `T(y)`.
    pub holder: Option<f64>,
    pub holder_tolerance: f64,
}

impl Default for Prop1Config {
    fn default() -> Self {
        Prop1Config {
            powers: vec![2, 3],
            holder: None,
            holder_tolerance: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub csv: Option<bool>,
    pub json: Option<bool>,
}

impl OutputConfig {
    pub fn dir(&self) -> PathBuf {
        self.dir.clone().unwrap_or_else(|| PathBuf::from("reports"))
    }
    pub fn csv(&self) -> bool {
        self.csv.unwrap_or(true)
    }
    pub fn json(&self) -> bool {
        self.json.unwrap_or(true)
    }
}

fn default_n_max() -> u64 {
    10_000_000
}
fn default_trials() -> usize {
    100
}
fn default_tail_fraction() -> f64 {
    DEFAULT_TAIL_FRACTION
}
fn default_empirical_len() -> u64 {
    1_000_000
}
fn default_mode() -> ProfileMode {
    ProfileMode::Hitting
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub name: Option<String>,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_mode")]
    pub mode: ProfileMode,
    /// Orbit length for empirical ball measures.
    #[serde(default = "default_empirical_len")]
    pub empirical_len: u64,
    pub system: Option<SystemDescriptor>,
    pub schedule: Option<ScheduleConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub lemma1: Lemma1Config,
    #[serde(default)]
    pub lemma2: Lemma2Config,
    #[serde(default)]
    pub birkhoff: BirkhoffConfig,
    #[serde(default)]
    pub theorem4: Theorem4Config,
    #[serde(default)]
    pub prop1: Prop1Config,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(experiment: ExperimentKind, seed: u64) -> Self {
        ExperimentConfig {
            experiment,
            name: None,
            seed,
            trials: default_trials(),
            n_max: default_n_max(),
            tail_fraction: default_tail_fraction(),
            threads: 0,
            mode: default_mode(),
            empirical_len: default_empirical_len(),
            system: None,
            schedule: None,
            tolerances: Tolerances::default(),
            lemma1: Lemma1Config::default(),
            lemma2: Lemma2Config::default(),
            birkhoff: BirkhoffConfig::default(),
            theorem4: Theorem4Config::default(),
            prop1: Prop1Config::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.experiment.as_str().to_string())
    }

    pub fn schedule(&self) -> Result<DyadicSchedule> {
        match &self.schedule {
            Some(s) => s.schedule(),
            None => Err(Error::Config(vec!["schedule: missing".into()])),
        }
    }

    /// Every problem with the config, each prefixed by the offending field.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let kind = self.experiment;
        if self
            .name
            .as_deref()
            .is_some_and(|n| n.is_empty() || n.contains(['/', '\\']))
        {
            out.push("name: must be non-empty and contain no path separators".into());
        }
        if self.trials == 0 && kind != ExperimentKind::Lemma2 {
            out.push("trials: must be at least 1".into());
        }
        if self.n_max == 0 {
            out.push("n_max: must be at least 1".into());
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            out.push(format!("tail_fraction: {} is outside (0, 1]", self.tail_fraction));
        }
        if self.empirical_len < 10_000 {
            out.push("empirical_len: must be at least 10000".into());
        }
        match (&self.system, kind.needs_system()) {
            (None, true) => out.push("system: missing".into()),
            (Some(s), _) => {
                if let Err(e) = s.build() {
                    out.push(format!("system: {e}"));
                }
            }
            _ => {}
        }
        match (&self.schedule, kind.needs_schedule()) {
            (None, true) => out.push("schedule: missing".into()),
            (Some(s), _) => {
                if let Err(e) = s.schedule() {
                    out.push(format!("schedule: {e}"));
                }
            }
            _ => {}
        }
        let t = &self.tolerances;
        for (field, value) in [
            ("median", t.median),
            ("trial", t.trial),
            ("band", t.band),
            ("sandwich", t.sandwich),
            ("increment", t.increment),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                out.push(format!("tolerances.{field}: {value} must be finite and non-negative"));
            }
        }
        if !(t.trial_fraction >= 0.0 && t.trial_fraction <= 1.0) {
            out.push(format!(
                "tolerances.trial_fraction: {} is outside [0, 1]",
                t.trial_fraction
            ));
        }
        match kind {
            ExperimentKind::Lemma1 => {
                let c = &self.lemma1;
                if !(c.epsilon > 0.0) {
                    out.push(format!("lemma1.epsilon: {} must be positive", c.epsilon));
                }
                if c.samples < 100 {
                    out.push("lemma1.samples: must be at least 100".into());
                }
                if c.horizon_cap == 0 {
                    out.push("lemma1.horizon_cap: must be at least 1".into());
                }
                if c.center.as_ref().is_some_and(|v| v.is_empty() || v.len() > 2) {
                    out.push("lemma1.center: must have one or two coordinates".into());
                }
            }
            ExperimentKind::Lemma2 => {
                let c = &self.lemma2;
                if c.m.is_empty() {
                    out.push("lemma2.m: must list at least one value".into());
                }
                if let Some(m) = c.m.iter().find(|m| !(**m > 0.0 && **m < 1.0)) {
                    out.push(format!("lemma2.m: {m} is outside (0, 1)"));
                }
                if c.n_max < 2 {
                    out.push("lemma2.n_max: must be at least 2".into());
                }
            }
            ExperimentKind::BirkhoffSandwich => {
                let c = &self.birkhoff;
                if !(8..=40).contains(&c.log2_n) {
                    out.push(format!("birkhoff.log2_n: {} is outside 8..=40", c.log2_n));
                }
                if c.observable == ObservableKind::Pole && !(c.alpha > 1.0 && c.alpha.is_finite()) {
                    out.push(format!("birkhoff.alpha: {} must exceed 1", c.alpha));
                }
                if c.pole == PolePlacement::Discontinuity && !self.system.as_ref().is_some_and(|s| s.is_iet()) {
                    out.push("birkhoff.pole: discontinuity poles need an interval exchange system".into());
                }
                if c.reference_r.is_some_and(|r| !(r > 0.0)) {
                    out.push("birkhoff.reference_r: must be positive".into());
                }
            }
            ExperimentKind::Theorem4 => {
                let c = &self.theorem4;
                if let Some(s) = &self.system {
                    if !s.is_iet() {
                        out.push("system: theorem4 needs an interval exchange".into());
                    }
                } else {
                    if c.iets == 0 {
                        out.push("theorem4.iets: must be at least 1".into());
                    }
                    if !(2..=6).contains(&c.d) {
                        out.push(format!("theorem4.d: {} is outside 2..=6", c.d));
                    }
                }
                if !(1..=1_000_000).contains(&c.gap_horizon) {
                    out.push(format!(
                        "theorem4.gap_horizon: {} is outside 1..=1000000",
                        c.gap_horizon
                    ));
                }
            }
            ExperimentKind::Prop1Identities => {
                if self.prop1.powers.iter().any(|&m| m < 2) {
                    out.push("prop1.powers: every power must be at least 2".into());
                }
                if self.prop1.holder.is_some_and(|a| !(a > 0.0 && a <= 1.0)) {
                    out.push("prop1.holder: must lie in (0, 1]".into());
                }
            }
            _ => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}
