//! Experiment configuration: one TOML document, every field optional.

use csbp::mechanism::{catalog, BranchingMechanism, MechanismSpec};
use csbp::paths::PathConfig;
use csbp::population::LimitThresholds;
use csbp::verify::SuiteConfig;
use csbp::Error;
use serde::{Deserialize, Serialize};

/// A catalog name or an inline definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MechanismRef {
    Catalog(String),
    Inline(MechanismSpec),
}

impl MechanismRef {
    pub fn resolve(&self) -> Result<BranchingMechanism, Error> {
        match self {
            MechanismRef::Catalog(name) => catalog::by_name(name).ok_or_else(|| {
                Error::parse(
                    "mechanism",
                    format!("unknown catalog entry '{name}' (known: {})", catalog::NAMES.join(", ")),
                )
            }),
            MechanismRef::Inline(spec) => BranchingMechanism::try_from(spec.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoalescenceParams {
    pub t: f64,
    pub s: f64,
    pub theta: f64,
    /// Horizons at which the A(t) and B(t) bounds are reported.
    pub bound_times: Vec<f64>,
}

impl Default for CoalescenceParams {
    fn default() -> Self {
        CoalescenceParams {
            t: 1.0,
            s: 1.0,
            theta: 1.0,
            bound_times: vec![1.0, 2.0, 4.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreyParams {
    /// Defaults to γ/2 for supercritical mechanisms and 1 otherwise.
    pub theta: Option<f64>,
    pub t_values: Vec<f64>,
}

impl Default for GreyParams {
    fn default() -> Self {
        GreyParams {
            theta: None,
            t_values: vec![1.0, 5.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mechanism: Option<MechanismRef>,
    pub x: f64,
    pub horizon: f64,
    /// Block count for infinite-variation populations.
    pub blocks: usize,
    /// Path grid step.
    pub h: f64,
    /// Small-jump cutoff of the path engines.
    pub delta: f64,
    /// Smallest initial atom mass in finite-variation populations.
    pub eps: f64,
    pub floor: f64,
    pub eta: f64,
    pub floors: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub out: Option<String>,
    pub threads: Option<usize>,
    /// Fraction of runs whose limit structure must match the prediction.
    pub pass_fraction: f64,
    pub eve_fraction: f64,
    pub dust_level: f64,
    pub dust_fraction: f64,
    pub level: f64,
    pub explosion_threshold: f64,
    pub extinction_threshold: f64,
    pub t_grid: Vec<f64>,
    pub coalescence: CoalescenceParams,
    pub grey: GreyParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let suite = SuiteConfig::default();
        ExperimentConfig {
            mechanism: None,
            x: 1.0,
            horizon: suite.path.horizon,
            blocks: suite.blocks,
            h: suite.path.h,
            delta: suite.path.delta,
            eps: suite.eps,
            floor: suite.thresholds.floor,
            eta: suite.thresholds.eta,
            floors: suite.floors,
            runs: suite.runs,
            seed: 0,
            out: None,
            threads: None,
            pass_fraction: 0.9,
            eve_fraction: suite.eve_fraction,
            dust_level: suite.dust_level,
            dust_fraction: suite.dust_fraction,
            level: suite.level,
            explosion_threshold: suite.explosion_threshold,
            extinction_threshold: suite.extinction_threshold,
            t_grid: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            coalescence: CoalescenceParams::default(),
            grey: GreyParams::default(),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), Error> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::parse(field, format!("must be positive and finite, got {v}")))
    }
}

fn fraction(field: &str, v: f64) -> Result<(), Error> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::parse(field, format!("must lie in [0, 1], got {v}")))
    }
}

impl ExperimentConfig {
    /// Parses TOML, reporting the line and column of the first problem.
    pub fn from_toml(text: &str, source: &str) -> Result<Self, Error> {
        let cfg = Self::parse(text, source)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without range checks, for configs that flags will still override.
    pub fn parse(text: &str, source: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| toml_error(&e, text, source))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn validate(&self) -> Result<(), Error> {
        positive("x", self.x)?;
        positive("horizon", self.horizon)?;
        positive("h", self.h)?;
        positive("delta", self.delta)?;
        positive("eps", self.eps)?;
        positive("floor", self.floor)?;
        positive("explosion_threshold", self.explosion_threshold)?;
        positive("extinction_threshold", self.extinction_threshold)?;
        fraction("eta", self.eta)?;
        fraction("pass_fraction", self.pass_fraction)?;
        fraction("eve_fraction", self.eve_fraction)?;
        fraction("dust_fraction", self.dust_fraction)?;
        fraction("level", self.level)?;
        if self.blocks == 0 {
            return Err(Error::parse("blocks", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::parse("threads", "must be at least 1"));
        }
        for (i, &f) in self.floors.iter().enumerate() {
            positive(&format!("floors[{i}]"), f)?;
        }
        for (i, &t) in self.t_grid.iter().enumerate() {
            positive(&format!("t_grid[{i}]"), t)?;
        }
        positive("coalescence.t", self.coalescence.t)?;
        positive("coalescence.theta", self.coalescence.theta)?;
        if !(self.coalescence.s >= 0.0) {
            return Err(Error::parse("coalescence.s", "must be nonnegative"));
        }
        self.path().validate().map_err(|e| Error::parse("path", e.to_string()))
    }

    pub fn mechanism(&self) -> Result<BranchingMechanism, Error> {
        self.mechanism
            .as_ref()
            .ok_or_else(|| Error::parse("mechanism", "no mechanism given (use --catalog, --mechanism or a config file)"))?
            .resolve()
    }

    pub fn path(&self) -> PathConfig {
        PathConfig {
            h: self.h,
            delta: self.delta,
            horizon: self.horizon,
            seed: self.seed,
            ..Default::default()
        }
    }

    pub fn suite(&self) -> SuiteConfig {
        SuiteConfig {
            runs: self.runs,
            seed: self.seed,
            blocks: self.blocks,
            eps: self.eps,
            thresholds: LimitThresholds {
                floor: self.floor,
                eta: self.eta,
            },
            floors: self.floors.clone(),
            eve_fraction: self.eve_fraction,
            dust_level: self.dust_level,
            dust_fraction: self.dust_fraction,
            dense_fraction: self.pass_fraction,
            level: self.level,
            explosion_threshold: self.explosion_threshold,
            extinction_threshold: self.extinction_threshold,
            path: self.path(),
        }
    }
}

fn toml_error(e: &toml::de::Error, text: &str, source: &str) -> Error {
    let message = e.message().trim().to_string();
    match e.span() {
        Some(span) => {
            let start = span.start.min(text.len());
            let before = &text[..start];
            let line_start = before.rfind('\n').map_or(0, |i| i + 1);
            let line = before.matches('\n').count() + 1;
            let col = start - line_start + 1;
            let content = text[line_start..].lines().next().unwrap_or("").trim();
            Error::parse(format!("{source}:{line}:{col}"), format!("{message} (in `{content}`)"))
        }
        None => Error::parse(source, message),
    }
}

/// Parses an inline mechanism given as a TOML inline table, e.g.
/// `{ alpha = -1.0, beta = 1.0 }` or `{ component = [{ kind = "atom", location = 1.0, mass = 1.0 }], alpha = 2.0 }`.
pub fn parse_inline_mechanism(text: &str) -> Result<BranchingMechanism, Error> {
    let doc = format!("mechanism = {text}\n");
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Wrapper {
        mechanism: MechanismSpec,
    }
    const PREFIX: usize = "mechanism = ".len();
    let w: Wrapper = toml::from_str(&doc).map_err(|e| {
        let col = e.span().map_or(1, |s| s.start.saturating_sub(PREFIX).min(text.len()) + 1);
        Error::parse(format!("--mechanism, column {col}"), e.message().trim().to_string())
    })?;
    BranchingMechanism::try_from(w.mechanism)
}
