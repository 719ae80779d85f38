//! JSON run configuration and TOML policy files.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::lp::ThresholdPolicy;
use crate::model::{self, ModelError, SystemConfig};

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub theta: Vec<f64>,
    pub eta: Vec<f64>,
    pub power: Vec<f64>,
    #[serde(rename = "K", default = "default_capacity")]
    pub capacity: usize,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub budgets: Option<Vec<f64>>,
    #[serde(default)]
    pub slots: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Delay charged per lost packet; defaults to the LP's own choice.
    #[serde(default)]
    pub loss_penalty: Option<f64>,
}

fn default_capacity() -> usize {
    model::DEFAULT_CAPACITY
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Parse(format!(
                "{origin}: line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn system(&self) -> Result<SystemConfig, CliError> {
        model::validate(&self.theta, &self.eta, &self.power, self.capacity)
            .map_err(|e| CliError::Parse(format!("invalid config: {}: {e}", field_of(&e))))
    }
}

fn field_of(e: &ModelError) -> &'static str {
    match e {
        ModelError::NonNormalized { what, .. }
        | ModelError::InvalidProbability { what, .. }
        | ModelError::Empty { what } => what,
        ModelError::NonIncreasingPower { .. } => "power",
        ModelError::ChannelLengthMismatch { .. } => "eta/power",
        ModelError::Unstable { .. } => "theta",
        ModelError::BufferTooSmall { .. } => "K",
        ModelError::IndexOutOfRange { .. } => "theta",
    }
}

/// Threshold policy plus the predicted operating point, as written by `solve`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct PolicyFile {
    #[serde(rename = "K")]
    pub capacity: usize,
    pub thresholds: Vec<usize>,
    pub frac: Vec<f64>,
    pub budget: f64,
    pub delay: f64,
    pub power: f64,
    pub loss: f64,
}

impl PolicyFile {
    pub fn threshold_policy(&self) -> ThresholdPolicy {
        ThresholdPolicy {
            thresholds: self.thresholds.clone(),
            frac: self.frac.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }

    /// TOML body; floats use 17 significant digits so a round trip is exact.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let list = |v: &[String]| format!("[{}]", v.join(", "));
        let ints: Vec<String> = self.thresholds.iter().map(|t| t.to_string()).collect();
        let fracs: Vec<String> = self.frac.iter().map(|f| toml_float(*f)).collect();
        let _ = writeln!(s, "K = {}", self.capacity);
        let _ = writeln!(s, "thresholds = {}", list(&ints));
        let _ = writeln!(s, "frac = {}", list(&fracs));
        let _ = writeln!(s, "budget = {}", toml_float(self.budget));
        let _ = writeln!(s, "delay = {}", toml_float(self.delay));
        let _ = writeln!(s, "power = {}", toml_float(self.power));
        let _ = writeln!(s, "loss = {}", toml_float(self.loss));
        s
    }
}

fn toml_float(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'i', 'N']) {
        s
    } else {
        format!("{s}.0")
    }
}
