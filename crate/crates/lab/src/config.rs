//! Experiment configuration: one TOML document with a section per experiment
//! kind. Unknown keys anywhere are rejected before any computation starts.

use std::path::{Path, PathBuf};

use critfuse_core::deficitlab::{DeficitKind, RunConfig, Window};
use critfuse_core::gradsim::Init;
use critfuse_core::lindyn::{counterfactual_drop, CrossCorrelation};
use critfuse_core::rsv::RsvConfig;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::matrix::{parse_matrix, read_matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Lindyn,
    Gradsim,
    RsvSim,
    Deficit,
    Sweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Lindyn => "lindyn",
            Kind::Gradsim => "gradsim",
            Kind::RsvSim => "rsv-sim",
            Kind::Deficit => "deficit",
            Kind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// When present, must match the subcommand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    /// Master seed; replaces the seeds inside the sections.
    pub seed: u64,
    /// Worker threads for sweeps.
    pub jobs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Deficit runs: also write the generated dataset.
    pub write_dataset: bool,
    /// Deficit runs: also write an activation dump of the final representation.
    pub write_activations: bool,
    pub lindyn: LindynConfig,
    pub gradsim: GradsimConfig,
    pub rsv_sim: RsvSimConfig,
    pub deficit: RunConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            seed: 0,
            jobs: 1,
            out: None,
            write_dataset: false,
            write_activations: false,
            lindyn: LindynConfig::default(),
            gradsim: GradsimConfig::default(),
            rsv_sim: RsvSimConfig::default(),
            deficit: RunConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Copies the master seed into every section that draws random numbers.
    pub fn resolve_seeds(&mut self) {
        self.rsv_sim.rsv.seed = self.seed;
        self.deficit.seed = self.seed;
        self.deficit.task.seed = self.seed;
        if let Some(rsv) = &mut self.deficit.rsv {
            rsv.seed = self.seed;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.jobs == 0 {
            return Err(LabError::config("jobs must be >= 1"));
        }
        Ok(())
    }
}

/// Where a cross-correlation matrix comes from; exactly one field is set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatrixSource {
    /// `appendix-pre` or `appendix-post`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    /// Plain-text matrix file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Inline literal, rows separated by `;`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
}

impl MatrixSource {
    pub fn fixture(name: &str) -> Self {
        MatrixSource {
            fixture: Some(name.into()),
            ..MatrixSource::default()
        }
    }

    pub fn is_set(&self) -> bool {
        self.fixture.is_some() || self.file.is_some() || self.literal.is_some() || self.rows.is_some()
    }

    pub fn load(&self, what: &str, base: &Path) -> Result<CrossCorrelation> {
        let set = [
            self.fixture.is_some(),
            self.file.is_some(),
            self.literal.is_some(),
            self.rows.is_some(),
        ]
        .iter()
        .filter(|s| **s)
        .count();
        if set != 1 {
            return Err(LabError::config(format!(
                "{what}: set exactly one of fixture, file, literal, rows"
            )));
        }
        if let Some(name) = &self.fixture {
            return CrossCorrelation::fixture(name)
                .ok_or_else(|| LabError::config(format!("{what}.fixture: unknown fixture `{name}`")));
        }
        if let Some(file) = &self.file {
            return read_matrix(&base.join(file));
        }
        if let Some(text) = &self.literal {
            return parse_matrix(text);
        }
        let rows = self.rows.as_ref().expect("counted above");
        CrossCorrelation::from_rows(rows).map_err(|e| LabError::config(format!("{what}.rows: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LindynConfig {
    pub sigma: MatrixSource,
    /// Input column removed in the counterfactual.
    pub drop_source: usize,
    pub tau: f64,
    /// Initial strength of every mode.
    pub a0: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for LindynConfig {
    fn default() -> Self {
        LindynConfig {
            sigma: MatrixSource::fixture("appendix-pre"),
            drop_source: 2,
            tau: 100.0,
            a0: 1e-4,
            t_max: 1500.0,
            points: 301,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradsimConfig {
    pub sigma: MatrixSource,
    /// Target during the initial deficit phase; defaults to `sigma` with
    /// `drop_source` removed.
    pub deficit_sigma: MatrixSource,
    pub drop_source: Option<usize>,
    pub deficit_steps: usize,
    pub steps: usize,
    pub depth: usize,
    pub hidden_width: usize,
    pub init: Init,
    /// Raw step size; ignored when `eta_normalized` is set.
    pub eta: f64,
    /// Step size divided by the largest singular value of `sigma`.
    pub eta_normalized: Option<f64>,
    pub record_stride: usize,
}

impl Default for GradsimConfig {
    fn default() -> Self {
        GradsimConfig {
            sigma: MatrixSource::fixture("appendix-pre"),
            deficit_sigma: MatrixSource::default(),
            drop_source: None,
            deficit_steps: 0,
            steps: 20_000,
            depth: 2,
            hidden_width: 16,
            init: Init::default(),
            eta: 1e-3,
            eta_normalized: None,
            record_stride: 50,
        }
    }
}

impl GradsimConfig {
    /// Clean and deficit targets.
    pub fn targets(&self, base: &Path) -> Result<(CrossCorrelation, Option<CrossCorrelation>)> {
        let clean = self.sigma.load("gradsim.sigma", base)?;
        let deficit = match (self.deficit_sigma.is_set(), self.drop_source) {
            (true, None) => Some(self.deficit_sigma.load("gradsim.deficit_sigma", base)?),
            (false, Some(k)) => Some(
                counterfactual_drop(&clean, k).map_err(|e| LabError::config(format!("gradsim.drop_source: {e}")))?,
            ),
            (false, None) => None,
            (true, Some(_)) => {
                return Err(LabError::config(
                    "gradsim: set either deficit_sigma or drop_source, not both",
                ))
            }
        };
        if deficit.is_none() && self.deficit_steps > 0 {
            return Err(LabError::config(
                "gradsim.deficit_steps needs deficit_sigma or drop_source",
            ));
        }
        Ok((clean, deficit))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RsvSimConfig {
    pub alpha: f64,
    pub beta: f64,
    pub units: usize,
    /// Fraction of units with the two sources exchanged.
    pub mixing: f64,
    pub sigma0: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub rsv: RsvConfig,
    /// Analyse this activation dump instead of sampling the synthetic model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activations: Option<PathBuf>,
    /// Points of the closed-form curve over `w` in `[0, 1]`.
    pub curve_points: usize,
}

impl Default for RsvSimConfig {
    fn default() -> Self {
        RsvSimConfig {
            alpha: 1.0,
            beta: 20.0,
            units: 512,
            mixing: 0.5,
            sigma0: 1.0,
            sigma_a: 1.0,
            sigma_b: 1.0,
            rsv: RsvConfig::default(),
            activations: None,
            curve_points: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    /// Initial window `[0, value)`.
    WindowLength,
    /// Sliding window `[value, value + window_length)`.
    WindowStart,
    /// Trunk depth, with the deficit in `[0, window_length)`.
    Depth,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::WindowLength => "window-length",
            SweepVariable::WindowStart => "window-start",
            SweepVariable::Depth => "depth",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            SweepVariable::WindowLength,
            SweepVariable::WindowStart,
            SweepVariable::Depth,
        ]
        .into_iter()
        .find(|v| v.name() == s)
    }
}

/// Grid over one variable; the base run is the `deficit` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub values: Vec<usize>,
    pub deficit: DeficitKind,
    pub window_length: usize,
    /// Seeds per grid point; replicate `r` uses `seed ^ r`.
    pub replicates: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            variable: SweepVariable::WindowLength,
            values: vec![0, 10, 20, 40],
            deficit: DeficitKind::Dissociation,
            window_length: 10,
            replicates: 2,
        }
    }
}

impl SweepConfig {
    pub fn window_for(&self, value: usize) -> Window {
        match self.variable {
            SweepVariable::WindowLength => Window::Initial { epochs: value },
            SweepVariable::WindowStart => Window::Sliding {
                start: value,
                length: self.window_length,
            },
            SweepVariable::Depth => Window::Initial {
                epochs: self.window_length,
            },
        }
    }
}

/// Sets `path` (dotted) inside a TOML table, creating tables on the way.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| LabError::config(format!("--set expects key=value, got `{assignment}`")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(|p| p.is_empty()) {
        return Err(LabError::config(format!("--set: malformed key `{key}`")));
    }
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.split('.').collect();
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(LabError::config(format!("--set {key}: `{part}` is not a table"))),
        };
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Parses the config text, applies `--set` overrides, and checks the schema.
pub fn load(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| LabError::config(format!("config parse error: {}", e.message())))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let rendered = toml::to_string(&doc).map_err(LabError::compute)?;
    toml::from_str::<ExperimentConfig>(&rendered).map_err(|e| {
        let keys = e.message().to_string();
        LabError::config(format!("schema error: {keys}"))
    })
}

pub fn load_file(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| LabError::config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    load(&text, overrides)
}

/// Canonical text form, used for the snapshot and the config hash.
pub fn snapshot(config: &ExperimentConfig) -> Result<String> {
    toml::to_string(config).map_err(LabError::compute)
}
