use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use subradiance::localization::CenterEstimator;
use subradiance::spectrum::{ModeTarget, Selector, Solver, TargetKind};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config is not valid JSON: {0}")]
    Syntax(serde_json::Error),
    #[error("config field `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub targets: Vec<TargetConfig>,
    pub ensemble: EnsembleSection,
    pub spectrum: SpectrumSection,
    pub analysis: AnalysisSection,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// `phi = k0 d` in units of pi.
    pub phi_over_pi: f64,
    pub gamma: f64,
    /// Lattice spacing; scales reported positions only.
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub sizes: Vec<usize>,
    pub disorders: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub kind: TargetKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_over_pi: Option<f64>,
    #[serde(default)]
    pub selector: Selector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKindName {
    BandEdgeLow,
    BandEdgeHigh,
    FixedK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_realizations: u64,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub solver: Solver,
    pub max_failure_fraction: f64,
    /// Cells whose per-realization mode summaries are written to
    /// `samples.csv` for the localization analysis.
    pub sample_sizes: Vec<usize>,
    pub sample_disorders: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub n_qubits: usize,
    pub disorder_w: f64,
    pub realizations: u64,
    pub first_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub scaling: bool,
    pub fss: bool,
    pub localization: bool,
    /// Sizes entering the semilog and log-log fits.
    pub fit_window: (usize, usize),
    /// Sizes entering the exponential fit used for the crossover size.
    pub crossover_fit_window: (usize, usize),
    pub collapse_sizes: Vec<usize>,
    /// Lower summation limit of the alternative `xi` column in `xi_table.csv`.
    pub xi_alt_n_min: usize,
    /// Disorder range of the collapse for targets below `phi`.
    pub strong_window: (f64, f64),
    /// Disorder range of the collapse for targets above `phi`.
    pub weak_window: (f64, f64),
    /// Disorder range of the `xi_phi` collapse for every target.
    pub xi_phi_window: (f64, f64),
    pub bootstrap: usize,
    /// `k / pi` of the target shown in the weak-subradiant panels.
    pub weak_k_over_pi: f64,
    /// Cells whose `N >= factor * N_c` count as saturated.
    pub saturation_factor: f64,
    /// Wavepacket centre used for the effective potential.
    pub center_estimator: CenterEstimator,
}

fn default_sizes() -> Vec<usize> {
    (1..=50).chain((3..=16).map(|i| 25 * i)).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format_version: FORMAT_VERSION,
            model: ModelConfig::default(),
            grid: GridConfig::default(),
            targets: vec![
                TargetConfig {
                    kind: TargetKindName::BandEdgeLow,
                    k_over_pi: None,
                    selector: Selector::default(),
                },
                TargetConfig {
                    kind: TargetKindName::FixedK,
                    k_over_pi: Some(0.75),
                    selector: Selector::default(),
                },
            ],
            ensemble: EnsembleSection::default(),
            spectrum: SpectrumSection::default(),
            analysis: AnalysisSection::default(),
            output: "out".into(),
        }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            phi_over_pi: 0.5,
            gamma: 1.0,
            d: 1.0,
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            sizes: default_sizes(),
            disorders: vec![
                0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1, 0.12, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7,
                0.8, 0.9,
            ],
        }
    }
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            n_realizations: 1000,
            master_seed: 0,
            workers: None,
            solver: Solver::default(),
            max_failure_fraction: 0.01,
            sample_sizes: vec![100, 200, 300, 400],
            sample_disorders: vec![0.2],
        }
    }
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            n_qubits: 100,
            disorder_w: 0.0,
            realizations: 1,
            first_index: 0,
        }
    }
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            scaling: true,
            fss: true,
            localization: true,
            fit_window: (100, 400),
            crossover_fit_window: (200, 400),
            collapse_sizes: vec![100, 200, 300, 400],
            xi_alt_n_min: 25,
            strong_window: (0.01, 0.6),
            weak_window: (0.4, 0.9),
            xi_phi_window: (0.01, 0.6),
            bootstrap: 100,
            weak_k_over_pi: 0.75,
            saturation_factor: 2.0,
            center_estimator: CenterEstimator::default(),
        }
    }
}

impl TargetConfig {
    pub fn to_target(&self) -> Result<ModeTarget, ConfigError> {
        let kind = match (self.kind, self.k_over_pi) {
            (TargetKindName::BandEdgeLow, None) => TargetKind::BandEdgeLow,
            (TargetKindName::BandEdgeHigh, None) => TargetKind::BandEdgeHigh,
            (TargetKindName::FixedK, Some(k)) => TargetKind::FixedK(k * PI),
            (TargetKindName::FixedK, None) => {
                return Err(ConfigError::Invalid("fixed_k target needs k_over_pi".into()))
            }
            (_, Some(_)) => return Err(ConfigError::Invalid("k_over_pi applies to fixed_k targets only".into())),
        };
        let target = ModeTarget {
            kind,
            selector: self.selector,
        };
        target.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(target)
    }
}

fn from_value(value: Value) -> Result<RunConfig, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| ConfigError::Field {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Parses `value` as JSON, falling back to a plain string.
fn parse_scalar(value: &str) -> Value {
    serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()))
}

fn set_dotted(root: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if !map.contains_key(*part) {
                    return Err(ConfigError::Field {
                        path: parts[..=i].join("."),
                        message: "unknown key".into(),
                    });
                }
                map.get_mut(*part).expect("key checked")
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| ConfigError::Field {
                    path: parts[..=i].join("."),
                    message: "expected an array index".into(),
                })?;
                let len = items.len();
                items.get_mut(idx).ok_or_else(|| ConfigError::Field {
                    path: parts[..=i].join("."),
                    message: format!("index out of range (length {len})"),
                })?
            }
            _ => {
                return Err(ConfigError::Field {
                    path: parts[..i].join("."),
                    message: "not a section".into(),
                })
            }
        };
        if last {
            *node = value;
            return Ok(());
        }
    }
    Err(ConfigError::Override(key.to_string()))
}

impl RunConfig {
    /// Loads the config file (or defaults), then applies `key=value`
    /// overrides by dotted path.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
        let base = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.display().to_string(),
                    source,
                })?;
                let value: Value = serde_json::from_str(&text).map_err(ConfigError::Syntax)?;
                from_value(value)?
            }
            None => RunConfig::default(),
        };
        let mut value = serde_json::to_value(&base).expect("config serializes");
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| ConfigError::Override(item.clone()))?;
            set_dotted(&mut value, key.trim(), parse_scalar(raw.trim()))?;
        }
        let config = from_value(value)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.format_version != FORMAT_VERSION {
            return bad(format!(
                "format_version {} (supported: {FORMAT_VERSION})",
                self.format_version
            ));
        }
        let m = &self.model;
        if !(m.phi_over_pi > 0.0 && m.phi_over_pi < 1.0) {
            return bad(format!("model.phi_over_pi = {} outside (0, 1)", m.phi_over_pi));
        }
        if !(m.gamma > 0.0 && m.gamma.is_finite()) || !(m.d > 0.0 && m.d.is_finite()) {
            return bad("model.gamma and model.d must be positive".into());
        }
        if self.grid.sizes.is_empty() || self.grid.sizes.contains(&0) {
            return bad("grid.sizes must be non-empty and positive".into());
        }
        if !self.grid.sizes.windows(2).all(|w| w[0] < w[1]) {
            return bad("grid.sizes must be strictly increasing".into());
        }
        for &w in self.grid.disorders.iter().chain(&self.ensemble.sample_disorders) {
            if !(0.0..1.0).contains(&w) {
                return bad(format!("disorder {w} outside [0, 1)"));
            }
        }
        if self.targets.is_empty() {
            return bad("targets must not be empty".into());
        }
        for t in &self.targets {
            t.to_target()?;
        }
        if self.ensemble.n_realizations == 0 {
            return bad("ensemble.n_realizations must be at least 1".into());
        }
        if self.ensemble.workers == Some(0) {
            return bad("ensemble.workers must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.ensemble.max_failure_fraction) {
            return bad("ensemble.max_failure_fraction outside [0, 1]".into());
        }
        if self.spectrum.n_qubits == 0 || self.spectrum.realizations == 0 {
            return bad("spectrum.n_qubits and spectrum.realizations must be positive".into());
        }
        if !(0.0..1.0).contains(&self.spectrum.disorder_w) {
            return bad(format!(
                "spectrum.disorder_w = {} outside [0, 1)",
                self.spectrum.disorder_w
            ));
        }
        let a = &self.analysis;
        for (name, (lo, hi)) in [
            ("strong_window", a.strong_window),
            ("weak_window", a.weak_window),
            ("xi_phi_window", a.xi_phi_window),
        ] {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return bad(format!("analysis.{name} = ({lo}, {hi}) is empty"));
            }
        }
        for (name, (lo, hi)) in [
            ("fit_window", a.fit_window),
            ("crossover_fit_window", a.crossover_fit_window),
        ] {
            if lo >= hi {
                return bad(format!("analysis.{name} = ({lo}, {hi}) is empty"));
            }
        }
        Ok(())
    }

    pub fn phi(&self) -> f64 {
        self.model.phi_over_pi * PI
    }

    pub fn targets(&self) -> Vec<ModeTarget> {
        self.targets.iter().map(|t| t.to_target().expect("validated")).collect()
    }

    /// The configuration without the settings that cannot change results
    /// (output location and worker count).
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        c.output = String::new();
        c.ensemble.workers = None;
        c
    }

    /// Hex SHA-256 of the canonical JSON form of [`RunConfig::resolved`].
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.resolved()).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
