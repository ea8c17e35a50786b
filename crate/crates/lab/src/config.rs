//! Experiment configuration. One JSON document per run; every section has
//! defaults except `experiment` and `seed`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use symlab_core::cocycle::Word;
use symlab_core::dynamics::{MapFamily, SearchConfig};
use symlab_core::symplectic::MatrixRows;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Classify,
    Orbits,
    Entropy,
    Snake,
    Scan,
    Diagonalize,
    Inequality,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Classify => "classify",
            Experiment::Orbits => "orbits",
            Experiment::Entropy => "entropy",
            Experiment::Snake => "snake",
            Experiment::Scan => "scan",
            Experiment::Diagonalize => "diagonalize",
            Experiment::Inequality => "inequality",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(default)]
    pub map: Option<MapFamily>,
    /// Input of `classify`.
    #[serde(default)]
    pub matrices: Vec<MatrixRows>,
    #[serde(default)]
    pub orbits: OrbitSettings,
    #[serde(default)]
    pub entropy: EntropySettings,
    #[serde(default)]
    pub snake: SnakeSettings,
    #[serde(default)]
    pub scan: ScanSettings,
    #[serde(default)]
    pub diagonalize: DiagonalizeSettings,
    #[serde(default)]
    pub inequality: InequalitySettings,
    #[serde(default)]
    pub output: OutputSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSettings {
    pub max_period: usize,
    pub search: SearchConfig,
    pub probe_per_axis: usize,
}

impl Default for OrbitSettings {
    fn default() -> Self {
        OrbitSettings { max_period: 4, search: SearchConfig::default(), probe_per_axis: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropySettings {
    pub eps: Vec<f64>,
    pub n: Vec<usize>,
    pub budget: usize,
}

impl Default for EntropySettings {
    fn default() -> Self {
        EntropySettings { eps: vec![0.05, 0.1, 0.2], n: (1..=14).collect(), budget: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnakeSettings {
    /// Expanding factors of the diagonal linear model.
    pub lambdas: Vec<f64>,
    pub m: usize,
    pub r: f64,
    pub delta: f64,
    pub chart: f64,
    pub transit: u64,
    pub n_values: Vec<u64>,
    /// Slack integer of the closing inequality.
    pub k: u32,
    /// The inequality scan runs over `N = 2^1 .. 2^max_log2`.
    pub max_log2: u32,
}

impl Default for SnakeSettings {
    fn default() -> Self {
        SnakeSettings {
            lambdas: vec![4.0, 2.0],
            m: 1,
            r: 0.1,
            delta: 0.1,
            chart: 1.0,
            transit: 0,
            n_values: vec![2, 4, 8, 16],
            k: 10,
            max_log2: 160,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanCell {
    pub name: String,
    pub map: MapFamily,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSettings {
    pub cells: Vec<ScanCell>,
    pub max_period: usize,
    pub search: SearchConfig,
    pub probe_per_axis: usize,
    /// Largest power tried by the domination test.
    pub max_l: usize,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            cells: Vec::new(),
            max_period: 2,
            search: SearchConfig { seeds_per_axis: 24, ..SearchConfig::default() },
            probe_per_axis: 4,
            max_l: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomWords {
    pub count: usize,
    pub max_len: usize,
    /// Half-dimensions to cycle through.
    pub half_dims: Vec<usize>,
    pub radius: f64,
    /// Also run each word with a rotation letter appended.
    pub contaminate: bool,
}

impl Default for RandomWords {
    fn default() -> Self {
        RandomWords { count: 10, max_len: 20, half_dims: vec![1, 2], radius: 1.5, contaminate: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagonalizeSettings {
    pub words: Vec<Word>,
    /// Self-transition used for explicit words; random words draw their own.
    pub transition: Option<Word>,
    pub random: Option<RandomWords>,
    pub eps: f64,
}

impl Default for DiagonalizeSettings {
    fn default() -> Self {
        DiagonalizeSettings { words: Vec::new(), transition: None, random: None, eps: 0.05 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterMode {
    /// `E^c` is the whole space.
    Full,
    /// Per-orbit eigen-modulus gap, certified by a domination test.
    Gap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalitySettings {
    pub max_period: usize,
    pub center: CenterMode,
    pub tolerance: f64,
}

impl Default for InequalitySettings {
    fn default() -> Self {
        InequalitySettings { max_period: 4, center: CenterMode::Gap, tolerance: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if let Some(map) = &self.map {
            if let Err(e) = map.validate() {
                return bad(format!("map: {e}"));
            }
        }
        let needs_map = matches!(self.experiment, Experiment::Orbits | Experiment::Entropy | Experiment::Inequality);
        if needs_map && self.map.is_none() {
            return bad(format!("experiment '{}' needs a map", self.experiment.name()));
        }
        match self.experiment {
            Experiment::Classify if self.matrices.is_empty() => bad("classify needs at least one matrix".into()),
            Experiment::Scan if self.scan.cells.is_empty() => bad("scan needs at least one cell".into()),
            Experiment::Scan => {
                for c in &self.scan.cells {
                    if let Err(e) = c.map.validate() {
                        return bad(format!("cell '{}': {e}", c.name));
                    }
                }
                Ok(())
            }
            Experiment::Diagonalize if self.diagonalize.words.is_empty() && self.diagonalize.random.is_none() => {
                bad("diagonalize needs words or a random section".into())
            }
            Experiment::Diagonalize if !(self.diagonalize.eps > 0.0 && self.diagonalize.eps.is_finite()) => {
                bad("diagonalize eps must be positive".into())
            }
            Experiment::Entropy | Experiment::Inequality => {
                symlab_core::entropy::validate_grids(&self.entropy.eps, &self.entropy.n)
                    .or_else(|e| bad(format!("entropy: {e}")))?;
                if self.entropy.budget == 0 {
                    return bad("entropy budget must be positive".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}
