//! Experiment configuration (TOML).
//!
//! ```toml
//! seed = 7
//! folds = 4
//!
//! [[corpus]]
//! path = "data/bach-chorales"
//! dataset = "bach"
//!
//! [[models]]
//! mode = "BOTH+"
//! ```
//!
//! Relative corpus and profile paths are resolved against the directory of
//! the config file.

use std::path::{Path, PathBuf};

use chordseq::encoder::OverflowPolicy;
use chordseq::evalkit::{BootstrapConfig, Criterion, StepwiseConfig};
use chordseq::keyscape::{builtin_profile, parse_profiles, KeyFinder, KeyProfile, Weighting, WindowConfig, DEFAULT_PROFILE};
use chordseq::ppm::{ModelConfig, ModelMode, OrderPolicy, DEFAULT_BIAS};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub corpus: Vec<CorpusEntry>,
    #[serde(default)]
    pub keys: KeySettings,
    #[serde(default)]
    pub encoder: EncoderSettings,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSettings>,
    #[serde(default)]
    pub bootstrap: BootstrapSettings,
    #[serde(default)]
    pub regression: RegressionSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    /// A MIDI file or a directory searched recursively for `.mid`/`.midi`.
    pub path: PathBuf,
    pub dataset: String,
    #[serde(default)]
    pub include_percussion: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeySettings {
    pub profile: String,
    /// Profile table to load instead of the built-in one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_file: Option<PathBuf>,
    pub weighting: String,
    /// Window length in quarter notes.
    pub window: u32,
}

impl Default for KeySettings {
    fn default() -> Self {
        Self { profile: DEFAULT_PROFILE.into(), profile_file: None, weighting: "duration".into(), window: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderSettings {
    /// `smallest` or `most-frequent`.
    pub overflow: String,
    /// `corpus` (observed types) or `theoretical` (all 2796 types).
    pub alphabet: String,
}

impl Default for EncoderSettings {
    fn default() -> Self {
        Self { overflow: "smallest".into(), alphabet: "corpus".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSettings {
    /// `LTM`, `LTM+`, `STM` or `BOTH+`.
    pub mode: String,
    /// `*` for PPM*, or a maximum context length.
    #[serde(default = "default_order")]
    pub order: String,
    #[serde(default = "default_bias")]
    pub bias: f64,
    #[serde(default)]
    pub update_exclusion: bool,
    /// Label in reports; derived from the settings when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSettings {
    pub replicates: usize,
    pub level: f64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        let d = BootstrapConfig::default();
        Self { replicates: d.replicates, level: d.level }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressionSettings {
    /// `p-value` or `aic`.
    pub criterion: String,
    pub enter: f64,
    pub remove: f64,
}

impl Default for RegressionSettings {
    fn default() -> Self {
        Self { criterion: "p-value".into(), enter: 0.05, remove: 0.10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSettings {
    /// Write per-token probability traces.
    pub traces: bool,
    /// Write per-onset key traces.
    pub key_traces: bool,
}

fn default_folds() -> usize {
    4
}

fn default_order() -> String {
    "*".into()
}

fn default_bias() -> f64 {
    DEFAULT_BIAS
}

fn default_models() -> Vec<ModelSettings> {
    ["LTM+", "STM", "BOTH+"]
        .into_iter()
        .map(|m| ModelSettings { mode: m.into(), order: default_order(), bias: DEFAULT_BIAS, update_exclusion: false, name: None })
        .collect()
}

/// A model to run, with its report label.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedModel {
    pub name: String,
    pub config: ModelConfig,
}

impl ModelSettings {
    pub fn resolve(&self) -> Result<NamedModel> {
        let mode: ModelMode = self.mode.parse().map_err(|e| config("models.mode", e))?;
        let order: OrderPolicy = self.order.parse().map_err(|e| config("models.order", e))?;
        if !self.bias.is_finite() || self.bias < 0.0 {
            return Err(config("models.bias", format!("must be finite and non-negative, got {}", self.bias)));
        }
        let cfg = ModelConfig { bias: self.bias, update_exclusion: self.update_exclusion, ..ModelConfig::new(mode).with_order(order) };
        let name = self.name.clone().unwrap_or_else(|| {
            let mut n = mode.to_string();
            if order != OrderPolicy::PpmStar {
                n.push_str(&format!("(order={order})"));
            }
            if self.update_exclusion {
                n.push_str("(exclusion)");
            }
            if mode == ModelMode::BothPlus && self.bias != DEFAULT_BIAS {
                n.push_str(&format!("(b={})", self.bias));
            }
            n
        });
        Ok(NamedModel { name, config: cfg })
    }
}

/// Which ids the models predict over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphabetChoice {
    Corpus,
    Theoretical,
}

impl std::str::FromStr for AlphabetChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "corpus" => Ok(Self::Corpus),
            "theoretical" => Ok(Self::Theoretical),
            other => Err(format!("unknown alphabet {other:?} (expected corpus or theoretical)")),
        }
    }
}

pub fn load_profile(name: &str, file: Option<&Path>) -> Result<KeyProfile> {
    match file {
        None => builtin_profile(name).map_err(|e| config("keys.profile", e)),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| config(path.display(), e))?;
            let profiles = parse_profiles(&text).map_err(|e| config(path.display(), e))?;
            profiles
                .into_iter()
                .find(|p| p.name() == name)
                .ok_or_else(|| config(path.display(), format!("no profile named {name:?}")))
        }
    }
}

impl KeySettings {
    pub fn finder(&self) -> Result<KeyFinder> {
        let weighting: Weighting = self.weighting.parse().map_err(|e| config("keys.weighting", e))?;
        if self.window == 0 {
            return Err(config("keys.window", "must be positive"));
        }
        let profile = load_profile(&self.profile, self.profile_file.as_deref())?;
        Ok(KeyFinder::new(profile, WindowConfig { width: Ratio::from_integer(i64::from(self.window)), weighting }))
    }
}

impl EncoderSettings {
    pub fn overflow(&self) -> Result<OverflowPolicy> {
        self.overflow.parse().map_err(|e| config("encoder.overflow", e))
    }

    pub fn alphabet(&self) -> Result<AlphabetChoice> {
        self.alphabet.parse().map_err(|e| config("encoder.alphabet", e))
    }
}

impl BootstrapSettings {
    pub fn resolve(&self) -> Result<BootstrapConfig> {
        if self.replicates == 0 {
            return Err(config("bootstrap.replicates", "must be positive"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(config("bootstrap.level", "must lie in (0, 1)"));
        }
        Ok(BootstrapConfig { replicates: self.replicates, level: self.level })
    }
}

impl RegressionSettings {
    pub fn resolve(&self) -> Result<StepwiseConfig> {
        let criterion = match self.criterion.as_str() {
            "p-value" => {
                if !(0.0 < self.enter && self.enter <= self.remove && self.remove < 1.0) {
                    return Err(config("regression", "need 0 < enter <= remove < 1"));
                }
                Criterion::PValue { enter: self.enter, remove: self.remove }
            }
            "aic" => Criterion::Aic,
            other => return Err(config("regression.criterion", format!("unknown criterion {other:?} (expected p-value or aic)"))),
        };
        Ok(StepwiseConfig { criterion })
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config("config", e))
    }

    /// Reads a config file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config(path.display(), e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for c in &mut cfg.corpus {
            if c.path.is_relative() {
                c.path = base.join(&c.path);
            }
        }
        if let Some(p) = cfg.keys.profile_file.as_mut().filter(|p| p.is_relative()) {
            *p = base.join(&*p);
        }
        Ok(cfg)
    }

    /// The config as TOML, for embedding in reports.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every setting without touching the corpus.
    pub fn validate(&self) -> Result<Vec<NamedModel>> {
        if self.folds < 2 {
            return Err(config("folds", "need at least 2 folds"));
        }
        if self.corpus.is_empty() {
            return Err(config("corpus", "no corpus entries"));
        }
        if let Some(c) = self.corpus.iter().find(|c| c.dataset.is_empty() || c.dataset.contains(['/', '\t', '\n'])) {
            return Err(config("corpus.dataset", format!("invalid label {:?}", c.dataset)));
        }
        self.keys.finder()?;
        self.encoder.overflow()?;
        self.encoder.alphabet()?;
        self.bootstrap.resolve()?;
        self.regression.resolve()?;
        if self.models.is_empty() {
            return Err(config("models", "no models requested"));
        }
        let models: Vec<NamedModel> = self.models.iter().map(ModelSettings::resolve).collect::<Result<_>>()?;
        let mut names: Vec<&str> = models.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(config("models", format!("two models are both named {:?}; set `name`", w[0])));
        }
        Ok(models)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml("seed = 3\n[[corpus]]\npath = \"x\"\ndataset = \"bach\"\n").unwrap();
        let models = cfg.validate().unwrap();
        assert_eq!(models.iter().map(|m| m.name.as_str()).collect::<Vec<_>>(), ["LTM+", "STM", "BOTH+"]);
        assert_eq!(cfg.folds, 4);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn bad_settings_are_config_errors() {
        let base = "seed = 3\n[[corpus]]\npath = \"x\"\ndataset = \"d\"\n";
        for extra in [
            "[[models]]\nmode = \"LTM++\"\n",
            "[[models]]\nmode = \"STM\"\norder = \"x\"\n",
            "[keys]\nprofile = \"nope\"\n",
            "[encoder]\noverflow = \"largest\"\n",
            "[regression]\ncriterion = \"bic\"\n",
            "[bootstrap]\nlevel = 1.5\n",
            "[[models]]\nmode = \"STM\"\n[[models]]\nmode = \"stm\"\n",
        ] {
            let cfg = ExperimentConfig::from_toml(&format!("{base}{extra}")).unwrap();
            assert!(matches!(cfg.validate(), Err(CliError::Config(_))), "{extra}");
        }
        assert!(ExperimentConfig::from_toml("seed = 1\ncorpus = []\nbogus = 2\n").is_err());
        assert!(ExperimentConfig::from_toml("[[corpus]]\npath = \"x\"\ndataset = \"d\"\n").is_err());
    }

    #[test]
    fn derived_names() {
        let m = ModelSettings { mode: "stm".into(), order: "2".into(), bias: 2.0, update_exclusion: true, name: None };
        assert_eq!(m.resolve().unwrap().name, "STM(order=2)(exclusion)");
    }
}
