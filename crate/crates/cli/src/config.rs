//! Run configuration: a TOML document with a section per stage. Unknown
//! keys are rejected; omitted keys take the documented defaults. Every run
//! writes its fully-resolved configuration next to its outputs, and the
//! FNV-1a hash of that resolved document identifies the run in the
//! manifest.

use std::path::{Path, PathBuf};

use hemgen_core::embeddings::EmbeddingMode;
use hemgen_core::gnn::PredictorConfig;
use hemgen_core::seqmodel::GeneratorConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Root seed; every stage derives its own stream from it.
    pub seed: u64,
    pub dataset: PathBuf,
    pub out_dir: PathBuf,
    /// SMILES enumeration multiplier (1 = no augmentation).
    pub augmentation_factor: usize,
    /// Fraction of molecules held out for generator validation loss.
    pub val_fraction: f64,
    /// Drop dataset rows whose SMILES fails validation instead of erroring.
    pub drop_invalid_rows: bool,
    /// Reuse this predictor checkpoint instead of training one.
    pub predictor_checkpoint: Option<PathBuf>,
    pub generator: GeneratorSection,
    pub sampling: SamplingSection,
    pub predictor: PredictorSection,
    pub filter: FilterSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            dataset: PathBuf::from("data/energetic_303.csv"),
            out_dir: PathBuf::from("run"),
            augmentation_factor: 3,
            val_fraction: 0.1,
            drop_invalid_rows: false,
            predictor_checkpoint: None,
            generator: GeneratorSection::default(),
            sampling: SamplingSection::default(),
            predictor: PredictorSection::default(),
            filter: FilterSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSection {
    pub hidden_size: usize,
    pub layers: usize,
    pub d: usize,
    pub d_t: usize,
    pub mode: String,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub max_sample_len: usize,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        let g = GeneratorConfig::default();
        Self {
            hidden_size: g.hidden_size,
            layers: g.layers,
            d: g.d,
            d_t: g.d_t,
            mode: "sha_fixed".into(),
            dropout: g.dropout,
            learning_rate: g.learning_rate,
            batch_size: g.batch_size,
            epochs: g.epochs,
            max_sample_len: g.max_sample_len,
        }
    }
}

impl GeneratorSection {
    pub fn to_config(&self, seed: u64) -> Result<GeneratorConfig, CliError> {
        let mode = match self.mode.as_str() {
            "trainable_only" => EmbeddingMode::TrainableOnly,
            "random_fixed" => EmbeddingMode::RandomFixed,
            "sha_fixed" => EmbeddingMode::ShaFixed,
            other => {
                return Err(CliError::Config(format!(
                    "unknown embedding mode '{other}' (trainable_only | random_fixed | sha_fixed)"
                )))
            }
        };
        Ok(GeneratorConfig {
            hidden_size: self.hidden_size,
            layers: self.layers,
            d: self.d,
            d_t: self.d_t,
            mode,
            dropout: self.dropout,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            max_sample_len: self.max_sample_len,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub n: usize,
    pub temperature: f64,
    pub greedy: bool,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            n: 1000,
            temperature: 1.0,
            greedy: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorSection {
    pub hidden: usize,
    pub layers: usize,
    pub readout_steps: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub log_h50: bool,
}

impl Default for PredictorSection {
    fn default() -> Self {
        let p = PredictorConfig::default();
        Self {
            hidden: p.hidden,
            layers: p.layers,
            readout_steps: p.readout_steps,
            learning_rate: p.learning_rate,
            weight_decay: p.weight_decay,
            epochs: p.epochs,
            batch_size: p.batch_size,
            log_h50: p.log_h50,
        }
    }
}

impl PredictorSection {
    pub fn to_config(&self, seed: u64) -> PredictorConfig {
        PredictorConfig {
            hidden: self.hidden,
            layers: self.layers,
            readout_steps: self.readout_steps,
            outputs: hemgen_core::dataset::N_TARGETS,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            log_h50: self.log_h50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub target: String,
    pub threshold: f64,
    /// "above" or "below".
    pub direction: String,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            target: "D".into(),
            threshold: 9.0,
            direction: "above".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Hash of the fully resolved configuration document.
    pub fn hash(&self) -> String {
        format!("{:016x}", hemgen_core::rng::fnv1a64(self.to_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let text = c.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.hash(), back.hash());
    }

    #[test]
    fn partial_document_fills_defaults() {
        let c: RunConfig = toml::from_str("seed = 7\n[sampling]\nn = 10\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.sampling.n, 10);
        assert_eq!(c.generator.hidden_size, 256);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("nonsense = 1\n").is_err());
        assert!(toml::from_str::<RunConfig>("[generator]\nwidth = 3\n").is_err());
    }
}
