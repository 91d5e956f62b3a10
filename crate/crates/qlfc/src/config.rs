//! Pipeline configuration documents and file artifacts.
//!
//! One TOML document drives every CLI stage. Artifacts (replay memory,
//! lookup table, trained model) are TOML with a schema-version field; tables
//! for plotting are CSV. All writes go through a temp-file rename so a
//! partial write never replaces a good artifact.

use crate::error::{Error, Result};
use crate::expert::{
    CostKind, GainGrid, LookupTable, ReplayConfig, ReplayMemory, Scenario,
};
use crate::plant::{LoadEvent, PlantParams, SimSettings};
use crate::trainer::TrainConfig;
use crate::vqc::{AnsatzSpec, FeatureMapSpec, VqcModel, VqcParams};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// One inertia operating band of the catalog: scenarios in this band share
/// the plant inertia and scale the load-step template by `magnitude_scale`
/// (larger systems see smaller per-unit steps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogBand {
    pub inertia: f64,
    pub magnitude_scale: f64,
}

/// Catalog recipe: bands × the load-step structure template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogConfig {
    pub bands: Vec<CatalogBand>,
}

/// The load-step structure template: (time, signed magnitude multiplier)
/// lists covering single steps at 10 s and 21 s and paired combinations.
/// Multipliers are scaled by each band's magnitude_scale.
pub fn structure_template() -> Vec<Vec<(f64, f64)>> {
    vec![
        vec![(10.0, 0.7)],
        vec![(10.0, -0.7)],
        vec![(10.0, 1.0)],
        vec![(10.0, 1.4)],
        vec![(10.0, -1.4)],
        vec![(21.0, 0.7)],
        vec![(21.0, -1.2)],
        vec![(10.0, 0.7), (21.0, -0.7)],
        vec![(10.0, 1.0), (21.0, -0.7)],
        vec![(10.0, 0.7), (21.0, -1.0)],
        vec![(10.0, 1.4), (21.0, -1.0)],
        vec![(10.0, -1.0), (21.0, 1.4)],
        vec![(10.0, 0.7), (21.0, 0.7)],
        vec![(10.0, -0.7), (21.0, -0.7)],
        vec![(10.0, 1.05), (21.0, 0.7)],
        vec![(10.0, -1.05), (21.0, -0.7)],
    ]
}

impl CatalogConfig {
    /// Expand the recipe into concrete scenarios with sequential event ids.
    pub fn expand(&self, base_plant: &PlantParams) -> Vec<Scenario> {
        let template = structure_template();
        let mut scenarios = Vec::with_capacity(self.bands.len() * template.len());
        let mut id = 0;
        for band in &self.bands {
            for steps in &template {
                let event = LoadEvent::new(
                    id,
                    steps
                        .iter()
                        .map(|(t, m)| (*t, m * band.magnitude_scale))
                        .collect(),
                );
                scenarios.push(Scenario {
                    event,
                    plant: PlantParams {
                        inertia: band.inertia,
                        ..*base_plant
                    },
                });
                id += 1;
            }
        }
        scenarios
    }
}

/// Model hyperparameters (the trainable architecture).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub full_scale_hz: f64,
    pub repetitions: usize,
    pub init_seed: u64,
}

/// Evaluation fan-out configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub shots_list: Vec<u64>,
    pub runs_per_config: usize,
    pub base_seed: u64,
}

/// Closed-loop deployment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploySection {
    pub update_period_s: f64,
    pub pm_offset_pu: f64,
    /// Gain-hold threshold for sub-resolution windows, Hz.
    pub hold_band_hz: f64,
}

/// Dataset split configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub n_test_events: usize,
    pub seed: u64,
}

/// The one document every CLI stage reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub plant: PlantParams,
    pub grid: GainGrid,
    pub cost: CostKind,
    pub sim: SimSettings,
    pub catalog: CatalogConfig,
    pub replay: ReplayConfig,
    pub split: SplitConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub deploy: DeploySection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            plant: PlantParams::default(),
            grid: GainGrid {
                kp_values: vec![0.5, 2.0, 8.0, 24.0],
                ki_values: vec![2.0, 6.0, 18.0],
            },
            cost: CostKind::Ise,
            sim: SimSettings::default(),
            catalog: CatalogConfig {
                bands: vec![
                    CatalogBand {
                        inertia: 3.4,
                        magnitude_scale: 0.18,
                    },
                    CatalogBand {
                        inertia: 3.6,
                        magnitude_scale: 0.18,
                    },
                    CatalogBand {
                        inertia: 3.8,
                        magnitude_scale: 0.18,
                    },
                    CatalogBand {
                        inertia: 10.0,
                        magnitude_scale: 0.072,
                    },
                    CatalogBand {
                        inertia: 12.0,
                        magnitude_scale: 0.072,
                    },
                    CatalogBand {
                        inertia: 14.0,
                        magnitude_scale: 0.072,
                    },
                ],
            },
            replay: ReplayConfig::default(),
            split: SplitConfig {
                n_test_events: 18,
                seed: 42,
            },
            model: ModelConfig {
                layers: 4,
                full_scale_hz: 8.0,
                repetitions: 1,
                init_seed: 1,
            },
            train: TrainConfig {
                epochs: 2500,
                learning_rate: 0.3,
                ..TrainConfig::default()
            },
            eval: EvalConfig {
                shots_list: vec![100, 1000, 5000, 10000],
                runs_per_config: 10,
                base_seed: 1000,
            },
            deploy: DeploySection {
                update_period_s: 0.1,
                pm_offset_pu: 1.2,
                hold_band_hz: 0.04,
            },
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, reason: &str| {
            Err(Error::InvalidConfig {
                field: name.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.schema_version != SCHEMA_VERSION {
            return field("schema_version", "unsupported schema version");
        }
        if self.grid.is_empty() {
            return field("grid", "kp_values and ki_values must be nonempty");
        }
        if self.sim.dt_s <= 0.0 || self.sim.duration_s <= 0.0 {
            return field("sim", "duration_s and dt_s must be positive");
        }
        if self.catalog.bands.is_empty() {
            return field("catalog.bands", "at least one inertia band");
        }
        if self
            .catalog
            .bands
            .iter()
            .any(|b| b.inertia <= 0.0 || b.magnitude_scale <= 0.0)
        {
            return field("catalog.bands", "inertia and magnitude_scale must be positive");
        }
        if self.replay.sampling_period_s <= 0.0 || self.replay.capture_duration_s <= 0.0 {
            return field("replay", "sampling and capture periods must be positive");
        }
        if self.model.layers == 0 {
            return field("model.layers", "need at least one ansatz layer");
        }
        if self.model.full_scale_hz <= 0.0 {
            return field("model.full_scale_hz", "must be positive");
        }
        if self.train.epochs == 0 {
            return field("train.epochs", "must be positive");
        }
        if self.train.learning_rate <= 0.0 {
            return field("train.learning_rate", "must be positive");
        }
        if self.eval.shots_list.is_empty() || self.eval.shots_list.contains(&0) {
            return field("eval.shots_list", "must be nonempty positive shot counts");
        }
        if self.eval.runs_per_config == 0 {
            return field("eval.runs_per_config", "must be positive");
        }
        if self.deploy.update_period_s < self.sim.dt_s {
            return field("deploy.update_period_s", "must be at least sim.dt_s");
        }
        let ratio = self.deploy.update_period_s / self.replay.sampling_period_s;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return field(
                "deploy.update_period_s",
                "must be an integer multiple of replay.sampling_period_s",
            );
        }
        Ok(())
    }
}

/// Persisted trained model: architecture, parameters at full precision, and
/// the seeds that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub feature_map: FeatureMapSpec,
    pub ansatz: AnsatzSpec,
    pub theta: Vec<f64>,
    pub n_classes: usize,
    pub train_seed: u64,
    pub init_seed: u64,
    pub final_loss: f64,
}

impl ModelDocument {
    pub fn from_model(model: &VqcModel, train_seed: u64, init_seed: u64, final_loss: f64) -> Self {
        ModelDocument {
            schema_version: SCHEMA_VERSION,
            feature_map: model.feature_map.clone(),
            ansatz: model.ansatz.clone(),
            theta: model.params.0.clone(),
            n_classes: model.n_classes,
            train_seed,
            init_seed,
            final_loss,
        }
    }

    pub fn to_model(&self) -> VqcModel {
        VqcModel::new(
            self.feature_map.clone(),
            self.ansatz.clone(),
            VqcParams(self.theta.clone()),
            self.n_classes,
        )
    }
}

/// Persisted replay memory with schema header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayDocument {
    pub schema_version: u32,
    #[serde(flatten)]
    pub memory: ReplayMemory,
}

/// Persisted lookup table with its generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDocument {
    pub schema_version: u32,
    pub table: LookupTable,
    pub grid: GainGrid,
    pub cost: CostKind,
    pub sim: SimSettings,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let tmp: PathBuf = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Serialize a document to TOML and write it atomically.
pub fn save_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string_pretty(value).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    write_atomic(path, &text)
}

/// Read and parse a TOML document; missing file maps to MissingArtifact.
pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingArtifact(path.display().to_string()))
        }
        Err(e) => return Err(io_err(path, e)),
    };
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn catalog_expansion_counts_and_ids() {
        let cfg = PipelineConfig::default();
        let scenarios = cfg.catalog.expand(&cfg.plant);
        assert_eq!(scenarios.len(), 6 * 16);
        for (i, s) in scenarios.iter().enumerate() {
            assert_eq!(s.event.id, i as u32);
        }
        // magnitudes follow the band scale
        assert!((scenarios[0].event.steps[0].1 - 0.7 * 0.18).abs() < 1e-12);
    }

    #[test]
    fn validation_names_the_offending_field() {
        let mut cfg = PipelineConfig::default();
        cfg.model.full_scale_hz = -1.0;
        match cfg.validate() {
            Err(Error::InvalidConfig { field, .. }) => {
                assert_eq!(field, "model.full_scale_hz")
            }
            other => panic!("expected InvalidConfig, got {other:?}"),
        }
    }

    #[test]
    fn update_period_must_align_with_sampling() {
        let mut cfg = PipelineConfig::default();
        cfg.deploy.update_period_s = 0.15;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn atomic_write_then_load() {
        let dir = std::env::temp_dir().join("qlfc-config-test");
        let path = dir.join("cfg.toml");
        let cfg = PipelineConfig::default();
        save_toml(&path, &cfg).unwrap();
        let back: PipelineConfig = load_toml(&path).unwrap();
        assert_eq!(cfg, back);
        let missing: Result<PipelineConfig> = load_toml(&dir.join("nope.toml"));
        assert!(matches!(missing, Err(Error::MissingArtifact(_))));
        fs::remove_dir_all(&dir).ok();
    }
}
