//! Versioned JSON model and checkpoint files.
//!
//! Coefficients are written as shortest round-trip decimals and parsed back
//! exactly, so a loaded network reproduces predictions bit for bit. Files
//! are written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::NormalizationParams;
use crate::error::{Error, Result};
use crate::experiments::Checkpoint;
use crate::network::{CoefficientSet, Layer, MlpNetwork, NetworkTopology, PRNG_ALGORITHM};
use crate::train::{TrainingConfig, TrainingState};

pub const FORMAT_VERSION: u64 = 1;
pub const MODEL_FORMAT: &str = "mlpcast-model";
pub const CHECKPOINT_FORMAT: &str = "mlpcast-checkpoint";

const MODEL_SECTIONS: &[&str] = &[
    "format",
    "format_version",
    "prng_algorithm",
    "topology",
    "normalization",
    "training",
    "layers",
];

const CHECKPOINT_SECTIONS: &[&str] = &[
    "format",
    "format_version",
    "prng_algorithm",
    "topology",
    "normalization",
    "config",
    "epochs_completed",
    "layers",
    "velocity",
];

/// Where the training data and settings came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub instrument: String,
    pub seed: u64,
    /// `default`, `config`, `flag`, or `env:<VAR>`.
    pub seed_source: String,
    pub epochs: u64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub train_fraction: f64,
    pub window: usize,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    /// One row per destination neuron.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl LayerRecord {
    fn from_layer(layer: &Layer) -> Self {
        Self {
            weights: layer.weights().chunks(layer.inputs()).map(<[f64]>::to_vec).collect(),
            biases: layer.biases().to_vec(),
        }
    }

    fn to_layer(&self, index: usize) -> Result<Layer> {
        let outputs = self.weights.len();
        let inputs = self.weights.first().map_or(0, Vec::len);
        if self.weights.iter().any(|row| row.len() != inputs) {
            return Err(Error::Corrupted(format!("layers[{index}]: ragged weight rows")));
        }
        Layer::new(inputs, outputs, self.weights.concat(), self.biases.clone())
            .map_err(|e| Error::Corrupted(format!("layers[{index}]: {e}")))
    }
}

fn layers_to_network(topology: &NetworkTopology, layers: &[LayerRecord]) -> Result<MlpNetwork> {
    let layers = layers
        .iter()
        .enumerate()
        .map(|(i, l)| l.to_layer(i))
        .collect::<Result<Vec<_>>>()?;
    MlpNetwork::from_layers(topology.clone(), layers).map_err(|e| Error::Corrupted(format!("layers: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub format_version: u64,
    pub prng_algorithm: String,
    pub topology: NetworkTopology,
    pub normalization: NormalizationParams,
    pub training: TrainingMetadata,
    pub layers: Vec<LayerRecord>,
}

impl ModelFile {
    pub fn new(network: &MlpNetwork, params: &NormalizationParams, training: TrainingMetadata) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            format_version: FORMAT_VERSION,
            prng_algorithm: PRNG_ALGORITHM.into(),
            topology: network.topology().clone(),
            normalization: *params,
            training,
            layers: network.layers().iter().map(LayerRecord::from_layer).collect(),
        }
    }

    pub fn network(&self) -> Result<MlpNetwork> {
        layers_to_network(&self.topology, &self.layers)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = parse_versioned(text, MODEL_FORMAT, MODEL_SECTIONS)?;
        NormalizationParams::new(
            file.normalization.source_min,
            file.normalization.source_max,
            file.normalization.target_lo,
            file.normalization.target_hi,
        )
        .map_err(|e| Error::Corrupted(format!("normalization: {e}")))?;
        file.network()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = self.to_json()?;
        write_atomic(path, |w| w.write_all(json.as_bytes()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Version and structure checks shared by model and checkpoint files. The
/// version is checked before anything else is interpreted.
fn parse_versioned<T: DeserializeOwned>(text: &str, format: &str, sections: &[&str]) -> Result<T> {
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) if e.is_eof() => return Err(Error::Corrupted(truncation_message(text, sections))),
        Err(e) => return Err(Error::Corrupted(e.to_string())),
    };
    let object = value
        .as_object()
        .ok_or_else(|| Error::Corrupted("top level is not an object".into()))?;
    match object.get("format").and_then(|f| f.as_str()) {
        Some(f) if f == format => {}
        Some(other) => return Err(Error::Corrupted(format!("format is {other:?}, expected {format:?}"))),
        None => return Err(Error::Corrupted("missing section `format`".into())),
    }
    let version = object
        .get("format_version")
        .ok_or_else(|| Error::Corrupted("missing section `format_version`".into()))?
        .as_u64()
        .ok_or_else(|| Error::Corrupted("format_version is not an unsigned integer".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    if let Some(missing) = sections.iter().find(|s| !object.contains_key(**s)) {
        return Err(Error::Corrupted(format!("missing section `{missing}`")));
    }
    serde_json::from_value(value).map_err(|e| Error::Corrupted(e.to_string()))
}

/// Sections are written in a fixed order, so the last key that made it into
/// a truncated file is the one that was cut off.
fn truncation_message(text: &str, sections: &[&str]) -> String {
    let present = sections.iter().rposition(|s| text.contains(&format!("\"{s}\":")));
    match present {
        None => format!("file is truncated; missing section `{}`", sections[0]),
        Some(i) => {
            let rest = &sections[i + 1..];
            if rest.is_empty() {
                format!("file is truncated inside section `{}`", sections[i])
            } else {
                format!(
                    "file is truncated inside section `{}`; missing section `{}`",
                    sections[i],
                    rest.join("`, `")
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    format_version: u64,
    prng_algorithm: String,
    topology: NetworkTopology,
    normalization: NormalizationParams,
    config: TrainingConfig,
    epochs_completed: u64,
    layers: Vec<LayerRecord>,
    velocity: CoefficientSet,
}

pub fn checkpoint_to_json(checkpoint: &Checkpoint) -> Result<String> {
    let network = &checkpoint.state.network;
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        format_version: FORMAT_VERSION,
        prng_algorithm: PRNG_ALGORITHM.into(),
        topology: network.topology().clone(),
        normalization: checkpoint.params,
        config: checkpoint.config,
        epochs_completed: checkpoint.state.epochs_completed,
        layers: network.layers().iter().map(LayerRecord::from_layer).collect(),
        velocity: checkpoint.state.velocity.clone(),
    };
    Ok(serde_json::to_string(&file)? + "\n")
}

pub fn checkpoint_from_json(text: &str) -> Result<Checkpoint> {
    let file: CheckpointFile = parse_versioned(text, CHECKPOINT_FORMAT, CHECKPOINT_SECTIONS)?;
    let network = layers_to_network(&file.topology, &file.layers)?;
    let velocity = file.velocity;
    let shape_ok = velocity.weights.len() == network.layers().len()
        && velocity.biases.len() == network.layers().len()
        && network.layers().iter().enumerate().all(|(k, l)| {
            velocity.weights[k].len() == l.weights().len() && velocity.biases[k].len() == l.biases().len()
        });
    if !shape_ok {
        return Err(Error::Corrupted("velocity: shape does not match layers".into()));
    }
    Ok(Checkpoint {
        params: file.normalization,
        config: file.config,
        state: TrainingState {
            network,
            velocity,
            epochs_completed: file.epochs_completed,
        },
    })
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    let json = checkpoint_to_json(checkpoint)?;
    write_atomic(path, |w| w.write_all(json.as_bytes()))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_json(&text)
}

/// Writes through a temporary file in the destination directory and renames
/// it over `path` only after `fill` succeeds.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    fill(&mut tmp).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelFile {
        let net = MlpNetwork::init(&NetworkTopology::two_hidden(5, 3).unwrap(), 17);
        let params = NormalizationParams::new(80.0, 120.0, 0.1, 0.9).unwrap();
        let day = NaiveDate::from_ymd_opt(2008, 1, 2).unwrap();
        ModelFile::new(
            &net,
            &params,
            TrainingMetadata {
                instrument: "SINE".into(),
                seed: 17,
                seed_source: "flag".into(),
                epochs: 10,
                learning_rate: 0.1,
                momentum: 0.0,
                train_fraction: 0.8,
                window: 5,
                train_start: day,
                train_end: day,
            },
        )
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = sample();
        let back = ModelFile::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.network().unwrap(), m.network().unwrap());
    }

    #[test]
    fn unknown_version_rejected() {
        let json = sample()
            .to_json()
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 999");
        assert!(matches!(
            ModelFile::from_json(&json),
            Err(Error::UnsupportedVersion { found: 999, .. })
        ));
    }

    #[test]
    fn truncation_names_section() {
        let json = sample().to_json().unwrap();
        let cut = json.find("\"layers\"").unwrap();
        match ModelFile::from_json(&json[..cut - 5]) {
            Err(Error::Corrupted(msg)) => assert!(msg.contains("`layers`"), "{msg}"),
            other => panic!("{other:?}"),
        }
        match ModelFile::from_json(&json[..json.len() - 40]) {
            Err(Error::Corrupted(msg)) => assert!(msg.contains("inside section `layers`"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_damage_rejected() {
        let m = sample();
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v["layers"][0]["biases"].as_array_mut().unwrap().pop();
        assert!(matches!(ModelFile::from_json(&v.to_string()), Err(Error::Corrupted(_))));

        let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("normalization");
        match ModelFile::from_json(&v.to_string()) {
            Err(Error::Corrupted(msg)) => assert!(msg.contains("normalization")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn atomic_write_leaves_nothing_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        let err = write_atomic(&path, |w| {
            w.write_all(b"partial")?;
            Err(std::io::Error::other("boom"))
        });
        assert!(err.is_err());
        assert!(!path.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
