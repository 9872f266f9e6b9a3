//! Model checkpoints: one CSV per tensor plus `manifest.json`.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Dense, MlpModel};
use crate::data::{load_matrix, save_matrix, ClassVocabulary};
use crate::error::{Error, Result};

const FORMAT: &str = "uqpipe-mlp-v1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    /// `[n_in, n_out]` per layer.
    layers: Vec<[usize; 2]>,
    dropout_rate: f64,
    vocab: ClassVocabulary,
    seed: u64,
}

pub fn save_checkpoint(model: &MlpModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, layer) in model.layers().iter().enumerate() {
        let w = Array2::from_shape_vec((layer.n_out, layer.n_in), layer.weights.clone())
            .expect("layer shape");
        save_matrix(&w, &dir.join(format!("layer{i}.weight.csv")))?;
        let b = Array2::from_shape_vec((1, layer.n_out), layer.bias.clone()).expect("bias shape");
        save_matrix(&b, &dir.join(format!("layer{i}.bias.csv")))?;
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        layers: model.layers().iter().map(|l| [l.n_in, l.n_out]).collect(),
        dropout_rate: model.dropout_rate(),
        vocab: model.vocab().clone(),
        seed: model.seed(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn load_checkpoint(dir: impl AsRef<Path>) -> Result<MlpModel> {
    let dir = dir.as_ref();
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    if manifest.format != FORMAT {
        return Err(Error::Format {
            path,
            line: 1,
            message: format!("unsupported checkpoint format {:?}", manifest.format),
        });
    }
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (i, &[n_in, n_out]) in manifest.layers.iter().enumerate() {
        let w = load_matrix(&dir.join(format!("layer{i}.weight.csv")))?;
        let b = load_matrix(&dir.join(format!("layer{i}.bias.csv")))?;
        if w.dim() != (n_out, n_in) || b.dim() != (1, n_out) {
            return Err(Error::InvalidArgument(format!(
                "layer {i} tensors do not match manifest shape {n_in}x{n_out}"
            )));
        }
        layers.push(Dense {
            n_in,
            n_out,
            weights: w.iter().copied().collect(),
            bias: b.iter().copied().collect(),
        });
    }
    MlpModel::from_parts(layers, manifest.dropout_rate, manifest.vocab, manifest.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let model = MlpModel::init(9, &ClassVocabulary::ham10000(), 0.25, 4).unwrap();
        save_checkpoint(&model, dir.path()).unwrap();
        assert_eq!(load_checkpoint(dir.path()).unwrap(), model);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let model = MlpModel::init(3, &ClassVocabulary::ham10000(), 0.25, 4).unwrap();
        save_checkpoint(&model, dir.path()).unwrap();
        fs::write(dir.path().join("layer1.bias.csv"), "f0\n1\n").unwrap();
        assert!(load_checkpoint(dir.path()).is_err());
    }
}
