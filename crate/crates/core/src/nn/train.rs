use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{pe_batch_loss, Gradients, MlpModel};
use crate::data::{FeatureTable, SplitIndices};
use crate::error::{Error, Result};
use crate::seed;

const SHUFFLE_TAG: u64 = 0x5348_5546;
const MASK_TAG: u64 = 0x4d41_534b;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Plain gradient descent.
    Sgd,
    /// Adaptive moments with decays 0.9 / 0.999 and epsilon 1e-8.
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub pe_loss_enabled: bool,
    pub pe_train_passes: usize,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            pe_loss_enabled: false,
            pe_train_passes: 5,
            optimizer: Optimizer::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 || self.pe_train_passes < 1 {
            return Err(Error::InvalidArgument(
                "batch_size and pe_train_passes must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean batch loss per epoch.
    pub epoch_losses: Vec<f64>,
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

fn apply_update(
    model: &mut MlpModel,
    grads: &Gradients,
    config: &TrainConfig,
    adam: &mut AdamState,
) {
    let g = grads.flat();
    let lr = config.learning_rate;
    match config.optimizer {
        Optimizer::Sgd => {
            for (p, gv) in model.parameters_mut().zip(&g) {
                *p -= lr * gv;
            }
        }
        Optimizer::Adam => {
            adam.step += 1;
            let c1 = 1.0 - BETA1.powi(adam.step);
            let c2 = 1.0 - BETA2.powi(adam.step);
            for (i, p) in model.parameters_mut().enumerate() {
                adam.m[i] = BETA1 * adam.m[i] + (1.0 - BETA1) * g[i];
                adam.v[i] = BETA2 * adam.v[i] + (1.0 - BETA2) * g[i] * g[i];
                let m_hat = adam.m[i] / c1;
                let v_hat = adam.v[i] / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + EPS);
            }
        }
    }
}

/// Train on the split's training rows.
pub fn train(
    model: &MlpModel,
    table: &FeatureTable,
    split: &SplitIndices,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    train_rows(model, table, &split.train, config)
}

/// Mini-batch training on `rows` of `table`. Batches are reshuffled every
/// epoch; every random draw derives from `config.seed`.
pub fn train_rows(
    model: &MlpModel,
    table: &FeatureTable,
    rows: &[usize],
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    if table.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: table.dim(),
        });
    }
    let mut model = model.clone();
    let mut report = TrainReport::default();
    if config.epochs == 0 || rows.is_empty() {
        return Ok((model, report));
    }
    let inputs: Vec<Vec<f64>> = rows.iter().map(|&r| table.row(r).to_vec()).collect();
    let labels: Vec<usize> = rows.iter().map(|&r| table.labels()[r]).collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut shuffle_rng = seed::rng(seed::derive(config.seed, SHUFFLE_TAG));
    let mask_seed = seed::derive(config.seed, MASK_TAG);
    let mut adam = AdamState {
        m: vec![0.0; model.n_params()],
        v: vec![0.0; model.n_params()],
        step: 0,
    };

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut n_batches = 0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<(&[f64], usize)> = chunk
                .iter()
                .map(|&i| (inputs[i].as_slice(), labels[i]))
                .collect();
            let step_seed = seed::derive2(mask_seed, epoch as u64, b as u64);
            let (loss, grads) = pe_batch_loss(&model, &batch, config, step_seed);
            if !loss.total.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            apply_update(&mut model, &grads, config, &mut adam);
            if !model.all_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            loss_sum += loss.total;
            n_batches += 1;
        }
        report.epoch_losses.push(loss_sum / n_batches as f64);
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{stratified_split, synth_blobs, ClassVocabulary};

    fn accuracy(model: &MlpModel, table: &FeatureTable, rows: &[usize]) -> f64 {
        let correct = rows
            .iter()
            .filter(|&&r| {
                let p = model.forward(&table.row(r).to_vec(), None);
                let arg = (0..p.len()).fold(0, |best, c| if p[c] > p[best] { c } else { best });
                arg == table.labels()[r]
            })
            .count();
        correct as f64 / rows.len() as f64
    }

    #[test]
    fn separable_blobs_are_learned() {
        let vocab = ClassVocabulary::ham10000();
        let table = synth_blobs(40, 8, &vocab, 1.0, 10.0, 1).unwrap();
        let split = stratified_split(&table, 0.2, 2).unwrap();
        let model = MlpModel::init(8, &vocab, 0.3, 3).unwrap();
        let config = TrainConfig {
            pe_loss_enabled: true,
            pe_train_passes: 3,
            ..TrainConfig::default()
        };
        let (trained, report) = train(&model, &table, &split, &config).unwrap();
        assert_eq!(report.epoch_losses.len(), 30);
        assert!(report.epoch_losses.iter().all(|l| l.is_finite()));
        assert!(report.epoch_losses[29] < report.epoch_losses[0]);
        assert!(accuracy(&trained, &table, &split.train) >= 0.99);
    }

    #[test]
    fn zero_epochs_returns_input() {
        let vocab = ClassVocabulary::ham10000();
        let table = synth_blobs(3, 4, &vocab, 1.0, 5.0, 1).unwrap();
        let split = stratified_split(&table, 0.3, 0).unwrap();
        let model = MlpModel::init(4, &vocab, 0.3, 3).unwrap();
        let config = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (same, report) = train(&model, &table, &split, &config).unwrap();
        assert_eq!(same, model);
        assert!(report.epoch_losses.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let vocab = ClassVocabulary::ham10000();
        let table = synth_blobs(6, 5, &vocab, 1.0, 6.0, 1).unwrap();
        let split = stratified_split(&table, 0.3, 0).unwrap();
        let model = MlpModel::init(5, &vocab, 0.3, 3).unwrap();
        for optimizer in [Optimizer::Adam, Optimizer::Sgd] {
            let config = TrainConfig {
                epochs: 4,
                batch_size: 5,
                pe_loss_enabled: true,
                optimizer,
                seed: 12,
                ..TrainConfig::default()
            };
            let a = train(&model, &table, &split, &config).unwrap();
            let b = train(&model, &table, &split, &config).unwrap();
            assert_eq!(a, b);
            assert_ne!(a.0, model);
        }
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let vocab = ClassVocabulary::ham10000();
        let table = synth_blobs(3, 4, &vocab, 1.0, 5.0, 1).unwrap();
        let split = stratified_split(&table, 0.3, 0).unwrap();
        let model = MlpModel::init(5, &vocab, 0.3, 3).unwrap();
        assert!(train(&model, &table, &split, &TrainConfig::default()).is_err());
    }

    #[test]
    fn divergence_is_reported_with_location() {
        let vocab = ClassVocabulary::ham10000();
        let table = synth_blobs(3, 4, &vocab, 1.0, 5.0, 1).unwrap();
        let split = stratified_split(&table, 0.3, 0).unwrap();
        let mut model = MlpModel::init(4, &vocab, 0.0, 3).unwrap();
        model.layers_mut()[2].bias[0] = f64::NAN;
        let config = TrainConfig::default();
        let r = train(&model, &table, &split, &config);
        assert!(
            matches!(r, Err(Error::NonFiniteLoss { epoch: 0, batch: 0 })),
            "{r:?}"
        );
    }
}
