//! Dropout MLP with hand-written backpropagation.
//!
//! Architecture: `d -> hidden[0] -> ... -> C`, ReLU after every hidden layer,
//! dropout after every hidden activation, softmax output. Dropout is
//! inverted: kept units are scaled by `1 / (1 - p)` so a mask-free forward
//! pass needs no rescaling.

mod checkpoint;
mod loss;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use loss::{
    cross_entropy, pe_batch_loss, pe_batch_loss_with_masks, predictive_entropy, BatchLoss,
    BatchMasks, LOG_CLAMP,
};
pub use train::{train, train_rows, Optimizer, TrainConfig, TrainReport};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::ClassVocabulary;
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_HIDDEN: [usize; 2] = [64, 16];
pub const DEFAULT_DROPOUT: f64 = 0.3;

/// Fully connected layer; `weights` is `n_out x n_in`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (o, row) in self.weights.chunks_exact(self.n_in).enumerate() {
            let dot: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
            out.push(dot + self.bias[o]);
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Dense>,
    dropout_rate: f64,
    vocab: ClassVocabulary,
    seed: u64,
}

impl MlpModel {
    /// `d -> 64 -> 16 -> C` with He-normal weights and zero biases.
    pub fn init(d: usize, vocab: &ClassVocabulary, dropout_rate: f64, seed: u64) -> Result<Self> {
        Self::init_with_hidden(d, &DEFAULT_HIDDEN, vocab, dropout_rate, seed)
    }

    pub fn init_with_hidden(
        d: usize,
        hidden: &[usize],
        vocab: &ClassVocabulary,
        dropout_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        if d < 1 || hidden.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "layer widths must be positive (input {d}, hidden {hidden:?})"
            )));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate must be in [0, 1), got {dropout_rate}"
            )));
        }
        let mut rng = seed::rng(seed);
        let mut widths = vec![d];
        widths.extend_from_slice(hidden);
        widths.push(vocab.len());
        let layers = widths
            .windows(2)
            .map(|w| {
                let mut layer = Dense::zeros(w[0], w[1]);
                let scale = (2.0 / w[0] as f64).sqrt();
                for v in &mut layer.weights {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = scale * z;
                }
                layer
            })
            .collect();
        Ok(Self {
            layers,
            dropout_rate,
            vocab: vocab.clone(),
            seed,
        })
    }

    pub(crate) fn from_parts(
        layers: Vec<Dense>,
        dropout_rate: f64,
        vocab: ClassVocabulary,
        seed: u64,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument(
                "model needs at least one layer".into(),
            ));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].n_out != pair[1].n_in {
                return Err(Error::InvalidArgument(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].n_out,
                    i + 1,
                    pair[1].n_in
                )));
            }
        }
        for l in &layers {
            if l.weights.len() != l.n_in * l.n_out || l.bias.len() != l.n_out {
                return Err(Error::InvalidArgument(
                    "layer tensor sizes do not match shape".into(),
                ));
            }
        }
        let out = layers.last().map_or(0, |l| l.n_out);
        if out != vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                actual: out,
            });
        }
        Ok(Self {
            layers,
            dropout_rate,
            vocab,
            seed,
        })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn vocab(&self) -> &ClassVocabulary {
        &self.vocab
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_classes(&self) -> usize {
        self.vocab.len()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.n_out)
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Class probabilities for one input; dropout is applied iff `mask` is given.
    pub fn forward(&self, x: &[f64], mask: Option<&DropoutMask>) -> Vec<f64> {
        self.forward_cached(x, mask).probs
    }

    pub(crate) fn forward_cached(&self, x: &[f64], mask: Option<&DropoutMask>) -> ForwardCache {
        debug_assert_eq!(x.len(), self.input_dim());
        let n_hidden = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(n_hidden);
        let mut current = x.to_vec();
        for (l, layer) in self.layers[..n_hidden].iter().enumerate() {
            let mut z = Vec::with_capacity(layer.n_out);
            layer.apply(&current, &mut z);
            let mut h: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
            if let Some(m) = mask {
                for (hv, &keep) in h.iter_mut().zip(&m.hidden[l]) {
                    *hv *= keep;
                }
            }
            inputs.push(std::mem::replace(&mut current, h));
            pre.push(z);
        }
        let mut logits = Vec::with_capacity(self.n_classes());
        self.layers[n_hidden].apply(&current, &mut logits);
        inputs.push(current);
        ForwardCache {
            inputs,
            pre,
            probs: softmax(&logits),
        }
    }

    /// Accumulate parameter gradients for one pass given `d loss / d logits`.
    pub(crate) fn backward(
        &self,
        cache: &ForwardCache,
        mask: Option<&DropoutMask>,
        d_logits: &[f64],
        grads: &mut Gradients,
    ) {
        let mut delta = d_logits.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &cache.inputs[l];
            let g = &mut grads.layers[l];
            for (o, &dv) in delta.iter().enumerate() {
                if dv == 0.0 {
                    continue;
                }
                g.bias[o] += dv;
                let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                for (gw, &a) in row.iter_mut().zip(input) {
                    *gw += dv * a;
                }
            }
            if l == 0 {
                break;
            }
            // d loss / d (post-dropout activation of layer l-1)
            let mut d_act = vec![0.0; layer.n_in];
            for (o, &dv) in delta.iter().enumerate() {
                if dv == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                for (da, &w) in d_act.iter_mut().zip(row) {
                    *da += dv * w;
                }
            }
            let z = &cache.pre[l - 1];
            for (j, da) in d_act.iter_mut().enumerate() {
                let keep = mask.map_or(1.0, |m| m.hidden[l - 1][j]);
                *da = if z[j] > 0.0 { *da * keep } else { 0.0 };
            }
            delta = d_act;
        }
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.n_in, l.n_out))
                .collect(),
        }
    }

    /// Draw the dropout mask for `(seed, pass, sample)`.
    pub fn mask_for(&self, seed: u64, pass: u64, sample: u64) -> DropoutMask {
        DropoutMask::sample(
            &self.hidden_widths(),
            self.dropout_rate,
            seed::derive2(seed, pass, sample),
        )
    }
}

pub(crate) struct ForwardCache {
    /// Input to each layer (post-dropout activations for hidden layers).
    inputs: Vec<Vec<f64>>,
    /// Hidden pre-activations.
    pre: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

/// Parameter gradients, shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    /// Same ordering as [`MlpModel::parameters`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }
}

/// Per-hidden-layer multiplicative mask with entries in `{0, 1/(1-p)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    pub hidden: Vec<Vec<f64>>,
}

impl DropoutMask {
    pub fn sample(widths: &[usize], p: f64, seed: u64) -> Self {
        let keep = 1.0 / (1.0 - p);
        if p == 0.0 {
            return Self::ones(widths);
        }
        let mut rng = seed::rng(seed);
        let hidden = widths
            .iter()
            .map(|&w| {
                (0..w)
                    .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                    .collect()
            })
            .collect();
        Self { hidden }
    }

    pub fn ones(widths: &[usize]) -> Self {
        Self {
            hidden: widths.iter().map(|&w| vec![1.0; w]).collect(),
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
