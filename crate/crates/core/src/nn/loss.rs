use super::{DropoutMask, Gradients, MlpModel, TrainConfig};

/// Lower clamp applied to probabilities before taking logs.
pub const LOG_CLAMP: f64 = 1e-12;

/// `-ln p[label]`, with `p` clamped below at [`LOG_CLAMP`].
pub fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(LOG_CLAMP).ln()
}

/// Entropy of a class distribution, `0 ln 0 = 0`, clamped to `[0, ln C]`.
pub fn predictive_entropy(probs: &[f64]) -> f64 {
    // fold from +0.0 so a one-hot row gives 0, not -0
    let h = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.max(LOG_CLAMP).ln())
        .fold(0.0, |a, b| a + b);
    h.clamp(0.0, (probs.len() as f64).ln())
}

fn entropy_gradient(mean: &[f64]) -> Vec<f64> {
    mean.iter()
        .map(|&m| {
            if m >= LOG_CLAMP {
                -(m.ln() + 1.0)
            } else {
                -LOG_CLAMP.ln()
            }
        })
        .collect()
}

/// Dropout masks for one mini-batch: one cross-entropy mask per sample and
/// `T` entropy-pass masks per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMasks {
    pub ce: Vec<DropoutMask>,
    pub pe: Vec<Vec<DropoutMask>>,
}

impl BatchMasks {
    /// Pass 0 is the cross-entropy pass, passes `1..=T` feed the entropy term.
    pub fn draw(model: &MlpModel, batch_len: usize, passes: usize, seed: u64) -> Self {
        let ce = (0..batch_len)
            .map(|i| model.mask_for(seed, 0, i as u64))
            .collect();
        let pe = (0..batch_len)
            .map(|i| {
                (0..passes)
                    .map(|t| model.mask_for(seed, 1 + t as u64, i as u64))
                    .collect()
            })
            .collect();
        Self { ce, pe }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLoss {
    pub total: f64,
    /// Mean cross-entropy over the batch.
    pub cross_entropy: f64,
    /// `(1/B) sum_i PE_i`; zero when the entropy term is disabled.
    pub entropy: f64,
}

/// Loss and exact gradients for fixed masks:
/// `mean_i CE_i + (1/B) sum_i H(mean_t softmax(f(x_i; mask_it)))`.
pub fn pe_batch_loss_with_masks(
    model: &MlpModel,
    batch: &[(&[f64], usize)],
    masks: &BatchMasks,
    pe_enabled: bool,
) -> (BatchLoss, Gradients) {
    assert!(!batch.is_empty(), "batch must be nonempty");
    assert_eq!(masks.ce.len(), batch.len());
    let b = batch.len() as f64;
    let mut grads = model.zero_gradients();
    let mut ce_sum = 0.0;
    let mut pe_sum = 0.0;

    for (i, &(x, label)) in batch.iter().enumerate() {
        let mask = &masks.ce[i];
        let cache = model.forward_cached(x, Some(mask));
        ce_sum += cross_entropy(&cache.probs, label);
        let mut d_logits: Vec<f64> = cache.probs.iter().map(|p| p / b).collect();
        if cache.probs[label] >= LOG_CLAMP {
            d_logits[label] -= 1.0 / b;
        } else {
            d_logits.iter_mut().for_each(|v| *v = 0.0);
        }
        model.backward(&cache, Some(mask), &d_logits, &mut grads);

        if !pe_enabled {
            continue;
        }
        let pass_masks = &masks.pe[i];
        let t = pass_masks.len() as f64;
        let caches: Vec<_> = pass_masks
            .iter()
            .map(|m| model.forward_cached(x, Some(m)))
            .collect();
        let mut mean = vec![0.0; model.n_classes()];
        for c in &caches {
            for (m, p) in mean.iter_mut().zip(&c.probs) {
                *m += p;
            }
        }
        mean.iter_mut().for_each(|m| *m /= t);
        pe_sum += predictive_entropy(&mean);

        let g: Vec<f64> = entropy_gradient(&mean)
            .into_iter()
            .map(|v| v / (t * b))
            .collect();
        for (cache, m) in caches.iter().zip(pass_masks) {
            let inner: f64 = cache.probs.iter().zip(&g).map(|(p, gv)| p * gv).sum();
            let d: Vec<f64> = cache
                .probs
                .iter()
                .zip(&g)
                .map(|(p, gv)| p * (gv - inner))
                .collect();
            model.backward(cache, Some(m), &d, &mut grads);
        }
    }

    let loss = BatchLoss {
        total: ce_sum / b + pe_sum / b,
        cross_entropy: ce_sum / b,
        entropy: pe_sum / b,
    };
    (loss, grads)
}

/// [`pe_batch_loss_with_masks`] with masks drawn from `step_seed`.
pub fn pe_batch_loss(
    model: &MlpModel,
    batch: &[(&[f64], usize)],
    config: &TrainConfig,
    step_seed: u64,
) -> (BatchLoss, Gradients) {
    let passes = if config.pe_loss_enabled {
        config.pe_train_passes
    } else {
        0
    };
    let masks = BatchMasks::draw(model, batch.len(), passes, step_seed);
    pe_batch_loss_with_masks(model, batch, &masks, config.pe_loss_enabled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ClassVocabulary;

    #[test]
    fn cross_entropy_anchors() {
        assert!(cross_entropy(&[0.0, 1.0, 0.0], 1) <= 1e-9);
        assert!((cross_entropy(&[1.0 / 7.0; 7], 3) - 7f64.ln()).abs() < 1e-12);
        assert!((cross_entropy(&[0.25, 0.75], 0) - 4f64.ln()).abs() < 1e-12);
        assert!((cross_entropy(&[0.0, 1.0], 0) - 1e12f64.ln()).abs() < 1e-9);
        assert!((4f64.ln() - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn entropy_anchors() {
        assert_eq!(predictive_entropy(&[0.0, 0.0, 1.0]), 0.0);
        assert!(predictive_entropy(&[0.0, 1.0]).is_sign_positive());
        assert!((predictive_entropy(&[1.0 / 7.0; 7]) - 7f64.ln()).abs() < 1e-9);
        assert!((predictive_entropy(&[0.5, 0.5]) - 2f64.ln()).abs() < 1e-12);
        assert!((predictive_entropy(&[0.7, 0.3]) - 0.610864).abs() < 1e-6);
        assert!(predictive_entropy(&[1.0 / 7.0; 7]) <= 7f64.ln());
    }

    fn setup(p: f64) -> (MlpModel, Vec<Vec<f64>>, Vec<usize>) {
        let vocab = ClassVocabulary::new(["a", "b", "c"]).unwrap();
        let model = MlpModel::init_with_hidden(4, &[5, 4], &vocab, p, 3).unwrap();
        let xs = vec![
            vec![0.5, -1.0, 0.3, 2.0],
            vec![-0.2, 0.8, 1.1, -0.4],
            vec![1.0, 1.0, -1.0, 0.0],
        ];
        (model, xs, vec![0, 2, 1])
    }

    #[test]
    fn disabled_entropy_is_plain_cross_entropy() {
        let (model, xs, ys) = setup(0.4);
        let batch: Vec<(&[f64], usize)> = xs
            .iter()
            .map(Vec::as_slice)
            .zip(ys.iter().copied())
            .collect();
        let masks = BatchMasks::draw(&model, 3, 4, 8);
        let (off, _) = pe_batch_loss_with_masks(&model, &batch, &masks, false);
        let expected: f64 = batch
            .iter()
            .zip(&masks.ce)
            .map(|(&(x, y), m)| cross_entropy(&model.forward(x, Some(m)), y))
            .sum::<f64>()
            / 3.0;
        assert_eq!(off.total, expected);
        assert_eq!(off.entropy, 0.0);

        let (on, _) = pe_batch_loss_with_masks(&model, &batch, &masks, true);
        assert_eq!(on.cross_entropy, off.cross_entropy);
        assert!((on.total - (off.total + on.entropy)).abs() < 1e-15);
        assert!(on.entropy >= 0.0 && on.entropy <= 3f64.ln());
    }

    #[test]
    fn zero_dropout_entropy_matches_deterministic_output() {
        let (model, xs, ys) = setup(0.0);
        let batch: Vec<(&[f64], usize)> = xs
            .iter()
            .map(Vec::as_slice)
            .zip(ys.iter().copied())
            .collect();
        let config = TrainConfig {
            pe_loss_enabled: true,
            pe_train_passes: 6,
            ..TrainConfig::default()
        };
        let (loss, _) = pe_batch_loss(&model, &batch, &config, 1);
        let expected: f64 = xs
            .iter()
            .map(|x| predictive_entropy(&model.forward(x, None)))
            .sum::<f64>()
            / 3.0;
        assert!((loss.entropy - expected).abs() < 1e-12);
    }
}
