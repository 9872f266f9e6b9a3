use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use uqpipe::data::ClassVocabulary;
use uqpipe::nn::{pe_batch_loss_with_masks, BatchMasks, MlpModel};
use uqpipe::seed;

/// Largest relative error between backprop and central differences.
fn max_relative_error(hidden: &[usize], p: f64, passes: usize, pe: bool, s: u64) -> f64 {
    let vocab = ClassVocabulary::new(["a", "b", "c"]).unwrap();
    let mut model = MlpModel::init_with_hidden(4, hidden, &vocab, p, s).unwrap();
    let mut rng = seed::rng(s + 1000);
    for layer in model.layers_mut() {
        for b in &mut layer.bias {
            *b = rng.random_range(0.1..0.5) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
    }
    let xs: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..4).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let batch: Vec<(&[f64], usize)> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (x.as_slice(), i % 3))
        .collect();
    let masks = BatchMasks::draw(&model, batch.len(), passes, s);
    let analytic = pe_batch_loss_with_masks(&model, &batch, &masks, pe)
        .1
        .flat();
    let h = 1e-5;
    (0..model.n_params())
        .map(|i| {
            let eval = |delta: f64| {
                let mut m = model.clone();
                *m.parameters_mut().nth(i).unwrap() += delta;
                pe_batch_loss_with_masks(&m, &batch, &masks, pe).0.total
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8)
        })
        .fold(0.0, f64::max)
}

#[test]
fn pe_loss_gradients_match_finite_differences() {
    for s in 0..5 {
        let err = max_relative_error(&[3, 2], 0.3, 3, true, s);
        assert!(err < 1e-4, "seed {s}: {err:e}");
    }
}

#[test]
fn cross_entropy_only_gradients_match() {
    for s in 0..3 {
        assert!(max_relative_error(&[5, 4], 0.5, 2, false, s) < 1e-4);
    }
}

#[test]
fn deterministic_network_gradients_match() {
    assert!(max_relative_error(&[6], 0.0, 4, true, 9) < 1e-4);
}
