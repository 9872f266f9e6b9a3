#![allow(dead_code)]

use std::path::Path;

use ndarray::Array2;
use uqpipe::data::{save_feature_table, synth_blobs, ClassVocabulary, FeatureTable};
use uqpipe::nn::Optimizer;
use uqpipe::runner::{ExperimentConfig, ModelKind, Threshold};
use uqpipe::uq::UqMethod;

/// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues in
/// descending order and the matching unit eigenvectors as columns.
pub fn jacobi_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].partial_cmp(&a[[i, i]]).unwrap());
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    (values, vectors)
}

/// Sample covariance with divisor `n - 1`.
pub fn covariance(x: &Array2<f64>) -> Array2<f64> {
    let mean = x.mean_axis(ndarray::Axis(0)).unwrap();
    let c = x - &mean;
    c.t().dot(&c) / (x.nrows() as f64 - 1.0)
}

pub const DESK_N_PER_CLASS: usize = 100;
pub const DESK_DIM: usize = 32;
pub const DESK_SPREAD: f64 = 1.0;
pub const DESK_SEPARATION: f64 = 8.0;
pub const DESK_VIEW_SEEDS: [u64; 2] = [101, 202];

/// Two aligned blob views of the same 700 labelled samples.
pub fn desk_views() -> Vec<FeatureTable> {
    views_with_separation(DESK_SEPARATION)
}

pub fn views_with_separation(separation: f64) -> Vec<FeatureTable> {
    let vocab = ClassVocabulary::ham10000();
    DESK_VIEW_SEEDS
        .iter()
        .map(|&s| {
            synth_blobs(
                DESK_N_PER_CLASS,
                DESK_DIM,
                &vocab,
                DESK_SPREAD,
                separation,
                s,
            )
            .unwrap()
        })
        .collect()
}

/// Writes the desk views under `dir` and returns a fused, PE-regularised
/// six-member ensemble config.
pub fn desk_config(dir: &Path) -> ExperimentConfig {
    desk_config_with_separation(dir, DESK_SEPARATION)
}

pub fn desk_config_with_separation(dir: &Path, separation: f64) -> ExperimentConfig {
    let mut sources = Vec::new();
    for (i, view) in views_with_separation(separation).iter().enumerate() {
        let p = dir.join(format!("view{i}.csv"));
        save_feature_table(view, &p).unwrap();
        sources.push(p);
    }
    let mut c = ExperimentConfig::new(sources, vec![16], dir.join("run"));
    c.name = Some("desk".into());
    c.fuse = true;
    c.model = ModelKind::Mlp;
    c.uq_method = UqMethod::Ensemble;
    c.ensemble_size = 6;
    c.pe_loss = true;
    c.pe_train_passes = 5;
    c.epochs = 30;
    c.batch_size = 32;
    c.optimizer = Optimizer::Adam;
    c.threshold = Threshold::Auto;
    c.seed = 7;
    c
}

/// Small single-view config for fast runner tests.
pub fn small_config(dir: &Path, seed: u64) -> ExperimentConfig {
    let vocab = ClassVocabulary::ham10000();
    let table = synth_blobs(20, 8, &vocab, 1.0, 6.0, seed).unwrap();
    let p = dir.join(format!("small{seed}.csv"));
    save_feature_table(&table, &p).unwrap();
    let mut c = ExperimentConfig::new(vec![p], vec![6], dir.join(format!("out{seed}")));
    c.name = Some(format!("small{seed}"));
    c.epochs = 5;
    c.mc_passes = 5;
    c.ensemble_size = 2;
    c
}
