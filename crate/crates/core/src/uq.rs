//! MC dropout, deep ensemble and ensemble-MC-dropout inference.
//!
//! Every engine reduces to the same shape: a set of per-pass class
//! distributions is averaged into one predictive distribution and scored by
//! its entropy. MCD averages `T` masked passes of one model; the ensemble
//! averages the deterministic outputs of `N` models; EMCD averages each
//! member's `T`-pass MCD mean, then averages across members.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ClassVocabulary, FeatureTable};
use crate::error::{Error, Result};
use crate::nn::{predictive_entropy, MlpModel};
use crate::seed;

pub const DEFAULT_MC_PASSES: usize = 50;
pub const DEFAULT_ENSEMBLE_SIZE: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub mean_probs: Vec<f64>,
    pub entropy: f64,
    pub predicted: usize,
    pub true_label: usize,
    /// Per-pass distributions, kept only when requested.
    pub pass_probs: Option<Vec<Vec<f64>>>,
}

impl PredictionRecord {
    pub fn new(
        sample_id: impl Into<String>,
        mean_probs: Vec<f64>,
        true_label: usize,
        pass_probs: Option<Vec<Vec<f64>>>,
    ) -> Self {
        Self {
            sample_id: sample_id.into(),
            entropy: predictive_entropy(&mean_probs),
            predicted: argmax(&mean_probs),
            mean_probs,
            true_label,
            pass_probs,
        }
    }

    pub fn is_correct(&self) -> bool {
        self.predicted == self.true_label
    }

    /// Entropy divided by `ln C`, in `[0, 1]`.
    pub fn normalized_entropy(&self) -> f64 {
        (self.entropy / (self.mean_probs.len() as f64).ln()).clamp(0.0, 1.0)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Element-wise mean, summed in pass order then divided by the pass count.
pub fn mean_distribution(passes: &[Vec<f64>]) -> Vec<f64> {
    let mut mean = vec![0.0; passes[0].len()];
    for p in passes {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    let n = passes.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// One input row to be scored.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub id: &'a str,
    pub x: &'a [f64],
    pub label: usize,
}

/// `N >= 1` models sharing architecture and vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSet {
    members: Vec<MlpModel>,
}

impl EnsembleSet {
    pub fn new(members: Vec<MlpModel>) -> Result<Self> {
        let first = members.first().ok_or_else(|| {
            Error::InvalidArgument("an ensemble needs at least one member".into())
        })?;
        for (i, m) in members.iter().enumerate().skip(1) {
            let same_shape = m.input_dim() == first.input_dim()
                && m.hidden_widths() == first.hidden_widths()
                && m.vocab() == first.vocab();
            if !same_shape {
                return Err(Error::InvalidArgument(format!(
                    "ensemble member {i} differs in architecture or vocabulary"
                )));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[MlpModel] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn vocab(&self) -> &ClassVocabulary {
        self.members[0].vocab()
    }
}

/// Stream seed for ensemble member `index` under EMCD.
pub fn member_seed(seed: u64, index: usize) -> u64 {
    seed::derive(seed, 0x4d45_4d00 + index as u64)
}

/// `T` masked passes of one model. With a zero dropout rate the masks are
/// inert, so the deterministic output is computed once and repeated.
fn mc_passes(model: &MlpModel, x: &[f64], passes: usize, seed: u64) -> Vec<Vec<f64>> {
    if model.dropout_rate() == 0.0 {
        return vec![model.forward(x, None); passes];
    }
    (0..passes)
        .map(|t| model.forward(x, Some(&model.mask_for(seed, t as u64, 0))))
        .collect()
}

fn mc_mean(model: &MlpModel, passes: &[Vec<f64>]) -> Vec<f64> {
    if model.dropout_rate() == 0.0 {
        passes[0].clone()
    } else {
        mean_distribution(passes)
    }
}

fn check_passes(passes: usize) -> Result<()> {
    if passes == 0 {
        return Err(Error::InvalidArgument(
            "number of MC passes must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Monte Carlo dropout: mean of `passes` masked forward passes.
pub fn mcd_predict(
    model: &MlpModel,
    sample: Sample<'_>,
    passes: usize,
    seed: u64,
    keep_passes: bool,
) -> Result<PredictionRecord> {
    check_passes(passes)?;
    let all = mc_passes(model, sample.x, passes, seed);
    let mean = mc_mean(model, &all);
    Ok(PredictionRecord::new(
        sample.id,
        mean,
        sample.label,
        keep_passes.then_some(all),
    ))
}

/// Deep ensemble: mean of the members' dropout-free outputs.
pub fn ensemble_predict(
    ensemble: &EnsembleSet,
    sample: Sample<'_>,
    keep_passes: bool,
) -> PredictionRecord {
    let outputs: Vec<Vec<f64>> = ensemble
        .members
        .iter()
        .map(|m| m.forward(sample.x, None))
        .collect();
    let mean = mean_distribution(&outputs);
    PredictionRecord::new(
        sample.id,
        mean,
        sample.label,
        keep_passes.then_some(outputs),
    )
}

/// Ensemble MC dropout: per-member MCD mean over `passes`, then the mean
/// across members. Member `i` draws masks from [`member_seed`]`(seed, i)`.
pub fn emcd_predict(
    ensemble: &EnsembleSet,
    sample: Sample<'_>,
    passes: usize,
    seed: u64,
    keep_passes: bool,
) -> Result<PredictionRecord> {
    check_passes(passes)?;
    let mut member_means = Vec::with_capacity(ensemble.len());
    let mut dump = keep_passes.then(Vec::new);
    for (i, m) in ensemble.members.iter().enumerate() {
        let all = mc_passes(m, sample.x, passes, member_seed(seed, i));
        member_means.push(mc_mean(m, &all));
        if let Some(d) = dump.as_mut() {
            d.extend(all);
        }
    }
    let mean = mean_distribution(&member_means);
    Ok(PredictionRecord::new(sample.id, mean, sample.label, dump))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UqMethod {
    /// Single deterministic forward pass.
    None,
    Mcd,
    Ensemble,
    Emcd,
}

impl UqMethod {
    pub fn label(self) -> &'static str {
        match self {
            UqMethod::None => "Deterministic",
            UqMethod::Mcd => "MCD",
            UqMethod::Ensemble => "Ensemble",
            UqMethod::Emcd => "EMCD",
        }
    }
}

/// Score `rows` of `table`. Sample `r` uses the stream `derive(seed, r)`.
/// `None` and `Mcd` use the first ensemble member only.
pub fn predict_rows(
    ensemble: &EnsembleSet,
    method: UqMethod,
    table: &FeatureTable,
    rows: &[usize],
    passes: usize,
    seed: u64,
    keep_passes: bool,
) -> Result<Vec<PredictionRecord>> {
    if table.dim() != ensemble.members[0].input_dim() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.members[0].input_dim(),
            actual: table.dim(),
        });
    }
    rows.par_iter()
        .map(|&r| {
            let x = table.row(r).to_vec();
            let sample = Sample {
                id: &table.ids()[r],
                x: &x,
                label: table.labels()[r],
            };
            let s = seed::derive(seed, r as u64);
            match method {
                UqMethod::None => {
                    let p = ensemble.members[0].forward(&x, None);
                    let passes = keep_passes.then(|| vec![p.clone()]);
                    Ok(PredictionRecord::new(sample.id, p, sample.label, passes))
                }
                UqMethod::Mcd => mcd_predict(&ensemble.members[0], sample, passes, s, keep_passes),
                UqMethod::Ensemble => Ok(ensemble_predict(ensemble, sample, keep_passes)),
                UqMethod::Emcd => emcd_predict(ensemble, sample, passes, s, keep_passes),
            }
        })
        .collect()
}

/// Pair each record with its certainty flag: certain iff
/// `PE / ln C <= threshold`.
pub fn flag_certainty(
    records: &[PredictionRecord],
    threshold: f64,
) -> Vec<(&PredictionRecord, bool)> {
    records
        .iter()
        .map(|r| (r, r.normalized_entropy() <= threshold))
        .collect()
}

/// Per-pass probability dump: header `id,pass,class,prob`.
pub fn write_pass_dump(
    records: &[PredictionRecord],
    vocab: &ClassVocabulary,
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "id,pass,class,prob")?;
        for r in records {
            let Some(passes) = &r.pass_probs else {
                continue;
            };
            for (t, probs) in passes.iter().enumerate() {
                for (c, p) in probs.iter().enumerate() {
                    writeln!(w, "{},{t},{},{p}", r.sample_id, vocab.name(c))?;
                }
            }
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
