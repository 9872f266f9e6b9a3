use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde_json::json;

use super::config::{ExperimentConfig, Threshold};
use super::{RunError, StageExt};
use crate::baselines::{fit_rows, BaselineModel};
use crate::data::{
    load_feature_table, stratified_split, stratified_split_labels, ClassVocabulary, FeatureTable,
};
use crate::error::Error;
use crate::fusion::{fuse, ColumnScaler};
use crate::metrics::{
    default_threshold_grid, evaluate, render_csv, threshold_sweep, write_report, write_text,
    MetricReport, ReportRow,
};
use crate::nn::{save_checkpoint, train_rows, MlpModel};
use crate::pca::PcaModel;
use crate::seed::{self, tag};
use crate::uq::{predict_rows, write_pass_dump, EnsembleSet, PredictionRecord, UqMethod};

#[derive(Debug, Clone)]
pub enum Classifier {
    Mlp(EnsembleSet),
    Baseline(BaselineModel),
}

/// Everything fitted on training rows; applies to new raw feature rows.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub pcas: Vec<PcaModel>,
    pub scalers: Option<Vec<ColumnScaler>>,
    pub classifier: Classifier,
    pub method: UqMethod,
    pub mc_passes: usize,
    pub inference_seed: u64,
    pub vocab: ClassVocabulary,
}

impl FittedPipeline {
    /// Reduce, optionally scale, and concatenate one raw matrix per source.
    pub fn transform(&self, raw: &[ArrayView2<'_, f64>]) -> crate::Result<Array2<f64>> {
        if raw.len() != self.pcas.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} source matrices, got {}",
                self.pcas.len(),
                raw.len()
            )));
        }
        let mut blocks = Vec::with_capacity(raw.len());
        for (i, (x, pca)) in raw.iter().zip(&self.pcas).enumerate() {
            let mut z = pca.transform(x.view())?;
            if let Some(scalers) = &self.scalers {
                z = scalers[i].apply(z.view())?;
            }
            blocks.push(z);
        }
        let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
        ndarray::concatenate(ndarray::Axis(1), &views)
            .map_err(|e| Error::InvalidTable(e.to_string()))
    }

    /// Score `rows` of an already transformed table.
    pub fn predict_table(
        &self,
        table: &FeatureTable,
        rows: &[usize],
        seed: u64,
        keep_passes: bool,
    ) -> crate::Result<Vec<PredictionRecord>> {
        match &self.classifier {
            Classifier::Mlp(ens) => predict_rows(
                ens,
                self.method,
                table,
                rows,
                self.mc_passes,
                seed,
                keep_passes,
            ),
            Classifier::Baseline(model) => rows
                .iter()
                .map(|&r| {
                    let p = model.predict_proba(&table.row(r).to_vec())?;
                    let passes = keep_passes.then(|| vec![p.clone()]);
                    Ok(PredictionRecord::new(
                        &table.ids()[r],
                        p,
                        table.labels()[r],
                        passes,
                    ))
                })
                .collect(),
        }
    }

    /// Score raw per-source rows with the test-time inference stream.
    pub fn predict_raw(
        &self,
        ids: Vec<String>,
        raw: &[ArrayView2<'_, f64>],
        labels: Vec<usize>,
    ) -> crate::Result<Vec<PredictionRecord>> {
        let features = self.transform(raw)?;
        let table = FeatureTable::new(ids, features, labels, self.vocab.clone())?;
        let rows: Vec<usize> = (0..table.n_rows()).collect();
        self.predict_table(&table, &rows, self.inference_seed, false)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub name: String,
    pub method: String,
    pub threshold: f64,
    pub report: MetricReport,
    pub test_records: Vec<PredictionRecord>,
    pub validation_records: Option<Vec<PredictionRecord>>,
    pub pipeline: FittedPipeline,
    pub output_dir: PathBuf,
}

impl ExperimentOutcome {
    pub fn row(&self) -> ReportRow {
        ReportRow {
            experiment: self.name.clone(),
            method: self.method.clone(),
            report: self.report.clone(),
        }
    }
}

/// Run one experiment end to end and write its artefacts to
/// `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, RunError> {
    config.validate()?;
    let name = config.experiment_name();
    let vocab = config.vocab.clone();

    let sources = config
        .sources
        .iter()
        .map(|p| load_feature_table(p, &vocab))
        .collect::<crate::Result<Vec<_>>>()
        .stage("load")?;

    let split_seed = seed::derive(config.seed, tag::SPLIT);
    let split = stratified_split(&sources[0], config.test_fraction, split_seed).stage("split")?;

    let mut pcas = Vec::with_capacity(sources.len());
    let mut reduced = Vec::with_capacity(sources.len());
    let mut scalers = config.standardize_sources.then(Vec::new);
    for (i, src) in sources.iter().enumerate() {
        let train_x = src.select_rows(&split.train);
        let pca =
            PcaModel::fit(train_x.features().view(), config.pca_for_source(i)).stage("pca")?;
        let mut z = pca.transform(src.features().view()).stage("pca")?;
        if let Some(scalers) = scalers.as_mut() {
            let train_z = pca.transform(train_x.features().view()).stage("pca")?;
            let scaler = ColumnScaler::fit(train_z.view()).stage("pca")?;
            z = scaler.apply(z.view()).stage("pca")?;
            scalers.push(scaler);
        }
        reduced.push(src.with_features(z).stage("pca")?);
        pcas.push(pca);
    }
    let fused = fuse(&reduced).stage("fuse")?;
    let table = fused.table;

    // fit rows exclude the validation carve-out when the threshold is automatic
    let (fit, validation) = match config.threshold {
        Threshold::Auto => {
            let train_labels: Vec<usize> = split.train.iter().map(|&r| table.labels()[r]).collect();
            let inner = stratified_split_labels(
                &train_labels,
                &vocab,
                config.validation_fraction,
                seed::derive(config.seed, tag::VALIDATION),
            )
            .stage("split")?;
            let fit: Vec<usize> = inner.train.iter().map(|&i| split.train[i]).collect();
            let val: Vec<usize> = inner.test.iter().map(|&i| split.train[i]).collect();
            (fit, Some(val))
        }
        Threshold::Fixed(_) => (split.train.clone(), None),
    };

    let mut member_losses = Vec::new();
    let classifier = match config.baseline_spec() {
        Some(spec) => Classifier::Baseline(fit_rows(&spec, &table, &fit).stage("train")?),
        None => {
            let trained = (0..config.n_members())
                .into_par_iter()
                .map(|i| {
                    let init = MlpModel::init_with_hidden(
                        table.dim(),
                        &config.hidden,
                        &vocab,
                        config.dropout_rate,
                        config.member_seed(i),
                    )?;
                    train_rows(&init, &table, &fit, &config.train_config(i))
                })
                .collect::<crate::Result<Vec<_>>>()
                .stage("train")?;
            let mut members = Vec::with_capacity(trained.len());
            for (model, report) in trained {
                member_losses.push(report.epoch_losses);
                members.push(model);
            }
            Classifier::Mlp(EnsembleSet::new(members).stage("train")?)
        }
    };

    let pipeline = FittedPipeline {
        pcas,
        scalers,
        classifier,
        method: config.uq_method,
        mc_passes: config.mc_passes,
        inference_seed: seed::derive(config.seed, tag::INFERENCE),
        vocab: vocab.clone(),
    };

    let validation_records = match &validation {
        Some(rows) => Some(
            pipeline
                .predict_table(
                    &table,
                    rows,
                    seed::derive(config.seed, tag::VALIDATION_INFERENCE),
                    false,
                )
                .stage("inference")?,
        ),
        None => None,
    };
    let test_records = pipeline
        .predict_table(
            &table,
            &split.test,
            pipeline.inference_seed,
            config.dump_passes,
        )
        .stage("inference")?;

    let sweep = match &validation_records {
        Some(records) => Some(
            threshold_sweep(records, &default_threshold_grid(), vocab.len()).stage("threshold")?,
        ),
        None => None,
    };
    let threshold = match (config.threshold, &sweep) {
        (Threshold::Fixed(t), _) => t,
        (Threshold::Auto, Some(s)) => s.best_threshold,
        (Threshold::Auto, None) => unreachable!("automatic threshold always has a sweep"),
    };
    let report = evaluate(&test_records, threshold, vocab.len()).stage("metrics")?;

    let outcome = ExperimentOutcome {
        name,
        method: config.method_label(),
        threshold,
        report,
        test_records,
        validation_records,
        pipeline,
        output_dir: config.output_dir.clone(),
    };

    write_outputs(
        config,
        &outcome,
        &split_sizes(&split.train, &fit, &validation, &split.test),
        &member_losses,
        sweep.as_ref(),
    )
    .stage("write")?;
    Ok(outcome)
}

struct SplitSizes {
    train: usize,
    fit: usize,
    validation: usize,
    test: usize,
}

fn split_sizes(
    train: &[usize],
    fit: &[usize],
    validation: &Option<Vec<usize>>,
    test: &[usize],
) -> SplitSizes {
    SplitSizes {
        train: train.len(),
        fit: fit.len(),
        validation: validation.as_ref().map_or(0, Vec::len),
        test: test.len(),
    }
}

fn write_outputs(
    config: &ExperimentConfig,
    outcome: &ExperimentOutcome,
    sizes: &SplitSizes,
    member_losses: &[Vec<f64>],
    sweep: Option<&crate::metrics::SweepResult>,
) -> crate::Result<()> {
    let out = &config.output_dir;
    let mkdir = |p: &Path| fs::create_dir_all(p).map_err(|e| Error::io(p, e));
    mkdir(out)?;

    write_report(
        &[outcome.row()],
        &out.join("report.csv"),
        &out.join("report.md"),
    )?;
    write_predictions(
        &outcome.test_records,
        &outcome.pipeline.vocab,
        outcome.threshold,
        &out.join("predictions.csv"),
    )?;

    if let Some(sweep) = sweep {
        let rows: Vec<Vec<String>> = sweep
            .reports
            .iter()
            .map(|r| {
                ReportRow {
                    experiment: outcome.name.clone(),
                    method: outcome.method.clone(),
                    report: r.clone(),
                }
                .to_record()
            })
            .collect();
        write_text(&out.join("validation_sweep.csv"), &render_csv(&rows))?;
    }

    if config.dump_passes {
        let dir = out.join("passes");
        mkdir(&dir)?;
        write_pass_dump(
            &outcome.test_records,
            &outcome.pipeline.vocab,
            &dir.join("test_passes.csv"),
        )?;
    }

    let pca_dir = out.join("pca");
    mkdir(&pca_dir)?;
    for (i, pca) in outcome.pipeline.pcas.iter().enumerate() {
        pca.save(pca_dir.join(format!("source{i}")))?;
    }

    if let Classifier::Mlp(ens) = &outcome.pipeline.classifier {
        for (i, m) in ens.members().iter().enumerate() {
            save_checkpoint(m, out.join("models").join(format!("member_{i}")))?;
        }
    }

    let manifest = json!({
        "name": outcome.name,
        "method": outcome.method,
        "config": config,
        "seeds": {
            "split": seed::derive(config.seed, tag::SPLIT),
            "validation": seed::derive(config.seed, tag::VALIDATION),
            "validation_inference": seed::derive(config.seed, tag::VALIDATION_INFERENCE),
            "inference": outcome.pipeline.inference_seed,
            "members": (0..member_losses.len()).map(|i| config.member_seed(i)).collect::<Vec<_>>(),
        },
        "split": {
            "train": sizes.train,
            "fit": sizes.fit,
            "validation": sizes.validation,
            "test": sizes.test,
        },
        "pca": outcome.pipeline.pcas.iter().map(|p| json!({
            "input_dim": p.input_dim(),
            "components": p.n_components(),
            "explained_variance_sum": p.explained_variance().sum(),
        })).collect::<Vec<_>>(),
        "threshold": {
            "mode": match config.threshold { Threshold::Auto => "auto", Threshold::Fixed(_) => "fixed" },
            "value": outcome.threshold,
        },
        "training": member_losses.iter().enumerate().map(|(i, l)| json!({
            "member": i,
            "epoch_losses": l,
        })).collect::<Vec<_>>(),
        "report": outcome.report,
    });
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    write_text(&path, &(text + "\n"))
}

fn write_predictions(
    records: &[PredictionRecord],
    vocab: &ClassVocabulary,
    threshold: f64,
    path: &Path,
) -> crate::Result<()> {
    let mut text = String::from("id,label,predicted,correct,entropy,normalized_entropy,certain");
    for name in vocab.names() {
        text.push_str(&format!(",p_{name}"));
    }
    text.push('\n');
    for r in records {
        let ne = r.normalized_entropy();
        text.push_str(&format!(
            "{},{},{},{},{},{},{}",
            r.sample_id,
            vocab.name(r.true_label),
            vocab.name(r.predicted),
            r.is_correct(),
            r.entropy,
            ne,
            ne <= threshold
        ));
        for p in &r.mean_probs {
            text.push_str(&format!(",{p}"));
        }
        text.push('\n');
    }
    write_text(path, &text)
}
