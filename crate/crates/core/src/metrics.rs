//! Standard classification metrics and the uncertainty confusion matrix.
//!
//! Predictions are split by correctness and by certainty into four counts:
//! CC (correct, certain), IC (incorrect, certain), CU (correct, uncertain)
//! and IU (incorrect, uncertain). From these:
//!
//! * `USen = IU / (IC + IU)`
//! * `USpe = CC / (CC + CU)`
//! * `UPre = IU / (CU + IU)`
//! * `UAcc = (CC + IU) / total`
//!
//! Some published tables label the same counts TC/FC/FU/TU; the mapping is
//! TC = CC, FC = IC, FU = CU, TU = IU.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::uq::{flag_certainty, PredictionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StandardMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Accuracy and support-weighted precision, recall and F1 (`0/0 = 0`).
pub fn standard_metrics(
    predicted: &[usize],
    truth: &[usize],
    n_classes: usize,
) -> Result<StandardMetrics> {
    if predicted.is_empty() || predicted.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "need equal nonempty prediction and label lists, got {} and {}",
            predicted.len(),
            truth.len()
        )));
    }
    let mut tp = vec![0usize; n_classes];
    let mut pred_count = vec![0usize; n_classes];
    let mut support = vec![0usize; n_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p >= n_classes || t >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "class index out of range for {n_classes} classes"
            )));
        }
        pred_count[p] += 1;
        support[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let n = predicted.len() as f64;
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    for c in 0..n_classes {
        let w = support[c] as f64 / n;
        let p = ratio(tp[c] as f64, pred_count[c] as f64);
        let r = ratio(tp[c] as f64, support[c] as f64);
        precision += w * p;
        recall += w * r;
        f1 += w * ratio(2.0 * p * r, p + r);
    }
    Ok(StandardMetrics {
        accuracy: tp.iter().sum::<usize>() as f64 / n,
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct UncertaintyCounts {
    pub cc: usize,
    pub ic: usize,
    pub cu: usize,
    pub iu: usize,
}

impl UncertaintyCounts {
    pub fn total(&self) -> usize {
        self.cc + self.ic + self.cu + self.iu
    }
}

/// Tally `(correct, certain)` pairs.
pub fn uncertainty_confusion(flags: impl IntoIterator<Item = (bool, bool)>) -> UncertaintyCounts {
    let mut counts = UncertaintyCounts::default();
    for (correct, certain) in flags {
        match (correct, certain) {
            (true, true) => counts.cc += 1,
            (false, true) => counts.ic += 1,
            (true, false) => counts.cu += 1,
            (false, false) => counts.iu += 1,
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyMetrics {
    pub uacc: f64,
    pub usen: f64,
    pub uspe: f64,
    pub upre: f64,
    /// Metrics whose denominator was zero (reported as 0).
    pub undefined: Vec<&'static str>,
}

pub fn uncertainty_metrics(counts: &UncertaintyCounts) -> Result<UncertaintyMetrics> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::InvalidArgument("no records to evaluate".into()));
    }
    let mut undefined = Vec::new();
    let mut frac = |name: &'static str, num: usize, den: usize| {
        if den == 0 {
            undefined.push(name);
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let usen = frac("USen", counts.iu, counts.ic + counts.iu);
    let uspe = frac("USpe", counts.cc, counts.cc + counts.cu);
    let upre = frac("UPre", counts.iu, counts.cu + counts.iu);
    let uacc = (counts.cc + counts.iu) as f64 / total as f64;
    Ok(UncertaintyMetrics {
        uacc,
        usen,
        uspe,
        upre,
        undefined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub acc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub uacc: f64,
    pub usen: f64,
    pub uspe: f64,
    pub upre: f64,
    pub counts: UncertaintyCounts,
    pub threshold: f64,
    pub undefined: Vec<&'static str>,
}

/// Full report for `records` at one normalised-entropy threshold.
pub fn evaluate(
    records: &[PredictionRecord],
    threshold: f64,
    n_classes: usize,
) -> Result<MetricReport> {
    let predicted: Vec<usize> = records.iter().map(|r| r.predicted).collect();
    let truth: Vec<usize> = records.iter().map(|r| r.true_label).collect();
    let standard = standard_metrics(&predicted, &truth, n_classes)?;
    with_threshold(&standard, records, threshold)
}

fn with_threshold(
    standard: &StandardMetrics,
    records: &[PredictionRecord],
    threshold: f64,
) -> Result<MetricReport> {
    let counts = uncertainty_confusion(
        flag_certainty(records, threshold)
            .into_iter()
            .map(|(r, certain)| (r.is_correct(), certain)),
    );
    let u = uncertainty_metrics(&counts)?;
    Ok(MetricReport {
        acc: standard.accuracy,
        precision: standard.precision,
        recall: standard.recall,
        f1: standard.f1,
        uacc: u.uacc,
        usen: u.usen,
        uspe: u.uspe,
        upre: u.upre,
        counts,
        threshold,
        undefined: u.undefined,
    })
}

/// `{0.00, 0.01, ..., 1.00}`
pub fn default_threshold_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub best_threshold: f64,
    /// One report per grid point, in grid order.
    pub reports: Vec<MetricReport>,
}

/// Evaluate every threshold in `grid`; the best maximises UAcc, ties going
/// to the smallest threshold.
pub fn threshold_sweep(
    records: &[PredictionRecord],
    grid: &[f64],
    n_classes: usize,
) -> Result<SweepResult> {
    if records.is_empty() || grid.is_empty() {
        return Err(Error::InvalidArgument(
            "threshold sweep needs records and a grid".into(),
        ));
    }
    let predicted: Vec<usize> = records.iter().map(|r| r.predicted).collect();
    let truth: Vec<usize> = records.iter().map(|r| r.true_label).collect();
    let standard = standard_metrics(&predicted, &truth, n_classes)?;
    let reports = grid
        .iter()
        .map(|&t| with_threshold(&standard, records, t))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in reports.iter().enumerate() {
        let b = &reports[best];
        if r.uacc > b.uacc || (r.uacc == b.uacc && r.threshold < b.threshold) {
            best = i;
        }
    }
    Ok(SweepResult {
        best_threshold: reports[best].threshold,
        reports,
    })
}

/// One line of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub method: String,
    pub report: MetricReport,
}

pub const REPORT_HEADER: [&str; 16] = [
    "experiment",
    "method",
    "threshold",
    "Acc",
    "Pre",
    "Recall",
    "F1",
    "IU",
    "IC",
    "CU",
    "CC",
    "UAcc",
    "USen",
    "USpe",
    "UPre",
    "undefined",
];

/// Percentage with two decimals, rounded half-up.
pub fn percent(v: f64) -> String {
    format!("{:.2}", (v * 10_000.0).round() / 100.0)
}

impl ReportRow {
    pub fn to_record(&self) -> Vec<String> {
        let r = &self.report;
        vec![
            self.experiment.clone(),
            self.method.clone(),
            r.threshold.to_string(),
            percent(r.acc),
            percent(r.precision),
            percent(r.recall),
            percent(r.f1),
            r.counts.iu.to_string(),
            r.counts.ic.to_string(),
            r.counts.cu.to_string(),
            r.counts.cc.to_string(),
            percent(r.uacc),
            percent(r.usen),
            percent(r.uspe),
            percent(r.upre),
            r.undefined.join(";"),
        ]
    }
}

pub fn render_csv(records: &[Vec<String>]) -> String {
    let mut out = REPORT_HEADER.join(",");
    out.push('\n');
    for rec in records {
        out.push_str(&rec.join(","));
        out.push('\n');
    }
    out
}

pub fn render_markdown(records: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n", REPORT_HEADER.join(" | "));
    out.push_str(&format!("|{}\n", "---|".repeat(REPORT_HEADER.len())));
    for rec in records {
        out.push_str(&format!("| {} |\n", rec.join(" | ")));
    }
    out
}

pub fn write_report(rows: &[ReportRow], csv_path: &Path, md_path: &Path) -> Result<()> {
    let records: Vec<Vec<String>> = rows.iter().map(ReportRow::to_record).collect();
    write_text(csv_path, &render_csv(&records))?;
    write_text(md_path, &render_markdown(&records))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Read report CSVs and return all rows sorted by UAcc, descending.
pub fn merge_reports(paths: &[impl AsRef<Path>]) -> Result<Vec<Vec<String>>> {
    let uacc_col = REPORT_HEADER
        .iter()
        .position(|&h| h == "UAcc")
        .expect("UAcc column");
    let mut rows: Vec<(f64, Vec<String>)> = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(file);
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let header = reader.headers().map_err(csv_err)?.clone();
        if header.iter().ne(REPORT_HEADER.iter().copied()) {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: 1,
                message: "not a report CSV (unexpected header)".into(),
            });
        }
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            let uacc: f64 = record[uacc_col].parse().map_err(|_| Error::NonNumeric {
                path: path.to_path_buf(),
                line,
                column: uacc_col,
                value: record[uacc_col].to_string(),
            })?;
            rows.push((uacc, record.iter().map(str::to_string).collect()));
        }
    }
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}
