//! Classical baselines: softmax regression, k-nearest neighbours and
//! Gaussian naive Bayes.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureTable, SplitIndices};
use crate::error::{Error, Result};
use crate::nn::softmax;

pub const NB_VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaselineSpec {
    Logistic {
        #[serde(default)]
        l2: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        #[serde(default = "default_tol")]
        tolerance: f64,
    },
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    GaussianNb,
}

fn default_max_iter() -> usize {
    5000
}
fn default_tol() -> f64 {
    1e-5
}
fn default_k() -> usize {
    5
}

impl BaselineSpec {
    pub fn logistic() -> Self {
        BaselineSpec::Logistic {
            l2: 0.0,
            max_iter: default_max_iter(),
            tolerance: default_tol(),
        }
    }

    pub fn knn() -> Self {
        BaselineSpec::Knn { k: default_k() }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BaselineSpec::Logistic { .. } => "Logistic",
            BaselineSpec::Knn { .. } => "KNN",
            BaselineSpec::GaussianNb => "GaussianNB",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineModel {
    Logistic {
        /// `C x d`
        weights: Array2<f64>,
        bias: Array1<f64>,
        iterations: usize,
    },
    Knn {
        k: usize,
        rows: Array2<f64>,
        labels: Vec<usize>,
        n_classes: usize,
    },
    GaussianNb {
        means: Array2<f64>,
        variances: Array2<f64>,
        log_priors: Array1<f64>,
    },
}

pub fn fit_baseline(
    spec: &BaselineSpec,
    table: &FeatureTable,
    split: &SplitIndices,
) -> Result<BaselineModel> {
    fit_rows(spec, table, &split.train)
}

pub fn fit_rows(
    spec: &BaselineSpec,
    table: &FeatureTable,
    rows: &[usize],
) -> Result<BaselineModel> {
    let c = table.vocab().len();
    let train = table.select_rows(rows);
    let counts = train.class_counts();
    if let Some(empty) = counts.iter().position(|&n| n == 0) {
        return Err(Error::ClassTooSmall {
            class: table.vocab().name(empty).to_string(),
            count: 0,
            required: 1,
        });
    }
    let x = train.features();
    let y = train.labels();
    match *spec {
        BaselineSpec::Logistic {
            l2,
            max_iter,
            tolerance,
        } => Ok(fit_logistic(x, y, c, l2, max_iter, tolerance)),
        BaselineSpec::Knn { k } => {
            if k < 1 || k > x.nrows() {
                return Err(Error::InvalidArgument(format!(
                    "k = {k} must be in [1, {}]",
                    x.nrows()
                )));
            }
            Ok(BaselineModel::Knn {
                k,
                rows: x.clone(),
                labels: y.to_vec(),
                n_classes: c,
            })
        }
        BaselineSpec::GaussianNb => {
            let d = x.ncols();
            let mut means = Array2::zeros((c, d));
            let mut variances = Array2::zeros((c, d));
            for class in 0..c {
                let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
                let xc = x.select(Axis(0), &idx);
                means
                    .row_mut(class)
                    .assign(&xc.mean_axis(Axis(0)).expect("nonempty class"));
                variances
                    .row_mut(class)
                    .assign(&xc.var_axis(Axis(0), 0.0).mapv(|v| v.max(NB_VARIANCE_FLOOR)));
            }
            let n = y.len() as f64;
            let log_priors = counts.iter().map(|&k| (k as f64 / n).ln()).collect();
            Ok(BaselineModel::GaussianNb {
                means,
                variances,
                log_priors,
            })
        }
    }
}

/// Full-batch gradient descent on mean softmax cross-entropy (+ L2 on
/// weights). The step size is the inverse of a Lipschitz bound on the
/// gradient, so no learning rate needs tuning.
fn fit_logistic(
    x: &Array2<f64>,
    y: &[usize],
    c: usize,
    l2: f64,
    max_iter: usize,
    tol: f64,
) -> BaselineModel {
    let (n, d) = x.dim();
    let mean_sq_norm = x.rows().into_iter().map(|r| r.dot(&r) + 1.0).sum::<f64>() / n as f64;
    let step = 1.0 / (0.5 * mean_sq_norm + l2);
    let mut w = Array2::<f64>::zeros((c, d));
    let mut b = Array1::<f64>::zeros(c);
    let mut iterations = 0;
    for _ in 0..max_iter {
        let scores = x.dot(&w.t()) + &b;
        let mut residual = Array2::<f64>::zeros((n, c));
        for (i, row) in scores.rows().into_iter().enumerate() {
            let p = softmax(&row.to_vec());
            for (j, pj) in p.into_iter().enumerate() {
                residual[[i, j]] = pj - if y[i] == j { 1.0 } else { 0.0 };
            }
        }
        let grad_w = residual.t().dot(x) / n as f64 + &w * l2;
        let grad_b = residual.sum_axis(Axis(0)) / n as f64;
        let norm = (grad_w.mapv(|v| v * v).sum() + grad_b.mapv(|v| v * v).sum()).sqrt();
        if norm < tol {
            break;
        }
        w.scaled_add(-step, &grad_w);
        b.scaled_add(-step, &grad_b);
        iterations += 1;
    }
    BaselineModel::Logistic {
        weights: w,
        bias: b,
        iterations,
    }
}

impl BaselineModel {
    pub fn input_dim(&self) -> usize {
        match self {
            BaselineModel::Logistic { weights, .. } => weights.ncols(),
            BaselineModel::Knn { rows, .. } => rows.ncols(),
            BaselineModel::GaussianNb { means, .. } => means.ncols(),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let xv = ndarray::ArrayView1::from(x);
        Ok(match self {
            BaselineModel::Logistic { weights, bias, .. } => {
                let scores = weights.dot(&xv) + bias;
                softmax(&scores.to_vec())
            }
            BaselineModel::Knn {
                k,
                rows,
                labels,
                n_classes,
            } => {
                let mut dist: Vec<(f64, usize)> = rows
                    .rows()
                    .into_iter()
                    .enumerate()
                    .map(|(i, r)| {
                        (
                            r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
                            i,
                        )
                    })
                    .collect();
                // distance first, then lower row index
                dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut votes = vec![0.0; *n_classes];
                for &(_, i) in dist.iter().take(*k) {
                    votes[labels[i]] += 1.0;
                }
                votes.iter().map(|v| v / *k as f64).collect()
            }
            BaselineModel::GaussianNb {
                means,
                variances,
                log_priors,
            } => {
                let log_joint: Vec<f64> = (0..means.nrows())
                    .map(|c| {
                        let ll: f64 = x
                            .iter()
                            .zip(means.row(c))
                            .zip(variances.row(c))
                            .map(|((&xi, &m), &v)| {
                                -0.5 * (2.0 * std::f64::consts::PI * v).ln()
                                    - (xi - m) * (xi - m) / (2.0 * v)
                            })
                            .sum();
                        ll + log_priors[c]
                    })
                    .collect();
                softmax(&log_joint)
            }
        })
    }
}
