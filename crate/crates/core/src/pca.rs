//! Principal component analysis by dense symmetric eigendecomposition.
//!
//! The sample covariance (divisor `n - 1`) is decomposed directly when
//! `n > d`; otherwise the `n x n` Gram matrix is decomposed and its
//! eigenvectors are mapped back to feature space. Each component is
//! sign-normalised so that its largest-magnitude coordinate is positive.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::data::{load_matrix, save_matrix};
use crate::error::{Error, Result};

const EIGEN_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Array1<f64>,
    /// `k x d`, orthonormal rows.
    components: Array2<f64>,
    explained_variance: Array1<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    pub fn explained_variance(&self) -> &Array1<f64> {
        &self.explained_variance
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Fit the top `k` components of `x` (rows are samples).
    pub fn fit(x: ArrayView2<'_, f64>, k: usize) -> Result<PcaModel> {
        let (n, d) = x.dim();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "PCA needs at least 2 rows, got {n}"
            )));
        }
        if k < 1 || k > (n - 1).min(d) {
            return Err(Error::InvalidArgument(format!(
                "k = {k} out of range [1, {}] for {n} x {d} data",
                (n - 1).min(d)
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "PCA input has non-finite values".into(),
            ));
        }
        let mean = x.mean_axis(Axis(0)).expect("n >= 2");
        let centered = &x - &mean;
        let denom = (n - 1) as f64;

        let (values, mut components) = if n > d {
            let cov = centered.t().dot(&centered) / denom;
            let (values, vectors) = sorted_eigen(&cov)?;
            let mut comps = Array2::zeros((k, d));
            for i in 0..k {
                for j in 0..d {
                    comps[[i, j]] = vectors[(j, i)];
                }
            }
            (values, comps)
        } else {
            let gram = centered.dot(&centered.t()) / denom;
            let (values, vectors) = sorted_eigen(&gram)?;
            gram_components(&centered, &values, &vectors, k)
        };

        let explained_variance: Array1<f64> = values.iter().take(k).map(|&v| v.max(0.0)).collect();
        for mut row in components.outer_iter_mut() {
            let mut pivot = 0;
            for (j, v) in row.iter().enumerate() {
                if v.abs() > row[pivot].abs() {
                    pivot = j;
                }
            }
            if row[pivot] < 0.0 {
                row.mapv_inplace(|v| -v);
            }
        }
        Ok(PcaModel {
            mean,
            components,
            explained_variance,
        })
    }

    /// `(x - mean) * components^T`
    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        Ok((&x - &self.mean).dot(&self.components.t()))
    }

    /// `z * components + mean`
    pub fn inverse_transform(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.n_components() {
            return Err(Error::DimensionMismatch {
                expected: self.n_components(),
                actual: z.ncols(),
            });
        }
        Ok(z.dot(&self.components) + &self.mean)
    }

    /// Writes `<prefix>.mean.csv`, `<prefix>.components.csv` and
    /// `<prefix>.variance.csv`.
    pub fn save(&self, prefix: impl AsRef<Path>) -> Result<()> {
        let prefix = prefix.as_ref();
        save_matrix(
            &self.mean.view().insert_axis(Axis(0)).to_owned(),
            &suffixed(prefix, "mean"),
        )?;
        save_matrix(&self.components, &suffixed(prefix, "components"))?;
        save_matrix(
            &self
                .explained_variance
                .view()
                .insert_axis(Axis(0))
                .to_owned(),
            &suffixed(prefix, "variance"),
        )
    }

    pub fn load(prefix: impl AsRef<Path>) -> Result<PcaModel> {
        let prefix = prefix.as_ref();
        let mean = load_matrix(&suffixed(prefix, "mean"))?;
        let components = load_matrix(&suffixed(prefix, "components"))?;
        let variance = load_matrix(&suffixed(prefix, "variance"))?;
        if mean.nrows() != 1 || variance.nrows() != 1 {
            return Err(Error::InvalidTable(
                "PCA mean/variance files must hold one row".into(),
            ));
        }
        if components.ncols() != mean.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mean.ncols(),
                actual: components.ncols(),
            });
        }
        if variance.ncols() != components.nrows() {
            return Err(Error::DimensionMismatch {
                expected: components.nrows(),
                actual: variance.ncols(),
            });
        }
        Ok(PcaModel {
            mean: mean.row(0).to_owned(),
            components,
            explained_variance: variance.row(0).to_owned(),
        })
    }
}

fn suffixed(prefix: &Path, what: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(format!(".{what}.csv"));
    prefix.with_file_name(name)
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
fn sorted_eigen(m: &Array2<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]] + m[[j, i]]));
    let eig = SymmetricEigen::try_new(dm, f64::EPSILON, EIGEN_MAX_ITERATIONS).ok_or(
        Error::EigenNoConvergence {
            iterations: EIGEN_MAX_ITERATIONS,
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Map Gram-matrix eigenvectors to feature-space components. Directions with
/// (numerically) zero variance are completed by Gram-Schmidt against the
/// standard basis so the rows stay orthonormal.
fn gram_components(
    centered: &Array2<f64>,
    values: &[f64],
    vectors: &DMatrix<f64>,
    k: usize,
) -> (Vec<f64>, Array2<f64>) {
    let (n, d) = centered.dim();
    let denom = (n - 1) as f64;
    let tol = values.first().copied().unwrap_or(0.0).abs().max(1.0) * 1e-12;
    let mut comps = Array2::<f64>::zeros((k, d));
    let mut filled = 0;
    for i in 0..k {
        if values[i] <= tol {
            break;
        }
        let u = Array1::from_iter((0..n).map(|r| vectors[(r, i)]));
        let mut v = centered.t().dot(&u) / (denom * values[i]).sqrt();
        // one re-orthogonalisation pass against earlier rows
        for j in 0..filled {
            let prev = comps.row(j).to_owned();
            let dot = prev.dot(&v);
            v.scaled_add(-dot, &prev);
        }
        let norm = v.dot(&v).sqrt();
        comps.row_mut(i).assign(&(v / norm));
        filled += 1;
    }
    let mut basis = 0;
    while filled < k {
        let mut v = Array1::<f64>::zeros(d);
        v[basis % d] = 1.0;
        basis += 1;
        for j in 0..filled {
            let prev = comps.row(j).to_owned();
            let dot = prev.dot(&v);
            v.scaled_add(-dot, &prev);
        }
        let norm = v.dot(&v).sqrt();
        if norm > 1e-6 {
            comps.row_mut(filled).assign(&(v / norm));
            filled += 1;
        }
    }
    (values.to_vec(), comps)
}
