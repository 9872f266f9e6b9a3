//! Horizontal concatenation of reduced feature views.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};

use crate::data::FeatureTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FusedTable {
    pub table: FeatureTable,
    /// Width of each source block, in source order.
    pub source_dims: Vec<usize>,
}

/// Concatenate `sources` column-wise. Ids and labels must agree row for row;
/// rows are never reordered to make them agree.
pub fn fuse(sources: &[FeatureTable]) -> Result<FusedTable> {
    let first = sources
        .first()
        .ok_or_else(|| Error::InvalidArgument("fuse needs at least one source".into()))?;
    for (s, table) in sources.iter().enumerate().skip(1) {
        check_aligned(first, table, s)?;
    }
    let views: Vec<ArrayView2<'_, f64>> = sources.iter().map(|t| t.features().view()).collect();
    let features = concatenate(Axis(1), &views).map_err(|e| Error::InvalidTable(e.to_string()))?;
    Ok(FusedTable {
        table: first.with_features(features)?,
        source_dims: sources.iter().map(FeatureTable::dim).collect(),
    })
}

fn check_aligned(first: &FeatureTable, other: &FeatureTable, source_index: usize) -> Result<()> {
    let n = first.n_rows().max(other.n_rows());
    for row in 0..n {
        let a = first.ids().get(row);
        let b = other.ids().get(row);
        if a != b {
            return Err(Error::IdMismatch {
                source_index,
                row,
                expected: a.cloned().unwrap_or_else(|| "<end>".into()),
                actual: b.cloned().unwrap_or_else(|| "<end>".into()),
            });
        }
    }
    if first.vocab() != other.vocab() {
        return Err(Error::InvalidArgument(format!(
            "source {source_index} uses a different class vocabulary"
        )));
    }
    if let Some(row) = (0..n).find(|&r| first.labels()[r] != other.labels()[r]) {
        return Err(Error::LabelMismatch { source_index, row });
    }
    Ok(())
}

/// Per-column mean and standard deviation, for optional per-source scaling
/// before fusion. Fit on training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScaler {
    mean: Array1<f64>,
    std: Array1<f64>,
}

impl ColumnScaler {
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "cannot fit a scaler on zero rows".into(),
            ));
        }
        let mean = x.mean_axis(Axis(0)).expect("nonempty");
        // population std; constant columns are left unscaled
        let std = x
            .var_axis(Axis(0), 0.0)
            .mapv(|v| if v > 1e-24 { v.sqrt() } else { 1.0 });
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: x.ncols(),
            });
        }
        Ok((&x - &self.mean) / &self.std)
    }
}
