//! Feature tables, class vocabularies, splits and synthetic data.
//!
//! On-disk format is a plain CSV with header `id,label,f0,...,f{d-1}`. Labels
//! are stored by class name and resolved through a [`ClassVocabulary`].

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Ordered list of class names. Label `i` always means `names()[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ClassVocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl ClassVocabulary {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(Error::Vocabulary(format!(
                "need at least 2 classes, got {}",
                names.len()
            )));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Vocabulary(format!("class {i} has an empty name")));
            }
            if name.contains(',') || name.contains('\n') {
                return Err(Error::Vocabulary(format!(
                    "class name {name:?} contains a separator"
                )));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Vocabulary(format!("duplicate class name {name:?}")));
            }
        }
        Ok(Self { names, index })
    }

    /// The seven HAM10000 lesion classes.
    pub fn ham10000() -> Self {
        Self::new(["nv", "mel", "bkl", "bcc", "akiec", "vasc", "df"])
            .expect("static vocabulary is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, label: usize) -> &str {
        &self.names[label]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

impl TryFrom<Vec<String>> for ClassVocabulary {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<ClassVocabulary> for Vec<String> {
    fn from(v: ClassVocabulary) -> Self {
        v.names
    }
}

/// An `n x d` matrix of finite features with per-row ids and class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    ids: Vec<String>,
    features: Array2<f64>,
    labels: Vec<usize>,
    vocab: ClassVocabulary,
}

impl FeatureTable {
    pub fn new(
        ids: Vec<String>,
        features: Array2<f64>,
        labels: Vec<usize>,
        vocab: ClassVocabulary,
    ) -> Result<Self> {
        let n = features.nrows();
        if ids.len() != n || labels.len() != n {
            return Err(Error::InvalidTable(format!(
                "{} ids, {} feature rows, {} labels",
                ids.len(),
                n,
                labels.len()
            )));
        }
        if let Some((row, _)) = labels.iter().enumerate().find(|(_, &l)| l >= vocab.len()) {
            return Err(Error::InvalidTable(format!(
                "label {} at row {row} is outside the {}-class vocabulary",
                labels[row],
                vocab.len()
            )));
        }
        for ((row, col), v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::InvalidTable(format!(
                    "non-finite value {v} at row {row}, column {col}"
                )));
            }
        }
        for (row, id) in ids.iter().enumerate() {
            if id.is_empty() || id.contains(',') || id.contains('\n') {
                return Err(Error::InvalidTable(format!(
                    "bad sample id {id:?} at row {row}"
                )));
            }
        }
        Ok(Self {
            ids,
            features,
            labels,
            vocab,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn vocab(&self) -> &ClassVocabulary {
        &self.vocab
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// Rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            vocab: self.vocab.clone(),
        }
    }

    /// Same ids and labels with a replacement feature matrix.
    pub fn with_features(&self, features: Array2<f64>) -> Result<FeatureTable> {
        FeatureTable::new(
            self.ids.clone(),
            features,
            self.labels.clone(),
            self.vocab.clone(),
        )
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.vocab.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

fn header_for(d: usize) -> String {
    let mut h = String::from("id,label");
    for j in 0..d {
        h.push_str(&format!(",f{j}"));
    }
    h
}

/// Load a feature table, mapping label names through `vocab`.
pub fn load_feature_table(path: impl AsRef<Path>, vocab: &ClassVocabulary) -> Result<FeatureTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };

    let header = reader.headers().map_err(csv_err)?.clone();
    if header.len() < 2 || &header[0] != "id" || &header[1] != "label" {
        return Err(Error::Format {
            path: path.to_path_buf(),
            line: 1,
            message: "header must start with `id,label`".into(),
        });
    }
    let d = header.len() - 2;
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{j}") {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: 1,
                message: format!("column {} must be named f{j}, found {name:?}", j + 2),
            });
        }
    }

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(row as u64 + 2, |p| p.line());
        if record.len() != d + 2 {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} fields, found {}", d + 2, record.len()),
            });
        }
        let label = vocab
            .index_of(&record[1])
            .ok_or_else(|| Error::UnknownLabel {
                path: path.to_path_buf(),
                line,
                row,
                label: record[1].to_string(),
            })?;
        for (j, cell) in record.iter().skip(2).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumeric {
                path: path.to_path_buf(),
                line,
                column: j + 2,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumeric {
                    path: path.to_path_buf(),
                    line,
                    column: j + 2,
                    value: cell.to_string(),
                });
            }
            values.push(v);
        }
        ids.push(record[0].to_string());
        labels.push(label);
    }

    let features = Array2::from_shape_vec((ids.len(), d), values)
        .map_err(|e| Error::InvalidTable(e.to_string()))?;
    FeatureTable::new(ids, features, labels, vocab.clone())
}

/// Write a table in the format read by [`load_feature_table`].
///
/// Floats use Rust's shortest round-trip representation, so a save/load
/// cycle reproduces every value bit for bit.
pub fn save_feature_table(table: &FeatureTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_table(table, &mut w).map_err(|e| Error::io(path, e))
}

fn write_table(table: &FeatureTable, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", header_for(table.dim()))?;
    for (i, row) in table.features.outer_iter().enumerate() {
        write!(w, "{},{}", table.ids[i], table.vocab.name(table.labels[i]))?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Write a header-`f0..` numeric matrix (no id/label columns).
pub(crate) fn save_matrix(rows: &Array2<f64>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        let header: Vec<String> = (0..rows.ncols()).map(|j| format!("f{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in rows.outer_iter() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

pub(crate) fn load_matrix(path: &Path) -> Result<Array2<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let d = reader.headers().map_err(csv_err)?.len();
    let mut values = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != d {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line,
                message: format!("expected {d} fields, found {}", record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            values.push(cell.parse::<f64>().map_err(|_| Error::NonNumeric {
                path: path.to_path_buf(),
                line,
                column: j,
                value: cell.to_string(),
            })?);
        }
        n += 1;
    }
    Array2::from_shape_vec((n, d), values).map_err(|e| Error::InvalidTable(e.to_string()))
}

/// Disjoint train/test row indices produced by [`stratified_split`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Per-class seeded shuffle, then a per-class cut of `round(count * fraction)`
/// rows (half-up) into the test set. At least one row of each class always
/// stays in train.
pub fn stratified_split(
    table: &FeatureTable,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices> {
    stratified_split_labels(table.labels(), table.vocab(), test_fraction, seed)
}

pub(crate) fn stratified_split_labels(
    labels: &[usize],
    vocab: &ClassVocabulary,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); vocab.len()];
    for (row, &l) in labels.iter().enumerate() {
        by_class[l].push(row);
    }
    let mut rng = seed::rng(seed);
    let mut train = Vec::with_capacity(labels.len());
    let mut test = Vec::new();
    for (class, mut rows) in by_class.into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < 2 {
            return Err(Error::ClassTooSmall {
                class: vocab.name(class).to_string(),
                count: rows.len(),
                required: 2,
            });
        }
        rows.shuffle(&mut rng);
        let cut = ((rows.len() as f64 * test_fraction + 0.5).floor() as usize).min(rows.len() - 1);
        test.extend_from_slice(&rows[..cut]);
        train.extend_from_slice(&rows[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test, seed })
}

/// Class centers for [`synth_blobs`]: pairwise distance at least `separation`.
///
/// With `d >= C` the centers sit on scaled, sign-flipped coordinate axes
/// (a regular simplex, every pair exactly `separation` apart); otherwise
/// they are spaced `separation` apart along one axis.
pub fn blob_centers(n_classes: usize, d: usize, separation: f64, seed: u64) -> Array2<f64> {
    let mut rng = seed::rng(seed::derive(seed, 0xCE47));
    let mut centers = Array2::zeros((n_classes, d));
    if d >= n_classes {
        let mut axes: Vec<usize> = (0..d).collect();
        axes.shuffle(&mut rng);
        let scale = separation / std::f64::consts::SQRT_2;
        for c in 0..n_classes {
            let sign = if rand::Rng::random::<bool>(&mut rng) {
                1.0
            } else {
                -1.0
            };
            centers[[c, axes[c]]] = sign * scale;
        }
    } else {
        let axis = rand::Rng::random_range(&mut rng, 0..d);
        for c in 0..n_classes {
            centers[[c, axis]] = (c as f64 - (n_classes as f64 - 1.0) / 2.0) * separation;
        }
    }
    centers
}

/// Isotropic Gaussian blobs, one per class, rows ordered class-major with
/// ids `s0, s1, ...`.
pub fn synth_blobs(
    n_per_class: usize,
    d: usize,
    vocab: &ClassVocabulary,
    spread: f64,
    separation: f64,
    seed: u64,
) -> Result<FeatureTable> {
    if n_per_class < 1 || d < 1 {
        return Err(Error::InvalidArgument(format!(
            "need n_per_class >= 1 and d >= 1, got {n_per_class} and {d}"
        )));
    }
    if !(spread >= 0.0 && spread.is_finite() && separation > 0.0 && separation.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "spread must be >= 0 and separation > 0, got {spread} and {separation}"
        )));
    }
    let c = vocab.len();
    let centers = blob_centers(c, d, separation, seed);
    let mut rng = seed::rng(seed::derive(seed, 0xB10B));
    let n = n_per_class * c;
    let mut features = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for class in 0..c {
        for k in 0..n_per_class {
            let row = class * n_per_class + k;
            for j in 0..d {
                let z: f64 = StandardNormal.sample(&mut rng);
                features[[row, j]] = centers[[class, j]] + spread * z;
            }
            labels.push(class);
        }
    }
    let ids = (0..n).map(|i| format!("s{i}")).collect();
    FeatureTable::new(ids, features, labels, vocab.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn vocab() -> ClassVocabulary {
        ClassVocabulary::ham10000()
    }

    #[test]
    fn vocabulary_rejects_bad_names() {
        assert!(ClassVocabulary::new(["a"]).is_err());
        assert!(ClassVocabulary::new(["a", "a"]).is_err());
        assert!(ClassVocabulary::new(["a", ""]).is_err());
        let v = ClassVocabulary::new(["a", "b"]).unwrap();
        assert_eq!(v.index_of("b"), Some(1));
        assert_eq!(v.index_of("c"), None);
    }

    #[test]
    fn table_rejects_non_finite_and_bad_labels() {
        let v = vocab();
        let bad = FeatureTable::new(vec!["a".into()], array![[f64::NAN]], vec![0], v.clone());
        assert!(bad.is_err());
        let bad = FeatureTable::new(vec!["a".into()], array![[1.0]], vec![7], v.clone());
        assert!(bad.is_err());
        let bad = FeatureTable::new(vec!["a".into(), "b".into()], array![[1.0]], vec![0], v);
        assert!(bad.is_err());
    }

    #[test]
    fn loads_small_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "id,label,f0,f1\na,nv,1,2\nb,mel,3.5,-4\nc,df,0,1e-3\n").unwrap();
        let t = load_feature_table(&p, &vocab()).unwrap();
        assert_eq!((t.n_rows(), t.dim()), (3, 2));
        assert_eq!(t.labels(), &[0, 1, 6]);
        assert_eq!(t.features()[[2, 1]], 1e-3);
    }

    #[test]
    fn unknown_label_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "id,label,f0\na,nv,1\nb,xyz,2\n").unwrap();
        match load_feature_table(&p, &vocab()) {
            Err(Error::UnknownLabel {
                row, line, label, ..
            }) => {
                assert_eq!((row, line, label.as_str()), (1, 3, "xyz"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs_report_location() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "id,lbl,f0\na,nv,1\n").unwrap();
        assert!(matches!(
            load_feature_table(&p, &vocab()),
            Err(Error::Format { line: 1, .. })
        ));

        std::fs::write(&p, "id,label,f0,f1\na,nv,1,2\nb,nv,1\n").unwrap();
        assert!(matches!(
            load_feature_table(&p, &vocab()),
            Err(Error::Format { line: 3, .. })
        ));

        std::fs::write(&p, "id,label,f0,f1\na,nv,1,oops\n").unwrap();
        match load_feature_table(&p, &vocab()) {
            Err(Error::NonNumeric { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let t = FeatureTable::new(vec![], Array2::zeros((0, 4)), vec![], vocab()).unwrap();
        save_feature_table(&t, &p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "id,label,f0,f1,f2,f3\n"
        );
        let back = load_feature_table(&p, &vocab()).unwrap();
        assert_eq!(back.dim(), 4);
        assert_eq!(back.n_rows(), 0);
    }

    #[test]
    fn single_cell_body_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let t = FeatureTable::new(vec!["s0".into()], array![[0.5]], vec![0], vocab()).unwrap();
        save_feature_table(&t, &p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "id,label,f0\ns0,nv,0.5\n"
        );
    }

    #[test]
    fn random_table_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut rng = seed::rng(11);
        let features = Array2::from_shape_fn((20, 8), |_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * 1e3
        });
        let labels: Vec<usize> = (0..20).map(|i| i % 7).collect();
        let ids = (0..20).map(|i| format!("img_{i}")).collect();
        let t = FeatureTable::new(ids, features, labels, vocab()).unwrap();
        save_feature_table(&t, &p).unwrap();
        let back = load_feature_table(&p, &vocab()).unwrap();
        assert_eq!(back.ids(), t.ids());
        assert_eq!(back.labels(), t.labels());
        for (a, b) in back.features().iter().zip(t.features()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn split_is_exactly_stratified() {
        let t = synth_blobs(10, 3, &vocab(), 1.0, 5.0, 1).unwrap();
        let s = stratified_split(&t, 0.2, 9).unwrap();
        assert_eq!(s.test.len(), 14);
        let mut per_class = [0; 7];
        for &i in &s.test {
            per_class[t.labels()[i]] += 1;
        }
        assert_eq!(per_class, [2; 7]);
        assert_eq!(s, stratified_split(&t, 0.2, 9).unwrap());
        assert_ne!(s.test, stratified_split(&t, 0.2, 10).unwrap().test);
    }

    #[test]
    fn split_ham10000_proportions() {
        let counts = [6705, 1113, 1099, 514, 327, 142, 115];
        assert_eq!(counts.iter().sum::<usize>(), 10015);
        let labels: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect();
        let s = stratified_split_labels(&labels, &vocab(), 0.2, 0).unwrap();
        assert_eq!(s.test.len(), 2003);
        assert_eq!(s.train.len(), 10015 - 2003);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let v = ClassVocabulary::new(["a", "b"]).unwrap();
        let t = FeatureTable::new(
            vec!["x".into(), "y".into(), "z".into()],
            Array2::zeros((3, 1)),
            vec![0, 0, 1],
            v,
        )
        .unwrap();
        assert!(matches!(
            stratified_split(&t, 0.5, 0),
            Err(Error::ClassTooSmall { count: 1, .. })
        ));
    }

    #[test]
    fn zero_spread_blobs_sit_on_centers() {
        let t = synth_blobs(5, 9, &vocab(), 0.0, 3.0, 4).unwrap();
        let centers = blob_centers(7, 9, 3.0, 4);
        for i in 0..t.n_rows() {
            assert_eq!(t.row(i), centers.row(t.labels()[i]));
        }
    }

    #[test]
    fn blob_counts_and_separation() {
        let t = synth_blobs(100, 4, &vocab(), 1.0, 10.0, 2).unwrap();
        assert_eq!(t.n_rows(), 700);
        assert_eq!(t.class_counts(), vec![100; 7]);
        for d in [2, 7, 12] {
            let c = blob_centers(7, d, 10.0, 3);
            for a in 0..7 {
                for b in 0..a {
                    let dist = (&c.row(a) - &c.row(b)).mapv(|x| x * x).sum().sqrt();
                    assert!(dist >= 10.0 - 1e-9, "d={d}: {dist}");
                }
            }
        }
    }

    #[test]
    fn well_separated_blobs_are_nn_separable() {
        // Brute-force leave-self-out nearest neighbour over every pair.
        let t = synth_blobs(30, 6, &vocab(), 1.0, 10.0, 5).unwrap();
        let x = t.features();
        let mut correct = 0;
        for i in 0..t.n_rows() {
            let mut best = (f64::INFINITY, usize::MAX);
            for j in 0..t.n_rows() {
                if i == j {
                    continue;
                }
                let d2: f64 = x
                    .row(i)
                    .iter()
                    .zip(x.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d2 < best.0 {
                    best = (d2, j);
                }
            }
            correct += usize::from(t.labels()[best.1] == t.labels()[i]);
        }
        assert_eq!(correct, t.n_rows());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn split_partitions_rows(n_per in 2usize..12, frac in 0.05f64..0.95, s in any::<u64>()) {
                let t = synth_blobs(n_per, 2, &vocab(), 1.0, 4.0, 0).unwrap();
                let split = stratified_split(&t, frac, s).unwrap();
                let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..t.n_rows()).collect::<Vec<_>>());
                let global = split.test.len() as f64 / t.n_rows() as f64;
                for class in 0..7 {
                    let in_test = split.test.iter().filter(|&&i| t.labels()[i] == class).count();
                    prop_assert!((in_test as f64 - n_per as f64 * global).abs() <= 1.0 + 1e-9);
                }
                prop_assert_eq!(&split, &stratified_split(&t, frac, s).unwrap());
            }
        }
    }
}
