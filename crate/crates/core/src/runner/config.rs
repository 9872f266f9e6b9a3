use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineSpec;
use crate::data::ClassVocabulary;
use crate::error::Error;
use crate::nn::{Optimizer, TrainConfig, DEFAULT_DROPOUT, DEFAULT_HIDDEN};
use crate::uq::{UqMethod, DEFAULT_ENSEMBLE_SIZE, DEFAULT_MC_PASSES};

use super::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Mlp,
    Logistic,
    Knn,
    GaussianNb,
}

/// `"auto"` selects the threshold on a validation carve-out; a number in
/// `[0, 1]` fixes it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThresholdRepr", into = "ThresholdRepr")]
pub enum Threshold {
    Auto,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThresholdRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ThresholdRepr> for Threshold {
    type Error = String;

    fn try_from(r: ThresholdRepr) -> Result<Self, String> {
        match r {
            ThresholdRepr::Number(v) => Ok(Threshold::Fixed(v)),
            ThresholdRepr::Text(s) if s == "auto" => Ok(Threshold::Auto),
            ThresholdRepr::Text(s) => {
                Err(format!("threshold must be \"auto\" or a number, got {s:?}"))
            }
        }
    }
}

impl From<Threshold> for ThresholdRepr {
    fn from(t: Threshold) -> Self {
        match t {
            Threshold::Auto => ThresholdRepr::Text("auto".into()),
            Threshold::Fixed(v) => ThresholdRepr::Number(v),
        }
    }
}

/// One experiment, end to end. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// One feature table per extractor.
    pub sources: Vec<PathBuf>,
    #[serde(default = "ClassVocabulary::ham10000")]
    pub vocab: ClassVocabulary,
    #[serde(default = "defaults::test_fraction")]
    pub test_fraction: f64,
    /// PCA width per source; a single entry applies to every source.
    pub pca_components: Vec<usize>,
    #[serde(default)]
    pub fuse: bool,
    /// Z-score each reduced source on training rows before fusion.
    #[serde(default)]
    pub standardize_sources: bool,
    #[serde(default = "defaults::model")]
    pub model: ModelKind,
    #[serde(default = "defaults::uq_method")]
    pub uq_method: UqMethod,
    #[serde(default = "defaults::ensemble_size")]
    pub ensemble_size: usize,
    #[serde(default = "defaults::mc_passes")]
    pub mc_passes: usize,
    #[serde(default = "defaults::dropout_rate")]
    pub dropout_rate: f64,
    #[serde(default = "defaults::hidden")]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub pe_loss: bool,
    #[serde(default = "defaults::pe_train_passes")]
    pub pe_train_passes: usize,
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "defaults::optimizer")]
    pub optimizer: Optimizer,
    #[serde(default = "defaults::knn_k")]
    pub knn_k: usize,
    #[serde(default)]
    pub logistic_l2: f64,
    #[serde(default = "defaults::threshold")]
    pub threshold: Threshold,
    /// Share of the training split held out for automatic thresholding.
    #[serde(default = "defaults::validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    /// Repeat the experiment once per seed; overrides `seed`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default = "defaults::dump_passes")]
    pub dump_passes: bool,
    pub output_dir: PathBuf,
}

mod defaults {
    use super::*;

    pub fn test_fraction() -> f64 {
        0.2
    }
    pub fn model() -> ModelKind {
        ModelKind::Mlp
    }
    pub fn uq_method() -> UqMethod {
        UqMethod::None
    }
    pub fn ensemble_size() -> usize {
        DEFAULT_ENSEMBLE_SIZE
    }
    pub fn mc_passes() -> usize {
        DEFAULT_MC_PASSES
    }
    pub fn dropout_rate() -> f64 {
        DEFAULT_DROPOUT
    }
    pub fn hidden() -> Vec<usize> {
        DEFAULT_HIDDEN.to_vec()
    }
    pub fn pe_train_passes() -> usize {
        TrainConfig::default().pe_train_passes
    }
    pub fn epochs() -> usize {
        TrainConfig::default().epochs
    }
    pub fn batch_size() -> usize {
        TrainConfig::default().batch_size
    }
    pub fn learning_rate() -> f64 {
        TrainConfig::default().learning_rate
    }
    pub fn optimizer() -> Optimizer {
        TrainConfig::default().optimizer
    }
    pub fn knn_k() -> usize {
        5
    }
    pub fn threshold() -> Threshold {
        Threshold::Auto
    }
    pub fn validation_fraction() -> f64 {
        0.1
    }
    pub fn dump_passes() -> bool {
        true
    }
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::config(Error::InvalidArgument(msg.into()))
}

impl ExperimentConfig {
    /// A config with every default filled in.
    pub fn new(sources: Vec<PathBuf>, pca_components: Vec<usize>, output_dir: PathBuf) -> Self {
        let json = serde_json::json!({
            "sources": sources,
            "pca_components": pca_components,
            "output_dir": output_dir,
        });
        serde_json::from_value(json).expect("minimal config is valid")
    }

    /// Parse a JSON config; relative paths resolve against its directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| RunError::config(Error::io(path, e)))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
            RunError::config(Error::Json {
                path: path.to_path_buf(),
                source: e,
            })
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &mut config.sources {
            if s.is_relative() {
                *s = base.join(&*s);
            }
        }
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        if config.name.is_none() {
            config.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(config)
    }

    pub fn experiment_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "experiment".into())
    }

    /// Move the output directory under `root`, keeping its final component.
    pub fn reroot_output(&mut self, root: &Path) {
        let leaf = self
            .output_dir
            .file_name()
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(self.experiment_name()));
        self.output_dir = root.join(leaf);
    }

    /// One config per entry of `seeds`, each writing to `output_dir/seed_<s>`.
    /// Without a seed list the config is returned unchanged.
    pub fn expand_seeds(&self) -> Vec<ExperimentConfig> {
        if self.seeds.is_empty() {
            return vec![self.clone()];
        }
        let name = self.experiment_name();
        self.seeds
            .iter()
            .map(|&s| ExperimentConfig {
                name: Some(format!("{name}-seed{s}")),
                seed: s,
                seeds: Vec::new(),
                output_dir: self.output_dir.join(format!("seed_{s}")),
                ..self.clone()
            })
            .collect()
    }

    pub fn pca_for_source(&self, i: usize) -> usize {
        if self.pca_components.len() == 1 {
            self.pca_components[0]
        } else {
            self.pca_components[i]
        }
    }

    pub fn train_config(&self, member: usize) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.member_seed(member),
            pe_loss_enabled: self.pe_loss,
            pe_train_passes: self.pe_train_passes,
            optimizer: self.optimizer,
        }
    }

    pub fn member_seed(&self, member: usize) -> u64 {
        self.seed.wrapping_add(member as u64)
    }

    pub fn n_members(&self) -> usize {
        match self.uq_method {
            UqMethod::Ensemble | UqMethod::Emcd => self.ensemble_size,
            UqMethod::None | UqMethod::Mcd => 1,
        }
    }

    pub fn baseline_spec(&self) -> Option<BaselineSpec> {
        match self.model {
            ModelKind::Mlp => None,
            ModelKind::Logistic => Some(BaselineSpec::Logistic {
                l2: self.logistic_l2,
                max_iter: 5000,
                tolerance: 1e-5,
            }),
            ModelKind::Knn => Some(BaselineSpec::Knn { k: self.knn_k }),
            ModelKind::GaussianNb => Some(BaselineSpec::GaussianNb),
        }
    }

    pub fn method_label(&self) -> String {
        match self.baseline_spec() {
            Some(spec) => spec.label().to_string(),
            None => self.uq_method.label().to_string(),
        }
    }

    /// Check every constraint that can be checked without touching data.
    pub fn validate(&self) -> Result<(), RunError> {
        if !self.seeds.is_empty() {
            return Err(invalid(
                "a seed list must be expanded into one experiment per seed",
            ));
        }
        if self.sources.is_empty() {
            return Err(invalid("at least one source is required"));
        }
        if self.fuse && self.sources.len() < 2 {
            return Err(invalid("fuse requires at least two sources"));
        }
        if !self.fuse && self.sources.len() > 1 {
            return Err(invalid("multiple sources require fuse = true"));
        }
        if self.pca_components.len() != 1 && self.pca_components.len() != self.sources.len() {
            return Err(invalid(format!(
                "pca_components has {} entries for {} sources",
                self.pca_components.len(),
                self.sources.len()
            )));
        }
        if self.pca_components.contains(&0) {
            return Err(invalid("pca_components entries must be positive"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(invalid("test_fraction must be in (0, 1)"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(invalid("validation_fraction must be in (0, 1)"));
        }
        match self.model {
            ModelKind::Mlp => {
                if matches!(self.uq_method, UqMethod::Ensemble | UqMethod::Emcd)
                    && self.ensemble_size < 2
                {
                    return Err(invalid("ensemble and emcd need ensemble_size >= 2"));
                }
            }
            _ => {
                if self.uq_method != UqMethod::None {
                    return Err(invalid(
                        "uncertainty methods other than none require model = mlp",
                    ));
                }
            }
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(invalid("dropout_rate must be in [0, 1)"));
        }
        if self.mc_passes < 1 || self.pe_train_passes < 1 || self.batch_size < 1 {
            return Err(invalid(
                "mc_passes, pe_train_passes and batch_size must be at least 1",
            ));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(invalid(
                "hidden widths must be a nonempty list of positive integers",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate must be positive"));
        }
        if self.knn_k < 1 {
            return Err(invalid("knn_k must be at least 1"));
        }
        if self.logistic_l2 < 0.0 {
            return Err(invalid("logistic_l2 must be nonnegative"));
        }
        if let Threshold::Fixed(t) = self.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(invalid("a fixed threshold must be in [0, 1]"));
            }
        }
        for s in &self.sources {
            if !s.is_file() {
                return Err(RunError::config(Error::io(
                    s,
                    std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        "source feature table not found",
                    ),
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<ExperimentConfig, serde_json::Error> {
        serde_json::from_str(json)
    }

    #[test]
    fn defaults_fill_in() {
        let c =
            parse(r#"{"sources": ["a.csv"], "pca_components": [8], "output_dir": "out"}"#).unwrap();
        assert_eq!(c.test_fraction, 0.2);
        assert_eq!(c.ensemble_size, 6);
        assert_eq!(c.mc_passes, 50);
        assert_eq!(c.hidden, vec![64, 16]);
        assert_eq!(c.threshold, Threshold::Auto);
        assert_eq!(c.vocab, ClassVocabulary::ham10000());
        assert_eq!(
            c,
            ExperimentConfig::new(vec!["a.csv".into()], vec![8], "out".into())
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err =
            parse(r#"{"sources": [], "pca_components": [8], "output_dir": "o", "epohcs": 3}"#);
        assert!(err.unwrap_err().to_string().contains("epohcs"));
    }

    #[test]
    fn threshold_forms() {
        let c =
            parse(r#"{"sources": [], "pca_components": [1], "output_dir": "o", "threshold": 0.4}"#)
                .unwrap();
        assert_eq!(c.threshold, Threshold::Fixed(0.4));
        assert!(parse(
            r#"{"sources": [], "pca_components": [1], "output_dir": "o", "threshold": "max"}"#
        )
        .is_err());
        let round: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn validation_catches_inconsistent_configs() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("a.csv");
        fs::write(&src, "id,label,f0\n").unwrap();
        let base = ExperimentConfig::new(vec![src.clone()], vec![1], dir.path().join("out"));
        assert!(base.validate().is_ok());

        let mut c = base.clone();
        c.uq_method = UqMethod::Ensemble;
        c.ensemble_size = 1;
        assert!(c.validate().is_err());

        let mut c = base.clone();
        c.fuse = true;
        assert!(c.validate().is_err());

        let mut c = base.clone();
        c.model = ModelKind::Knn;
        c.uq_method = UqMethod::Mcd;
        assert!(c.validate().is_err());

        let mut c = base.clone();
        c.sources = vec![src.clone(), src.clone()];
        assert!(c.validate().is_err());
        c.fuse = true;
        assert!(c.validate().is_ok());
        c.pca_components = vec![1, 2, 3];
        assert!(c.validate().is_err());

        let mut c = base.clone();
        c.sources = vec![dir.path().join("missing.csv")];
        assert!(c.validate().is_err());

        let mut c = base;
        c.threshold = Threshold::Fixed(1.5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn seed_lists_expand() {
        let mut c = ExperimentConfig::new(vec!["a.csv".into()], vec![2], "out".into());
        assert_eq!(c.expand_seeds(), vec![c.clone()]);
        c.name = Some("e".into());
        c.seeds = vec![3, 9];
        let e = c.expand_seeds();
        assert_eq!(e.len(), 2);
        assert_eq!(e[1].seed, 9);
        assert_eq!(e[1].output_dir, PathBuf::from("out/seed_9"));
        assert_eq!(e[1].experiment_name(), "e-seed9");
        assert!(e[1].seeds.is_empty());
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp1.json");
        fs::write(
            &path,
            r#"{"sources": ["views/a.csv"], "pca_components": [4], "output_dir": "runs/x"}"#,
        )
        .unwrap();
        let c = ExperimentConfig::from_file(&path).unwrap();
        assert_eq!(c.sources[0], dir.path().join("views/a.csv"));
        assert_eq!(c.output_dir, dir.path().join("runs/x"));
        assert_eq!(c.experiment_name(), "exp1");
    }
}
