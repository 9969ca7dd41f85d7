//! Experiment configuration: one JSON document per cell, validated against
//! every module's preconditions before anything runs.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierSpec;
use crate::dataset::{
    generate_gaussian, load_csv, make_scenario, make_scenario_from_pair, CsvOptions,
    GaussianComponent, GaussianMixtureSpec, LabelColumn, OpenSetScenario,
};
use crate::error::{Error, Result};
use crate::rtscv::RtscvConfig;
use crate::separability::{SweepQuantity, SweepTarget};
use crate::{mix_seed, synthetic};

/// Which rectification engine a cell runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Rtscv,
    Csi,
    /// Base classifier fitted on the known classes only.
    Pre,
}

impl EngineKind {
    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Rtscv => "rtscv",
            EngineKind::Csi => "csi",
            EngineKind::Pre => "pre",
        }
    }
}

impl std::str::FromStr for EngineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rtscv" => Ok(EngineKind::Rtscv),
            "csi" => Ok(EngineKind::Csi),
            "pre" => Ok(EngineKind::Pre),
            other => Err(Error::invalid(
                "engine",
                format!("{other:?} is not one of rtscv, csi, pre"),
            )),
        }
    }
}

/// Where the data comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Generated Gaussian mixture: either a named preset or explicit
    /// components. Without `mixture_seed` the draws derive from the run seed.
    Synthetic {
        #[serde(default)]
        preset: Option<String>,
        #[serde(default)]
        components: Option<Vec<GaussianComponent>>,
        n_per_component: usize,
        #[serde(default)]
        mixture_seed: Option<u64>,
    },
    /// One CSV split into train/test by `split_fraction`.
    Csv {
        path: PathBuf,
        label_column: usize,
        #[serde(default)]
        has_header: bool,
    },
    /// Official train/test CSV pair.
    CsvPair {
        train_path: PathBuf,
        test_path: PathBuf,
        label_column: usize,
        #[serde(default)]
        has_header: bool,
    },
}

/// Sweep axes the CLI exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxisKind {
    SampleRate,
    Folds,
    Separability,
}

impl std::str::FromStr for SweepAxisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "sample_rate" => Ok(SweepAxisKind::SampleRate),
            "folds" => Ok(SweepAxisKind::Folds),
            "separability" => Ok(SweepAxisKind::Separability),
            other => Err(Error::invalid(
                "axis",
                format!("{other:?} is not one of sample-rate, folds, separability"),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparabilitySpec {
    pub target: SweepTarget,
    pub quantity: SweepQuantity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxisKind,
    pub levels: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub separability: Option<SeparabilitySpec>,
}

fn default_replicates() -> usize {
    10
}

/// Which optional metrics a cell computes. Confusion-matrix metrics are
/// always on; AUROC needs per-row scores and can be switched off.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsToggles {
    #[serde(default = "default_true")]
    pub auroc: bool,
}

fn default_true() -> bool {
    true
}

impl Default for MetricsToggles {
    fn default() -> Self {
        MetricsToggles { auroc: true }
    }
}

/// One experiment cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetSource,
    /// Class selectors for the unknown classes: class ids for synthetic
    /// data, original label tokens (as written in the file) for CSV data.
    pub uu_classes: Vec<serde_json::Value>,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    pub classifier: ClassifierSpec,
    #[serde(default)]
    pub rtscv: RtscvConfig,
    #[serde(default = "default_engine")]
    pub engine: EngineKind,
    #[serde(default)]
    pub metrics: MetricsToggles,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_split() -> f64 {
    0.5
}

fn default_engine() -> EngineKind {
    EngineKind::Rtscv
}

impl ExperimentConfig {
    /// Loads and validates a config; relative dataset paths resolve against
    /// the config file's directory, so configs work from any working
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)?;
        if let Some(base) = path.parent() {
            let anchor = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            match &mut config.dataset {
                DatasetSource::Csv { path, .. } => anchor(path),
                DatasetSource::CsvPair {
                    train_path,
                    test_path,
                    ..
                } => {
                    anchor(train_path);
                    anchor(test_path);
                }
                DatasetSource::Synthetic { .. } => {}
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::invalid("name", "must be non-empty"));
        }
        if self.uu_classes.is_empty() {
            return Err(Error::invalid("uu_classes", "must name at least one class"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::invalid(
                "split_fraction",
                format!("{} outside (0,1)", self.split_fraction),
            ));
        }
        self.rtscv.validate()?;
        if let DatasetSource::Synthetic {
            preset, components, ..
        } = &self.dataset
        {
            match (preset, components) {
                (Some(_), Some(_)) => {
                    return Err(Error::invalid(
                        "dataset",
                        "give either preset or components, not both",
                    ))
                }
                (None, None) => {
                    return Err(Error::invalid(
                        "dataset",
                        "synthetic source needs a preset or components",
                    ))
                }
                _ => {}
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.levels.is_empty() {
                return Err(Error::invalid("sweep.levels", "must be non-empty"));
            }
            if sweep.replicates == 0 {
                return Err(Error::invalid("sweep.replicates", "must be >= 1"));
            }
            if sweep.axis == SweepAxisKind::Separability {
                if sweep.separability.is_none() {
                    return Err(Error::invalid(
                        "sweep.separability",
                        "separability axis needs target and quantity",
                    ));
                }
                if !matches!(self.dataset, DatasetSource::Synthetic { .. }) {
                    return Err(Error::invalid(
                        "sweep",
                        "separability sweeps need a synthetic dataset",
                    ));
                }
            }
            if sweep.axis == SweepAxisKind::Folds {
                for &level in &sweep.levels {
                    if level.fract() != 0.0 || level < 2.0 {
                        return Err(Error::invalid(
                            "sweep.levels",
                            format!("fold level {level} is not an integer >= 2"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// The engine config with this cell's seed baked in.
    pub fn rtscv_with_seed(&self) -> RtscvConfig {
        RtscvConfig {
            seed: self.seed,
            ..self.rtscv.clone()
        }
    }

    /// Stable per-cell artifact stem.
    pub fn cell_name(&self) -> String {
        format!(
            "{}_{}_{}",
            sanitize(&self.name),
            self.engine.name(),
            self.classifier.name()
        )
    }

    /// The generating mixture, for synthetic sources.
    pub fn mixture(&self) -> Result<GaussianMixtureSpec> {
        match &self.dataset {
            DatasetSource::Synthetic {
                preset,
                components,
                mixture_seed,
                ..
            } => {
                let seed = mixture_seed.unwrap_or_else(|| mix_seed(self.seed, 0xDA7A));
                let mut spec = match (preset, components) {
                    (Some(name), None) => preset_mixture(name, seed)?,
                    (None, Some(components)) => GaussianMixtureSpec {
                        components: components.clone(),
                        seed,
                    },
                    _ => return Err(Error::invalid("dataset", "invalid synthetic source")),
                };
                spec.seed = seed;
                spec.validate()?;
                Ok(spec)
            }
            _ => Err(Error::invalid("dataset", "not a synthetic source")),
        }
    }

    /// Resolved unknown-class ids in the dataset's dense label space.
    fn resolve_uu(&self, map: Option<&crate::dataset::LabelMap>) -> Result<BTreeSet<usize>> {
        let mut out = BTreeSet::new();
        for value in &self.uu_classes {
            let token = match value {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                other => {
                    return Err(Error::invalid(
                        "uu_classes",
                        format!("unsupported selector {other}"),
                    ))
                }
            };
            let id = match map {
                Some(map) => map.id_of(&token).ok_or_else(|| {
                    Error::invalid("uu_classes", format!("label {token:?} not in dataset"))
                })?,
                None => token.parse::<usize>().map_err(|_| {
                    Error::invalid(
                        "uu_classes",
                        format!("synthetic selector {token:?} is not a class id"),
                    )
                })?,
            };
            out.insert(id);
        }
        Ok(out)
    }

    /// Materializes the scenario for this cell under `self.seed`.
    pub fn build_scenario(&self) -> Result<OpenSetScenario> {
        match &self.dataset {
            DatasetSource::Synthetic {
                n_per_component, ..
            } => {
                let spec = self.mixture()?;
                let data = generate_gaussian(&spec, *n_per_component)?;
                let uu = self.resolve_uu(None)?;
                make_scenario(&data, &uu, self.split_fraction, self.seed)
            }
            DatasetSource::Csv {
                path,
                label_column,
                has_header,
            } => {
                let opts = CsvOptions {
                    label_column: LabelColumn::Index(*label_column),
                    has_header: *has_header,
                };
                let (data, map) = load_csv(path, &opts)?;
                let uu = self.resolve_uu(Some(&map))?;
                make_scenario(&data, &uu, self.split_fraction, self.seed)
            }
            DatasetSource::CsvPair {
                train_path,
                test_path,
                label_column,
                has_header,
            } => {
                let opts = CsvOptions {
                    label_column: LabelColumn::Index(*label_column),
                    has_header: *has_header,
                };
                let (train, train_map) = load_csv(train_path, &opts)?;
                let (test_raw, test_map) = load_csv(test_path, &opts)?;
                // re-express test labels in the training file's id space
                let mut labels = Vec::with_capacity(test_raw.n_samples());
                for &l in test_raw.labels() {
                    let token = test_map.name_of(l).expect("id from same map");
                    let id = train_map.id_of(token).ok_or_else(|| {
                        Error::invalid(
                            "test_path",
                            format!("test label {token:?} absent from training file"),
                        )
                    })?;
                    labels.push(id);
                }
                let test = crate::dataset::Dataset::new(
                    test_raw.features().to_owned(),
                    labels,
                    train_map.len(),
                )?;
                let uu = self.resolve_uu(Some(&train_map))?;
                make_scenario_from_pair(&train, &test, &uu)
            }
        }
    }
}

fn preset_mixture(name: &str, seed: u64) -> Result<GaussianMixtureSpec> {
    match name {
        "high_j1" => Ok(synthetic::benchmark_high_j1(seed)),
        "moderate" => Ok(synthetic::benchmark_moderate(seed)),
        "sweep" => Ok(synthetic::benchmark_sweep(seed)),
        "csi_single" => Ok(synthetic::benchmark_csi_single(seed)),
        "csi_double" => Ok(synthetic::benchmark_csi_double(seed)),
        other => Err(Error::invalid(
            "preset",
            format!("{other:?} is not one of high_j1, moderate, sweep, csi_single, csi_double"),
        )),
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}
