//! Hyperparameter and separability sweeps with seed-replicate confidence
//! intervals. Work parallelizes over (level, replicate) pairs; output rows
//! are sorted before writing so reruns are byte-identical.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rtscv::RtscvConfig;
use crate::separability::{ScatterMode, ScatterSummary, SweepAxis, SweepTarget};
use crate::{mix_seed, seed_tags};

use super::config::{DatasetSource, ExperimentConfig, SweepAxisKind, SweepSpec};
use super::report::format_float;
use super::run_on_scenario;

/// One (level, replicate) measurement; metric fields are `None` when the
/// run failed (a gap marker in the emitted curve).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSample {
    pub level: f64,
    pub replicate: usize,
    pub j1: Option<f64>,
    pub macro_f: Option<f64>,
    pub overall_acc: Option<f64>,
    pub classification_acc: Option<f64>,
    pub detection_acc: Option<f64>,
    pub auroc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axis: SweepAxisKind,
    pub samples: Vec<SweepSample>,
}

/// Runs the configured sweep. Each replicate derives its own seed, so the
/// sampling, folds, and (unless pinned) the synthetic draws all vary.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    let sweep = config
        .sweep
        .clone()
        .ok_or_else(|| Error::invalid("sweep", "config has no sweep section"))?;
    config.validate()?;

    let pairs: Vec<(f64, usize)> = sweep
        .levels
        .iter()
        .flat_map(|&level| (0..sweep.replicates).map(move |r| (level, r)))
        .collect();

    let samples: Vec<SweepSample> = pairs
        .par_iter()
        .map(|&(level, replicate)| {
            match run_level(config, &sweep, level, replicate) {
                Ok(sample) => sample,
                Err(_) => SweepSample {
                    level,
                    replicate,
                    j1: None,
                    macro_f: None,
                    overall_acc: None,
                    classification_acc: None,
                    detection_acc: None,
                    auroc: None,
                },
            }
        })
        .collect();

    let mut samples = samples;
    samples.sort_by(|a, b| a.level.total_cmp(&b.level).then(a.replicate.cmp(&b.replicate)));
    Ok(SweepTable {
        axis: sweep.axis,
        samples,
    })
}

fn run_level(
    config: &ExperimentConfig,
    sweep: &SweepSpec,
    level: f64,
    replicate: usize,
) -> Result<SweepSample> {
    let seed = mix_seed(config.seed, seed_tags::REPLICATE + replicate as u64);
    let mut cell = config.clone();
    cell.seed = seed;
    let mut j1 = None;

    match sweep.axis {
        SweepAxisKind::SampleRate => {
            cell.rtscv = RtscvConfig {
                c: level,
                ..cell.rtscv
            };
        }
        SweepAxisKind::Folds => {
            cell.rtscv = RtscvConfig {
                k: level as usize,
                ..cell.rtscv
            };
        }
        SweepAxisKind::Separability => {
            let sep = sweep.separability.as_ref().expect("validated");
            let axis = SweepAxis {
                target: sep.target,
                quantity: sep.quantity,
            };
            let base = cell.mixture()?;
            let uu = uu_ids_from(&cell)?;
            let scaled = crate::separability::scale_spec(&base, &uu, axis, level);
            let mode = match sep.target {
                SweepTarget::Known => ScatterMode::KnownVsKnown,
                SweepTarget::Uu => ScatterMode::KnownVsUu,
            };
            j1 = Some(ScatterSummary::from_spec(&scaled, mode, &uu)?.j1);
            if let DatasetSource::Synthetic {
                components,
                preset,
                mixture_seed,
                ..
            } = &mut cell.dataset
            {
                *components = Some(scaled.components);
                *preset = None;
                *mixture_seed = Some(scaled.seed);
            }
        }
    }

    let scenario = cell.build_scenario()?;
    let run = run_on_scenario(&cell, &scenario)?;
    Ok(SweepSample {
        level,
        replicate,
        j1,
        macro_f: Some(run.report.macro_f),
        overall_acc: Some(run.report.confusion.overall_accuracy()),
        classification_acc: run.report.classification_acc,
        detection_acc: run.report.detection_acc,
        auroc: run.report.auroc,
    })
}

fn uu_ids_from(config: &ExperimentConfig) -> Result<std::collections::BTreeSet<usize>> {
    config
        .uu_classes
        .iter()
        .map(|v| match v {
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| Error::invalid("uu_classes", "not a class id")),
            serde_json::Value::String(s) => s
                .parse::<usize>()
                .map_err(|_| Error::invalid("uu_classes", "not a class id")),
            _ => Err(Error::invalid("uu_classes", "not a class id")),
        })
        .collect()
}

impl SweepTable {
    /// Per-level mean and normal-approximation 95% interval of a metric.
    pub fn aggregate(&self, metric: impl Fn(&SweepSample) -> Option<f64>) -> Vec<LevelSummary> {
        let mut levels: Vec<f64> = self.samples.iter().map(|s| s.level).collect();
        levels.dedup();
        levels
            .into_iter()
            .map(|level| {
                let values: Vec<f64> = self
                    .samples
                    .iter()
                    .filter(|s| s.level == level)
                    .filter_map(&metric)
                    .collect();
                let j1 = self
                    .samples
                    .iter()
                    .find(|s| s.level == level)
                    .and_then(|s| s.j1);
                LevelSummary::from_values(level, j1, &values)
            })
            .collect()
    }

    /// Values of one metric for a single replicate, in level order.
    pub fn replicate_curve(
        &self,
        replicate: usize,
        metric: impl Fn(&SweepSample) -> Option<f64>,
    ) -> Vec<(f64, Option<f64>)> {
        self.samples
            .iter()
            .filter(|s| s.replicate == replicate)
            .map(|s| (s.level, metric(s)))
            .collect()
    }

    pub fn write_samples_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "level,replicate,j1,macro_f,overall_acc,classification_acc,detection_acc,auroc"
        )?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                format_float(Some(s.level)),
                s.replicate,
                format_float(s.j1),
                format_float(s.macro_f),
                format_float(s.overall_acc),
                format_float(s.classification_acc),
                format_float(s.detection_acc),
                format_float(s.auroc),
            )?;
        }
        Ok(())
    }

    pub fn write_curve_csv(&self, path: &Path) -> Result<()> {
        let macro_f = self.aggregate(|s| s.macro_f);
        let overall = self.aggregate(|s| s.overall_acc);
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "level,j1,n,macro_f_mean,macro_f_lo,macro_f_hi,overall_acc_mean,overall_acc_lo,overall_acc_hi"
        )?;
        for (f, o) in macro_f.iter().zip(&overall) {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                format_float(Some(f.level)),
                format_float(f.j1),
                f.n,
                format_float(f.mean),
                format_float(f.ci_lo),
                format_float(f.ci_hi),
                format_float(o.mean),
                format_float(o.ci_lo),
                format_float(o.ci_hi),
            )?;
        }
        Ok(())
    }
}

/// Aggregated statistics for one sweep level.
#[derive(Debug, Clone)]
pub struct LevelSummary {
    pub level: f64,
    pub j1: Option<f64>,
    pub n: usize,
    pub mean: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

impl LevelSummary {
    fn from_values(level: f64, j1: Option<f64>, values: &[f64]) -> Self {
        if values.is_empty() {
            return LevelSummary {
                level,
                j1,
                n: 0,
                mean: None,
                ci_lo: None,
                ci_hi: None,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (n - 1.0).max(1.0);
        let half = 1.96 * (var / n).sqrt();
        LevelSummary {
            level,
            j1,
            n: values.len(),
            mean: Some(mean),
            ci_lo: Some(mean - half),
            ci_hi: Some(mean + half),
        }
    }
}
