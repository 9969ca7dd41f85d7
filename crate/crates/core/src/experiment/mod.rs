//! Experiment harness behind the `openrect` CLI: config parsing, single
//! experiment runs, sweeps with confidence intervals, theorem verification
//! tables, decision-boundary grids, IDX conversion, and PCA projection.

mod boundary;
mod config;
mod idx;
mod pca;
mod png;
mod report;
mod sweep;
mod theorems;

pub use boundary::{export_boundary, BoundaryGrid};
pub use config::{
    DatasetSource, EngineKind, ExperimentConfig, MetricsToggles, SeparabilitySpec, SweepAxisKind,
    SweepSpec,
};
pub use idx::convert_idx_to_csv;
pub use pca::{pca_project, PcaProjection};
pub use png::write_rgb_png;
pub use report::{format_float, write_report_csv, ReportRow, REPORT_HEADER};
pub use sweep::{run_sweep, LevelSummary, SweepSample, SweepTable};
pub use theorems::{
    generate_spec_family, load_spec_family, save_spec_family, verify_theorems, write_verdict_csv,
    SpecFamilyInstance, TheoremCase, VerdictRow,
};

use std::collections::HashSet;
use std::path::Path;

use crate::classifiers::{Classifier, Model};
use crate::csi::csi_rectify;
use crate::dataset::{sample_test, Dataset, OpenSetScenario};
use crate::error::Result;
use crate::metrics::EvalReport;
use crate::rtscv::{rectify, RtscvDiagnostics};
use crate::{mix_seed, seed_tags};

/// Artifacts of one experiment cell.
#[derive(Debug)]
pub struct ExperimentRun {
    pub report: EvalReport,
    pub model: Model,
    pub diagnostics: Option<RtscvDiagnostics>,
    /// Indices into the scenario's test set the model was evaluated on.
    pub eval_indices: Vec<usize>,
}

/// Runs one engine on a prepared scenario and evaluates on the test rows
/// that were not drawn into the sample (all engines share the same held-out
/// rows for a given seed and sample rate, so cells are comparable).
pub fn run_on_scenario(config: &ExperimentConfig, scenario: &OpenSetScenario) -> Result<ExperimentRun> {
    let dummy = scenario.dummy_label;
    let cfg = config.rtscv_with_seed();
    let (model, diagnostics) = match config.engine {
        EngineKind::Rtscv => {
            let outcome = rectify(&scenario.train, &scenario.test, &config.classifier, &cfg)?;
            (outcome.model, Some(outcome.diagnostics))
        }
        EngineKind::Csi => {
            let outcome = csi_rectify(&scenario.train, &scenario.test, &config.classifier, &cfg)?;
            (outcome.model, Some(outcome.diagnostics))
        }
        EngineKind::Pre => {
            let model = config
                .classifier
                .fit(&scenario.train, mix_seed(cfg.seed, seed_tags::FINAL_FIT))?;
            (model, None)
        }
    };

    // held-out rows: recompute the sample under the same seed and rate
    let ts = sample_test(&scenario.test, cfg.c, mix_seed(cfg.seed, seed_tags::SAMPLE))?;
    let sampled: HashSet<usize> = ts.sample_indices.iter().copied().collect();
    let eval_indices: Vec<usize> = (0..scenario.test.n_samples())
        .filter(|i| !sampled.contains(i))
        .collect();
    let eval_data = scenario.test.subset(&eval_indices);

    let report = evaluate_model(
        &model,
        &eval_data,
        dummy,
        config.engine,
        scenario,
        config.metrics.auroc,
    )?;
    Ok(ExperimentRun {
        report,
        model,
        diagnostics,
        eval_indices,
    })
}

/// Predicts `eval_data` and assembles the metric report. The unknown-ness
/// score is the dummy-class score for rectified models; the pre-rectified
/// model cannot emit the dummy class, so its score is the negated best
/// known-class score (rank-equivalent to low-confidence detection).
pub fn evaluate_model(
    model: &Model,
    eval_data: &Dataset,
    dummy: usize,
    engine: EngineKind,
    scenario: &OpenSetScenario,
    with_auroc: bool,
) -> Result<EvalReport> {
    let mut predictions = Vec::with_capacity(eval_data.n_samples());
    let mut uu_scores = Vec::with_capacity(eval_data.n_samples());
    for row in eval_data.features().rows() {
        let scores = model.scores(row)?;
        predictions.push(crate::classifiers::argmax_tiebreak(&scores));
        if with_auroc {
            let uu_score = if engine == EngineKind::Pre || scores.len() <= dummy {
                -scores
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max)
            } else {
                normalized_dummy_score(&scores, dummy)
            };
            uu_scores.push(uu_score);
        }
    }
    let openness = scenario.openness_readings().target_equals_train;
    EvalReport::from_predictions(
        eval_data.labels(),
        &predictions,
        with_auroc.then_some(uu_scores.as_slice()),
        dummy + 1,
        openness,
    )
}

/// Dummy-class score relative to the best competing score, so that rankings
/// are comparable across rows for margin-style scores.
fn normalized_dummy_score(scores: &[f64], dummy: usize) -> f64 {
    let best_other = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != dummy)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    scores[dummy] - best_other
}

/// Writes the standard artifact set for one run into `out_dir` and returns
/// the report CSV path.
pub fn write_run_artifacts(
    out_dir: &Path,
    config: &ExperimentConfig,
    scenario: &OpenSetScenario,
    run: &ExperimentRun,
) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let stem = config.cell_name();
    let report_path = out_dir.join(format!("{stem}_report.csv"));
    report::write_report_csv(&report_path, &[ReportRow::new(config, scenario, &run.report)])?;

    let model_path = out_dir.join(format!("{stem}_model.json"));
    run.model.save_json(&model_path)?;

    let outcome_path = out_dir.join(format!("{stem}_outcome.json"));
    let outcome = serde_json::json!({
        "engine": config.engine,
        "config": config,
        "openness": scenario.openness_readings(),
        "diagnostics": run.diagnostics,
        "model_path": model_path.file_name().and_then(|s| s.to_str()),
        "uu_sample_indices": run.diagnostics.as_ref().map(|d| &d.sample_test_indices),
    });
    std::fs::write(&outcome_path, serde_json::to_string_pretty(&outcome)?)?;
    Ok(report_path)
}
