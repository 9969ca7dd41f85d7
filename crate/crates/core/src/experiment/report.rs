//! Report CSV rows: one line per experiment cell, matching the tabular
//! benchmark column structure.

use std::io::Write;
use std::path::Path;

use crate::dataset::OpenSetScenario;
use crate::error::Result;
use crate::metrics::EvalReport;

use super::ExperimentConfig;

/// Shortest round-trip decimal formatting; `None` serializes as an empty
/// field (an undefined metric, not a zero).
pub fn format_float(value: Option<f64>) -> String {
    match value {
        Some(v) if v.is_finite() => format!("{v}"),
        _ => String::new(),
    }
}

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub cell: String,
    pub openness: f64,
    pub macro_f: f64,
    pub classification_acc: Option<f64>,
    pub detection_acc: Option<f64>,
    pub auroc: Option<f64>,
    pub n_eval: usize,
}

impl ReportRow {
    pub fn new(config: &ExperimentConfig, _scenario: &OpenSetScenario, report: &EvalReport) -> Self {
        ReportRow {
            cell: config.cell_name(),
            openness: report.openness,
            macro_f: report.macro_f,
            classification_acc: report.classification_acc,
            detection_acc: report.detection_acc,
            auroc: report.auroc,
            n_eval: report.confusion.total(),
        }
    }
}

pub const REPORT_HEADER: &str =
    "cell,openness,macro_f,classification_acc,detection_acc,auroc,n_eval";

pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{REPORT_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.cell,
            format_float(Some(row.openness)),
            format_float(Some(row.macro_f)),
            format_float(row.classification_acc),
            format_float(row.detection_acc),
            format_float(row.auroc),
            row.n_eval,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_stable_and_lossless() {
        assert_eq!(format_float(Some(0.1)), "0.1");
        assert_eq!(format_float(Some(1.0)), "1");
        assert_eq!(format_float(None), "");
        let tricky = 0.123_456_789_012_345_68;
        let text = format_float(Some(tricky));
        assert_eq!(text.parse::<f64>().unwrap(), tricky);
    }
}
