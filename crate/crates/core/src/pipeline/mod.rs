//! End-to-end orchestration behind the command-line tool.
//!
//! Every command takes already-read bytes plus a survey definition, a
//! configuration and a seed, and returns serializable results. File I/O is
//! left to the caller so runs are easy to reproduce in tests.

mod assess;
mod config;
mod explain;
mod report;

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::preprocess::{clean, compute_composites, read_records, CleanReport, ScoredDataset};
use crate::survey::{ResponseRecord, SurveyDefinition};
use crate::synth::{sample_dataset, ScenarioSpec, SyntheticDataset};

pub use assess::{run_assessment, run_validation, Assessment, ModelBundle, ValidationReport};
pub use config::{ExplainSettings, ForestSettings, HmmSettings, PipelineConfig, PreprocessSettings};
pub use explain::{run_explain, ExplainReport, InstanceExplanation, Selector};
pub use report::{
    render_json, render_text, report_schema, AssessmentReport, FeatureScore, OrgLimeSummary, RunMetadata,
};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of a byte string.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })
}

/// Parsed, cleaned and scored input.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub records: Vec<ResponseRecord>,
    pub clean_report: CleanReport,
    pub dataset: ScoredDataset,
    pub input_rows: usize,
    pub input_digest: String,
}

pub fn prepare(survey: &SurveyDefinition, csv: &[u8], max_missing_fraction: f64) -> Result<Prepared> {
    let raw = read_records(survey, csv).map_err(|e| e.in_stage("preprocess"))?;
    let input_rows = raw.len();
    let (records, clean_report) = clean(survey, raw, max_missing_fraction);
    for (row, v) in &clean_report.invalid_answers {
        log::warn!("row {row}: blanked invalid answer to {}", v.question());
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset.in_stage("preprocess"));
    }
    let dataset = compute_composites(survey, &records).map_err(|e| e.in_stage("preprocess"))?;
    Ok(Prepared {
        records,
        clean_report,
        dataset,
        input_rows,
        input_digest: digest(csv),
    })
}

/// Recodes and scores a response file without modelling.
pub fn run_recode(survey: &SurveyDefinition, csv: &[u8], config: &PipelineConfig) -> Result<ScoredDataset> {
    Ok(prepare(survey, csv, config.preprocess.max_missing_fraction)?.dataset)
}

pub fn run_synth(survey: &SurveyDefinition, spec: &ScenarioSpec) -> Result<SyntheticDataset> {
    sample_dataset(survey, spec).map_err(|e| e.in_stage("synth"))
}
