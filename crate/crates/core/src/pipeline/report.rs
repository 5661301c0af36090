use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::forest::MetricsReport;
use crate::hmm::{HmmModel, MaturityClassification, TransitionReport};
use crate::preprocess::{DroppedRow, MaturityLabel, Summary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    /// SHA-256 of the input CSV bytes.
    pub input_digest: String,
    pub survey_digest: String,
    pub config_digest: String,
    pub input_rows: usize,
    pub scored_rows: usize,
    pub organizations: usize,
    pub dropped_rows: Vec<DroppedRow>,
    pub blanked_answers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub dimension: String,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Share {
    pub label: String,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareTable {
    pub question: String,
    pub entries: Vec<Share>,
}

impl ShareTable {
    pub(crate) fn new(question: &str, entries: Vec<(String, f64)>) -> Self {
        ShareTable {
            question: question.to_string(),
            entries: entries
                .into_iter()
                .map(|(label, percent)| Share { label, percent })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmReport {
    pub model: HmmModel,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sequences: usize,
    pub observations: usize,
    pub transition: TransitionReport,
}

/// One entry of a ranked feature list; ranks start at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub rank: usize,
    pub feature: String,
    pub index: usize,
    pub value: f64,
}

pub(crate) fn ranked(names: &[String], values: &[f64], order: &[usize], top: usize) -> Vec<FeatureScore> {
    order
        .iter()
        .take(top)
        .enumerate()
        .map(|(r, &i)| FeatureScore {
            rank: r + 1,
            feature: names[i].clone(),
            index: i,
            value: values[i],
        })
        .collect()
}

/// Indices by descending value, ties in index order.
pub(crate) fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: MaturityLabel,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestReport {
    pub label_counts: Vec<LabelCount>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub metrics: MetricsReport,
    pub feature_importance: Vec<FeatureScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub features: Vec<String>,
    /// Pearson correlations of SHAP values; null where a column is constant.
    pub matrix: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapReport {
    /// Class whose probability is explained.
    pub class: MaturityLabel,
    pub base_value: f64,
    pub background_rows: usize,
    pub ranking: Vec<FeatureScore>,
    /// Pearson correlation between mean |SHAP| and forest importance over
    /// all features; null when either vector is constant.
    pub rf_correlation: Option<f64>,
    pub correlation: CorrelationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionContribution {
    pub dimension: String,
    pub mean_contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeFeature {
    pub feature: String,
    pub mean_coefficient: f64,
    pub mean_contribution: f64,
}

/// Local surrogate results averaged over an organization's respondents.
/// A contribution is a coefficient times the respondent's standardized
/// deviation from the training mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrgLimeSummary {
    pub org_id: String,
    pub rows: usize,
    pub class: MaturityLabel,
    pub mean_fidelity: f64,
    pub dimensions: Vec<DimensionContribution>,
    pub top_features: Vec<LimeFeature>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub metadata: RunMetadata,
    pub descriptive: Vec<DimensionSummary>,
    pub prevalence: Vec<ShareTable>,
    pub ordinal: Vec<ShareTable>,
    pub hmm: HmmReport,
    pub classifications: Vec<MaturityClassification>,
    pub forest: ForestReport,
    pub shap: ShapReport,
    pub lime: Vec<OrgLimeSummary>,
    pub warnings: Vec<String>,
}

const SCHEMA_SOURCE: &str = include_str!("../../assets/report.schema.json");

/// The JSON schema every emitted assessment report conforms to.
pub fn report_schema() -> &'static str {
    SCHEMA_SOURCE
}

fn validator() -> &'static jsonschema::Validator {
    static VALIDATOR: OnceLock<jsonschema::Validator> = OnceLock::new();
    VALIDATOR.get_or_init(|| {
        let schema: Value = serde_json::from_str(SCHEMA_SOURCE).expect("bundled schema is valid JSON");
        jsonschema::validator_for(&schema).expect("bundled schema compiles")
    })
}

/// Pretty JSON with a trailing newline, checked against the shipped schema.
pub fn render_json(report: &AssessmentReport) -> Result<String> {
    let value = serde_json::to_value(report)?;
    let errors: Vec<String> = validator()
        .iter_errors(&value)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    if !errors.is_empty() {
        return Err(Error::SchemaValidation(errors.join("; ")).in_stage("report"));
    }
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

/// Plain-text summary for terminals.
pub fn render_text(r: &AssessmentReport) -> String {
    let mut s = String::new();
    let m = &r.metadata;
    let _ = writeln!(s, "{} {} assessment (seed {})", m.tool, m.version, m.seed);
    let _ = writeln!(
        s,
        "input {} rows, {} scored, {} organizations, digest {}",
        m.input_rows, m.scored_rows, m.organizations, &m.input_digest[..12]
    );

    let _ = writeln!(s, "\nDimension scores");
    for d in &r.descriptive {
        let x = &d.summary;
        let _ = writeln!(
            s,
            "  {:<20} mean {:.2}  std {:.2}  min {:.2}  median {:.2}  max {:.2}",
            d.dimension, x.mean, x.std, x.min, x.q50, x.max
        );
    }

    for t in r.prevalence.iter().chain(&r.ordinal) {
        let _ = writeln!(s, "\n{}", t.question);
        for e in &t.entries {
            let _ = writeln!(s, "  {:<24} {:>5.1}%", e.label, e.percent);
        }
    }

    let _ = writeln!(s, "\nOrganization maturity");
    for c in &r.classifications {
        let _ = writeln!(
            s,
            "  {:<12} {:<10} confidence {:.3}  states {:?}",
            c.org_id,
            c.dominant.to_string(),
            c.confidence,
            c.state_counts
        );
    }

    let t = &r.hmm.transition;
    let _ = writeln!(s, "\nTransition matrix (log-likelihood {:.3})", r.hmm.log_likelihood);
    for (label, row) in t.labels.iter().zip(&t.matrix) {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.3}")).collect();
        let _ = writeln!(s, "  {:<10} {}", label.to_string(), cells.join("  "));
    }

    let mt = &r.forest.metrics;
    let _ = writeln!(
        s,
        "\nRandom forest: accuracy {:.3}, kappa {:.3} on {} test rows",
        mt.accuracy, mt.kappa, r.forest.test_rows
    );
    if let Some(cv) = &mt.cv {
        let _ = writeln!(s, "  {}-fold CV {:.3} ± {:.3}", cv.folds.len(), cv.mean, cv.std);
    }
    for c in &mt.per_class {
        let _ = writeln!(
            s,
            "  {:<10} precision {:.2}  recall {:.2}  f1 {:.2}  support {}",
            c.label.to_string(),
            c.precision,
            c.recall,
            c.f1_score,
            c.support
        );
    }

    let _ = writeln!(s, "\nForest importance");
    for f in &r.forest.feature_importance {
        let _ = writeln!(s, "  {:>2}. {:<40} {:.4}", f.rank, f.feature, f.value);
    }
    let _ = writeln!(s, "\nMean |SHAP| ({} probability)", r.shap.class);
    for f in &r.shap.ranking {
        let _ = writeln!(s, "  {:>2}. {:<40} {:.4}", f.rank, f.feature, f.value);
    }
    match r.shap.rf_correlation {
        Some(c) => {
            let _ = writeln!(s, "  correlation with forest importance {c:.3}");
        }
        None => {
            let _ = writeln!(s, "  correlation with forest importance undefined");
        }
    }

    for o in &r.lime {
        let _ = writeln!(s, "\nLocal surrogate, {} (fidelity {:.2})", o.org_id, o.mean_fidelity);
        for d in &o.dimensions {
            let _ = writeln!(s, "  {:<20} {:+.4}", d.dimension, d.mean_contribution);
        }
    }
    if !r.warnings.is_empty() {
        let _ = writeln!(s, "\nWarnings");
        for w in &r.warnings {
            let _ = writeln!(s, "  {w}");
        }
    }
    s
}
