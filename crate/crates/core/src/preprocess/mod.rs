//! Loading, cleaning and scoring of survey responses.

mod load;
mod split;
mod stats;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survey::{Dimension, ResponseRecord, SurveyDefinition};

pub use load::{clean, load_dataset, read_records, CleanReport, DroppedRow};
pub use split::{stratified_split, DatasetSplit};
pub use stats::{describe, describe_dataset, incidence, ordinal_distribution, prevalence, Incidence, Summary};

/// Lower bound of the Developing band (inclusive).
pub const DEVELOPING_MIN: f64 = 2.5;
/// Upper bound of the Developing band (inclusive).
pub const DEVELOPING_MAX: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MaturityLabel {
    Basic = 0,
    Developing = 1,
    Advanced = 2,
}

impl MaturityLabel {
    pub const ALL: [MaturityLabel; 3] = [
        MaturityLabel::Basic,
        MaturityLabel::Developing,
        MaturityLabel::Advanced,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            MaturityLabel::Basic => "Basic",
            MaturityLabel::Developing => "Developing",
            MaturityLabel::Advanced => "Advanced",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "Basic" | "basic" | "0" => Some(MaturityLabel::Basic),
            "Developing" | "developing" | "1" => Some(MaturityLabel::Developing),
            "Advanced" | "advanced" | "2" => Some(MaturityLabel::Advanced),
            _ => None,
        }
    }
}

impl fmt::Display for MaturityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Threshold labelling of a 1–5 score. Absent scores count as Basic.
pub fn score_to_label(score: Option<f64>) -> MaturityLabel {
    match score {
        Some(s) if s > DEVELOPING_MAX => MaturityLabel::Advanced,
        Some(s) if s >= DEVELOPING_MIN => MaturityLabel::Developing,
        _ => MaturityLabel::Basic,
    }
}

/// Per-respondent composite scores; `None` marks a dimension with no
/// answered items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeScores {
    pub security_maturity: Option<f64>,
    pub threat_awareness: Option<f64>,
    pub access_control: Option<f64>,
    pub policy_framework: Option<f64>,
    pub overall: Option<f64>,
}

impl CompositeScores {
    pub fn dimension(&self, dim: Dimension) -> Option<f64> {
        match dim {
            Dimension::SecurityMaturity => self.security_maturity,
            Dimension::ThreatAwareness => self.threat_awareness,
            Dimension::AccessControl => self.access_control,
            Dimension::PolicyFramework => self.policy_framework,
        }
    }

    /// The four dimension scores in reporting order, if all are present.
    pub fn vector(&self) -> Option<Vec<f64>> {
        Dimension::ALL.iter().map(|&d| self.dimension(d)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDataset {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<Option<f64>>>,
    pub composites: Vec<CompositeScores>,
    pub labels: Vec<MaturityLabel>,
    pub org_index: Vec<String>,
    pub respondent_ids: Vec<String>,
    pub row_index: Vec<usize>,
}

impl ScoredDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Distinct organizations in order of first appearance.
    pub fn orgs(&self) -> Vec<String> {
        let mut orgs: Vec<String> = Vec::new();
        for org in &self.org_index {
            if !orgs.contains(org) {
                orgs.push(org.clone());
            }
        }
        orgs
    }

    /// Rows belonging to `org`, in file order.
    pub fn org_rows(&self, org: &str) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.org_index[i] == org).collect()
    }
}

/// Encodes records into the feature matrix and computes composite scores.
///
/// Dimension scores are means of the answered Likert items feeding the
/// dimension; the overall score is the mean over every answered Likert item,
/// so larger dimensions weigh more. A respondent missing a whole dimension is
/// labelled Basic. Records carrying an explicit label keep it.
pub fn compute_composites(
    survey: &SurveyDefinition,
    records: &[ResponseRecord],
) -> Result<ScoredDataset> {
    let dim_columns = survey.dimension_columns();
    let likert_columns: Vec<usize> = {
        let mut cols: Vec<usize> = dim_columns.iter().flatten().copied().collect();
        cols.sort_unstable();
        cols
    };
    let mut features = Vec::with_capacity(records.len());
    let mut composites = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());

    for rec in records {
        let mut row = Vec::with_capacity(survey.feature_count());
        for q in survey.questions() {
            let raw = rec.answers.get(&q.id).map(String::as_str);
            row.extend(q.encode(raw).map_err(|e| Error::Malformed {
                row: rec.row_index + 1,
                message: e.to_string(),
            })?);
        }
        let mean_of = |cols: &[usize]| -> Option<f64> {
            let present: Vec<f64> = cols.iter().filter_map(|&c| row[c]).collect();
            (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
        };
        let dims: Vec<Option<f64>> = dim_columns.iter().map(|c| mean_of(c)).collect();
        let scores = CompositeScores {
            security_maturity: dims[0],
            threat_awareness: dims[1],
            access_control: dims[2],
            policy_framework: dims[3],
            overall: mean_of(&likert_columns),
        };
        let label = match &rec.label {
            Some(text) => MaturityLabel::parse(text).ok_or_else(|| Error::Malformed {
                row: rec.row_index + 1,
                message: format!("unknown maturity label {text:?}"),
            })?,
            None if dims.iter().any(Option::is_none) => {
                log::warn!(
                    "row {}: a composite dimension has no answered items, labelled Basic",
                    rec.row_index + 1
                );
                MaturityLabel::Basic
            }
            None => score_to_label(scores.overall),
        };
        features.push(row);
        composites.push(scores);
        labels.push(label);
    }

    Ok(ScoredDataset {
        feature_names: survey.feature_names(),
        features,
        composites,
        labels,
        org_index: records.iter().map(|r| r.org_id.clone()).collect(),
        respondent_ids: records.iter().map(|r| r.respondent_id.clone()).collect(),
        row_index: records.iter().map(|r| r.row_index).collect(),
    })
}
