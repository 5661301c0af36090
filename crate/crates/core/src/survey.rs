//! Questionnaire schema, response scales and recoding of raw answers.
//!
//! A [`SurveyDefinition`] is loaded from a TOML file. Every ordinal range
//! question carries its own [`RecodeMap`] so that the numeric value of each
//! categorical answer is auditable in one place.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schema version understood by this crate.
pub const SCHEMA_VERSION: u32 = 1;

const BUNDLED_SURVEY: &str = include_str!("../assets/survey_definition.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    ThreatPatterns,
    AccessControl,
    SecurityMeasures,
    PolicyGaps,
    ProactiveMeasures,
}

impl Section {
    pub const ALL: [Section; 5] = [
        Section::ThreatPatterns,
        Section::AccessControl,
        Section::SecurityMeasures,
        Section::PolicyGaps,
        Section::ProactiveMeasures,
    ];
}

/// Composite assessment dimensions, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    SecurityMaturity,
    ThreatAwareness,
    AccessControl,
    PolicyFramework,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::SecurityMaturity,
        Dimension::ThreatAwareness,
        Dimension::AccessControl,
        Dimension::PolicyFramework,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::SecurityMaturity => "security_maturity",
            Dimension::ThreatAwareness => "threat_awareness",
            Dimension::AccessControl => "access_control",
            Dimension::PolicyFramework => "policy_framework",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecodeEntry {
    pub label: String,
    pub value: f64,
}

/// Ordered label → value table for an ordinal range question.
///
/// Labels are distinct and values are non-negative and strictly increasing
/// in label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RecodeEntry>", into = "Vec<RecodeEntry>")]
pub struct RecodeMap {
    entries: Vec<RecodeEntry>,
}

impl RecodeMap {
    pub fn new(entries: Vec<RecodeEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidSurvey("recode map has no entries".into()));
        }
        let mut seen = BTreeSet::new();
        for entry in &entries {
            if !seen.insert(entry.label.as_str()) {
                return Err(Error::InvalidSurvey(format!(
                    "duplicate recode label {:?}",
                    entry.label
                )));
            }
            if !(entry.value.is_finite() && entry.value >= 0.0) {
                return Err(Error::InvalidSurvey(format!(
                    "recode value for {:?} must be a non-negative number",
                    entry.label
                )));
            }
        }
        if entries.windows(2).any(|w| w[1].value <= w[0].value) {
            return Err(Error::InvalidSurvey(
                "recode values must be strictly increasing in label order".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// The privacy-incident count map: range answers recode to their midpoint,
    /// the open-ended top bucket to one above its threshold.
    pub fn privacy_incidents() -> Self {
        Self::from_pairs(&[
            ("None", 0.0),
            ("1-2", 1.5),
            ("3-5", 4.0),
            ("6-10", 8.0),
            ("More than 10", 11.0),
        ])
        .expect("static map is valid")
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|(label, value)| RecodeEntry {
                    label: (*label).to_string(),
                    value: *value,
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[RecodeEntry] {
        &self.entries
    }

    pub fn value_of(&self, label: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map(|e| e.value)
    }

    /// Inverse lookup.
    pub fn label_of(&self, value: f64) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.value == value)
            .map(|e| e.label.as_str())
    }
}

impl TryFrom<Vec<RecodeEntry>> for RecodeMap {
    type Error = Error;

    fn try_from(entries: Vec<RecodeEntry>) -> Result<Self> {
        RecodeMap::new(entries)
    }
}

impl From<RecodeMap> for Vec<RecodeEntry> {
    fn from(map: RecodeMap) -> Self {
        map.entries
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResponseScale {
    /// Ordinal 1..=5.
    Likert5,
    OrdinalRange { recode: RecodeMap },
    /// One binary feature per option; raw answers are `;`-joined labels.
    MultiSelect { options: Vec<String> },
    /// Non-negative integer.
    Count,
}

impl ResponseScale {
    /// Number of numeric features this scale encodes into.
    pub fn width(&self) -> usize {
        match self {
            ResponseScale::MultiSelect { options } => options.len(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub id: String,
    pub section: Section,
    pub prompt: String,
    pub scale: ResponseScale,
}

impl QuestionSpec {
    /// Multi-select questions have no "unanswered" state: an empty
    /// selection is a valid answer.
    pub fn is_required(&self) -> bool {
        !matches!(self.scale, ResponseScale::MultiSelect { .. })
    }
}

/// Recodes one raw answer on a single-valued scale.
pub fn recode(scale: &ResponseScale, raw: &str) -> Result<f64> {
    recode_for("<unnamed>", scale, raw)
}

fn recode_for(question: &str, scale: &ResponseScale, raw: &str) -> Result<f64> {
    let trimmed = raw.trim();
    match scale {
        ResponseScale::Likert5 => {
            let value: i64 = trimmed.parse().map_err(|_| Error::UnknownLabel {
                question: question.to_string(),
                label: raw.to_string(),
            })?;
            if (1..=5).contains(&value) {
                Ok(value as f64)
            } else {
                Err(Error::OutOfScale {
                    question: question.to_string(),
                    value: raw.to_string(),
                })
            }
        }
        ResponseScale::OrdinalRange { recode } => {
            recode.value_of(trimmed).ok_or_else(|| Error::UnknownLabel {
                question: question.to_string(),
                label: raw.to_string(),
            })
        }
        ResponseScale::Count => {
            let value: i64 = trimmed.parse().map_err(|_| Error::UnknownLabel {
                question: question.to_string(),
                label: raw.to_string(),
            })?;
            if value < 0 {
                return Err(Error::OutOfScale {
                    question: question.to_string(),
                    value: raw.to_string(),
                });
            }
            Ok(value as f64)
        }
        ResponseScale::MultiSelect { .. } => Err(Error::WrongScale {
            question: question.to_string(),
            expected: "single-valued",
        }),
    }
}

/// Parses a `;`-joined multi-select answer into the selected option indices.
pub fn parse_selection(question: &str, options: &[String], raw: &str) -> Result<Vec<usize>> {
    let mut selected = BTreeSet::new();
    for part in raw.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let idx = options
            .iter()
            .position(|o| o == part)
            .ok_or_else(|| Error::UnknownLabel {
                question: question.to_string(),
                label: part.to_string(),
            })?;
        selected.insert(idx);
    }
    Ok(selected.into_iter().collect())
}

impl QuestionSpec {
    /// Encodes a raw answer (or its absence) into this question's feature cells.
    pub fn encode(&self, raw: Option<&str>) -> Result<Vec<Option<f64>>> {
        match (&self.scale, raw) {
            (ResponseScale::MultiSelect { options }, raw) => {
                let selected = parse_selection(&self.id, options, raw.unwrap_or(""))?;
                let mut cells = vec![Some(0.0); options.len()];
                for idx in selected {
                    cells[idx] = Some(1.0);
                }
                Ok(cells)
            }
            (_, None) => Ok(vec![None]),
            (scale, Some(raw)) => Ok(vec![Some(recode_for(&self.id, scale, raw)?)]),
        }
    }
}

/// Maps each section onto the composite dimension it feeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionMap(BTreeMap<Section, Dimension>);

impl Default for DimensionMap {
    fn default() -> Self {
        Self(BTreeMap::from([
            (Section::ThreatPatterns, Dimension::ThreatAwareness),
            (Section::AccessControl, Dimension::AccessControl),
            (Section::SecurityMeasures, Dimension::SecurityMaturity),
            (Section::PolicyGaps, Dimension::PolicyFramework),
            (Section::ProactiveMeasures, Dimension::PolicyFramework),
        ]))
    }
}

impl DimensionMap {
    pub fn dimension_of(&self, section: Section) -> Option<Dimension> {
        self.0.get(&section).copied()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SurveyFile {
    schema_version: u32,
    feature_count: usize,
    #[serde(default)]
    dimensions: Option<DimensionMap>,
    questions: Vec<QuestionSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyDefinition {
    questions: Vec<QuestionSpec>,
    feature_count: usize,
    dimensions: DimensionMap,
}

impl SurveyDefinition {
    pub fn new(
        questions: Vec<QuestionSpec>,
        feature_count: usize,
        dimensions: DimensionMap,
    ) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for q in &questions {
            if q.id.is_empty() || matches!(q.id.as_str(), "org_id" | "respondent_id" | "label") {
                return Err(Error::InvalidSurvey(format!("reserved question id {:?}", q.id)));
            }
            if !ids.insert(q.id.as_str()) {
                return Err(Error::InvalidSurvey(format!("duplicate question id {}", q.id)));
            }
            if let ResponseScale::MultiSelect { options } = &q.scale {
                let distinct: BTreeSet<_> = options.iter().collect();
                if options.is_empty() || distinct.len() != options.len() {
                    return Err(Error::InvalidSurvey(format!(
                        "question {} needs distinct multi-select options",
                        q.id
                    )));
                }
                if options.iter().any(|o| o.contains(';')) {
                    return Err(Error::InvalidSurvey(format!(
                        "question {}: option labels may not contain ';'",
                        q.id
                    )));
                }
            }
        }
        let encoded: usize = questions.iter().map(|q| q.scale.width()).sum();
        if encoded != feature_count {
            return Err(Error::InvalidSurvey(format!(
                "feature_count is {feature_count} but the questions encode {encoded} features"
            )));
        }
        Ok(Self {
            questions,
            feature_count,
            dimensions,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SurveyFile = toml::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidSurvey(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        Self::new(
            file.questions,
            file.feature_count,
            file.dimensions.unwrap_or_default(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// The 63-feature insider-threat questionnaire shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_SURVEY).expect("bundled survey definition is valid")
    }

    pub fn bundled_source() -> &'static str {
        BUNDLED_SURVEY
    }

    pub fn questions(&self) -> &[QuestionSpec] {
        &self.questions
    }

    pub fn question(&self, id: &str) -> Option<&QuestionSpec> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn dimensions(&self) -> &DimensionMap {
        &self.dimensions
    }

    /// Feature column names after encoding; multi-select questions expand to
    /// `question:option`.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.feature_count);
        for q in &self.questions {
            match &q.scale {
                ResponseScale::MultiSelect { options } => {
                    names.extend(options.iter().map(|o| format!("{}:{}", q.id, o)))
                }
                _ => names.push(q.id.clone()),
            }
        }
        names
    }

    /// For every encoded feature, the index of the question it came from.
    pub fn feature_questions(&self) -> Vec<usize> {
        self.questions
            .iter()
            .enumerate()
            .flat_map(|(i, q)| std::iter::repeat_n(i, q.scale.width()))
            .collect()
    }

    /// Likert feature columns contributing to each composite dimension.
    pub fn dimension_columns(&self) -> [Vec<usize>; 4] {
        let mut out: [Vec<usize>; 4] = Default::default();
        let mut col = 0;
        for q in &self.questions {
            if matches!(q.scale, ResponseScale::Likert5) {
                if let Some(dim) = self.dimensions.dimension_of(q.section) {
                    out[dim.index()].push(col);
                }
            }
            col += q.scale.width();
        }
        out
    }
}

/// One respondent's raw answers. Unanswered questions are simply absent
/// from `answers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub org_id: String,
    pub respondent_id: String,
    pub row_index: usize,
    pub answers: BTreeMap<String, String>,
    /// Externally supplied maturity label, when the input carries one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MissingAnswer { question: String },
    UnknownLabel { question: String, label: String },
    OutOfScale { question: String, value: String },
    UnknownQuestion { question: String },
}

impl Violation {
    pub fn question(&self) -> &str {
        match self {
            Violation::MissingAnswer { question }
            | Violation::UnknownLabel { question, .. }
            | Violation::OutOfScale { question, .. }
            | Violation::UnknownQuestion { question } => question,
        }
    }
}

/// Lists every problem with a record. An empty list means every answer
/// recodes and every required question is answered.
pub fn validate_record(survey: &SurveyDefinition, rec: &ResponseRecord) -> Vec<Violation> {
    let mut violations = Vec::new();
    for q in survey.questions() {
        let raw = rec.answers.get(&q.id).map(String::as_str);
        if raw.is_none() && q.is_required() {
            violations.push(Violation::MissingAnswer {
                question: q.id.clone(),
            });
            continue;
        }
        match q.encode(raw) {
            Ok(_) => {}
            Err(Error::UnknownLabel { question, label }) => {
                violations.push(Violation::UnknownLabel { question, label })
            }
            Err(Error::OutOfScale { question, value }) => {
                violations.push(Violation::OutOfScale { question, value })
            }
            Err(other) => violations.push(Violation::UnknownLabel {
                question: q.id.clone(),
                label: other.to_string(),
            }),
        }
    }
    for id in rec.answers.keys() {
        if survey.question(id).is_none() {
            violations.push(Violation::UnknownQuestion {
                question: id.clone(),
            });
        }
    }
    violations
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingAnswer { question } => write!(f, "{question}: missing answer"),
            Violation::UnknownLabel { question, label } => {
                write!(f, "{question}: unknown label {label:?}")
            }
            Violation::OutOfScale { question, value } => {
                write!(f, "{question}: {value:?} is out of scale")
            }
            Violation::UnknownQuestion { question } => write!(f, "{question}: unknown question"),
        }
    }
}
