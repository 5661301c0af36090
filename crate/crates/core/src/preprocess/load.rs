use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survey::{validate_record, ResponseRecord, SurveyDefinition, Violation};

const ORG_COLUMN: &str = "org_id";
const RESPONDENT_COLUMN: &str = "respondent_id";
const LABEL_COLUMN: &str = "label";

/// Reads a response CSV from disk. See [`read_records`].
pub fn load_dataset(survey: &SurveyDefinition, path: &Path) -> Result<Vec<ResponseRecord>> {
    let file = std::fs::File::open(path).map_err(|source| Error::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    read_records(survey, file)
}

/// Parses response rows. The header must name `org_id`, `respondent_id` and
/// exactly the survey's question ids; an optional `label` column carries
/// externally assigned maturity labels. Empty cells are unanswered.
pub fn read_records<R: Read>(survey: &SurveyDefinition, reader: R) -> Result<Vec<ResponseRecord>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let column = |name: &str| header.iter().position(|h| h == name);
    let org_col = column(ORG_COLUMN)
        .ok_or_else(|| Error::SchemaMismatch(format!("missing column {ORG_COLUMN}")))?;
    let resp_col = column(RESPONDENT_COLUMN)
        .ok_or_else(|| Error::SchemaMismatch(format!("missing column {RESPONDENT_COLUMN}")))?;
    let label_col = column(LABEL_COLUMN);

    let mut seen = BTreeSet::new();
    let mut question_cols = Vec::new();
    for (i, name) in header.iter().enumerate() {
        if i == org_col || i == resp_col || Some(i) == label_col {
            continue;
        }
        if survey.question(name).is_none() {
            return Err(Error::SchemaMismatch(format!("undeclared question id {name}")));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::SchemaMismatch(format!("duplicate column {name}")));
        }
        question_cols.push((i, name.clone()));
    }
    if let Some(missing) = survey.questions().iter().find(|q| !seen.contains(q.id.as_str())) {
        return Err(Error::SchemaMismatch(format!("missing question column {}", missing.id)));
    }

    let mut keys = HashSet::new();
    let mut records = Vec::new();
    for (row_index, row) in csv.records().enumerate() {
        let row = row.map_err(|e| Error::Malformed {
            row: row_index + 1,
            message: e.to_string(),
        })?;
        let org_id = row[org_col].trim().to_string();
        let respondent_id = row[resp_col].trim().to_string();
        if org_id.is_empty() || respondent_id.is_empty() {
            return Err(Error::Malformed {
                row: row_index + 1,
                message: "empty org_id or respondent_id".into(),
            });
        }
        if !keys.insert((org_id.clone(), respondent_id.clone())) {
            return Err(Error::DuplicateKey {
                row: row_index + 1,
                org_id,
                respondent_id,
            });
        }
        let answers: BTreeMap<String, String> = question_cols
            .iter()
            .filter_map(|(i, id)| {
                let cell = row[*i].trim();
                (!cell.is_empty()).then(|| (id.clone(), cell.to_string()))
            })
            .collect();
        let label = label_col
            .map(|i| row[i].trim().to_string())
            .filter(|s| !s.is_empty());
        records.push(ResponseRecord {
            org_id,
            respondent_id,
            row_index,
            answers,
            label,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRow {
    pub row: usize,
    pub missing_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleanReport {
    pub dropped: Vec<DroppedRow>,
    /// Answers that failed to recode; they are treated as unanswered.
    pub invalid_answers: Vec<(usize, Violation)>,
}

/// Blanks answers that do not recode and drops respondents whose share of
/// unanswered required questions exceeds `max_missing_fraction`.
pub fn clean(
    survey: &SurveyDefinition,
    records: Vec<ResponseRecord>,
    max_missing_fraction: f64,
) -> (Vec<ResponseRecord>, CleanReport) {
    let required = survey.questions().iter().filter(|q| q.is_required()).count().max(1);
    let mut report = CleanReport::default();
    let mut kept = Vec::with_capacity(records.len());
    for mut rec in records {
        let violations = validate_record(survey, &rec);
        let mut missing = 0usize;
        for v in violations {
            match &v {
                Violation::MissingAnswer { .. } => missing += 1,
                Violation::UnknownLabel { question, .. } | Violation::OutOfScale { question, .. } => {
                    rec.answers.remove(question);
                    if survey.question(question).is_some_and(|q| q.is_required()) {
                        missing += 1;
                    }
                    report.invalid_answers.push((rec.row_index + 1, v));
                }
                Violation::UnknownQuestion { question } => {
                    rec.answers.remove(question);
                }
            }
        }
        let fraction = missing as f64 / required as f64;
        if fraction > max_missing_fraction {
            report.dropped.push(DroppedRow {
                row: rec.row_index + 1,
                missing_fraction: fraction,
            });
        } else {
            kept.push(rec);
        }
    }
    (kept, report)
}
