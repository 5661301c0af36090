use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::ScoredDataset;
use crate::survey::{parse_selection, recode, ResponseRecord, ResponseScale, SurveyDefinition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn describe(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Summary {
        count: n,
        mean,
        std,
        min: sorted[0],
        q25: quantile(&sorted, 0.25),
        q50: quantile(&sorted, 0.5),
        q75: quantile(&sorted, 0.75),
        max: sorted[n - 1],
    })
}

/// Summaries of the four dimension scores followed by the overall score.
/// Absent scores are skipped.
pub fn describe_dataset(ds: &ScoredDataset) -> Result<Vec<(String, Summary)>> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut out = Vec::with_capacity(5);
    for dim in crate::survey::Dimension::ALL {
        let values: Vec<f64> = ds.composites.iter().filter_map(|c| c.dimension(dim)).collect();
        out.push((dim.name().to_string(), describe(&values)?));
    }
    let overall: Vec<f64> = ds.composites.iter().filter_map(|c| c.overall).collect();
    out.push(("overall".to_string(), describe(&overall)?));
    Ok(out)
}

/// Share of respondents selecting each option of a multi-select question,
/// in percent, sorted descending (ties keep option order).
pub fn prevalence(
    survey: &SurveyDefinition,
    records: &[ResponseRecord],
    question_id: &str,
) -> Result<Vec<(String, f64)>> {
    let q = survey
        .question(question_id)
        .ok_or_else(|| Error::UnknownQuestion(question_id.to_string()))?;
    let ResponseScale::MultiSelect { options } = &q.scale else {
        return Err(Error::WrongScale {
            question: question_id.to_string(),
            expected: "multi_select",
        });
    };
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts = vec![0usize; options.len()];
    for rec in records {
        let raw = rec.answers.get(question_id).map(String::as_str).unwrap_or("");
        for idx in parse_selection(question_id, options, raw)? {
            counts[idx] += 1;
        }
    }
    let total = records.len() as f64;
    let mut out: Vec<(String, f64)> = options
        .iter()
        .zip(counts)
        .map(|(o, c)| (o.clone(), 100.0 * c as f64 / total))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Incidence {
    pub threshold: f64,
    pub answered: usize,
    /// Percent of answered respondents whose recoded value is >= threshold.
    pub at_or_above_pct: f64,
    pub below_pct: f64,
}

/// Binarizes a numeric or ordinal question at `threshold`.
pub fn incidence(
    survey: &SurveyDefinition,
    records: &[ResponseRecord],
    question_id: &str,
    threshold: f64,
) -> Result<Incidence> {
    let q = survey
        .question(question_id)
        .ok_or_else(|| Error::UnknownQuestion(question_id.to_string()))?;
    if matches!(q.scale, ResponseScale::MultiSelect { .. }) {
        return Err(Error::WrongScale {
            question: question_id.to_string(),
            expected: "single-valued",
        });
    }
    let mut answered = 0usize;
    let mut above = 0usize;
    for rec in records {
        if let Some(raw) = rec.answers.get(question_id) {
            let value = recode(&q.scale, raw)?;
            answered += 1;
            if value >= threshold {
                above += 1;
            }
        }
    }
    if answered == 0 {
        return Err(Error::EmptyDataset);
    }
    let at_or_above_pct = 100.0 * above as f64 / answered as f64;
    Ok(Incidence {
        threshold,
        answered,
        at_or_above_pct,
        below_pct: 100.0 - at_or_above_pct,
    })
}

/// Percent of answered respondents choosing each category of an ordinal
/// question, in scale order.
pub fn ordinal_distribution(
    survey: &SurveyDefinition,
    records: &[ResponseRecord],
    question_id: &str,
) -> Result<Vec<(String, f64)>> {
    let q = survey
        .question(question_id)
        .ok_or_else(|| Error::UnknownQuestion(question_id.to_string()))?;
    let ResponseScale::OrdinalRange { recode: map } = &q.scale else {
        return Err(Error::WrongScale {
            question: question_id.to_string(),
            expected: "ordinal_range",
        });
    };
    let entries = map.entries();
    let mut counts = vec![0usize; entries.len()];
    for rec in records {
        if let Some(raw) = rec.answers.get(question_id) {
            let idx = entries.iter().position(|e| e.label == *raw).ok_or_else(|| Error::UnknownLabel {
                question: question_id.to_string(),
                label: raw.clone(),
            })?;
            counts[idx] += 1;
        }
    }
    let answered: usize = counts.iter().sum();
    if answered == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(entries
        .iter()
        .zip(counts)
        .map(|(e, c)| (e.label.clone(), 100.0 * c as f64 / answered as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    #[test]
    fn constant_column() {
        let s = describe(&[4.0; 60]).unwrap();
        assert_eq!(s.count, 60);
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.std, 0.0);
        assert_eq!((s.min, s.q25, s.q50, s.q75, s.max), (4.0, 4.0, 4.0, 4.0, 4.0));
    }

    #[test]
    fn one_to_five() {
        let s = describe(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_abs_diff_eq!(s.mean, 3.0);
        // sqrt(10 / 4)
        assert_abs_diff_eq!(s.std, 1.5811388300841898, epsilon = 1e-12);
        assert_eq!((s.q25, s.q50, s.q75), (2.0, 3.0, 4.0));
    }

    #[test]
    fn interpolated_quartiles() {
        let s = describe(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_abs_diff_eq!(s.q25, 1.75);
        assert_abs_diff_eq!(s.q50, 2.5);
        assert_abs_diff_eq!(s.q75, 3.25);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(describe(&[]), Err(Error::EmptyDataset)));
    }

    fn records(answers: &[(&str, &str)]) -> Vec<ResponseRecord> {
        answers
            .iter()
            .enumerate()
            .map(|(i, (q, a))| ResponseRecord {
                org_id: "A".into(),
                respondent_id: i.to_string(),
                row_index: i,
                answers: if a.is_empty() {
                    BTreeMap::new()
                } else {
                    BTreeMap::from([(q.to_string(), a.to_string())])
                },
                label: None,
            })
            .collect()
    }

    #[test]
    fn prevalence_counts_and_errors() {
        let survey = SurveyDefinition::bundled();
        let recs = records(&[
            ("tp_threat_types", "Data theft;System sabotage"),
            ("tp_threat_types", "Data theft"),
            ("tp_threat_types", ""),
            ("tp_threat_types", "Information sharing"),
        ]);
        let p = prevalence(&survey, &recs, "tp_threat_types").unwrap();
        assert_eq!(p[0], ("Data theft".to_string(), 50.0));
        assert_eq!(p[1], ("Information sharing".to_string(), 25.0));
        assert_eq!(p[2], ("System sabotage".to_string(), 25.0));
        assert_eq!(p[4].1, 0.0);

        let none = records(&[("tp_threat_types", ""), ("tp_threat_types", "")]);
        assert!(prevalence(&survey, &none, "tp_threat_types")
            .unwrap()
            .iter()
            .all(|(_, pct)| *pct == 0.0));
        assert!(matches!(
            prevalence(&survey, &recs, "ac_least_privilege"),
            Err(Error::WrongScale { .. })
        ));
    }

    #[test]
    fn incidence_binarizes() {
        let survey = SurveyDefinition::bundled();
        let recs = records(&[
            ("tp_privacy_incidents", "None"),
            ("tp_privacy_incidents", "1-2"),
            ("tp_privacy_incidents", "More than 10"),
            ("tp_privacy_incidents", "None"),
            ("tp_privacy_incidents", ""),
        ]);
        let inc = incidence(&survey, &recs, "tp_privacy_incidents", 1.0).unwrap();
        assert_eq!(inc.answered, 4);
        assert_eq!(inc.at_or_above_pct, 50.0);
        assert_eq!(inc.below_pct, 50.0);
    }

    #[test]
    fn ordinal_distribution_in_scale_order() {
        let survey = SurveyDefinition::bundled();
        let recs = records(&[
            ("tp_privacy_incidents", "3-5"),
            ("tp_privacy_incidents", "None"),
            ("tp_privacy_incidents", "None"),
            ("tp_privacy_incidents", ""),
        ]);
        let d = ordinal_distribution(&survey, &recs, "tp_privacy_incidents").unwrap();
        let labels: Vec<&str> = d.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, ["None", "1-2", "3-5", "6-10", "More than 10"]);
        assert_abs_diff_eq!(d[0].1, 200.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[2].1, 100.0 / 3.0, epsilon = 1e-12);
        assert!(ordinal_distribution(&survey, &recs, "tp_threat_types").is_err());
    }
}
