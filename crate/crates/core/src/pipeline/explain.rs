use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assess::{classify_orgs, feature_rows, lime_row, lime_seed, summarize_lime, survey_digest, ModelBundle, RowLime};
use super::report::{descending, ranked, FeatureScore, OrgLimeSummary};
use super::prepare;
use crate::error::{Error, Result};
use crate::explain::{shap_matrix, shap_values, GlobalImportance};
use crate::preprocess::MaturityLabel;
use crate::survey::SurveyDefinition;

/// Which respondents to explain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Org(String),
    /// 1-based data row number in the input file.
    Row(usize),
}

impl std::fmt::Display for Selector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Selector::Org(o) => write!(f, "org {o}"),
            Selector::Row(r) => write!(f, "row {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeWeight {
    pub feature: String,
    pub coefficient: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceExplanation {
    pub row: usize,
    pub org_id: String,
    pub respondent_id: String,
    /// Forest probability of the explained class.
    pub prediction: f64,
    pub predicted_label: MaturityLabel,
    pub base_value: f64,
    /// Largest attributions by magnitude, signed.
    pub shap: Vec<FeatureScore>,
    pub shap_sum: f64,
    pub lime_fidelity: f64,
    pub lime: Vec<LimeWeight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub seed: u64,
    pub input_digest: String,
    pub selector: Selector,
    pub class: MaturityLabel,
    pub feature_names: Vec<String>,
    /// Mean |SHAP| over every row of the input.
    pub global: Vec<FeatureScore>,
    pub instances: Vec<InstanceExplanation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub org_summary: Option<OrgLimeSummary>,
}

/// Explains a saved model's predictions on `csv` for the selected rows.
pub fn run_explain(
    survey: &SurveyDefinition,
    bundle: &ModelBundle,
    csv: &[u8],
    selector: &Selector,
    top: usize,
) -> Result<ExplainReport> {
    if bundle.survey_digest != survey_digest(survey) {
        return Err(Error::SchemaMismatch("model was trained with a different survey definition".into()));
    }
    let config = &bundle.config;
    let prepared = prepare(survey, csv, config.preprocess.max_missing_fraction)?;
    let ds = &prepared.dataset;
    let hmm_labels = if config.forest.include_hmm_state {
        Some(classify_orgs(ds, &bundle.hmm).map_err(|e| e.in_stage("hmm"))?.1)
    } else {
        None
    };
    let (names, rows) = feature_rows(ds, hmm_labels.as_deref());
    if names != bundle.feature_names {
        return Err(Error::SchemaMismatch("features differ from the saved model".into()));
    }
    let x = bundle.imputer.transform(&rows);

    let selected: Vec<usize> = match selector {
        Selector::Org(org) => ds.org_rows(org),
        Selector::Row(r) => (0..ds.len()).filter(|&i| ds.row_index[i] + 1 == *r).collect(),
    };
    if selected.is_empty() {
        return Err(Error::UnknownSelector(selector.to_string()));
    }

    let forest = &bundle.forest;
    let class = bundle.positive_class;
    let c = class.index();
    let stage = |e: Error| e.in_stage("explain");
    let global = GlobalImportance::from_values(&shap_matrix(forest, &x, &bundle.background, c).map_err(stage)?);

    let per_row: Vec<(InstanceExplanation, RowLime)> = selected
        .par_iter()
        .map(|&i| {
            let e = shap_values(forest, &x[i], &bundle.background)?;
            let values = e.class(c).to_vec();
            let magnitude: Vec<f64> = values.iter().map(|v| v.abs()).collect();
            let lime = lime_row(
                forest,
                class,
                &bundle.training_stats,
                &config.explain,
                &x[i],
                lime_seed(bundle.seed, ds.row_index[i]),
            )?;
            let lime_order = descending(&lime.coefficients.iter().map(|v| v.abs()).collect::<Vec<_>>());
            let instance = InstanceExplanation {
                row: ds.row_index[i] + 1,
                org_id: ds.org_index[i].clone(),
                respondent_id: ds.respondent_ids[i].clone(),
                prediction: e.prediction[c],
                predicted_label: MaturityLabel::ALL[crate::forest::argmax(&e.prediction)],
                base_value: e.base_value[c],
                shap: ranked(&names, &values, &descending(&magnitude), top),
                shap_sum: values.iter().sum(),
                lime_fidelity: lime.fidelity,
                lime: lime_order
                    .into_iter()
                    .take(config.explain.lime_top_k)
                    .map(|j| LimeWeight {
                        feature: names[j].clone(),
                        coefficient: lime.coefficients[j],
                        contribution: lime.contributions[j],
                    })
                    .collect(),
            };
            Ok((instance, lime))
        })
        .collect::<Result<_>>()
        .map_err(stage)?;

    let (instances, limes): (Vec<_>, Vec<_>) = per_row.into_iter().unzip();
    let org_summary = match selector {
        Selector::Org(org) => Some(summarize_lime(survey, org, class, &names, &limes, top)),
        Selector::Row(_) => None,
    };
    Ok(ExplainReport {
        seed: bundle.seed,
        input_digest: prepared.input_digest,
        selector: selector.clone(),
        class,
        global: ranked(&names, &global.mean_abs, &global.ranking, top),
        feature_names: names,
        instances,
        org_summary,
    })
}
