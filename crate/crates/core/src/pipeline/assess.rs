use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExplainSettings, PipelineConfig};
use super::report::{
    descending, ranked, AssessmentReport, CorrelationReport, DimensionContribution, DimensionSummary,
    FeatureScore, ForestReport, HmmReport, LabelCount, LimeFeature, OrgLimeSummary, RunMetadata, ShapReport,
    ShareTable,
};
use super::{digest, prepare, Prepared, TOOL_NAME, TOOL_VERSION};
use crate::error::{Error, Result};
use crate::explain::{
    importance_correlation, lime_explain, sample_background, shap_correlation_matrix,
    shap_matrix, GlobalImportance, LimeOptions, TrainingStats,
};
use crate::forest::{cross_validate, evaluate, fit_forest, Forest, MedianImputer, MetricsReport};
use crate::hmm::{
    classify_org, decode, fit_with_restarts, map_states, transition_report, FitResult, HmmModel,
    MaturityClassification, ObservationSequence,
};
use crate::preprocess::{
    describe_dataset, ordinal_distribution, prevalence, stratified_split, DatasetSplit, MaturityLabel,
    ScoredDataset,
};
use crate::rng::derive_seed;
use crate::survey::{Dimension, ResponseScale, SurveyDefinition};

// Independent streams derived from the run seed.
const FOREST_STREAM: u64 = 1;
const CV_STREAM: u64 = 2;
const BACKGROUND_STREAM: u64 = 3;
const LIME_STREAM: u64 = 4;

pub const HMM_STATE_FEATURE: &str = "hmm_state";

/// Everything needed to explain new rows without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub survey_digest: String,
    pub config: PipelineConfig,
    pub feature_names: Vec<String>,
    pub hmm: HmmModel,
    pub imputer: MedianImputer,
    pub forest: Forest,
    pub training_stats: TrainingStats,
    pub background: Vec<Vec<f64>>,
    pub positive_class: MaturityLabel,
}

#[derive(Debug, Clone)]
pub struct Assessment {
    pub report: AssessmentReport,
    pub bundle: ModelBundle,
}

/// One observation sequence per organization (or a single stacked stream),
/// skipping respondents with an absent dimension score. Returns the dataset
/// rows behind each sequence.
pub(crate) fn sequences(ds: &ScoredDataset, stacked: bool) -> (Vec<ObservationSequence>, Vec<Vec<usize>>) {
    let mut seqs = Vec::new();
    let mut rows = Vec::new();
    let mut groups: Vec<(String, Vec<usize>)> = ds.orgs().into_iter().map(|o| {
        let r = ds.org_rows(&o);
        (o, r)
    }).collect();
    if stacked {
        groups = vec![("all".to_string(), (0..ds.len()).collect())];
    }
    for (org, org_rows) in groups {
        let kept: Vec<usize> = org_rows.into_iter().filter(|&i| ds.composites[i].vector().is_some()).collect();
        if kept.is_empty() {
            continue;
        }
        let obs = kept.iter().map(|&i| ds.composites[i].vector().expect("filtered")).collect();
        seqs.push(ObservationSequence::new(org, obs));
        rows.push(kept);
    }
    (seqs, rows)
}

fn dimension_weights(survey: &SurveyDefinition) -> Vec<f64> {
    survey.dimension_columns().iter().map(|c| c.len() as f64).collect()
}

pub(crate) fn fit_hmm(
    survey: &SurveyDefinition,
    ds: &ScoredDataset,
    config: &PipelineConfig,
    seed: u64,
) -> Result<(HmmModel, FitResult, usize)> {
    let (seqs, _) = sequences(ds, config.hmm.stacked);
    let observations = seqs.iter().map(ObservationSequence::len).sum();
    let fit = fit_with_restarts(
        &seqs,
        config.hmm.n_states,
        &config.hmm.fit_options(),
        seed,
        config.hmm.n_restarts,
    )?;
    let label_map = map_states(&fit.params, Some(&dimension_weights(survey)));
    let model = HmmModel {
        params: fit.params.clone(),
        seed,
        label_map,
    };
    Ok((model, fit, observations))
}

/// Classifies each organization and returns the decoded label of every row
/// that took part in decoding.
pub(crate) fn classify_orgs(
    ds: &ScoredDataset,
    model: &HmmModel,
) -> Result<(Vec<MaturityClassification>, Vec<Option<MaturityLabel>>)> {
    let (seqs, rows) = sequences(ds, false);
    let decoded: Vec<_> = seqs
        .par_iter()
        .map(|s| decode(&model.params, &s.obs))
        .collect::<Result<_>>()?;
    let mut row_labels = vec![None; ds.len()];
    let mut out = Vec::with_capacity(seqs.len());
    for ((seq, rows), d) in seqs.iter().zip(&rows).zip(&decoded) {
        out.push(classify_org(&seq.org_id, d, &model.label_map));
        for (&row, &state) in rows.iter().zip(&d.states) {
            row_labels[row] = Some(model.label_map.label(state));
        }
    }
    Ok((out, row_labels))
}

/// Encoded features, optionally extended with the decoded HMM label.
pub(crate) fn feature_rows(
    ds: &ScoredDataset,
    hmm_labels: Option<&[Option<MaturityLabel>]>,
) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let mut names = ds.feature_names.clone();
    let mut rows = ds.features.clone();
    if let Some(labels) = hmm_labels {
        names.push(HMM_STATE_FEATURE.to_string());
        for (row, l) in rows.iter_mut().zip(labels) {
            row.push(l.map(|l| l.index() as f64));
        }
    }
    (names, rows)
}

fn label_counts(labels: &[MaturityLabel]) -> Vec<LabelCount> {
    MaturityLabel::ALL
        .into_iter()
        .map(|label| LabelCount {
            label,
            count: labels.iter().filter(|&&l| l == label).count(),
        })
        .collect()
}

struct ForestStage {
    split: DatasetSplit,
    imputer: MedianImputer,
    forest: Forest,
    x: Vec<Vec<f64>>,
    metrics: MetricsReport,
}

fn forest_stage(
    rows: &[Vec<Option<f64>>],
    labels: &[MaturityLabel],
    config: &PipelineConfig,
    seed: u64,
) -> Result<ForestStage> {
    let y: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    let split = stratified_split(labels, config.preprocess.test_fraction, seed)?;
    for w in &split.warnings {
        log::warn!("{w}");
    }
    let train_raw: Vec<Vec<Option<f64>>> = split.train_rows.iter().map(|&i| rows[i].clone()).collect();
    let imputer = MedianImputer::fit(&train_raw);
    let x = imputer.transform(rows);
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<usize>) {
        (idx.iter().map(|&i| x[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect())
    };
    let (train_x, train_y) = pick(&split.train_rows);
    let (test_x, _) = pick(&split.test_rows);
    let fc = config.forest.forest_config();
    let forest = fit_forest(&train_x, &train_y, &fc, derive_seed(seed, FOREST_STREAM))?;
    let predicted: Vec<MaturityLabel> = forest
        .predict_many(&test_x)?
        .into_iter()
        .map(|c| MaturityLabel::ALL[c])
        .collect();
    let actual: Vec<MaturityLabel> = split.test_rows.iter().map(|&i| labels[i]).collect();
    let mut metrics = evaluate(&actual, &predicted)?;

    let full_x = MedianImputer::fit(rows).transform(rows);
    metrics.cv = Some(cross_validate(
        &full_x,
        &y,
        config.forest.cv_folds,
        &fc,
        derive_seed(seed, CV_STREAM),
    )?);
    Ok(ForestStage {
        split,
        imputer,
        forest,
        x,
        metrics,
    })
}

/// The class explained in probability space: Advanced when the forest knows
/// it, otherwise the most mature class it was trained on.
fn positive_class(forest: &Forest) -> MaturityLabel {
    MaturityLabel::ALL[forest.n_classes.min(3) - 1]
}

/// LIME with every coefficient kept, plus per-feature contributions.
pub(crate) struct RowLime {
    pub fidelity: f64,
    pub coefficients: Vec<f64>,
    pub contributions: Vec<f64>,
}

pub(crate) fn lime_row(
    forest: &Forest,
    class: MaturityLabel,
    stats: &TrainingStats,
    settings: &ExplainSettings,
    x: &[f64],
    seed: u64,
) -> Result<RowLime> {
    let m = x.len();
    let opts = LimeOptions {
        n_samples: settings.lime_samples,
        kernel_width: settings.lime_kernel_width,
        k: m,
        ridge: settings.lime_ridge,
    };
    let c = class.index();
    let model = |z: &[f64]| forest.proba_unchecked(z)[c];
    let e = lime_explain(&model, x, stats, &opts, seed)?;
    let mut coefficients = vec![0.0; m];
    for (j, w) in e.weights {
        coefficients[j] = w;
    }
    let contributions = (0..m)
        .map(|j| {
            if stats.std[j] > 0.0 {
                coefficients[j] * (x[j] - stats.mean[j]) / stats.std[j]
            } else {
                0.0
            }
        })
        .collect();
    Ok(RowLime {
        fidelity: e.fidelity,
        coefficients,
        contributions,
    })
}

pub(crate) fn lime_seed(seed: u64, row_index: usize) -> u64 {
    derive_seed(derive_seed(seed, LIME_STREAM), row_index as u64)
}

/// Feature columns feeding each composite dimension.
fn dimension_of_feature(survey: &SurveyDefinition, n_features: usize) -> Vec<Option<Dimension>> {
    let mut out = vec![None; n_features];
    for (d, cols) in survey.dimension_columns().iter().enumerate() {
        for &c in cols {
            if c < n_features {
                out[c] = Some(Dimension::ALL[d]);
            }
        }
    }
    out
}

pub(crate) fn summarize_lime(
    survey: &SurveyDefinition,
    org_id: &str,
    class: MaturityLabel,
    names: &[String],
    results: &[RowLime],
    top: usize,
) -> OrgLimeSummary {
    let m = names.len();
    let n = results.len().max(1) as f64;
    let mean = |f: &dyn Fn(&RowLime) -> &[f64]| -> Vec<f64> {
        (0..m).map(|j| results.iter().map(|r| f(r)[j]).sum::<f64>() / n).collect()
    };
    let coef = mean(&|r| &r.coefficients);
    let contrib = mean(&|r| &r.contributions);
    let dims = dimension_of_feature(survey, m);
    let dimensions = Dimension::ALL
        .into_iter()
        .map(|d| DimensionContribution {
            dimension: d.name().to_string(),
            mean_contribution: (0..m).filter(|&j| dims[j] == Some(d)).map(|j| contrib[j]).sum(),
        })
        .collect();
    let magnitude: Vec<f64> = contrib.iter().map(|c| c.abs()).collect();
    let top_features = descending(&magnitude)
        .into_iter()
        .take(top)
        .map(|j| LimeFeature {
            feature: names[j].clone(),
            mean_coefficient: coef[j],
            mean_contribution: contrib[j],
        })
        .collect();
    OrgLimeSummary {
        org_id: org_id.to_string(),
        rows: results.len(),
        class,
        mean_fidelity: results.iter().map(|r| r.fidelity).sum::<f64>() / n,
        dimensions,
        top_features,
    }
}

fn metadata(
    survey: &SurveyDefinition,
    config: &PipelineConfig,
    prepared: &Prepared,
    seed: u64,
) -> RunMetadata {
    RunMetadata {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        seed,
        input_digest: prepared.input_digest.clone(),
        survey_digest: survey_digest(survey),
        config_digest: digest(config.to_toml_string().as_bytes()),
        input_rows: prepared.input_rows,
        scored_rows: prepared.dataset.len(),
        organizations: prepared.dataset.orgs().len(),
        dropped_rows: prepared.clean_report.dropped.clone(),
        blanked_answers: prepared.clean_report.invalid_answers.len(),
    }
}

pub(crate) fn survey_digest(survey: &SurveyDefinition) -> String {
    digest(serde_json::to_string(survey.questions()).expect("survey serializes").as_bytes())
}

fn share_tables(survey: &SurveyDefinition, prepared: &Prepared) -> Result<(Vec<ShareTable>, Vec<ShareTable>)> {
    let mut multi = Vec::new();
    let mut ordinal = Vec::new();
    for q in survey.questions() {
        match q.scale {
            ResponseScale::MultiSelect { .. } => {
                multi.push(ShareTable::new(&q.id, prevalence(survey, &prepared.records, &q.id)?))
            }
            ResponseScale::OrdinalRange { .. } => match ordinal_distribution(survey, &prepared.records, &q.id) {
                Ok(d) => ordinal.push(ShareTable::new(&q.id, d)),
                Err(Error::EmptyDataset) => {}
                Err(e) => return Err(e),
            },
            _ => {}
        }
    }
    Ok((multi, ordinal))
}

/// Runs every stage on one input file: scoring, HMM maturity
/// classification, forest validation of the threshold labels and
/// explanations of the forest.
pub fn run_assessment(
    survey: &SurveyDefinition,
    config: &PipelineConfig,
    csv: &[u8],
    seed: u64,
    top: usize,
) -> Result<Assessment> {
    config.validate()?;
    let prepared = prepare(survey, csv, config.preprocess.max_missing_fraction)?;
    let ds = &prepared.dataset;
    let mut warnings = Vec::new();
    for d in &prepared.clean_report.dropped {
        warnings.push(format!(
            "row {} dropped: {:.0}% of answers missing",
            d.row,
            100.0 * d.missing_fraction
        ));
    }
    let descriptive = describe_dataset(ds)
        .map_err(|e| e.in_stage("preprocess"))?
        .into_iter()
        .map(|(dimension, summary)| DimensionSummary { dimension, summary })
        .collect();
    let (prevalence, ordinal) = share_tables(survey, &prepared).map_err(|e| e.in_stage("preprocess"))?;

    // Hidden Markov model.
    let (model, fit, observations) = fit_hmm(survey, ds, config, seed).map_err(|e| e.in_stage("hmm"))?;
    warnings.extend(fit.warnings.iter().cloned());
    if !fit.converged {
        warnings.push(format!("hmm did not converge within {} iterations", config.hmm.max_iter));
    }
    let (classifications, row_labels) = classify_orgs(ds, &model).map_err(|e| e.in_stage("hmm"))?;
    let skipped = ds.orgs().len() - classifications.len();
    if skipped > 0 {
        warnings.push(format!("{skipped} organizations had no complete composite vector"));
    }
    let hmm = HmmReport {
        model: model.clone(),
        log_likelihood: fit.final_log_likelihood(),
        iterations: fit.log_likelihoods.len(),
        converged: fit.converged,
        sequences: sequences(ds, config.hmm.stacked).0.len(),
        observations,
        transition: transition_report(&model.params, &model.label_map),
    };

    // Random forest on the threshold labels.
    let hmm_feature = config.forest.include_hmm_state.then_some(row_labels.as_slice());
    let (names, rows) = feature_rows(ds, hmm_feature);
    let fs = forest_stage(&rows, &ds.labels, config, seed).map_err(|e| e.in_stage("forest"))?;
    warnings.extend(fs.split.warnings.iter().cloned());
    if let Some(cv) = &fs.metrics.cv {
        warnings.extend(cv.warnings.iter().cloned());
    }
    let importance = fs.forest.feature_importance();
    let forest_report = ForestReport {
        label_counts: label_counts(&ds.labels),
        train_rows: fs.split.train_rows.len(),
        test_rows: fs.split.test_rows.len(),
        metrics: fs.metrics.clone(),
        feature_importance: ranked(&names, &importance, &descending(&importance), top),
    };

    // Explanations.
    let class = positive_class(&fs.forest);
    let train_x: Vec<Vec<f64>> = fs.split.train_rows.iter().map(|&i| fs.x[i].clone()).collect();
    let background = sample_background(
        &train_x,
        config.explain.background_rows,
        derive_seed(seed, BACKGROUND_STREAM),
    );
    let shap_rows = shap_matrix(&fs.forest, &fs.x, &background, class.index()).map_err(|e| e.in_stage("explain"))?;
    let global = GlobalImportance::from_values(&shap_rows);
    let rf_correlation = match importance_correlation(&global.mean_abs, &importance) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("SHAP–forest correlation undefined: {e}"));
            None
        }
    };
    let corr_features = global.top(config.explain.correlation_features).to_vec();
    let corr = if shap_rows.len() >= 3 {
        shap_correlation_matrix(&shap_rows, &corr_features).map_err(|e| e.in_stage("explain"))?
    } else {
        warnings.push("too few rows for a SHAP correlation matrix".into());
        crate::explain::CorrelationMatrix {
            features: vec![],
            entries: vec![],
        }
    };
    let base_value = {
        let b: Vec<f64> = background.iter().map(|r| fs.forest.proba_unchecked(r)[class.index()]).collect();
        b.iter().sum::<f64>() / b.len() as f64
    };
    let shap = ShapReport {
        class,
        base_value,
        background_rows: background.len(),
        ranking: ranked(&names, &global.mean_abs, &global.ranking, top),
        rf_correlation,
        correlation: CorrelationReport {
            features: corr.features.iter().map(|&j| names[j].clone()).collect(),
            matrix: corr.entries,
        },
    };

    let stats = TrainingStats::from_rows(&train_x).map_err(|e| e.in_stage("explain"))?;
    let lime_rows: Vec<RowLime> = (0..ds.len())
        .into_par_iter()
        .map(|i| lime_row(&fs.forest, class, &stats, &config.explain, &fs.x[i], lime_seed(seed, ds.row_index[i])))
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("explain"))?;
    let mut lime_rows: Vec<Option<RowLime>> = lime_rows.into_iter().map(Some).collect();
    let lime = ds
        .orgs()
        .into_iter()
        .map(|org| {
            let results: Vec<RowLime> = ds.org_rows(&org).into_iter().filter_map(|i| lime_rows[i].take()).collect();
            summarize_lime(survey, &org, class, &names, &results, top)
        })
        .collect();

    let report = AssessmentReport {
        metadata: metadata(survey, config, &prepared, seed),
        descriptive,
        prevalence,
        ordinal,
        hmm,
        classifications,
        forest: forest_report,
        shap,
        lime,
        warnings,
    };
    let bundle = ModelBundle {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        seed,
        survey_digest: survey_digest(survey),
        config: config.clone(),
        feature_names: names,
        hmm: model,
        imputer: fs.imputer,
        forest: fs.forest,
        training_stats: stats,
        background,
        positive_class: class,
    };
    Ok(Assessment { report, bundle })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPrediction {
    pub row: usize,
    pub org_id: String,
    pub respondent_id: String,
    pub actual: MaturityLabel,
    pub predicted: MaturityLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub input_digest: String,
    pub label_counts: Vec<LabelCount>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub metrics: MetricsReport,
    pub feature_importance: Vec<FeatureScore>,
    pub predictions: Vec<TestPrediction>,
    pub warnings: Vec<String>,
}

/// Trains and evaluates the forest on the dataset's labels: the `label`
/// column when present, the score thresholds otherwise.
pub fn run_validation(
    survey: &SurveyDefinition,
    config: &PipelineConfig,
    csv: &[u8],
    seed: u64,
    top: usize,
) -> Result<ValidationReport> {
    config.validate()?;
    let prepared = prepare(survey, csv, config.preprocess.max_missing_fraction)?;
    let ds = &prepared.dataset;
    let row_labels = if config.forest.include_hmm_state {
        let (model, _, _) = fit_hmm(survey, ds, config, seed).map_err(|e| e.in_stage("hmm"))?;
        Some(classify_orgs(ds, &model).map_err(|e| e.in_stage("hmm"))?.1)
    } else {
        None
    };
    let (names, rows) = feature_rows(ds, row_labels.as_deref());
    let fs = forest_stage(&rows, &ds.labels, config, seed).map_err(|e| e.in_stage("forest"))?;
    let mut warnings = fs.split.warnings.clone();
    if let Some(cv) = &fs.metrics.cv {
        warnings.extend(cv.warnings.iter().cloned());
    }
    let predictions = fs
        .split
        .test_rows
        .iter()
        .map(|&i| {
            Ok(TestPrediction {
                row: ds.row_index[i] + 1,
                org_id: ds.org_index[i].clone(),
                respondent_id: ds.respondent_ids[i].clone(),
                actual: ds.labels[i],
                predicted: MaturityLabel::ALL[fs.forest.predict(&fs.x[i])?],
            })
        })
        .collect::<Result<_>>()?;
    let importance = fs.forest.feature_importance();
    Ok(ValidationReport {
        seed,
        input_digest: prepared.input_digest.clone(),
        label_counts: label_counts(&ds.labels),
        train_rows: fs.split.train_rows.len(),
        test_rows: fs.split.test_rows.len(),
        metrics: fs.metrics,
        feature_importance: ranked(&names, &importance, &descending(&importance), top),
        predictions,
        warnings,
    })
}
