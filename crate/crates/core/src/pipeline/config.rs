use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::ForestConfig;
use crate::hmm::{FitOptions, VARIANCE_FLOOR};

/// Run configuration. Each section mirrors one pipeline module and every
/// field is optional in the file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub preprocess: PreprocessSettings,
    pub hmm: HmmSettings,
    pub forest: ForestSettings,
    pub explain: ExplainSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSettings {
    /// Rows missing more than this share of required answers are dropped.
    pub max_missing_fraction: f64,
    pub test_fraction: f64,
}

impl Default for PreprocessSettings {
    fn default() -> Self {
        Self {
            max_missing_fraction: 0.5,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmmSettings {
    pub n_states: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub variance_floor: f64,
    pub n_restarts: usize,
    /// Train on one stream with all organizations stacked in file order
    /// instead of one sequence per organization.
    pub stacked: bool,
}

impl Default for HmmSettings {
    fn default() -> Self {
        Self {
            n_states: 3,
            tol: 1e-6,
            max_iter: 500,
            variance_floor: VARIANCE_FLOOR,
            n_restarts: 8,
            stacked: false,
        }
    }
}

impl HmmSettings {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            variance_floor: self.variance_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestSettings {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: Option<usize>,
    pub balanced_class_weights: bool,
    pub bootstrap: bool,
    pub cv_folds: usize,
    /// Append each respondent's decoded HMM label as an extra feature.
    pub include_hmm_state: bool,
}

impl Default for ForestSettings {
    fn default() -> Self {
        let f = ForestConfig::default();
        Self {
            n_trees: f.n_trees,
            max_depth: f.max_depth,
            min_samples_split: f.min_samples_split,
            min_samples_leaf: f.min_samples_leaf,
            max_features: f.max_features,
            balanced_class_weights: f.balanced_class_weights,
            bootstrap: f.bootstrap,
            cv_folds: 5,
            include_hmm_state: false,
        }
    }
}

impl ForestSettings {
    pub fn forest_config(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            max_features: self.max_features,
            balanced_class_weights: self.balanced_class_weights,
            bootstrap: self.bootstrap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSettings {
    pub background_rows: usize,
    pub lime_samples: usize,
    /// Defaults to 0.75·sqrt(M) on standardized features.
    pub lime_kernel_width: Option<f64>,
    pub lime_top_k: usize,
    pub lime_ridge: f64,
    /// Features shown in rankings when `--top` is not given.
    pub top_features: usize,
    /// Size of the SHAP correlation matrix.
    pub correlation_features: usize,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        Self {
            background_rows: 100,
            lime_samples: 1000,
            lime_kernel_width: None,
            lime_top_k: 10,
            lime_ridge: 1.0,
            top_features: 10,
            correlation_features: 10,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        let p = &self.preprocess;
        if !(0.0..=1.0).contains(&p.max_missing_fraction) {
            return bad("preprocess.max_missing_fraction must lie in [0, 1]");
        }
        if !(p.test_fraction > 0.0 && p.test_fraction < 1.0) {
            return bad("preprocess.test_fraction must lie in (0, 1)");
        }
        let h = &self.hmm;
        if h.n_states == 0 || h.max_iter == 0 || h.n_restarts == 0 {
            return bad("hmm.n_states, hmm.max_iter and hmm.n_restarts must be positive");
        }
        if !(h.tol > 0.0) || !(h.variance_floor > 0.0) {
            return bad("hmm.tol and hmm.variance_floor must be positive");
        }
        let f = &self.forest;
        if f.n_trees == 0 || f.max_depth == 0 || f.min_samples_leaf == 0 || f.min_samples_split < 2 {
            return bad("forest needs n_trees, max_depth, min_samples_leaf >= 1 and min_samples_split >= 2");
        }
        if f.cv_folds < 2 {
            return bad("forest.cv_folds must be at least 2");
        }
        let e = &self.explain;
        if e.background_rows == 0 || e.lime_samples < 50 || e.lime_top_k == 0 {
            return bad("explain needs background_rows >= 1, lime_samples >= 50 and lime_top_k >= 1");
        }
        if e.lime_kernel_width.is_some_and(|w| !(w > 0.0)) || !(e.lime_ridge >= 0.0) {
            return bad("explain.lime_kernel_width must be positive and lime_ridge non-negative");
        }
        Ok(())
    }
}
