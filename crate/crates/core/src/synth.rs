//! Synthetic survey data drawn from a known HMM, with exact answer quotas
//! for multi-select and ordinal questions.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::HmmParams;
use crate::rng::{child_rng, Rng};
use crate::survey::{ResponseScale, SurveyDefinition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    DevelopingDominant,
    Mixed,
    Advanced,
}

impl Regime {
    /// Selection share per option for multi-select questions and category
    /// shares for ordinal questions, unless the scenario overrides them.
    fn frequencies(self, question: &str, categories: usize, multi_select: bool) -> Vec<f64> {
        let known: Option<&[f64]> = match (self, question) {
            (Regime::DevelopingDominant, "tp_threat_types") => Some(&[37.0, 28.0, 27.0, 15.0, 8.0]),
            (Regime::DevelopingDominant, "tp_privacy_incidents") => Some(&[28.0, 18.0, 9.0, 4.0, 1.0]),
            (Regime::Mixed, "tp_threat_types") => Some(&[30.0, 24.0, 21.0, 12.0, 6.0]),
            (Regime::Mixed, "tp_privacy_incidents") => Some(&[24.0, 18.0, 10.0, 6.0, 2.0]),
            (Regime::Advanced, "tp_threat_types") => Some(&[18.0, 12.0, 12.0, 6.0, 3.0]),
            (Regime::Advanced, "tp_privacy_incidents") => Some(&[42.0, 12.0, 4.0, 2.0, 0.0]),
            (_, "pm_training_sessions") => Some(&[6.0, 21.0, 24.0, 9.0]),
            _ => None,
        };
        match known {
            Some(counts) if counts.len() == categories => counts.iter().map(|c| c / 60.0).collect(),
            _ if multi_select => vec![0.5; categories],
            _ => vec![1.0 / categories as f64; categories],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_orgs: usize,
    pub respondents_per_org: usize,
    /// Per-item noise added to a dimension target before rounding.
    pub item_noise_std: f64,
    pub seed: u64,
    pub target_regime: Regime,
    /// Emissions are composite scores in dimension order: security maturity,
    /// threat awareness, access control, policy framework.
    pub true_params: HmmParams,
    /// Per-org shift added to every dimension target.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub org_offsets: Vec<Vec<f64>>,
    /// Overrides of the regime's answer frequencies, keyed by question id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub answer_frequencies: BTreeMap<String, Vec<f64>>,
    #[serde(default = "default_org_prefix")]
    pub org_prefix: String,
}

fn default_org_prefix() -> String {
    "SOE-".into()
}

impl ScenarioSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_orgs == 0 {
            return bad("n_orgs must be at least 1".into());
        }
        if self.respondents_per_org == 0 {
            return bad("respondents_per_org must be at least 1".into());
        }
        if !(self.item_noise_std > 0.0 && self.item_noise_std.is_finite()) {
            return bad(format!("item_noise_std must be positive, got {}", self.item_noise_std));
        }
        self.true_params.validate()?;
        if self.true_params.dim != 4 {
            return bad(format!("true_params.dim must be 4, got {}", self.true_params.dim));
        }
        if !self.org_offsets.is_empty()
            && (self.org_offsets.len() != self.n_orgs || self.org_offsets.iter().any(|o| o.len() != 4))
        {
            return bad("org_offsets needs one 4-vector per organization".into());
        }
        for (q, f) in &self.answer_frequencies {
            if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad(format!("answer_frequencies.{q} must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    fn frequencies(&self, question: &str, categories: usize, multi_select: bool) -> Result<Vec<f64>> {
        match self.answer_frequencies.get(question) {
            Some(f) if f.len() != categories => Err(Error::InvalidConfig(format!(
                "answer_frequencies.{question} has {} entries, expected {categories}",
                f.len()
            ))),
            Some(f) => Ok(f.clone()),
            None => Ok(self.target_regime.frequencies(question, categories, multi_select)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrgTruth {
    pub org_id: String,
    pub states: Vec<usize>,
}

/// The sidecar written next to a synthetic CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub target_regime: Regime,
    pub params: HmmParams,
    pub orgs: Vec<OrgTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub header: Vec<String>,
    /// Raw answers in header order, including the two key columns.
    pub rows: Vec<Vec<String>>,
    pub truth: GroundTruth,
}

impl SyntheticDataset {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn truth_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.truth)? + "\n")
    }
}

/// Splits `total` items into categories proportionally to `shares`, rounding
/// by largest remainder (earlier categories win ties).
fn quotas(shares: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = shares.iter().sum();
    if sum <= 0.0 {
        let mut q = vec![0; shares.len()];
        q[0] = total;
        return q;
    }
    let exact: Vec<f64> = shares.iter().map(|s| s / sum * total as f64).collect();
    let mut q: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - q[b] as f64).total_cmp(&(exact[a] - q[a] as f64)).then(a.cmp(&b)));
    let short = total - q.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        q[i] += 1;
    }
    q
}

/// Answers for one non-Likert question, indexed by global respondent.
fn quota_answers(
    spec: &ScenarioSpec,
    question: &str,
    scale: &ResponseScale,
    n: usize,
    rng: &mut Rng,
) -> Result<Vec<String>> {
    Ok(match scale {
        ResponseScale::MultiSelect { options } => {
            let shares = spec.frequencies(question, options.len(), true)?;
            let mut selected = vec![Vec::new(); n];
            for (opt, share) in options.iter().zip(&shares) {
                let take = (share * n as f64).round() as usize;
                let mut who: Vec<usize> = (0..n).collect();
                who.shuffle(rng);
                for &g in &who[..take.min(n)] {
                    selected[g].push(opt.as_str());
                }
            }
            selected.into_iter().map(|s| s.join(";")).collect()
        }
        ResponseScale::OrdinalRange { recode } => {
            let entries = recode.entries();
            let shares = spec.frequencies(question, entries.len(), false)?;
            let mut answers: Vec<String> = quotas(&shares, n)
                .into_iter()
                .zip(entries)
                .flat_map(|(count, e)| std::iter::repeat_n(e.label.clone(), count))
                .collect();
            answers.shuffle(rng);
            answers
        }
        ResponseScale::Count => (0..n).map(|_| rng.random_range(0..=10u32).to_string()).collect(),
        ResponseScale::Likert5 => unreachable!("Likert answers come from the state model"),
    })
}

fn sample_index(weights: &[f64], rng: &mut Rng) -> usize {
    WeightedIndex::new(weights).expect("validated stochastic row").sample(rng)
}

/// Draws a dataset for `survey` from the scenario. Each organization is an
/// independent chain seeded from the scenario seed and its index.
pub fn sample_dataset(survey: &SurveyDefinition, spec: &ScenarioSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let rpo = spec.respondents_per_org;
    let n = spec.n_orgs * rpo;
    let params = &spec.true_params;
    let dims = survey.dimensions();

    let mut fixed: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (qi, q) in survey.questions().iter().enumerate() {
        if !matches!(q.scale, ResponseScale::Likert5) {
            let mut rng = child_rng(spec.seed, 1_000_000 + qi as u64);
            fixed.insert(qi, quota_answers(spec, &q.id, &q.scale, n, &mut rng)?);
        }
    }

    let per_org: Vec<(OrgTruth, Vec<Vec<String>>)> = (0..spec.n_orgs)
        .into_par_iter()
        .map(|org| {
            let mut rng = child_rng(spec.seed, org as u64);
            let org_id = format!("{}{}", spec.org_prefix, org + 1);
            let offset = spec.org_offsets.get(org).cloned().unwrap_or_else(|| vec![0.0; 4]);
            let mut states: Vec<usize> = Vec::with_capacity(rpo);
            let mut rows = Vec::with_capacity(rpo);
            for t in 0..rpo {
                let s = match states.last() {
                    None => sample_index(&params.pi, &mut rng),
                    Some(&prev) => sample_index(&params.transitions[prev], &mut rng),
                };
                states.push(s);
                let targets: Vec<f64> = (0..4)
                    .map(|d| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        params.means[s][d] + offset[d] + params.variances[s][d].sqrt() * z
                    })
                    .collect();
                let g = org * rpo + t;
                let mut row = vec![org_id.clone(), format!("R{:03}", t + 1)];
                for (qi, q) in survey.questions().iter().enumerate() {
                    let answer = match &q.scale {
                        ResponseScale::Likert5 => {
                            let target = dims.dimension_of(q.section).map_or(3.0, |d| targets[d.index()]);
                            let z: f64 = StandardNormal.sample(&mut rng);
                            let v = (target + spec.item_noise_std * z).round().clamp(1.0, 5.0);
                            format!("{}", v as u8)
                        }
                        _ => fixed[&qi][g].clone(),
                    };
                    row.push(answer);
                }
                rows.push(row);
            }
            (OrgTruth { org_id, states }, rows)
        })
        .collect();

    let mut header = vec!["org_id".to_string(), "respondent_id".to_string()];
    header.extend(survey.questions().iter().map(|q| q.id.clone()));
    let mut orgs = Vec::with_capacity(spec.n_orgs);
    let mut rows = Vec::with_capacity(n);
    for (truth, org_rows) in per_org {
        orgs.push(truth);
        rows.extend(org_rows);
    }
    Ok(SyntheticDataset {
        header,
        rows,
        truth: GroundTruth {
            seed: spec.seed,
            target_regime: spec.target_regime,
            params: params.clone(),
            orgs,
        },
    })
}
