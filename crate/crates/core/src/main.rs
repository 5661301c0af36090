use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use itxml::pipeline::{
    read_file, render_json, render_text, run_assessment, run_explain, run_recode, run_synth, run_validation,
    ModelBundle, PipelineConfig, Selector,
};
use itxml::synth::ScenarioSpec;
use itxml::{Error, Result, SurveyDefinition};

/// Insider-threat security maturity assessment from survey responses.
#[derive(Debug, Parser)]
#[command(name = "itxml", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Input file: responses CSV, or a scenario TOML for `synth`.
    #[arg(long = "in", global = true, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Survey definition TOML; the bundled survey when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    survey: Option<PathBuf>,
    /// Pipeline configuration TOML.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Number of ranked features to report.
    #[arg(long, global = true, value_name = "N")]
    top: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write an assessment report.
    Assess {
        /// Also write the fitted models for later `explain` runs.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Train and evaluate the forest on labelled responses.
    Validate,
    /// Explain saved-model predictions for one organization or row.
    Explain {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, conflicts_with = "row", required_unless_present = "row")]
        org: Option<String>,
        /// 1-based data row of the input file.
        #[arg(long)]
        row: Option<usize>,
    },
    /// Sample a synthetic response file from a scenario.
    Synth {
        /// Ground-truth sidecar path; defaults to `<out>.truth.json`.
        #[arg(long, value_name = "PATH")]
        truth: Option<PathBuf>,
    },
    /// Recode and score responses without modelling.
    Recode,
}

fn input(common: &Common) -> Result<&Path> {
    common
        .input
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("--in is required".into()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn truth_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.truth.json"))
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let survey = match &c.survey {
        Some(p) => SurveyDefinition::load(p)?,
        None => SurveyDefinition::bundled(),
    };
    let config = match &c.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let top = c.top.unwrap_or(config.explain.top_features);
    let out = c.out.as_deref();

    match cli.command {
        Command::Assess { model } => {
            let csv = read_file(input(c)?)?;
            let a = run_assessment(&survey, &config, &csv, c.seed, top)?;
            let text = render_json(&a.report)?;
            if let Some(path) = model {
                std::fs::write(path, json(&a.bundle)?)?;
            }
            match c.format {
                Format::Json => emit(out, &text),
                Format::Text => emit(out, &render_text(&a.report)),
            }
        }
        Command::Validate => {
            let csv = read_file(input(c)?)?;
            let r = run_validation(&survey, &config, &csv, c.seed, top)?;
            match c.format {
                Format::Json => emit(out, &json(&r)?),
                Format::Text => {
                    let m = &r.metrics;
                    let mut s = format!(
                        "accuracy {:.3}  kappa {:.3}  train {}  test {}\n",
                        m.accuracy, m.kappa, r.train_rows, r.test_rows
                    );
                    if let Some(cv) = &m.cv {
                        s += &format!("{}-fold CV {:.3} ± {:.3}\n", cv.folds.len(), cv.mean, cv.std);
                    }
                    for k in &m.per_class {
                        s += &format!(
                            "{:<10} precision {:.2}  recall {:.2}  f1 {:.2}  support {}\n",
                            k.label.to_string(),
                            k.precision,
                            k.recall,
                            k.f1_score,
                            k.support
                        );
                    }
                    for w in &r.warnings {
                        s += &format!("warning: {w}\n");
                    }
                    emit(out, &s)
                }
            }
        }
        Command::Explain { model, org, row } => {
            let csv = read_file(input(c)?)?;
            let bundle: ModelBundle = serde_json::from_slice(&read_file(&model)?)?;
            let selector = match (org, row) {
                (Some(o), _) => Selector::Org(o),
                (None, Some(r)) => Selector::Row(r),
                (None, None) => return Err(Error::InvalidArgument("--org or --row is required".into())),
            };
            let r = run_explain(&survey, &bundle, &csv, &selector, top)?;
            match c.format {
                Format::Json => emit(out, &json(&r)?),
                Format::Text => {
                    let mut s = format!("global mean |SHAP| ({})\n", r.class);
                    for f in &r.global {
                        s += &format!("  {:>2}. {:<40} {:.4}\n", f.rank, f.feature, f.value);
                    }
                    for i in &r.instances {
                        s += &format!(
                            "\nrow {} ({} {}): p = {:.3}, base {:.3}, lime fidelity {:.2}\n",
                            i.row, i.org_id, i.respondent_id, i.prediction, i.base_value, i.lime_fidelity
                        );
                        for f in &i.shap {
                            s += &format!("  {:<40} {:+.4}\n", f.feature, f.value);
                        }
                    }
                    emit(out, &s)
                }
            }
        }
        Command::Synth { truth } => {
            let spec = ScenarioSpec::load(input(c)?)?;
            let data = run_synth(&survey, &spec)?;
            let csv = data.csv_string()?;
            let truth = truth.or_else(|| out.map(truth_path));
            if let Some(path) = truth {
                std::fs::write(path, data.truth_json()?)?;
            }
            emit(out, &csv)
        }
        Command::Recode => {
            let csv = read_file(input(c)?)?;
            let ds = run_recode(&survey, &csv, &config)?;
            match c.format {
                Format::Json => emit(out, &json(&ds)?),
                Format::Text => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    let mut header = vec!["org_id".to_string(), "respondent_id".to_string()];
                    header.extend(ds.feature_names.iter().cloned());
                    header.extend(
                        ["security_maturity", "threat_awareness", "access_control", "policy_framework", "overall", "label"]
                            .map(String::from),
                    );
                    w.write_record(&header)?;
                    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                    for i in 0..ds.len() {
                        let comp = &ds.composites[i];
                        let mut rec = vec![ds.org_index[i].clone(), ds.respondent_ids[i].clone()];
                        rec.extend(ds.features[i].iter().map(|v| cell(*v)));
                        rec.extend(
                            [
                                comp.security_maturity,
                                comp.threat_awareness,
                                comp.access_control,
                                comp.policy_framework,
                                comp.overall,
                            ]
                            .map(cell),
                        );
                        rec.push(ds.labels[i].to_string());
                        w.write_record(&rec)?;
                    }
                    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
                    emit(out, &String::from_utf8(bytes).expect("utf-8 csv"))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
