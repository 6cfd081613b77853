use std::path::Path;

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use recid_core::data::{shared_schema, synthesize, write_records, LabelKey, Record, RegionProfile, SynthConfig};
use recid_core::evaluate::{
    cross_region, nested_cv, tune, write_summary_csv, CvOptions, ModelKind, ModelLearner, Predictor, TrainedModel,
};
use recid_core::fairness::{audit, GroupedScores, ScoreKind, Thresholds};
use recid_core::featurize::{expand, StumpBasis};
use recid_core::scoring::{score_psa_nca, score_psa_nvca, PsaFields};
use recid_core::train::TrainConfig;

use crate::error::{CliError, Result};
use crate::input::{
    design, load, load_data, model_features, parse_label, read_text, require_file, sidecar, train_config, write_file,
};
use crate::manifest::RunManifest;
use crate::{
    AuditArgs, Cli, Command, CvArgs, FeaturizeArgs, ModelArgs, PredictArgs, PsaArgs, SynthArgs, TrainArgs,
    XregionArgs,
};

/// Saved by `train`, read by `predict`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub label: String,
    pub params: Json,
    /// Mean inner-fold AUC of the chosen setting; absent when the grid had one entry.
    pub validation_auc: Option<f64>,
    pub model: TrainedModel,
}

pub fn run(command: Command, argv: Vec<String>) -> Result<()> {
    let (name, output) = match &command {
        Command::Replay(a) => return replay(&a.manifest),
        Command::Synth(a) => ("synth", a.output.clone()),
        Command::Featurize(a) => ("featurize", a.output.clone()),
        Command::Train(a) => ("train", a.output.clone()),
        Command::Predict(a) => ("predict", a.output.clone()),
        Command::Cv(a) => ("cv", a.output.clone()),
        Command::Xregion(a) => ("xregion", a.output.clone()),
        Command::Psa(a) => ("psa", a.output.clone()),
        Command::Audit(a) => ("audit", a.output.clone()),
    };
    let mut manifest = RunManifest::new(name, argv);
    manifest.outputs.push(output.clone());
    match &command {
        Command::Synth(a) => synth(a, &mut manifest)?,
        Command::Featurize(a) => featurize(a, &mut manifest)?,
        Command::Train(a) => train(a, &mut manifest)?,
        Command::Predict(a) => predict(a, &mut manifest)?,
        Command::Cv(a) => cv(a, &mut manifest)?,
        Command::Xregion(a) => xregion(a, &mut manifest)?,
        Command::Psa(a) => psa(a, &mut manifest)?,
        Command::Audit(a) => audit_cmd(a, &mut manifest)?,
        Command::Replay(_) => unreachable!(),
    }
    manifest.write(&output)
}

fn replay(path: &Path) -> Result<()> {
    let manifest = RunManifest::read(path)?;
    let cli = Cli::try_parse_from(std::iter::once("recid".to_string()).chain(manifest.args.iter().cloned()))
        .map_err(|e| CliError::Usage(format!("manifest arguments do not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot replay another manifest".into()));
    }
    if manifest.version != env!("CARGO_PKG_VERSION") {
        log::warn!("manifest written by version {}, replaying with {}", manifest.version, env!("CARGO_PKG_VERSION"));
    }
    run(cli.command, manifest.args)
}

fn synth(a: &SynthArgs, m: &mut RunManifest) -> Result<()> {
    let profile = match &a.config {
        Some(path) => {
            m.config = Some(path.clone());
            toml::from_str::<RegionProfile>(&read_text(path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => match a.region.as_str() {
            "kentucky" => RegionProfile::kentucky(),
            "broward" => RegionProfile::broward(),
            other => return Err(CliError::Usage(format!("unknown region `{other}` (expected kentucky or broward)"))),
        },
    };
    m.seed = Some(a.seed);
    let records = synthesize(&SynthConfig::new(profile.clone(), a.seed), a.n)?;
    let mut buf = Vec::new();
    write_records(&mut buf, &records, &profile.region.schema())?;
    write_file(&a.output, buf)
}

fn featurize(a: &FeaturizeArgs, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(a.data.input.clone());
    let (schema, records) = load_data(&a.data)?;
    let basis = match &a.basis {
        Some(path) => {
            m.inputs.push(path.clone());
            StumpBasis::parse_text(&read_text(path)?)?
        }
        None => {
            let features = model_features(&schema);
            let basis = StumpBasis::default_for(&design(&records, &features, None)?, &features)?;
            let path = sidecar(&a.output, ".basis");
            write_file(&path, basis.to_text())?;
            m.outputs.push(path);
            basis
        }
    };
    let matrix = expand(&records, &basis)?;
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let mut buf = Vec::new();
    matrix.write_csv(&mut buf, &ids)?;
    log::info!("{} records, {} stump columns", records.len(), matrix.columns.len());
    write_file(&a.output, buf)
}

fn learner(a: &ModelArgs, m: &mut RunManifest) -> Result<(ModelLearner, CvOptions)> {
    let kind: ModelKind = a.model.parse()?;
    if let Some(path) = &a.config {
        m.config = Some(path.clone());
        m.inputs.push(path.clone());
    }
    let config: TrainConfig = train_config(a.config.as_deref(), a.seed)?;
    m.seed = Some(config.seed);
    let opts = CvOptions {
        folds: config.folds,
        inner_folds: config.folds,
        seed: config.seed,
        stratify: a.stratify || config.stratify,
    };
    let mut learner = ModelLearner::new(kind, config);
    if let Some(path) = &a.basis {
        m.inputs.push(path.clone());
        learner = learner.with_basis(StumpBasis::parse_text(&read_text(path)?)?);
    }
    Ok((learner, opts))
}

fn train(a: &TrainArgs, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(a.data.input.clone());
    let key = parse_label(&a.model.label)?;
    let (learner, opts) = learner(&a.model, m)?;
    let (schema, records) = load_data(&a.data)?;
    let data = design(&records, &model_features(&schema), Some(key))?;
    data.require_both_classes()?;
    let (params, validation_auc) = tune(&data, &learner, &opts)?;
    log::info!("chose {params} (validation AUC {validation_auc:?})");
    let model = learner.train(&data, &params)?;
    let text = model.describe()?;
    let file = ModelFile {
        label: key.name(),
        params,
        validation_auc,
        model,
    };
    write_file(&a.output, serde_json::to_string_pretty(&file)? + "\n")?;
    let readable = sidecar(&a.output, ".txt");
    write_file(&readable, text)?;
    m.outputs.push(readable);
    Ok(())
}

fn labelled(records: &[Record]) -> bool {
    records.iter().all(|r| r.labels.is_some())
}

fn predict(a: &PredictArgs, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(a.data.input.clone());
    m.inputs.push(a.model.clone());
    let file: ModelFile = serde_json::from_str(&read_text(&a.model)?)
        .map_err(|e| CliError::Usage(format!("{} is not a model file: {e}", a.model.display())))?;
    let key = parse_label(&file.label)?;
    let (schema, records) = load_data(&a.data)?;
    let has_labels = labelled(&records);
    let data = design(&records, &file.model.input_features(), has_labels.then_some(key))?;
    let scores = file.model.predict(&data)?;

    let sensitive = schema.sensitive_names();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["person_id".to_string(), "score".to_string()];
    head.extend(sensitive.iter().cloned());
    if has_labels {
        head.push(file.label.clone());
    }
    w.write_record(&head)?;
    for (i, r) in records.iter().enumerate() {
        let mut row = vec![r.id.clone(), scores[i].to_string()];
        row.extend(sensitive.iter().map(|s| r.sensitive.get(s).cloned().unwrap_or_default()));
        if has_labels {
            row.push(u8::from(data.y[i]).to_string());
        }
        w.write_record(&row)?;
    }
    write_file(&a.output, finish(w)?)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("csv buffer: {e}")))
}

fn cv(a: &CvArgs, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(a.data.input.clone());
    let key = parse_label(&a.model.label)?;
    let (learner, opts) = learner(&a.model, m)?;
    let (schema, records) = load_data(&a.data)?;
    let data = design(&records, &model_features(&schema), Some(key))?;
    data.require_both_classes()?;
    let mut result = nested_cv(&data, &learner, &opts)?;
    result.label = Some(key.name());
    println!("{} {}: AUC {:.4} ± {:.4}", key.name(), result.model, result.mean_auc, result.std_auc);
    if a.output.extension().is_some_and(|e| e == "csv") {
        let mut buf = Vec::new();
        write_summary_csv(&[result], &mut buf)?;
        write_file(&a.output, buf)
    } else {
        write_file(&a.output, serde_json::to_string_pretty(&result)? + "\n")
    }
}

fn xregion(a: &XregionArgs, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(a.data.input.clone());
    m.inputs.push(a.target.clone());
    let key = parse_label(&a.model.label)?;
    let (learner, opts) = learner(&a.model, m)?;
    let (source_schema, source) = load_data(&a.data)?;
    require_file(&a.target)?;
    let (target_schema, target) = load(&a.target, a.target_schema.as_deref(), a.data.convicted_only)?;
    let usable = model_features(&source_schema);
    let shared: Vec<String> = shared_schema(&source_schema, &target_schema, false)
        .into_iter()
        .filter(|f| usable.contains(f))
        .collect();
    if shared.is_empty() {
        return Err(recid_core::Error::Schema("source and target share no features".into()).into());
    }
    log::info!("{} shared features", shared.len());
    let source = design(&source, &shared, Some(key))?;
    let target = design(&target, &shared, Some(key))?;
    source.require_both_classes()?;
    target.require_both_classes()?;
    let mut result = cross_region(&source, &target, &learner, &opts)?;
    result.label = Some(key.name());
    println!(
        "{} {}: source AUC {:.4}, target AUC {:.4}",
        key.name(),
        result.model,
        result.mean_source_auc,
        result.mean_target_auc
    );
    write_file(&a.output, serde_json::to_string_pretty(&result)? + "\n")
}

fn psa(a: &PsaArgs, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(a.data.input.clone());
    let (schema, records) = load_data(&a.data)?;
    let fields = PsaFields::default();
    let sensitive = schema.sensitive_names();
    let labels: Vec<LabelKey> = if labelled(&records) { LabelKey::all().collect() } else { Vec::new() };

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["person_id".to_string()];
    head.extend(sensitive.iter().cloned());
    head.extend(["nca_raw", "nca_scaled", "nvca_raw", "nvca_flag"].map(String::from));
    head.extend(labels.iter().map(|k| k.name()));
    w.write_record(&head)?;
    for r in &records {
        let nca = score_psa_nca(r, &fields)?;
        let nvca = score_psa_nvca(r, &fields)?;
        let mut row = vec![r.id.clone()];
        row.extend(sensitive.iter().map(|s| r.sensitive.get(s).cloned().unwrap_or_default()));
        row.extend([
            nca.raw.to_string(),
            nca.scaled.to_string(),
            nvca.raw.to_string(),
            u8::from(nvca.flag).to_string(),
        ]);
        if let Some(set) = r.labels {
            row.extend(labels.iter().map(|&k| u8::from(set.get(k)).to_string()));
        }
        w.write_record(&row)?;
    }
    write_file(&a.output, finish(w)?)
}

fn parse_flag(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "1" | "1.0" | "true" | "yes" => Some(true),
        "0" | "0.0" | "false" | "no" => Some(false),
        _ => None,
    }
}

/// Scores, labels and groups from a scored CSV.
fn read_scored(path: &Path, score: &str, label: &str, attribute: &str) -> Result<(Vec<f64>, Vec<bool>, Vec<String>)> {
    require_file(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let head = rdr.headers()?.clone();
    let column = |name: &str| {
        head.iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("{} has no `{name}` column", path.display())))
    };
    let (si, li, gi) = (column(score)?, column(label)?, column(attribute)?);
    let (mut scores, mut labels, mut groups) = (Vec::new(), Vec::new(), Vec::new());
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |col: &str, what: &str| CliError::Usage(format!("row {}, column `{col}`: {what}", i + 1));
        let s: f64 = row
            .get(si)
            .and_then(|v| v.parse().ok())
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| bad(score, "not a finite number"))?;
        let y = row.get(li).and_then(parse_flag).ok_or_else(|| bad(label, "not a 0/1 label"))?;
        let g = row.get(gi).filter(|g| !g.is_empty()).ok_or_else(|| bad(attribute, "missing value"))?;
        scores.push(s);
        labels.push(y);
        groups.push(g.to_string());
    }
    if scores.is_empty() {
        return Err(CliError::Usage(format!("{} has no rows", path.display())));
    }
    Ok((scores, labels, groups))
}

fn audit_cmd(a: &AuditArgs, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(a.input.clone());
    let thresholds = match &a.thresholds {
        Some(path) => {
            m.config = Some(path.clone());
            m.inputs.push(path.clone());
            Thresholds::from_toml_str(&read_text(path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => Thresholds::default(),
    };
    let (scores, labels, groups) = read_scored(&a.input, &a.score_column, &a.label, &a.attribute)?;
    let kind = ScoreKind::infer(&scores);
    let grouped = GroupedScores::new(kind, scores, labels, groups)?;
    let report = audit(&grouped, &a.attribute, &thresholds, &a.exclude)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    println!("{}", report.summary());
    let curves = sidecar(&a.output, ".curves.csv");
    let mut buf = Vec::new();
    report.write_curves_csv(&mut buf)?;
    write_file(&curves, buf)?;
    m.outputs.push(curves);
    write_file(&a.output, serde_json::to_string_pretty(&report)? + "\n")
}

