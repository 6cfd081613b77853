//! Reading user files into core types.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use recid_core::data::{load_csv, ColumnKind, ColumnRole, Dataset, LabelKey, LoadOptions, Record, Schema};
use recid_core::train::TrainConfig;

use crate::error::{CliError, Result};
use crate::DataArgs;

pub fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("no such file: {}", path.display())))
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    require_file(path)?;
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn header(path: &Path) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    Ok(rdr.headers()?.iter().map(str::to_string).collect())
}

/// `kentucky`, `broward`, a declaration file, or the built-in layout whose
/// features all appear in the header.
pub fn resolve_schema(choice: Option<&str>, data: &Path) -> Result<Schema> {
    match choice {
        Some("kentucky") => Ok(Schema::kentucky()),
        Some("broward") => Ok(Schema::broward()),
        Some(path) => Ok(Schema::parse_declaration(&read_text(Path::new(path))?)?),
        None => {
            let cols = header(data)?;
            if cols.iter().all(|c| c.is_empty()) {
                return Err(CliError::Usage(format!("{} is empty", data.display())));
            }
            let fits = |s: &Schema| {
                s.columns()
                    .iter()
                    .filter(|c| matches!(c.role, ColumnRole::Id | ColumnRole::Feature | ColumnRole::Sensitive))
                    .filter(|c| c.name != "current_violence20")
                    .all(|c| cols.contains(&c.name))
            };
            [Schema::broward(), Schema::kentucky()]
                .into_iter()
                .find(fits)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "cannot tell the layout of {}; pass --schema kentucky, broward or a declaration file",
                        data.display()
                    ))
                })
        }
    }
}

pub fn load(path: &Path, schema: Option<&str>, convicted_only: bool) -> Result<(Schema, Vec<Record>)> {
    require_file(path)?;
    let schema = resolve_schema(schema, path)?;
    let records = load_csv(path, &schema, LoadOptions { convicted_only })?;
    if records.is_empty() {
        return Err(CliError::Usage(format!("{} has no records", path.display())));
    }
    Ok((schema, records))
}

pub fn load_data(args: &DataArgs) -> Result<(Schema, Vec<Record>)> {
    load(&args.input, args.schema.as_deref(), args.convicted_only)
}

/// Numeric and boolean feature columns.
pub fn model_features(schema: &Schema) -> Vec<String> {
    schema
        .columns()
        .iter()
        .filter(|c| c.role == ColumnRole::Feature && c.kind != ColumnKind::Categorical)
        .map(|c| c.name.clone())
        .collect()
}

pub fn parse_label(name: &str) -> Result<LabelKey> {
    Ok(name.parse()?)
}

/// Design matrix; every label is false when `label` is `None`.
pub fn design(records: &[Record], features: &[String], label: Option<LabelKey>) -> Result<Dataset> {
    if let Some(key) = label {
        return Ok(Dataset::from_records(records, features, key)?);
    }
    let mut x = Array2::zeros((records.len(), features.len()));
    for (i, r) in records.iter().enumerate() {
        for (j, f) in features.iter().enumerate() {
            x[[i, j]] = r.numeric(f)?;
        }
    }
    Ok(Dataset::new(features.to_vec(), x, vec![false; records.len()])?)
}

pub fn train_config(path: Option<&Path>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut config = match path {
        Some(p) => TrainConfig::from_toml_str(&read_text(p)?).map_err(|e| match e {
            recid_core::Error::Config(m) => CliError::Usage(format!("{}: {m}", p.display())),
            other => other.into(),
        })?,
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

/// `<path><suffix>`, e.g. `model.json` + `.txt` gives `model.json.txt`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}
