use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::labels::{build_labels, format_events, parse_events, LabelKey, LabelSet};
use super::record::{Record, Value};
use super::schema::{ColumnKind, ColumnRole, Schema, AGE_COLUMN, MAX_AGE, MIN_AGE};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Build labels from convicted events only.
    pub convicted_only: bool,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema, opts: LoadOptions) -> Result<Vec<Record>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(file, schema, opts)
}

fn parse_bool(s: &str) -> Option<f64> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "1.0" | "true" | "yes" | "y" => Some(1.0),
        "0" | "0.0" | "false" | "no" | "n" => Some(0.0),
        _ => None,
    }
}

/// Reads typed records. The first violation is reported with its 1-based row
/// number and column name.
pub fn read_records<R: Read>(reader: R, schema: &Schema, opts: LoadOptions) -> Result<Vec<Record>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: HashMap<String, usize> = rdr
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_string(), i))
        .collect();

    // current_violence20 may be materialized from its parts.
    let derive_cv20 = !header.contains_key("current_violence20")
        && schema.column("current_violence20").is_some()
        && header.contains_key("current_violence")
        && header.contains_key(AGE_COLUMN);

    for c in schema.columns() {
        let required = matches!(
            c.role,
            ColumnRole::Id | ColumnRole::Feature | ColumnRole::Sensitive
        );
        if required && !header.contains_key(&c.name) && !(derive_cv20 && c.name == "current_violence20")
        {
            return Err(Error::Schema(format!("missing column `{}`", c.name)));
        }
    }
    let label_cols: Vec<(LabelKey, usize)> = LabelKey::all()
        .filter_map(|k| header.get(&k.name()).map(|&i| (k, i)))
        .collect();
    if !label_cols.is_empty() && label_cols.len() != 12 {
        return Err(Error::Schema(format!(
            "found {} of the 12 label columns",
            label_cols.len()
        )));
    }
    let events_col = schema.events_column().and_then(|n| header.get(n).copied());

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let rownum = i + 1;
        let cell = |name: &str| -> Result<&str> {
            let v = header.get(name).and_then(|&j| row.get(j)).unwrap_or("");
            if v.is_empty() {
                return Err(Error::Row {
                    row: rownum,
                    column: name.to_string(),
                    message: "missing value".into(),
                });
            }
            Ok(v)
        };
        let bad = |name: &str, message: String| Error::Row {
            row: rownum,
            column: name.to_string(),
            message,
        };

        let mut rec = Record::default();
        for c in schema.columns() {
            match c.role {
                ColumnRole::Id => rec.id = cell(&c.name)?.to_string(),
                ColumnRole::Sensitive => {
                    rec.sensitive.insert(c.name.clone(), cell(&c.name)?.to_string());
                }
                ColumnRole::Feature => {
                    if derive_cv20 && c.name == "current_violence20" {
                        continue;
                    }
                    let raw = cell(&c.name)?;
                    let value = match c.kind {
                        ColumnKind::Numeric => {
                            let v: f64 = raw
                                .parse()
                                .map_err(|_| bad(&c.name, format!("`{raw}` is not a number")))?;
                            if !v.is_finite() {
                                return Err(bad(&c.name, format!("`{raw}` is not finite")));
                            }
                            if v < 0.0 {
                                return Err(bad(&c.name, format!("negative value {v}")));
                            }
                            Value::Num(v)
                        }
                        ColumnKind::Boolean => Value::Num(
                            parse_bool(raw)
                                .ok_or_else(|| bad(&c.name, format!("`{raw}` is not a boolean")))?,
                        ),
                        ColumnKind::Categorical => Value::Cat(raw.to_string()),
                    };
                    if c.name == AGE_COLUMN {
                        let age = value.as_num().unwrap_or(f64::NAN);
                        if !(MIN_AGE..=MAX_AGE).contains(&age) {
                            return Err(bad(
                                &c.name,
                                format!("age {age} outside [{MIN_AGE}, {MAX_AGE}]"),
                            ));
                        }
                    }
                    rec.features.insert(c.name.clone(), value);
                }
                ColumnRole::Events | ColumnRole::Label => {}
            }
        }
        if derive_cv20 {
            let violent = rec.numeric("current_violence")? != 0.0;
            let young = rec.numeric(AGE_COLUMN)? <= 20.0;
            rec.features.insert(
                "current_violence20".into(),
                Value::Num(f64::from(u8::from(violent && young))),
            );
        }
        if let Some(j) = events_col {
            let raw = row.get(j).unwrap_or("");
            let name = schema.events_column().unwrap_or("events");
            rec.events = parse_events(raw).map_err(|m| bad(name, m))?;
        }
        if !label_cols.is_empty() {
            let mut labels = LabelSet::default();
            for &(k, j) in &label_cols {
                let name = k.name();
                let raw = row.get(j).unwrap_or("");
                let v = parse_bool(raw)
                    .ok_or_else(|| bad(&name, format!("`{raw}` is not a binary label")))?;
                labels.set(k, v != 0.0);
            }
            rec.labels = Some(labels);
        } else if events_col.is_some() {
            rec.labels = Some(build_labels(&rec.events, opts.convicted_only));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_csv(path: impl AsRef<Path>, records: &[Record], schema: &Schema) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(file, records, schema)
}

/// Writes records in schema column order. Label columns are emitted only
/// when every record carries labels.
pub fn write_records<W: Write>(writer: W, records: &[Record], schema: &Schema) -> Result<()> {
    let with_labels = records.iter().all(|r| r.labels.is_some());
    let cols: Vec<_> = schema
        .columns()
        .iter()
        .filter(|c| c.role != ColumnRole::Label || with_labels)
        .collect();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(cols.iter().map(|c| c.name.as_str()))?;
    for r in records {
        let mut row = Vec::with_capacity(cols.len());
        for c in &cols {
            let cell = match c.role {
                ColumnRole::Id => r.id.clone(),
                ColumnRole::Sensitive => r.sensitive.get(&c.name).cloned().unwrap_or_default(),
                ColumnRole::Feature => r
                    .features
                    .get(&c.name)
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                ColumnRole::Events => format_events(&r.events),
                ColumnRole::Label => {
                    let key: LabelKey = c.name.parse()?;
                    let on = r.labels.map(|l| l.get(key)).unwrap_or(false);
                    u8::from(on).to_string()
                }
            };
            row.push(cell);
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_schema() -> Schema {
        Schema::parse_declaration(
            "person_id categorical id\n\
             race categorical sensitive\n\
             age_at_current_charge numeric feature\n\
             p_arrest numeric feature\n\
             current_violence boolean feature\n\
             current_violence20 boolean feature\n\
             events categorical events\n",
        )
        .unwrap()
    }

    #[test]
    fn two_valid_rows() {
        let text = "person_id,race,age_at_current_charge,p_arrest,current_violence,events\n\
                    a,Caucasian,19,0,1,400:drug:felony:1\n\
                    b,Other,40,3,0,\n";
        let recs = read_records(text.as_bytes(), &tiny_schema(), LoadOptions::default()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].numeric("current_violence20").unwrap(), 1.0);
        assert_eq!(recs[1].numeric("current_violence20").unwrap(), 0.0);
        let key: LabelKey = "drug_two_year".parse().unwrap();
        assert!(recs[0].labels.unwrap().get(key));
        assert!(!recs[1].labels.unwrap().get(key));
    }

    #[test]
    fn age_seventeen_names_the_row() {
        let text = "person_id,race,age_at_current_charge,p_arrest,current_violence\n\
                    a,Caucasian,30,0,1\n\
                    b,Caucasian,17,0,1\n";
        let err = read_records(text.as_bytes(), &tiny_schema(), LoadOptions::default()).unwrap_err();
        match err {
            Error::Row { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, AGE_COLUMN);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_p_arrest_column() {
        let text = "person_id,race,age_at_current_charge,current_violence\na,C,30,1\n";
        let err = read_records(text.as_bytes(), &tiny_schema(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("p_arrest")), "{err}");
    }

    #[test]
    fn empty_cell_is_rejected() {
        let text = "person_id,race,age_at_current_charge,p_arrest,current_violence\na,C,30,,1\n";
        let err = read_records(text.as_bytes(), &tiny_schema(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Row { ref column, .. } if column == "p_arrest"));
    }

    #[test]
    fn bad_numbers_are_rejected() {
        let text = "person_id,race,age_at_current_charge,p_arrest,current_violence\na,C,30,many,1\n";
        assert!(read_records(text.as_bytes(), &tiny_schema(), LoadOptions::default()).is_err());
    }

    #[test]
    fn write_then_read_round_trips() {
        let text = "person_id,race,age_at_current_charge,p_arrest,current_violence,events\n\
                    a,Caucasian,19,0,1,400:drug:felony:1;20::other:0\n\
                    b,Other,40.5,3,0,\n";
        let schema = tiny_schema();
        let recs = read_records(text.as_bytes(), &schema, LoadOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_records(&mut buf, &recs, &schema).unwrap();
        let back = read_records(buf.as_slice(), &schema, LoadOptions::default()).unwrap();
        assert_eq!(recs, back);
    }
}
