//! Record schema, CSV ingestion, label construction and synthetic data.

mod dataset;
mod io;
mod labels;
mod record;
mod schema;
mod synth;

pub use dataset::Dataset;
pub use io::{load_csv, read_records, write_csv, write_records, LoadOptions};
pub use labels::{
    build_labels, format_events, parse_events, ChargeType, Event, Horizon, LabelKey, LabelSet,
    Level, SIX_MONTH_DAYS, TWO_YEAR_DAYS,
};
pub use record::{Record, Value};
pub use schema::{
    shared_schema, ColumnKind, ColumnRole, ColumnSpec, Schema, AGE_COLUMN, EVENTS_COLUMN,
    ID_COLUMN, MAX_AGE, MIN_AGE,
};
pub use synth::{synthesize, BaseRates, Region, RegionProfile, SynthConfig};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Positive fraction of every label within each value of `attribute`.
///
/// Groups are ordered by name; labels follow [`LabelKey::all`].
pub fn base_rates(
    records: &[Record],
    attribute: &str,
    labels: &[LabelKey],
) -> Result<BTreeMap<String, BTreeMap<LabelKey, f64>>> {
    let mut counts: BTreeMap<String, (usize, Vec<usize>)> = BTreeMap::new();
    for r in records {
        let group = match r.sensitive.get(attribute) {
            Some(g) => g.clone(),
            None => match r.features.get(attribute) {
                Some(v) => v.to_string(),
                None => return Err(Error::Schema(format!("unknown attribute `{attribute}`"))),
            },
        };
        let set = r.labels()?;
        let entry = counts
            .entry(group)
            .or_insert_with(|| (0, vec![0; labels.len()]));
        entry.0 += 1;
        for (i, k) in labels.iter().enumerate() {
            entry.1[i] += usize::from(set.get(*k));
        }
    }
    Ok(counts
        .into_iter()
        .map(|(g, (n, pos))| {
            let rates = labels
                .iter()
                .zip(pos)
                .map(|(k, p)| (*k, p as f64 / n as f64))
                .collect();
            (g, rates)
        })
        .collect())
}
