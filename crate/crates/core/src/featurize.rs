//! Binary stump expansion of numeric features.
//!
//! A decreasing stump at threshold `k` is 1 when the value is `<= k`; an
//! increasing stump is 1 when the value is `>= k`. Binary features pass
//! through unchanged.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Record};
use crate::error::{Error, Result};

/// Thresholds used for age features unless overridden.
pub const AGE_THRESHOLDS: std::ops::RangeInclusive<i32> = 18..=60;
/// Upper bound on the default increasing grid for count features.
pub const MAX_COUNT_THRESHOLD: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "increasing" | "inc" => Ok(Direction::Increasing),
            "decreasing" | "dec" => Ok(Direction::Decreasing),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Increasing => "increasing",
            Direction::Decreasing => "decreasing",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStumps {
    pub feature: String,
    pub direction: Direction,
    pub thresholds: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StumpKind {
    Le(f64),
    Ge(f64),
    Passthrough,
}

/// One column of the expanded matrix and the feature it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StumpColumn {
    pub name: String,
    pub feature: String,
    pub kind: StumpKind,
}

impl StumpColumn {
    pub fn fires(&self, value: f64) -> bool {
        match self.kind {
            StumpKind::Le(k) => value <= k,
            StumpKind::Ge(k) => value >= k,
            StumpKind::Passthrough => value != 0.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StumpBasis {
    pub features: Vec<FeatureStumps>,
    pub passthrough: Vec<String>,
}

impl StumpBasis {
    pub fn new(features: Vec<FeatureStumps>, passthrough: Vec<String>) -> Result<Self> {
        let basis = StumpBasis {
            features,
            passthrough,
        };
        basis.validate()?;
        Ok(basis)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.features {
            if !seen.insert(f.feature.as_str()) {
                return Err(Error::Validation(format!("feature `{}` listed twice", f.feature)));
            }
            if f.thresholds.iter().any(|t| !t.is_finite()) {
                return Err(Error::Validation(format!("non-finite threshold for `{}`", f.feature)));
            }
            if f.thresholds.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Validation(format!(
                    "thresholds for `{}` are not strictly increasing",
                    f.feature
                )));
            }
        }
        for p in &self.passthrough {
            if !seen.insert(p.as_str()) {
                return Err(Error::Validation(format!("feature `{p}` listed twice")));
            }
        }
        Ok(())
    }

    /// Data-driven default basis for `features`.
    ///
    /// Age features get decreasing stumps at 18..=60. Features whose observed
    /// values are all 0/1 pass through. Other features get increasing stumps
    /// at `1..=min(max observed, 10)`, dropping thresholds whose column would
    /// be constant.
    pub fn default_for(data: &Dataset, features: &[String]) -> Result<Self> {
        let mut out = Vec::new();
        let mut passthrough = Vec::new();
        for name in features {
            let j = data
                .column_index(name)
                .ok_or_else(|| Error::Schema(format!("missing feature `{name}`")))?;
            let col = data.x.column(j);
            if name.starts_with("age") {
                out.push(FeatureStumps {
                    feature: name.clone(),
                    direction: Direction::Decreasing,
                    thresholds: AGE_THRESHOLDS.map(f64::from).collect(),
                });
                continue;
            }
            if col.iter().all(|&v| v == 0.0 || v == 1.0) {
                passthrough.push(name.clone());
                continue;
            }
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let top = max.min(MAX_COUNT_THRESHOLD).floor() as i64;
            let thresholds: Vec<f64> = (1..=top)
                .map(|k| k as f64)
                .filter(|&k| k > min && k <= max)
                .collect();
            if !thresholds.is_empty() {
                out.push(FeatureStumps {
                    feature: name.clone(),
                    direction: Direction::Increasing,
                    thresholds,
                });
            }
        }
        StumpBasis::new(out, passthrough)
    }

    pub fn columns(&self) -> Vec<StumpColumn> {
        let mut cols = Vec::new();
        for f in &self.features {
            for &k in &f.thresholds {
                let (name, kind) = match f.direction {
                    Direction::Decreasing => (format!("{}<={}", f.feature, k), StumpKind::Le(k)),
                    Direction::Increasing => (format!("{}>={}", f.feature, k), StumpKind::Ge(k)),
                };
                cols.push(StumpColumn {
                    name,
                    feature: f.feature.clone(),
                    kind,
                });
            }
        }
        for p in &self.passthrough {
            cols.push(StumpColumn {
                name: p.clone(),
                feature: p.clone(),
                kind: StumpKind::Passthrough,
            });
        }
        cols
    }

    /// Names of every original feature the basis reads.
    pub fn source_features(&self) -> Vec<String> {
        self.features
            .iter()
            .map(|f| f.feature.clone())
            .chain(self.passthrough.iter().cloned())
            .collect()
    }

    /// `feature direction t1,t2,...` per line; `feature binary` for
    /// pass-through features.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.features {
            let ts: Vec<String> = f.thresholds.iter().map(|t| t.to_string()).collect();
            out.push_str(&format!("{} {} {}\n", f.feature, f.direction, ts.join(",")));
        }
        for p in &self.passthrough {
            out.push_str(&format!("{p} binary\n"));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut features = Vec::new();
        let mut passthrough = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                [name, "binary"] => passthrough.push(name.to_string()),
                [name, dir, list] => {
                    let direction: Direction = dir.parse().map_err(err)?;
                    let thresholds = list
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<f64>().map_err(|_| err(format!("bad threshold `{s}`"))))
                        .collect::<Result<Vec<_>>>()?;
                    features.push(FeatureStumps {
                        feature: name.to_string(),
                        direction,
                        thresholds,
                    });
                }
                _ => return Err(err("expected `feature direction t1,t2,...` or `feature binary`".into())),
            }
        }
        StumpBasis::new(features, passthrough)
    }
}

/// Expanded 0/1 matrix with its column provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct StumpMatrix {
    pub columns: Vec<StumpColumn>,
    pub values: Array2<f64>,
}

impl StumpMatrix {
    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Writes `id,<stump columns>` rows.
    pub fn write_csv<W: Write>(&self, writer: W, ids: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["person_id".to_string()];
        header.extend(self.column_names());
        w.write_record(&header)?;
        for (i, row) in self.values.rows().into_iter().enumerate() {
            let mut out = vec![ids.get(i).cloned().unwrap_or_else(|| i.to_string())];
            out.extend(row.iter().map(|v| (*v as u8).to_string()));
            w.write_record(&out)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

fn expand_rows<F>(n: usize, basis: &StumpBasis, value: F) -> Result<StumpMatrix>
where
    F: Fn(usize, &str) -> Result<f64> + Sync,
{
    basis.validate()?;
    let columns = basis.columns();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            columns
                .iter()
                .map(|c| Ok(f64::from(u8::from(c.fires(value(i, &c.feature)?)))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut values = Array2::zeros((n, columns.len()));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    Ok(StumpMatrix { columns, values })
}

/// Expands records; every basis feature must be present and numeric.
pub fn expand(records: &[Record], basis: &StumpBasis) -> Result<StumpMatrix> {
    expand_rows(records.len(), basis, |i, f| records[i].numeric(f))
}

/// Expands a numeric dataset into a stump dataset with the same targets.
pub fn expand_dataset(data: &Dataset, basis: &StumpBasis) -> Result<(Dataset, Vec<StumpColumn>)> {
    let idx: std::collections::HashMap<&str, usize> = basis
        .source_features()
        .iter()
        .map(|f| {
            data.column_index(f)
                .map(|j| (data.feature_names[j].as_str(), j))
                .ok_or_else(|| Error::Schema(format!("missing feature `{f}`")))
        })
        .collect::<Result<_>>()?;
    let m = expand_rows(data.n_rows(), basis, |i, f| Ok(data.x[[i, idx[f]]]))?;
    let names = m.column_names();
    Ok((Dataset::new(names, m.values, data.y.clone())?, m.columns))
}

/// Summed contribution of one feature's stumps at `value`.
pub fn aggregate_contribution(
    columns: &[StumpColumn],
    coefficients: &[f64],
    feature: &str,
    value: f64,
) -> Result<f64> {
    if columns.len() != coefficients.len() {
        return Err(Error::Validation(format!(
            "{} columns but {} coefficients",
            columns.len(),
            coefficients.len()
        )));
    }
    let mut found = false;
    let mut total = 0.0;
    for (c, w) in columns.iter().zip(coefficients) {
        if c.feature == feature {
            found = true;
            if c.fires(value) {
                total += w;
            }
        }
    }
    if !found {
        return Err(Error::Schema(format!("no stumps for feature `{feature}`")));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(dir: Direction, ts: &[f64]) -> StumpBasis {
        StumpBasis::new(
            vec![FeatureStumps {
                feature: "x".into(),
                direction: dir,
                thresholds: ts.to_vec(),
            }],
            vec![],
        )
        .unwrap()
    }

    fn row(b: &StumpBasis, v: f64) -> Vec<f64> {
        let m = expand(&[Record::new("r").with("x", v)], b).unwrap();
        m.values.row(0).to_vec()
    }

    #[test]
    fn decreasing_example() {
        assert_eq!(row(&basis(Direction::Decreasing, &[18.0, 19.0, 20.0]), 19.0), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn increasing_example() {
        assert_eq!(row(&basis(Direction::Increasing, &[1.0, 2.0, 3.0]), 2.0), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn value_above_every_age_threshold() {
        let ts: Vec<f64> = AGE_THRESHOLDS.map(f64::from).collect();
        let r = row(&basis(Direction::Decreasing, &ts), 61.0);
        assert_eq!(r.len(), 43);
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn column_names() {
        let b = basis(Direction::Decreasing, &[18.0, 19.5]);
        let names: Vec<String> = b.columns().into_iter().map(|c| c.name).collect();
        assert_eq!(names, vec!["x<=18", "x<=19.5"]);
    }

    #[test]
    fn missing_or_categorical_feature() {
        let b = basis(Direction::Increasing, &[1.0]);
        assert!(matches!(expand(&[Record::new("r")], &b), Err(Error::Schema(_))));
        let r = Record::new("r").with("x", crate::data::Value::Cat("a".into()));
        assert!(matches!(expand(&[r], &b), Err(Error::Type { .. })));
    }

    #[test]
    fn rejects_unsorted_thresholds() {
        let bad = StumpBasis::new(
            vec![FeatureStumps {
                feature: "x".into(),
                direction: Direction::Increasing,
                thresholds: vec![2.0, 2.0],
            }],
            vec![],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn contribution_examples() {
        let cols = basis(Direction::Increasing, &[1.0]).columns();
        assert_eq!(aggregate_contribution(&cols, &[0.6762], "x", 3.0).unwrap(), 0.6762);
        assert_eq!(aggregate_contribution(&cols, &[0.6762], "x", 0.0).unwrap(), 0.0);
        let cols = basis(Direction::Increasing, &[2.0, 3.0]).columns();
        let v = aggregate_contribution(&cols, &[0.6762, 0.3489], "x", 3.0).unwrap();
        assert!((v - 1.0251).abs() < 1e-12);
        assert!(aggregate_contribution(&cols, &[0.6762, 0.3489], "y", 3.0).is_err());
    }

    #[test]
    fn basis_text_round_trip() {
        let b = StumpBasis::new(
            vec![
                FeatureStumps {
                    feature: "age_at_current_charge".into(),
                    direction: Direction::Decreasing,
                    thresholds: vec![20.0, 21.0, 24.5],
                },
                FeatureStumps {
                    feature: "p_arrest".into(),
                    direction: Direction::Increasing,
                    thresholds: vec![2.0, 3.0],
                },
            ],
            vec!["current_violence".into()],
        )
        .unwrap();
        assert_eq!(StumpBasis::parse_text(&b.to_text()).unwrap(), b);
        assert!(matches!(
            StumpBasis::parse_text("x sideways 1,2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn default_basis_shapes() {
        let x = ndarray::array![[19.0, 0.0, 1.0], [45.0, 4.0, 0.0], [30.0, 12.0, 1.0]];
        let data = Dataset::new(
            vec!["age_at_current_charge".into(), "p_arrest".into(), "flag".into()],
            x,
            vec![true, false, true],
        )
        .unwrap();
        let b = StumpBasis::default_for(&data, &data.feature_names).unwrap();
        assert_eq!(b.features[0].direction, Direction::Decreasing);
        assert_eq!(b.features[0].thresholds.len(), 43);
        assert_eq!(b.features[1].thresholds, (1..=10).map(f64::from).collect::<Vec<_>>());
        assert_eq!(b.passthrough, vec!["flag".to_string()]);
        let (stumps, cols) = expand_dataset(&data, &b).unwrap();
        assert_eq!(stumps.n_cols(), cols.len());
        assert_eq!(stumps.x[[2, stumps.n_cols() - 1]], 1.0);
    }
}
