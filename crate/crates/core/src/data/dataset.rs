use ndarray::{Array2, Axis};

use super::labels::LabelKey;
use super::record::Record;
use crate::error::{Error, Result};

/// Dense numeric design matrix with binary targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub x: Array2<f64>,
    pub y: Vec<bool>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, x: Array2<f64>, y: Vec<bool>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Validation(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if x.ncols() != feature_names.len() {
            return Err(Error::Validation(format!(
                "{} columns but {} names",
                x.ncols(),
                feature_names.len()
            )));
        }
        if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
            let row = bad / x.ncols().max(1);
            return Err(Error::NonFinite(format!("design matrix row {row}")));
        }
        Ok(Dataset {
            feature_names,
            x,
            y,
        })
    }

    /// Builds the matrix for `features` and the target `label`.
    pub fn from_records(records: &[Record], features: &[String], label: LabelKey) -> Result<Self> {
        let mut x = Array2::zeros((records.len(), features.len()));
        let mut y = Vec::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            for (j, f) in features.iter().enumerate() {
                x[[i, j]] = r.numeric(f)?;
            }
            y.push(r.labels()?.get(label));
        }
        Dataset::new(features.to_vec(), x, y)
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_positive(&self) -> usize {
        self.y.iter().filter(|&&v| v).count()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: self.x.select(Axis(0), rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn select_columns(&self, names: &[String]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::Schema(format!("dataset lacks column `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            feature_names: names.to_vec(),
            x: self.x.select(Axis(1), &idx),
            y: self.y.clone(),
        })
    }

    /// Fails unless both classes are present.
    pub fn require_both_classes(&self) -> Result<()> {
        let pos = self.n_positive();
        if pos == 0 || pos == self.n_rows() {
            return Err(Error::DegenerateLabels(format!(
                "{} rows, {} positive",
                self.n_rows(),
                pos
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::labels::{build_labels, ChargeType, Event, Horizon, Level};

    #[test]
    fn builds_matrix_from_records() {
        let mut a = Record::new("a").with("x", 1.0).with("z", 3.0);
        a.labels = Some(build_labels(&[Event::new(5, &[], Level::Other, true)], true));
        let mut b = Record::new("b").with("x", 2.0).with("z", 4.0);
        b.labels = Some(build_labels(&[], true));
        let key = LabelKey::new(ChargeType::General, Horizon::TwoYear);
        let ds = Dataset::from_records(&[a, b], &["z".into(), "x".into()], key).unwrap();
        assert_eq!(ds.x[[0, 0]], 3.0);
        assert_eq!(ds.x[[1, 1]], 2.0);
        assert_eq!(ds.y, vec![true, false]);
        ds.require_both_classes().unwrap();
        let sub = ds.select_rows(&[1]);
        assert!(sub.require_both_classes().is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let x = Array2::from_elem((1, 1), f64::NAN);
        assert!(matches!(
            Dataset::new(vec!["x".into()], x, vec![true]),
            Err(Error::NonFinite(_))
        ));
    }
}
