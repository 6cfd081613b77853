//! Additive stumps: an L1 logistic model over stump indicators, read back as
//! one step-function contribution curve per original feature.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Penalty, TrainConfig};
use super::logistic::{fit_logistic, LogisticModel, LogisticOptions};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::featurize::{aggregate_contribution, expand_dataset, StumpBasis, StumpColumn, StumpKind};
use crate::sigmoid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContributionCurve {
    pub feature: String,
    /// `(value, contribution)` pairs covering every step of the curve.
    pub points: Vec<(f64, f64)>,
}

impl ContributionCurve {
    pub fn is_monotone_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    pub fn is_monotone_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdditiveStumpsModel {
    pub basis: StumpBasis,
    pub columns: Vec<StumpColumn>,
    pub model: LogisticModel,
    /// Original features with at least one nonzero stump.
    pub features_used: Vec<String>,
    pub curves: Vec<ContributionCurve>,
}

impl AdditiveStumpsModel {
    /// Log-odds for rows of a raw-feature dataset.
    pub fn decision(&self, data: &Dataset) -> Result<Vec<f64>> {
        let (stumps, _) = expand_dataset(data, &self.basis)?;
        self.model.decision(stumps.x.view())
    }

    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(self.decision(data)?.into_iter().map(sigmoid).collect())
    }
}

/// Original features touched by nonzero coefficients, in column order.
pub fn features_used(columns: &[StumpColumn], coefficients: &[f64]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    columns
        .iter()
        .zip(coefficients)
        .filter(|(c, &b)| b != 0.0 && seen.insert(c.feature.clone()))
        .map(|(c, _)| c.feature.clone())
        .collect()
}

fn curve(columns: &[StumpColumn], coefficients: &[f64], feature: &str) -> Result<ContributionCurve> {
    let mut values: Vec<f64> = Vec::new();
    for c in columns.iter().filter(|c| c.feature == feature) {
        match c.kind {
            StumpKind::Le(k) | StumpKind::Ge(k) => values.extend([k - 1.0, k, k + 1.0]),
            StumpKind::Passthrough => values.extend([0.0, 1.0]),
        }
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    let points = values
        .into_iter()
        .map(|v| Ok((v, aggregate_contribution(columns, coefficients, feature, v)?)))
        .collect::<Result<_>>()?;
    Ok(ContributionCurve {
        feature: feature.to_string(),
        points,
    })
}

/// Fits every C in `grid` and keeps the largest whose model touches at most
/// `config.max_original_features` original features.
pub fn fit_additive_stumps_expanded(
    stumps: &Dataset,
    columns: &[StumpColumn],
    grid: &[f64],
    config: &TrainConfig,
) -> Result<(LogisticModel, Vec<String>)> {
    if grid.is_empty() {
        return Err(Error::Config("empty C grid".into()));
    }
    if columns.len() != stumps.n_cols() {
        return Err(Error::Validation(format!(
            "{} stump columns but {} matrix columns",
            columns.len(),
            stumps.n_cols()
        )));
    }
    stumps.require_both_classes()?;
    let mut order: Vec<f64> = grid.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    order.dedup();
    let fits: Vec<Result<LogisticModel>> = order
        .par_iter()
        .map(|&c| fit_logistic(stumps, &LogisticOptions::from_config(config, Penalty::L1, c)))
        .collect();
    for fit in fits {
        let model = fit?;
        let used = features_used(columns, &model.coefficients);
        if used.len() <= config.max_original_features {
            log::info!("additive stumps: C={} touches {} features", model.c, used.len());
            return Ok((model, used));
        }
    }
    Err(Error::CapInfeasible {
        cap: config.max_original_features,
    })
}

pub fn fit_additive_stumps(data: &Dataset, basis: &StumpBasis, config: &TrainConfig) -> Result<AdditiveStumpsModel> {
    config.validate()?;
    let (stumps, columns) = expand_dataset(data, basis)?;
    let (model, used) = fit_additive_stumps_expanded(&stumps, &columns, &config.c_grid, config)?;
    let curves = used
        .iter()
        .map(|f| curve(&columns, &model.coefficients, f))
        .collect::<Result<_>>()?;
    Ok(AdditiveStumpsModel {
        basis: basis.clone(),
        columns,
        model,
        features_used: used,
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::{Direction, FeatureStumps};
    use ndarray::Array2;

    fn data() -> (Dataset, StumpBasis) {
        // y depends only on `a >= 2`; `b` is noise.
        let n = 200;
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::new();
        for i in 0..n {
            let a = (i % 4) as f64;
            let b = ((i * 7) % 5) as f64;
            x[[i, 0]] = a;
            x[[i, 1]] = b;
            y.push(a >= 2.0);
        }
        let d = Dataset::new(vec!["a".into(), "b".into()], x, y).unwrap();
        let basis = StumpBasis::new(
            vec![
                FeatureStumps {
                    feature: "a".into(),
                    direction: Direction::Increasing,
                    thresholds: vec![1.0, 2.0, 3.0],
                },
                FeatureStumps {
                    feature: "b".into(),
                    direction: Direction::Increasing,
                    thresholds: vec![1.0, 2.0, 3.0, 4.0],
                },
            ],
            vec![],
        )
        .unwrap();
        (d, basis)
    }

    #[test]
    fn single_predictive_stump_uses_one_feature() {
        let (d, basis) = data();
        let cfg = TrainConfig {
            c_grid: vec![0.05],
            ..TrainConfig::default()
        };
        let m = fit_additive_stumps(&d, &basis, &cfg).unwrap();
        assert_eq!(m.features_used, vec!["a".to_string()]);
        assert!(m.curves[0].is_monotone_increasing());
    }

    #[test]
    fn huge_penalty_is_intercept_only() {
        let (d, basis) = data();
        let cfg = TrainConfig {
            c_grid: vec![1e-9],
            ..TrainConfig::default()
        };
        let m = fit_additive_stumps(&d, &basis, &cfg).unwrap();
        assert!(m.features_used.is_empty());
        assert!(m.curves.is_empty());
    }

    #[test]
    fn cap_is_enforced() {
        let (d, basis) = data();
        let cfg = TrainConfig {
            c_grid: vec![100.0],
            max_original_features: 1,
            ..TrainConfig::default()
        };
        match fit_additive_stumps(&d, &basis, &cfg) {
            Ok(m) => assert!(m.features_used.len() <= 1),
            Err(e) => assert!(matches!(e, Error::CapInfeasible { cap: 1 })),
        }
    }
}
