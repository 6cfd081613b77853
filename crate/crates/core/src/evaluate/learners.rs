//! Adapters from the trainers to the cross-validation harness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use super::cv::{Learner, Predictor};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::featurize::{expand_dataset, StumpBasis, StumpColumn};
use crate::train::{
    fit_additive_stumps_expanded, fit_cart, fit_logistic, fit_riskslim_stumps, CartModel, LogisticModel,
    LogisticOptions, Penalty, RiskSlimModel, TrainConfig,
};
use crate::{sigmoid, Error as CrateError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    L1,
    L2,
    Stumps,
    Riskslim,
    Cart,
    /// Scores every row 0.5; a floor for comparisons.
    Constant,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::L1,
        ModelKind::L2,
        ModelKind::Stumps,
        ModelKind::Riskslim,
        ModelKind::Cart,
        ModelKind::Constant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::L1 => "l1",
            ModelKind::L2 => "l2",
            ModelKind::Stumps => "stumps",
            ModelKind::Riskslim => "riskslim",
            ModelKind::Cart => "cart",
            ModelKind::Constant => "constant",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = CrateError;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model `{s}` (expected l1, l2, stumps, riskslim, cart or constant)")))
    }
}

fn param_f64(params: &Json, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Json::as_f64)
        .ok_or_else(|| Error::Config(format!("missing numeric parameter `{key}` in {params}")))
}

fn align(data: &Dataset, names: &[String]) -> Result<Dataset> {
    if data.feature_names == names {
        Ok(data.clone())
    } else {
        data.select_columns(names)
    }
}

impl Predictor for LogisticModel {
    fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        let d = align(data, &self.feature_names)?;
        self.predict_proba(d.x.view())
    }
}

impl Predictor for CartModel {
    fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.predict_proba(data)
    }
}

impl Predictor for RiskSlimModel {
    fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.predict_proba(data)
    }
}

/// A fitted model of any kind, ready to score or serialize.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    L1(LogisticModel),
    L2(LogisticModel),
    Stumps {
        basis: StumpBasis,
        columns: Vec<StumpColumn>,
        model: LogisticModel,
    },
    Riskslim(RiskSlimModel),
    Cart(CartModel),
    /// Scores every row 0.5; a floor for comparisons.
    Constant,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::L1(_) => ModelKind::L1,
            TrainedModel::L2(_) => ModelKind::L2,
            TrainedModel::Stumps { .. } => ModelKind::Stumps,
            TrainedModel::Riskslim(_) => ModelKind::Riskslim,
            TrainedModel::Cart(_) => ModelKind::Cart,
            TrainedModel::Constant => ModelKind::Constant,
        }
    }

    /// Raw features the model reads.
    pub fn input_features(&self) -> Vec<String> {
        match self {
            TrainedModel::L1(m) | TrainedModel::L2(m) => m.feature_names.clone(),
            TrainedModel::Stumps { basis, .. } => basis.source_features(),
            TrainedModel::Riskslim(m) => {
                let mut names: Vec<String> = m.table.rows.iter().map(|r| r.condition.feature.clone()).collect();
                names.sort();
                names.dedup();
                names
            }
            TrainedModel::Cart(m) => m.feature_names.clone(),
            TrainedModel::Constant => Vec::new(),
        }
    }

    /// Human-readable rendering: coefficients, the scoring table or the tree.
    pub fn describe(&self) -> Result<String> {
        Ok(match self {
            TrainedModel::L1(m) | TrainedModel::L2(m) => {
                let mut buf = Vec::new();
                m.write_coefficients(&mut buf)?;
                String::from_utf8_lossy(&buf).into_owned()
            }
            TrainedModel::Stumps { columns, model, .. } => {
                let mut out = format!("(intercept),{}\n", model.intercept);
                for (c, w) in columns.iter().zip(&model.coefficients) {
                    if *w != 0.0 {
                        out.push_str(&format!("{},{}\n", c.name, w));
                    }
                }
                out
            }
            TrainedModel::Riskslim(m) => m.table.to_text(),
            TrainedModel::Cart(m) => m.dump(),
            TrainedModel::Constant => "constant 0.5\n".into(),
        })
    }
}

impl Predictor for TrainedModel {
    fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        match self {
            TrainedModel::L1(m) | TrainedModel::L2(m) => m.predict(data),
            TrainedModel::Stumps { basis, model, .. } => {
                let (stumps, _) = expand_dataset(data, basis)?;
                Ok(model.decision(stumps.x.view())?.into_iter().map(sigmoid).collect())
            }
            TrainedModel::Riskslim(m) => m.predict_proba(data),
            TrainedModel::Cart(m) => m.predict_proba(data),
            TrainedModel::Constant => Ok(vec![0.5; data.n_rows()]),
        }
    }
}

/// A trainer bound to its configuration.
#[derive(Clone, Debug)]
pub struct ModelLearner {
    pub kind: ModelKind,
    pub config: TrainConfig,
    /// Stump basis for stumps and riskslim; derived from each training set when absent.
    pub basis: Option<StumpBasis>,
}

impl ModelLearner {
    pub fn new(kind: ModelKind, config: TrainConfig) -> Self {
        ModelLearner {
            kind,
            config,
            basis: None,
        }
    }

    pub fn with_basis(mut self, basis: StumpBasis) -> Self {
        self.basis = Some(basis);
        self
    }

    fn basis_for(&self, train: &Dataset) -> Result<StumpBasis> {
        match &self.basis {
            Some(b) => Ok(b.clone()),
            None => StumpBasis::default_for(train, &train.feature_names),
        }
    }
}

impl Learner for ModelLearner {
    fn name(&self) -> String {
        self.kind.to_string()
    }

    fn grid(&self) -> Vec<Json> {
        match self.kind {
            ModelKind::L1 | ModelKind::L2 | ModelKind::Stumps => {
                self.config.c_grid.iter().map(|c| json!({ "C": c })).collect()
            }
            ModelKind::Cart => self
                .config
                .max_depth_grid
                .iter()
                .map(|d| json!({ "max_depth": d }))
                .collect(),
            ModelKind::Riskslim => vec![json!({ "max_selected_stumps": self.config.max_selected_stumps })],
            ModelKind::Constant => vec![Json::Null],
        }
    }

    fn fit(&self, train: &Dataset, params: &Json) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(self.train(train, params)?))
    }
}

impl ModelLearner {
    /// Fits one model at the given grid setting.
    pub fn train(&self, train: &Dataset, params: &Json) -> Result<TrainedModel> {
        match self.kind {
            ModelKind::L1 | ModelKind::L2 => {
                let penalty = if self.kind == ModelKind::L1 { Penalty::L1 } else { Penalty::L2 };
                let opts = LogisticOptions::from_config(&self.config, penalty, param_f64(params, "C")?).standardized(true);
                let model = fit_logistic(train, &opts)?;
                Ok(if self.kind == ModelKind::L1 { TrainedModel::L1(model) } else { TrainedModel::L2(model) })
            }
            ModelKind::Stumps => {
                // The setting is an upper limit: smaller grid values stand in
                // when the limit breaks the feature cap.
                let c = param_f64(params, "C")?;
                let grid: Vec<f64> = self.config.c_grid.iter().copied().filter(|&g| g <= c).collect();
                let basis = self.basis_for(train)?;
                let (stumps, columns) = expand_dataset(train, &basis)?;
                let (model, _) = fit_additive_stumps_expanded(&stumps, &columns, &grid, &self.config)?;
                Ok(TrainedModel::Stumps { basis, columns, model })
            }
            ModelKind::Riskslim => {
                let mut config = self.config.clone();
                config.max_selected_stumps = param_f64(params, "max_selected_stumps")? as usize;
                let basis = self.basis_for(train)?;
                let (stumps, columns) = expand_dataset(train, &basis)?;
                Ok(TrainedModel::Riskslim(fit_riskslim_stumps(&stumps, &columns, &config)?))
            }
            ModelKind::Cart => {
                let depth = param_f64(params, "max_depth")? as usize;
                Ok(TrainedModel::Cart(fit_cart(train, depth, self.config.min_impurity_decrease)?))
            }
            ModelKind::Constant => {
                train.require_both_classes()?;
                Ok(TrainedModel::Constant)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{nested_cv, CvOptions};
    use ndarray::Array2;

    fn data() -> Dataset {
        let n = 200;
        let x = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { (i % 10) as f64 } else { ((i * 3) % 7) as f64 });
        let y = (0..n).map(|i| (i % 10) as f64 + ((i * 13) % 5) as f64 > 8.0).collect();
        Dataset::new(vec!["a".into(), "b".into()], x, y).unwrap()
    }

    #[test]
    fn parses_kinds() {
        assert_eq!("cart".parse::<ModelKind>().unwrap(), ModelKind::Cart);
        assert!("svm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn every_kind_cross_validates() {
        let config = TrainConfig {
            c_grid: vec![0.01, 1.0],
            max_depth_grid: vec![2, 3],
            max_nodes: 2_000,
            ..TrainConfig::default()
        };
        for kind in ModelKind::ALL {
            let r = nested_cv(&data(), &ModelLearner::new(kind, config.clone()), &CvOptions::default()).unwrap();
            assert_eq!(r.folds.len(), 5, "{kind}");
            if kind != ModelKind::Constant {
                assert!(r.mean_auc > 0.7, "{kind}: {}", r.mean_auc);
            }
        }
    }

    #[test]
    fn trained_models_round_trip_through_json() {
        let config = TrainConfig {
            c_grid: vec![0.1],
            max_depth_grid: vec![2],
            max_nodes: 2_000,
            ..TrainConfig::default()
        };
        let d = data();
        for kind in ModelKind::ALL {
            let learner = ModelLearner::new(kind, config.clone());
            let model = learner.train(&d, &learner.grid()[0]).unwrap();
            assert_eq!(model.kind(), kind);
            let back: TrainedModel = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
            assert_eq!(back.predict(&d).unwrap(), model.predict(&d).unwrap(), "{kind}");
            assert!(!model.describe().unwrap().is_empty());
        }
    }
}
