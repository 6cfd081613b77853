use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{DEFAULT_COEF_RANGE, OFFSET_RANGE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    None,
    Balanced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L1,
    L2,
}

/// Training and search settings, read from a flat TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Inverse penalty strengths searched by cross-validation.
    pub c_grid: Vec<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub class_weight: ClassWeight,
    pub max_depth_grid: Vec<usize>,
    pub min_impurity_decrease: f64,
    pub coef_min: i64,
    pub coef_max: i64,
    pub offset_min: i64,
    pub offset_max: i64,
    pub l0_penalty: f64,
    pub time_limit_secs: f64,
    /// Hard cap on explored nodes, so runs stay reproducible.
    pub max_nodes: u64,
    pub target_gap: f64,
    pub max_selected_stumps: usize,
    /// Searches over at most this many stumps run to proven optimality.
    pub exact_max_stumps: usize,
    pub max_original_features: usize,
    /// Penalties tried when screening stumps for the integer search.
    pub screen_c_grid: Vec<f64>,
    pub folds: usize,
    pub stratify: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c_grid: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            max_iter: 1000,
            tol: 1e-6,
            seed: 0,
            class_weight: ClassWeight::Balanced,
            max_depth_grid: vec![5, 6, 7, 8, 9, 10],
            min_impurity_decrease: 0.0,
            coef_min: DEFAULT_COEF_RANGE.0,
            coef_max: DEFAULT_COEF_RANGE.1,
            offset_min: OFFSET_RANGE.0,
            offset_max: OFFSET_RANGE.1,
            l0_penalty: 1e-6,
            time_limit_secs: 1000.0,
            max_nodes: 200_000,
            target_gap: 0.05,
            max_selected_stumps: 20,
            exact_max_stumps: 12,
            max_original_features: 15,
            screen_c_grid: (0..=24).map(|i| 10f64.powf(-5.0 + 5.0 * i as f64 / 24.0)).collect(),
            folds: 5,
            stratify: false,
        }
    }
}

impl TrainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.c_grid.is_empty() || self.screen_c_grid.is_empty() || self.max_depth_grid.is_empty() {
            return bad("penalty and depth grids must be non-empty".into());
        }
        if self
            .c_grid
            .iter()
            .chain(&self.screen_c_grid)
            .any(|c| !(c.is_finite() && *c > 0.0))
        {
            return bad("every C must be finite and positive".into());
        }
        if self.max_depth_grid.contains(&0) {
            return bad("max depth must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if self.coef_min > self.coef_max {
            return bad(format!("empty coefficient range [{}, {}]", self.coef_min, self.coef_max));
        }
        if self.offset_min > self.offset_max {
            return bad(format!("empty offset range [{}, {}]", self.offset_min, self.offset_max));
        }
        if self.offset_min < OFFSET_RANGE.0 || self.offset_max > OFFSET_RANGE.1 {
            return bad(format!(
                "offset range must lie within [{}, {}]",
                OFFSET_RANGE.0, OFFSET_RANGE.1
            ));
        }
        if !(self.l0_penalty >= 0.0 && self.l0_penalty.is_finite()) {
            return bad("l0_penalty must be finite and non-negative".into());
        }
        if !(self.min_impurity_decrease >= 0.0) {
            return bad("min_impurity_decrease must be non-negative".into());
        }
        if !(self.time_limit_secs > 0.0) {
            return bad("time_limit_secs must be positive".into());
        }
        if !(0.0..1.0).contains(&self.target_gap) {
            return bad("target_gap must lie in [0, 1)".into());
        }
        if self.max_selected_stumps == 0 || self.max_selected_stumps > 32 {
            return bad("max_selected_stumps must lie in 1..=32".into());
        }
        if self.max_original_features == 0 {
            return bad("max_original_features must be positive".into());
        }
        if self.folds < 2 {
            return bad("folds must be at least 2".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert_eq!(c.l0_penalty, 1e-6);
        assert_eq!(c.target_gap, 0.05);
        assert_eq!(c.max_selected_stumps, 20);
    }

    #[test]
    fn parses_partial_file() {
        let c = TrainConfig::from_toml_str("c_grid = [0.5]\nseed = 7\nclass_weight = \"none\"\n").unwrap();
        assert_eq!(c.c_grid, vec![0.5]);
        assert_eq!(c.seed, 7);
        assert_eq!(c.class_weight, ClassWeight::None);
        assert_eq!(c.folds, 5);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(TrainConfig::from_toml_str("c_grid = []").is_err());
        assert!(TrainConfig::from_toml_str("tol = 0.0").is_err());
        assert!(TrainConfig::from_toml_str("coef_min = 3\ncoef_max = 2").is_err());
        assert!(matches!(TrainConfig::from_toml_str("bogus = 1"), Err(Error::Config(_))));
    }

    #[test]
    fn toml_round_trip() {
        let c = TrainConfig::default();
        assert_eq!(TrainConfig::from_toml_str(&c.to_toml()).unwrap(), c);
    }
}
