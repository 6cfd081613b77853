//! Nested cross-validation and the cross-region protocol.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::auc::auc;
use super::folds::{fold_indices, splits, Split};
use crate::data::Dataset;
use crate::error::{Error, Result};

pub trait Predictor: Send + Sync {
    /// One score per row; higher means more likely positive.
    fn predict(&self, data: &Dataset) -> Result<Vec<f64>>;
}

pub trait Learner: Send + Sync {
    fn name(&self) -> String;
    /// Hyperparameter settings searched by the inner loop, in preference order.
    fn grid(&self) -> Vec<Json>;
    fn fit(&self, train: &Dataset, params: &Json) -> Result<Box<dyn Predictor>>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
    pub stratify: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            folds: 5,
            inner_folds: 5,
            seed: 0,
            stratify: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_auc: f64,
    pub params: Json,
    /// Mean inner validation AUC of the chosen setting; absent when the grid had one entry.
    pub validation_auc: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFold {
    pub fold: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutPrediction {
    pub index: usize,
    pub fold: usize,
    pub score: f64,
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CVResult {
    pub model: String,
    pub label: Option<String>,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    pub skipped: Vec<SkippedFold>,
    pub mean_auc: f64,
    /// Population standard deviation over completed folds.
    pub std_auc: f64,
    /// Out-of-fold scores pooled over completed folds, by row index.
    pub holdout: Vec<HoldoutPrediction>,
}

impl CVResult {
    pub fn test_aucs(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.test_auc).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XRegionResult {
    pub model: String,
    pub label: Option<String>,
    pub seed: u64,
    pub shared_features: Vec<String>,
    pub params: Vec<Json>,
    /// AUC of each rotation's model on the whole target set.
    pub target_auc: Vec<f64>,
    /// AUC of the same model on its source holdout fold.
    pub source_auc: Vec<f64>,
    pub skipped: Vec<SkippedFold>,
    pub mean_target_auc: f64,
    pub mean_source_auc: f64,
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Errors that mark a fold or grid point unusable rather than fatal.
fn is_skippable(e: &Error) -> bool {
    matches!(e, Error::DegenerateLabels(_) | Error::CapInfeasible { .. })
}

fn fit_and_score(learner: &dyn Learner, train: &Dataset, test: &Dataset, params: &Json) -> Result<(f64, Vec<f64>)> {
    train.require_both_classes()?;
    test.require_both_classes()?;
    let model = learner.fit(train, params)?;
    let scores = model.predict(test)?;
    Ok((auc(&scores, &test.y)?, scores))
}

/// Inner grid search on `train`; returns the winning setting and its mean validation AUC.
fn select_params(
    learner: &dyn Learner,
    train: &Dataset,
    grid: &[Json],
    opts: &CvOptions,
    seed: u64,
) -> Result<(Json, Option<f64>)> {
    if grid.len() == 1 {
        return Ok((grid[0].clone(), None));
    }
    let labels = opts.stratify.then_some(train.y.as_slice());
    let inner = splits(&fold_indices(train.n_rows(), opts.inner_folds, seed, labels)?);
    let means = grid
        .par_iter()
        .map(|params| {
            let mut aucs = Vec::new();
            for s in &inner {
                match fit_and_score(learner, &train.select_rows(&s.train), &train.select_rows(&s.test), params) {
                    Ok((a, _)) => aucs.push(a),
                    Err(e) if is_skippable(&e) => log::debug!("inner fold skipped for {params}: {e}"),
                    Err(e) => return Err(e),
                }
            }
            Ok(mean_std(&aucs).0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut best: Option<(usize, f64)> = None;
    for (i, &m) in means.iter().enumerate() {
        if m.is_finite() && best.map_or(true, |(_, b)| m > b) {
            best = Some((i, m));
        }
    }
    match best {
        Some((i, m)) => Ok((grid[i].clone(), Some(m))),
        None => Err(Error::DegenerateLabels("no grid setting produced a usable inner fold".into())),
    }
}

/// Grid search over `opts.inner_folds` folds of the whole of `data`.
///
/// Used to pick the setting for a final model after cross-validation.
pub fn tune(data: &Dataset, learner: &dyn Learner, opts: &CvOptions) -> Result<(Json, Option<f64>)> {
    let grid = learner.grid();
    if grid.is_empty() {
        return Err(Error::Config(format!("{} has an empty grid", learner.name())));
    }
    select_params(learner, data, &grid, opts, opts.seed)
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(fold as u64 + 1)
}

fn outer_splits(data: &Dataset, opts: &CvOptions) -> Result<Vec<Split>> {
    let labels = opts.stratify.then_some(data.y.as_slice());
    Ok(splits(&fold_indices(data.n_rows(), opts.folds, opts.seed, labels)?))
}

enum Outcome<T> {
    Done(T),
    Skipped(SkippedFold),
}

pub fn nested_cv(data: &Dataset, learner: &dyn Learner, opts: &CvOptions) -> Result<CVResult> {
    let grid = learner.grid();
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let outer = outer_splits(data, opts)?;
    let outcomes = outer
        .par_iter()
        .enumerate()
        .map(|(fold, split)| {
            let train = data.select_rows(&split.train);
            let test = data.select_rows(&split.test);
            let run = || -> Result<(FoldResult, Vec<f64>)> {
                train.require_both_classes()?;
                test.require_both_classes()?;
                let (params, validation_auc) = select_params(learner, &train, &grid, opts, fold_seed(opts.seed, fold))?;
                let (test_auc, scores) = fit_and_score(learner, &train, &test, &params)?;
                Ok((
                    FoldResult {
                        fold,
                        test_auc,
                        params,
                        validation_auc,
                        n_train: train.n_rows(),
                        n_test: test.n_rows(),
                    },
                    scores,
                ))
            };
            match run() {
                Ok(r) => Ok(Outcome::Done(r)),
                Err(e) if is_skippable(&e) => {
                    log::warn!("fold {fold} skipped: {e}");
                    Ok(Outcome::Skipped(SkippedFold {
                        fold,
                        reason: e.to_string(),
                    }))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut folds = Vec::new();
    let mut skipped = Vec::new();
    let mut holdout = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Done((r, scores)) => {
                for (&i, s) in outer[r.fold].test.iter().zip(scores) {
                    holdout.push(HoldoutPrediction {
                        index: i,
                        fold: r.fold,
                        score: s,
                        label: data.y[i],
                    });
                }
                folds.push(r);
            }
            Outcome::Skipped(s) => skipped.push(s),
        }
    }
    holdout.sort_by_key(|h| h.index);
    let (mean_auc, std_auc) = mean_std(&folds.iter().map(|f| f.test_auc).collect::<Vec<_>>());
    Ok(CVResult {
        model: learner.name(),
        label: None,
        seed: opts.seed,
        folds,
        skipped,
        mean_auc,
        std_auc,
        holdout,
    })
}

/// Features present in both datasets, in source order.
pub fn shared_features(source: &Dataset, target: &Dataset) -> Vec<String> {
    source
        .feature_names
        .iter()
        .filter(|f| target.column_index(f).is_some())
        .cloned()
        .collect()
}

pub fn cross_region(source: &Dataset, target: &Dataset, learner: &dyn Learner, opts: &CvOptions) -> Result<XRegionResult> {
    let shared = shared_features(source, target);
    if shared.is_empty() {
        return Err(Error::Schema("source and target share no features".into()));
    }
    let grid = learner.grid();
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let source = source.select_columns(&shared)?;
    let target = target.select_columns(&shared)?;
    target.require_both_classes()?;
    let outer = outer_splits(&source, opts)?;
    let outcomes = outer
        .par_iter()
        .enumerate()
        .map(|(fold, split)| {
            let train = source.select_rows(&split.train);
            let holdout = source.select_rows(&split.test);
            let run = || -> Result<(Json, f64, f64)> {
                train.require_both_classes()?;
                holdout.require_both_classes()?;
                let (params, _) = select_params(learner, &train, &grid, opts, fold_seed(opts.seed, fold))?;
                let model = learner.fit(&train, &params)?;
                let t = auc(&model.predict(&target)?, &target.y)?;
                let s = auc(&model.predict(&holdout)?, &holdout.y)?;
                Ok((params, t, s))
            };
            match run() {
                Ok(r) => Ok(Outcome::Done(r)),
                Err(e) if is_skippable(&e) => Ok(Outcome::Skipped(SkippedFold {
                    fold,
                    reason: e.to_string(),
                })),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = XRegionResult {
        model: learner.name(),
        label: None,
        seed: opts.seed,
        shared_features: shared,
        params: Vec::new(),
        target_auc: Vec::new(),
        source_auc: Vec::new(),
        skipped: Vec::new(),
        mean_target_auc: f64::NAN,
        mean_source_auc: f64::NAN,
    };
    for o in outcomes {
        match o {
            Outcome::Done((p, t, s)) => {
                result.params.push(p);
                result.target_auc.push(t);
                result.source_auc.push(s);
            }
            Outcome::Skipped(s) => result.skipped.push(s),
        }
    }
    result.mean_target_auc = mean_std(&result.target_auc).0;
    result.mean_source_auc = mean_std(&result.source_auc).0;
    Ok(result)
}

/// `label,model,mean_auc,std_auc` rows.
pub fn write_summary_csv<W: Write>(results: &[CVResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["label", "model", "mean_auc", "std_auc"])?;
    for r in results {
        w.write_record([
            r.label.clone().unwrap_or_default(),
            r.model.clone(),
            format!("{:.6}", r.mean_auc),
            format!("{:.6}", r.std_auc),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
