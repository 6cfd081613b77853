//! AUC, nested cross-validation and the cross-region protocol.

pub mod auc;
pub mod cv;
pub mod folds;
pub mod learners;

pub use auc::auc;
pub use cv::{
    cross_region, mean_std, nested_cv, shared_features, write_summary_csv, CVResult, CvOptions, FoldResult,
    HoldoutPrediction, Learner, Predictor, SkippedFold, XRegionResult, tune,
};
pub use folds::{fold_indices, splits, Split};
pub use learners::{ModelKind, ModelLearner, TrainedModel};
