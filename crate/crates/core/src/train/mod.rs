//! Model trainers.

pub mod cart;
pub mod config;
pub mod logistic;
pub mod riskslim;
pub mod stumps;

pub use cart::{fit_cart, CartModel, CartNode};
pub use config::{ClassWeight, Penalty, TrainConfig};
pub use logistic::{
    fit_logistic, kkt_residual, objective, penalty_value, sample_weights, smooth_loss_and_grad, LogisticModel,
    LogisticOptions,
};
pub use riskslim::{
    fit_riskslim_lite, fit_riskslim_stumps, riskslim_objective, search_integer, RiskSlimModel, SearchResult,
};
pub use stumps::{fit_additive_stumps, fit_additive_stumps_expanded, AdditiveStumpsModel, ContributionCurve};
